use serde::Serialize;
use unravel::harness::{self, Engine, RunData, Scenario};
use unravel::harness::config::{McSettings, SimSettings};
use unravel::{gaw, nmqj};
use unravel::{BathSpec, LorentzianChannel, Result, System};

const DT: f64 = 1e-3;
/// Points per plotted curve, roughly.
const CURVE_POINTS: usize = 500;
const HEATMAP_ROWS: usize = 200;

#[derive(Clone, Debug)]
pub struct TlaParams {
    pub gamma0: f64,
    pub delta: f64,
    pub n_modes: usize,
    pub t_max: f64,
}

impl TlaParams {
    pub fn new(gamma0: f64, delta: f64, n_modes: usize, t_max: f64) -> Self {
        TlaParams {
            gamma0,
            delta,
            n_modes,
            t_max,
        }
    }

    fn scenario(&self, engines: Vec<Engine>, rows: usize, mc: McSettings) -> Scenario {
        let steps = (self.t_max / DT).round().max(1.0) as usize;
        Scenario {
            name: "web".into(),
            system: System::Tla,
            bath: BathSpec::new(self.gamma0, 1.0, vec![self.delta], self.n_modes),
            sim: SimSettings {
                t_max: steps as f64 * DT,
                dt: DT,
                stride: (steps / rows).max(1),
            },
            mc,
            initial: None,
            engines,
        }
    }

    fn run(&self, engines: Vec<Engine>, rows: usize, mc: McSettings) -> Result<RunData> {
        harness::execute(&self.scenario(engines, rows, mc))
    }

    fn oracle(&self) -> LorentzianChannel {
        LorentzianChannel::new(self.gamma0, 1.0, self.delta)
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct TlaCurves {
    pub t: Vec<f64>,
    pub population: Vec<f64>,
    pub population_exact: Vec<f64>,
    /// `None` where the excited amplitude vanishes.
    pub decay: Vec<Option<f64>>,
    pub decay_exact: Vec<Option<f64>>,
    pub decay_tcl2: Vec<f64>,
    pub current: Vec<f64>,
}

pub fn tla_dynamics(p: &TlaParams) -> Result<TlaCurves> {
    let run = p.run(vec![Engine::Total], CURVE_POINTS, McSettings::default())?;
    let oracle = p.oracle();
    let steps = run.sample_steps();
    let t: Vec<f64> = steps.iter().map(|&n| run.traj.time(n)).collect();
    Ok(TlaCurves {
        population: steps.iter().map(|&n| run.traj.amps(n)[1].norm_sqr()).collect(),
        population_exact: t.iter().map(|&t| oracle.exact_ce(t).norm_sqr()).collect(),
        decay: steps.iter().map(|&n| run.rates.at(n, 0).map(|r| r.decay)).collect(),
        decay_exact: t.iter().map(|&t| oracle.exact_rates(t).map(|r| r.decay)).collect(),
        decay_tcl2: t.iter().map(|&t| oracle.tcl2_rate(t).decay).collect(),
        current: run.currents.combined.iter().map(|c| c[0]).collect(),
        t,
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct Heatmap {
    pub t: Vec<f64>,
    /// Mode frequency minus the bath centre.
    pub offsets: Vec<f64>,
    /// Row-major `[time][mode]`.
    pub values: Vec<f64>,
}

pub fn current_heatmap(p: &TlaParams) -> Result<Heatmap> {
    let run = p.run(vec![Engine::Total], HEATMAP_ROWS, McSettings::default())?;
    Ok(Heatmap {
        t: run.currents.times.clone(),
        offsets: run.model.grid().offsets().to_vec(),
        values: run.currents.per_mode.iter().flat_map(|s| s[0].iter().copied()).collect(),
    })
}

#[derive(Clone, Debug, Serialize)]
pub struct Ensembles {
    pub t: Vec<f64>,
    pub exact: Vec<f64>,
    pub gaw: Vec<f64>,
    pub nmqj: Vec<f64>,
    pub reverse_jumps_gaw: usize,
    pub reverse_jumps_nmqj: usize,
}

pub fn unravelings(p: &TlaParams, trajectories: usize, seed: u64) -> Result<Ensembles> {
    let mc = McSettings { trajectories, seed };
    let run = p.run(vec![Engine::Total, Engine::Gaw, Engine::Nmqj], CURVE_POINTS, mc)?;
    let steps = run.sample_steps();
    let gaw = run.gaw.as_ref().expect("engine requested");
    let (states, nmqj) = run.nmqj.as_ref().expect("engine requested");
    let reverse = |e: &unravel::Ensemble| e.events().iter().filter(|ev| ev.to == 0).count();
    Ok(Ensembles {
        t: steps.iter().map(|&n| run.traj.time(n)).collect(),
        exact: steps.iter().map(|&n| run.traj.amps(n)[1].norm_sqr()).collect(),
        gaw: steps
            .iter()
            .map(|&n| gaw::reduced_density(&run.model, &run.traj, gaw, n).get(1, 1).re)
            .collect(),
        nmqj: steps
            .iter()
            .map(|&n| nmqj::reduced_density(&states[n], nmqj, n).get(1, 1).re)
            .collect(),
        reverse_jumps_gaw: reverse(gaw),
        reverse_jumps_nmqj: reverse(nmqj),
    })
}

//! Execute a scenario and write its output bundle.

use std::collections::BTreeMap;
use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::config::{Engine, Scenario, SCHEMA_VERSION};
use super::csvio::{num, CsvOut};
use crate::density::DensityMatrix;
use crate::dynamics::{Model, System, Trajectory};
use crate::ensemble::{Ensemble, EnsembleConfig};
use crate::error::{Error, Result};
use crate::gaw::{self, GawSchedule};
use crate::nmqj;
use crate::observables::{channel_rates, combined_current, CurrentSeries, RateSeries};
use crate::oracles::{dense_master, LorentzianChannel};

/// Everything computed for one scenario, before serialization.
pub struct RunData {
    pub scenario: Scenario,
    pub model: Model,
    pub traj: Trajectory,
    pub rates: RateSeries,
    pub currents: CurrentSeries,
    pub gaw: Option<Ensemble>,
    /// Deterministic branch `ψ_0(t_n)` and the label ensemble.
    pub nmqj: Option<(Vec<Vec<Complex64>>, Ensemble)>,
    pub master: Option<Vec<DensityMatrix>>,
    pub notes: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub schema_version: u32,
    pub scenario: Scenario,
    pub steps: usize,
    pub samples: usize,
    /// `None` for a single-mode bath, which never returns.
    pub recurrence_time: Option<f64>,
    pub metrics: BTreeMap<String, f64>,
    pub notes: Vec<String>,
}

/// Channels whose baths are independent Lorentzians with a closed-form solution.
fn independent_channels(system: System) -> bool {
    !matches!(system, System::VNonsecular)
}

pub fn execute(scenario: &Scenario) -> Result<RunData> {
    scenario.validate()?;
    let model = Model::new(scenario.system, &scenario.bath)?;
    let initial = match scenario.initial_amplitudes() {
        Some(sys) => model.state_from_system(&sys)?,
        None => model.default_initial(),
    };
    let traj = model.integrate(&initial, scenario.sim.t_max, scenario.sim.dt)?;
    let rates = RateSeries::from_trajectory(&model, &traj);
    let currents = CurrentSeries::from_trajectory(&model, &traj, scenario.sim.stride);
    let config = EnsembleConfig {
        trajectories: scenario.mc.trajectories,
        seed: scenario.mc.seed,
    };
    let gaw = if scenario.has(Engine::Gaw) {
        Some(gaw::simulate(&GawSchedule::combined(&model, &traj)?, config))
    } else {
        None
    };
    let system_initial = &initial.amps[..model.system().system_dim()];
    let nmqj = if scenario.has(Engine::Nmqj) {
        let states = nmqj::evolve_deterministic(system_initial, &rates)?;
        let ensemble = nmqj::simulate(&states, &rates, config)?;
        Some((states, ensemble))
    } else {
        None
    };
    let mut notes = Vec::new();
    let master = if independent_channels(model.system()) {
        match dense_master(&rates, &DensityMatrix::pure(system_initial)) {
            Ok(m) => Some(m),
            Err(e) => {
                notes.push(format!("master equation skipped: {e}"));
                None
            }
        }
    } else {
        None
    };
    Ok(RunData {
        scenario: scenario.clone(),
        model,
        traj,
        rates,
        currents,
        gaw,
        nmqj,
        master,
        notes,
    })
}

/// Reduced state implied by the total solution: the vacuum component keeps
/// its coherence, all one-photon weight sits in the ground state.
pub fn total_density(model: &Model, amps: &[Complex64]) -> DensityMatrix {
    let dim = model.system().system_dim();
    let mut rho = DensityMatrix::zeros(dim);
    rho.add_projector(1.0, &amps[..dim]);
    let p1: f64 = amps[dim..].iter().map(|c| c.norm_sqr()).sum();
    let g = rho.get(0, 0);
    rho.set(0, 0, g + p1);
    rho
}

fn channel_oracles(model: &Model, lambda: f64, gamma0: f64) -> Vec<LorentzianChannel> {
    model
        .detunings()
        .iter()
        .map(|&d| LorentzianChannel::new(gamma0, lambda, d))
        .collect()
}

/// Continuum-bath reduced state at time `t` for independent channels.
pub fn exact_density(oracles: &[LorentzianChannel], initial: &[Complex64], t: f64) -> DensityMatrix {
    let mut sys = initial.to_vec();
    for (j, o) in oracles.iter().enumerate() {
        sys[1 + j] = initial[1 + j] * o.exact_ce(t);
    }
    let mut rho = DensityMatrix::zeros(sys.len());
    rho.add_projector(1.0, &sys);
    let lost: f64 = initial.iter().map(|c| c.norm_sqr()).sum::<f64>()
        - sys.iter().map(|c| c.norm_sqr()).sum::<f64>();
    let g = rho.get(0, 0);
    rho.set(0, 0, g + lost);
    rho
}

impl RunData {
    /// Grid steps written to the bundle.
    pub fn sample_steps(&self) -> &[usize] {
        &self.currents.steps
    }

    fn system_initial(&self) -> &[Complex64] {
        &self.traj.amps(0)[..self.model.system().system_dim()]
    }

    /// Reduced density matrices per engine at step `n`, in a fixed order.
    pub fn densities(&self, n: usize) -> Vec<(&'static str, DensityMatrix)> {
        let mut out = vec![("total", total_density(&self.model, self.traj.amps(n)))];
        if let Some(e) = &self.gaw {
            out.push(("gaw", gaw::reduced_density(&self.model, &self.traj, e, n)));
        }
        if let Some((states, e)) = &self.nmqj {
            out.push(("nmqj", nmqj::reduced_density(&states[n], e, n)));
        }
        if independent_channels(self.model.system()) {
            let b = &self.scenario.bath;
            let oracles = channel_oracles(&self.model, b.lambda, b.gamma0);
            out.push(("exact", exact_density(&oracles, self.system_initial(), self.traj.time(n))));
        }
        if let Some(m) = &self.master {
            out.push(("master", m[n].clone()));
        }
        out
    }

    fn register_names(&self) -> Vec<&'static str> {
        match self.model.system() {
            System::Tla => vec!["e"],
            System::VNonsecular => vec!["total"],
            System::VSecular => vec!["a", "b"],
        }
    }

    fn gaw_label_names(&self) -> Vec<String> {
        let regs = self.register_names();
        let mut names = vec!["0".to_string()];
        names.extend(regs.iter().map(|r| match *r {
            "e" | "total" => "1".to_string(),
            r => format!("1{r}"),
        }));
        names
    }

    pub fn summary(&self) -> Summary {
        let mut m = BTreeMap::new();
        let system = self.model.system();
        let channels = system.channels();
        m.insert("norm_drift_max".into(), self.traj.max_norm_drift());

        // 𝒥_r = Σ_{i→r} Δ_i |c_i|² at every grid step
        let mut bridge: f64 = 0.0;
        for n in 0..self.traj.len() {
            let (t, amps) = (self.traj.time(n), self.traj.amps(n));
            let currents = combined_current(&self.model, t, amps);
            let rates = channel_rates(&self.model, t, amps);
            for (r, j) in currents.iter().enumerate() {
                let predicted: f64 = self
                    .model
                    .channels_of(r)
                    .map(|i| rates[i].map_or(0.0, |x| x.decay * amps[1 + i].norm_sqr()))
                    .sum();
                bridge = bridge.max((j - predicted).abs());
            }
        }
        m.insert("rate_current_bridge_max".into(), bridge);

        for (r, name) in self.register_names().iter().enumerate() {
            let min = self.currents.combined.iter().map(|c| c[r]).fold(f64::INFINITY, f64::min);
            m.insert(format!("current_min:{name}"), min);
            let mode_min = self
                .currents
                .per_mode
                .iter()
                .flat_map(|s| s[r].iter().copied())
                .fold(f64::INFINITY, f64::min);
            m.insert(format!("mode_current_min:{name}"), mode_min);
        }

        for j in 0..channels {
            let name = system.channel_name(j);
            let decays: Vec<f64> = (0..self.rates.len())
                .filter_map(|n| self.rates.at(n, j).map(|r| r.decay))
                .collect();
            m.insert(format!("decay_min:{name}"), decays.iter().copied().fold(f64::INFINITY, f64::min));
            m.insert(format!("decay_max:{name}"), decays.iter().copied().fold(f64::NEG_INFINITY, f64::max));
        }

        if independent_channels(system) {
            let b = &self.scenario.bath;
            let oracles = channel_oracles(&self.model, b.lambda, b.gamma0);
            for (j, o) in oracles.iter().enumerate() {
                let name = system.channel_name(j);
                let (mut exact, mut tcl2) = (0.0f64, 0.0f64);
                for &n in self.sample_steps() {
                    let t = self.rates.time(n);
                    let Some(r) = self.rates.at(n, j) else { continue };
                    if let Some(e) = o.exact_rates(t) {
                        exact = exact.max((r.decay - e.decay).abs());
                    }
                    tcl2 = tcl2.max((r.decay - o.tcl2_rate(t).decay).abs());
                }
                m.insert(format!("exact_decay_linf:{name}"), exact);
                m.insert(format!("tcl2_decay_linf:{name}"), tcl2);
            }
        }

        let mut distances: BTreeMap<String, f64> = BTreeMap::new();
        for &n in self.sample_steps() {
            let rhos = self.densities(n);
            let total = &rhos[0].1;
            for (name, rho) in &rhos[1..] {
                let d = rho.trace_distance(total);
                let e = distances.entry(format!("trace_distance_max:{name}_total")).or_insert(0.0);
                *e = e.max(d);
            }
            let gaw = rhos.iter().find(|(e, _)| *e == "gaw");
            let nm = rhos.iter().find(|(e, _)| *e == "nmqj");
            if let (Some((_, a)), Some((_, b))) = (gaw, nm) {
                let e = distances.entry("trace_distance_max:gaw_nmqj".into()).or_insert(0.0);
                *e = e.max(a.trace_distance(b));
            }
        }
        m.extend(distances);

        if let Some(e) = &self.gaw {
            let reverse = e.events().iter().filter(|ev| ev.to == 0).count();
            m.insert("gaw_jumps".into(), e.events().len() as f64);
            m.insert("gaw_reverse_jumps".into(), reverse as f64);
            m.insert("band_coverage:gaw".into(), self.band_coverage("gaw"));
        }
        if let Some((_, e)) = &self.nmqj {
            let reverse = e.events().iter().filter(|ev| ev.to == 0).count();
            let against_sign = e
                .events()
                .iter()
                .filter(|ev| ev.to == 0)
                .filter(|ev| self.rates.at(ev.step, ev.channel).is_none_or(|r| r.decay >= 0.0))
                .count();
            m.insert("nmqj_jumps".into(), e.events().len() as f64);
            m.insert("nmqj_reverse_jumps".into(), reverse as f64);
            m.insert("nmqj_reverse_with_nonnegative_decay".into(), against_sign as f64);
            m.insert("band_coverage:nmqj".into(), self.band_coverage("nmqj"));
        }

        let grid = self.model.grid();
        Summary {
            schema_version: SCHEMA_VERSION,
            scenario: self.scenario.clone(),
            steps: self.traj.len(),
            samples: self.sample_steps().len(),
            recurrence_time: (grid.len() > 1).then(|| grid.recurrence_time()),
            metrics: m,
            notes: self.notes.clone(),
        }
    }

    /// Fraction of sampled times at which every excited population of the
    /// engine lies within three binomial standard errors of `|c_j|²`.
    pub fn band_coverage(&self, engine: &str) -> f64 {
        let members = self.scenario.mc.trajectories as f64;
        let dim = self.model.system().system_dim();
        let mut inside = 0usize;
        for &n in self.sample_steps() {
            let amps = self.traj.amps(n);
            let p0: f64 = amps[..dim].iter().map(|c| c.norm_sqr()).sum();
            let rhos = self.densities(n);
            let rho = &rhos.iter().find(|(e, _)| *e == engine).expect("engine present").1;
            let ok = (1..dim).all(|j| {
                let target = amps[j].norm_sqr();
                let sigma = if p0 > 0.0 {
                    target / p0 * (p0 * (1.0 - p0).max(0.0) / members).sqrt()
                } else {
                    0.0
                };
                (rho.get(j, j).re - target).abs() <= 3.0 * sigma + 1e-12
            });
            inside += ok as usize;
        }
        inside as f64 / self.sample_steps().len() as f64
    }

    /// Write the CSV files and `summary.json` into `dir`.
    pub fn write(&self, dir: &Path) -> Result<Summary> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        self.write_currents(dir)?;
        self.write_combined(dir)?;
        self.write_rates(dir)?;
        self.write_oracle(dir)?;
        self.write_rho(dir)?;
        self.write_ensembles(dir)?;
        self.write_events(dir)?;
        let summary = self.summary();
        let path = dir.join("summary.json");
        let text = serde_json::to_string_pretty(&summary)? + "\n";
        std::fs::write(&path, text).map_err(|e| Error::io(&path, e))?;
        Ok(summary)
    }

    fn write_currents(&self, dir: &Path) -> Result<()> {
        let mut out = CsvOut::create(dir, "currents.csv", &["t", "channel", "k", "offset", "current"])?;
        let offsets = self.model.grid().offsets();
        let names = self.register_names();
        for (s, t) in self.currents.times.iter().enumerate() {
            for (r, name) in names.iter().enumerate() {
                for (k, j) in self.currents.per_mode[s][r].iter().enumerate() {
                    out.row(&[num(*t), name.to_string(), k.to_string(), num(offsets[k]), num(*j)])?;
                }
            }
        }
        out.finish()
    }

    fn write_combined(&self, dir: &Path) -> Result<()> {
        let mut out = CsvOut::create(dir, "combined.csv", &["t", "channel", "current", "p0", "p1"])?;
        let names = self.register_names();
        for (s, t) in self.currents.times.iter().enumerate() {
            let pops = &self.currents.populations[s];
            let combined = &self.currents.combined[s];
            for (r, name) in names.iter().enumerate() {
                out.row(&[num(*t), name.to_string(), num(combined[r]), num(pops.p0), num(pops.p1[r])])?;
            }
            if names.len() > 1 {
                let sum: f64 = combined.iter().sum();
                out.row(&[num(*t), "total".into(), num(sum), num(pops.p0), num(pops.p1_total())])?;
            }
        }
        out.finish()
    }

    fn write_rates(&self, dir: &Path) -> Result<()> {
        let mut out = CsvOut::create(dir, "rates.csv", &["t", "channel", "decay", "lamb_shift", "mask"])?;
        let system = self.model.system();
        for &n in self.sample_steps() {
            let t = self.rates.time(n);
            for j in 0..system.channels() {
                let name = system.channel_name(j).to_string();
                let row = match self.rates.at(n, j) {
                    Some(r) => [num(t), name, num(r.decay), num(r.lamb_shift), "0".into()],
                    None => [num(t), name, "NaN".into(), "NaN".into(), "1".into()],
                };
                out.row(&row)?;
            }
        }
        out.finish()
    }

    fn write_oracle(&self, dir: &Path) -> Result<()> {
        let system = self.model.system();
        if !independent_channels(system) {
            return Ok(());
        }
        let mut out = CsvOut::create(dir, "oracle.csv", &["t", "channel", "kind", "decay", "lamb_shift"])?;
        let b = &self.scenario.bath;
        let oracles = channel_oracles(&self.model, b.lambda, b.gamma0);
        for &n in self.sample_steps() {
            let t = self.rates.time(n);
            for (j, o) in oracles.iter().enumerate() {
                let name = system.channel_name(j).to_string();
                let (d, s) = o.exact_rates(t).map_or((f64::NAN, f64::NAN), |r| (r.decay, r.lamb_shift));
                out.row(&[num(t), name.clone(), "exact".into(), num(d), num(s)])?;
                let r = o.tcl2_rate(t);
                out.row(&[num(t), name, "tcl2".into(), num(r.decay), num(r.lamb_shift)])?;
            }
        }
        out.finish()
    }

    fn write_rho(&self, dir: &Path) -> Result<()> {
        let mut out = CsvOut::create(dir, "rho.csv", &["t", "engine", "row", "col", "re", "im"])?;
        for &n in self.sample_steps() {
            let t = num(self.traj.time(n));
            for (engine, rho) in self.densities(n) {
                for i in 0..rho.dim() {
                    for j in 0..rho.dim() {
                        let z = rho.get(i, j);
                        out.row(&[t.clone(), engine.into(), i.to_string(), j.to_string(), num(z.re), num(z.im)])?;
                    }
                }
            }
        }
        out.finish()
    }

    fn write_ensembles(&self, dir: &Path) -> Result<()> {
        let mut out = CsvOut::create(dir, "ensemble.csv", &["t", "engine", "label", "count", "weight"])?;
        let gaw_labels = self.gaw_label_names();
        let nmqj_labels = ["psi0".to_string(), "psi1".to_string()];
        let engines: Vec<(&str, &Ensemble, &[String])> = self
            .gaw
            .iter()
            .map(|e| ("gaw", e, gaw_labels.as_slice()))
            .chain(self.nmqj.iter().map(|(_, e)| ("nmqj", e, nmqj_labels.as_slice())))
            .collect();
        for &n in self.sample_steps() {
            let t = num(self.traj.time(n));
            for (engine, e, labels) in &engines {
                for (l, label) in labels.iter().enumerate() {
                    out.row(&[t.clone(), engine.to_string(), label.clone(), e.count(n, l).to_string(), num(e.weight(n, l))])?;
                }
            }
        }
        out.finish()
    }

    fn write_events(&self, dir: &Path) -> Result<()> {
        let mut out = CsvOut::create(dir, "events.csv", &["engine", "trajectory", "t", "from", "to", "channel"])?;
        let system = self.model.system();
        let gaw_labels = self.gaw_label_names();
        let regs = self.register_names();
        if let Some(e) = &self.gaw {
            for ev in e.events() {
                out.row(&[
                    "gaw".into(),
                    ev.trajectory.to_string(),
                    num(ev.t),
                    gaw_labels[ev.from].clone(),
                    gaw_labels[ev.to].clone(),
                    regs[ev.channel].into(),
                ])?;
            }
        }
        if let Some((_, e)) = &self.nmqj {
            for ev in e.events() {
                out.row(&[
                    "nmqj".into(),
                    ev.trajectory.to_string(),
                    num(ev.t),
                    format!("psi{}", ev.from),
                    format!("psi{}", ev.to),
                    system.channel_name(ev.channel).into(),
                ])?;
            }
        }
        out.finish()
    }
}

/// Execute `scenario` and write its bundle into `dir`.
pub fn run(scenario: &Scenario, dir: &Path) -> Result<Summary> {
    execute(scenario)?.write(dir)
}

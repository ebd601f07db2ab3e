//! Acceptance suite: one PASS/FAIL line per criterion, nonzero exit if any fails.

use std::path::Path;
use std::time::Instant;

use num_complex::Complex64;
use unravel::dynamics::{Model, System, Trajectory};
use unravel::gaw::{self, GawSchedule};
use unravel::harness::{self, Scenario, BUILTIN};
use unravel::nmqj;
use unravel::observables::{channel_rates, combined_current, mode_currents, projection_probabilities, RateSeries};
use unravel::oracles::LorentzianChannel;
use unravel::{BathSpec, EnsembleConfig};

// Tolerances.
const DRIFT_PER_TIME: f64 = 1e-8;
const RUNTIME_LIMIT_S: f64 = 10.0;
const BRIDGE_TOL: f64 = 1e-10;
const RATE_FRACTION_OF_GAMMA0: f64 = 0.05;
const TRACE_DISTANCE_TOL: f64 = 0.02;
const STEP_PROBABILITY_TOL: f64 = 1e-10;
const BAND_SIGMAS: f64 = 3.0;
const BAND_COVERAGE: f64 = 0.99;
const INTERFERENCE_TRACE_DISTANCE: f64 = 0.01;
const SINGLE_MODE_TOL: f64 = 1e-6;
const MEMBERS: usize = 10_000;
const SEEDS: [u64; 5] = [11, 12, 13, 14, 15];

struct Report {
    failed: Vec<u32>,
}

impl Report {
    fn line(&mut self, id: u32, title: &str, pass: bool, detail: String) {
        let verdict = if pass { "PASS" } else { "FAIL" };
        println!("criterion {id:>2} {verdict}  {title}: {detail}");
        if !pass {
            self.failed.push(id);
        }
    }
}

fn solve(scenario: &Scenario) -> (Model, Trajectory) {
    let model = Model::new(scenario.system, &scenario.bath).unwrap();
    let traj = model
        .integrate(&model.default_initial(), scenario.sim.t_max, scenario.sim.dt)
        .unwrap();
    (model, traj)
}

fn builtin(name: &str) -> Scenario {
    Scenario::builtin(name).unwrap()
}

fn norm_and_runtime(r: &mut Report) {
    let mut worst_ratio: f64 = 0.0;
    let mut slowest = (0.0, "");
    for name in BUILTIN {
        let scenario = builtin(name);
        let start = Instant::now();
        let data = harness::execute(&scenario).unwrap();
        let elapsed = start.elapsed().as_secs_f64();
        if elapsed > slowest.0 {
            slowest = (elapsed, name);
        }
        for n in 1..data.traj.len() {
            let drift = (data.traj.state(n).norm_sqr() - 1.0).abs();
            worst_ratio = worst_ratio.max(drift / (DRIFT_PER_TIME * data.traj.time(n)));
        }
    }
    r.line(
        1,
        "norm conservation and runtime",
        worst_ratio <= 1.0 && slowest.0 < RUNTIME_LIMIT_S,
        format!(
            "max drift/(1e-8 t) = {worst_ratio:.3e}, slowest scenario {} took {:.2} s (limit {RUNTIME_LIMIT_S} s)",
            slowest.1, slowest.0
        ),
    );
}

fn bridge(r: &mut Report) {
    let mut worst: f64 = 0.0;
    for name in ["fig1", "fig3", "fig5"] {
        let (model, traj) = solve(&builtin(name));
        for n in 0..traj.len() {
            let (t, amps) = (traj.time(n), traj.amps(n));
            let currents = combined_current(&model, t, amps);
            let rates = channel_rates(&model, t, amps);
            for (j, rate) in rates.iter().enumerate() {
                let Some(rate) = rate else { continue };
                let predicted = rate.decay * amps[1 + j].norm_sqr();
                worst = worst.max((currents[j] - predicted).abs());
            }
        }
    }
    r.line(
        2,
        "combined current equals decay rate times excited population",
        worst <= BRIDGE_TOL,
        format!("max |J - D|c|^2| = {worst:.3e} (tol {BRIDGE_TOL:e})"),
    );
}

fn markovian_signature(r: &mut Report) {
    let (model, traj) = solve(&builtin("fig1"));
    let (mut min_combined, mut min_mode) = (f64::INFINITY, f64::INFINITY);
    for n in 1..traj.len() {
        let (t, amps) = (traj.time(n), traj.amps(n));
        min_combined = min_combined.min(combined_current(&model, t, amps)[0]);
        let modes = mode_currents(&model, t, amps);
        min_mode = modes[0].iter().copied().fold(min_mode, f64::min);
    }
    r.line(
        3,
        "weak coupling: positive combined current, some negative mode currents",
        min_combined > 0.0 && min_mode < 0.0,
        format!("min combined = {min_combined:.4e}, min per-mode = {min_mode:.4e}"),
    );
}

fn non_markovian_signature(r: &mut Report) {
    let scenario = builtin("fig3");
    let (model, traj) = solve(&scenario);
    let negative_samples = (0..traj.len())
        .filter(|&n| combined_current(&model, traj.time(n), traj.amps(n))[0] < 0.0)
        .count();
    let rates = RateSeries::from_trajectory(&model, &traj);
    let states = nmqj::evolve_deterministic(&traj.amps(0)[..2], &rates).unwrap();
    let ensemble = nmqj::simulate(
        &states,
        &rates,
        EnsembleConfig {
            trajectories: MEMBERS,
            seed: scenario.mc.seed,
        },
    )
    .unwrap();
    let reverse: Vec<_> = ensemble.events().iter().filter(|e| e.to == 0).collect();
    let violations = reverse
        .iter()
        .filter(|e| rates.at(e.step, e.channel).is_none_or(|x| x.decay >= 0.0))
        .count();
    r.line(
        4,
        "strong coupling: negative current, reverse jumps only while the decay rate is negative",
        negative_samples > 0 && !reverse.is_empty() && violations == 0,
        format!(
            "{negative_samples} steps with negative current, {} reverse jumps, {violations} outside negative-rate intervals",
            reverse.len()
        ),
    );
}

fn continuum_error(n_modes: usize, window: f64) -> f64 {
    let (gamma0, delta, t_max) = (4.0, -4.0, 4.0);
    let mut spec = BathSpec::new(gamma0, 1.0, vec![delta], n_modes);
    spec.window_halfwidth = window;
    let model = Model::new(System::Tla, &spec).unwrap();
    let traj = model.integrate(&model.default_initial(), t_max, 1e-3).unwrap();
    let oracle = LorentzianChannel::new(gamma0, 1.0, delta);
    (0..traj.len())
        .filter_map(|n| {
            let t = traj.time(n);
            let d = channel_rates(&model, t, traj.amps(n))[0]?;
            Some((d.decay - oracle.exact_rates(t)?.decay).abs())
        })
        .fold(0.0, f64::max)
}

fn continuum_agreement(r: &mut Report) {
    // Refining toward the continuum keeps the mode spacing and widens the
    // window; at a fixed window the error stalls at the truncation floor.
    let coarse = continuum_error(180, 20.0);
    let fine = continuum_error(360, 40.0);
    let fixed_window = continuum_error(360, 20.0);
    let tol = RATE_FRACTION_OF_GAMMA0 * 4.0;
    r.line(
        5,
        "discrete decay rate against the continuum solution",
        coarse <= tol && fine < coarse,
        format!(
            "Linf on [0,4]: N=180 {coarse:.4e}, N=360 same spacing {fine:.4e} (tol {tol}); \
             N=360 at W=20 {fixed_window:.4e}"
        ),
    );
}

fn unraveling_equivalence(r: &mut Report) {
    let scenario = builtin("fig3");
    let (model, traj) = solve(&scenario);
    let rates = RateSeries::from_trajectory(&model, &traj);
    let states = nmqj::evolve_deterministic(&traj.amps(0)[..2], &rates).unwrap();
    let schedule = GawSchedule::combined(&model, &traj).unwrap();

    let mut mean_max = 0.0;
    for seed in SEEDS {
        let gaw_ens = gaw::simulate(&schedule, EnsembleConfig { trajectories: MEMBERS, seed });
        // independent streams for the two engines
        let nmqj_ens = nmqj::simulate(
            &states,
            &rates,
            EnsembleConfig {
                trajectories: MEMBERS,
                seed: seed + 1000,
            },
        )
        .unwrap();
        let max = (0..traj.len())
            .map(|n| {
                let a = gaw::reduced_density(&model, &traj, &gaw_ens, n);
                let b = nmqj::reduced_density(&states[n], &nmqj_ens, n);
                a.trace_distance(&b)
            })
            .fold(0.0, f64::max);
        mean_max += max / SEEDS.len() as f64;
    }

    // expected-weight transition probabilities per step, both engines
    let mut worst: f64 = 0.0;
    let mut compared = 0usize;
    for name in ["fig3", "fig5"] {
        let (model, traj) = solve(&builtin(name));
        let dim = model.system().system_dim();
        let rates = RateSeries::from_trajectory(&model, &traj);
        let states = nmqj::evolve_deterministic(&traj.amps(0)[..dim], &rates).unwrap();
        let schedule = GawSchedule::combined(&model, &traj).unwrap();
        let dt = traj.dt();
        for n in 0..traj.len() {
            let pops = projection_probabilities(&model, traj.amps(n));
            let excited: Vec<f64> = states[n][1..].iter().map(|c| c.norm_sqr()).collect();
            let Some(decays) = (0..model.system().channels())
                .map(|j| rates.at(n, j).map(|x| x.decay))
                .collect::<Option<Vec<_>>>()
            else {
                continue;
            };
            let p1 = pops.p1_total();
            let r = nmqj::jump_rates(pops.p0, p1, &excited, &decays);
            for (j, g) in schedule.at(n).iter().enumerate() {
                if decays[j] > 0.0 && pops.p0 > 1e-12 {
                    worst = worst.max(dt * (g.forward - r.forward[j]).abs());
                    compared += 1;
                }
                if decays[j] < 0.0 && pops.p1[j] > 1e-12 {
                    // GAW splits the photon population by register; NMQJ pools it in ψ1
                    let per_register = r.reverse[j] * p1 / pops.p1[j];
                    worst = worst.max(dt * (g.reverse - per_register).abs());
                    compared += 1;
                }
            }
        }
    }
    r.line(
        6,
        "property-state and reduced-space unravelings agree",
        mean_max <= TRACE_DISTANCE_TOL && worst <= STEP_PROBABILITY_TOL,
        format!(
            "seed-averaged max trace distance {mean_max:.4e} (tol {TRACE_DISTANCE_TOL}); \
             max |T dt - R dt| = {worst:.3e} over {compared} comparisons (tol {STEP_PROBABILITY_TOL:e})"
        ),
    );
}

fn band_coverage(excited: impl Fn(usize) -> f64, traj: &Trajectory, stride: usize) -> f64 {
    let steps: Vec<usize> = (0..traj.len()).step_by(stride).collect();
    let inside = steps
        .iter()
        .filter(|&&n| {
            let p = traj.amps(n)[1].norm_sqr();
            let sigma = (p * (1.0 - p) / MEMBERS as f64).sqrt();
            (excited(n) - p).abs() <= BAND_SIGMAS * sigma + 1e-12
        })
        .count();
    inside as f64 / steps.len() as f64
}

fn ensemble_populations(r: &mut Report) {
    let scenario = builtin("fig3");
    let (model, traj) = solve(&scenario);
    let config = EnsembleConfig {
        trajectories: MEMBERS,
        seed: scenario.mc.seed,
    };
    let gaw_ens = gaw::simulate(&GawSchedule::combined(&model, &traj).unwrap(), config);
    let rates = RateSeries::from_trajectory(&model, &traj);
    let states = nmqj::evolve_deterministic(&traj.amps(0)[..2], &rates).unwrap();
    let nmqj_ens = nmqj::simulate(&states, &rates, config).unwrap();
    let stride = scenario.sim.stride;
    let g = band_coverage(|n| gaw::reduced_density(&model, &traj, &gaw_ens, n).get(1, 1).re, &traj, stride);
    let q = band_coverage(|n| nmqj::reduced_density(&states[n], &nmqj_ens, n).get(1, 1).re, &traj, stride);
    r.line(
        7,
        "ensemble excited populations inside 3-sigma bands",
        g >= BAND_COVERAGE && q >= BAND_COVERAGE,
        format!("coverage: property-state {:.2}%, reduced-space {:.2}% (need {}%)", 100.0 * g, 100.0 * q, 100.0 * BAND_COVERAGE),
    );
}

fn secular_vs_tcl2(r: &mut Report) {
    let mut scenario = builtin("fig6");
    scenario.sim.t_max = 3.0;
    let (model, traj) = solve(&scenario);
    let gamma0 = scenario.bath.gamma0;
    let mut worst = [0.0f64; 2];
    for (j, w) in worst.iter_mut().enumerate() {
        let oracle = LorentzianChannel::new(gamma0, scenario.bath.lambda, scenario.bath.detunings[j]);
        for n in 0..traj.len() {
            let t = traj.time(n);
            if let Some(d) = channel_rates(&model, t, traj.amps(n))[j] {
                *w = w.max((d.decay - oracle.tcl2_rate(t).decay).abs());
            }
        }
    }
    let tol = RATE_FRACTION_OF_GAMMA0 * gamma0;
    r.line(
        8,
        "secular V-system decay rates against second-order TCL",
        worst.iter().all(|&w| w <= tol),
        format!("Linf on [0,3]: a {:.4e}, b {:.4e} (tol {tol})", worst[0], worst[1]),
    );
}

fn total_density(model: &Model, amps: &[Complex64]) -> unravel::DensityMatrix {
    harness::run::total_density(model, amps)
}

fn nonsecular_interference(r: &mut Report) {
    let (m4, t4) = solve(&builtin("fig4"));
    let (m6, t6) = solve(&builtin("fig6"));
    let mut witnesses = 0usize;
    let mut max_td: f64 = 0.0;
    for n in 0..t4.len() {
        let t = t4.time(n);
        let nonsecular = combined_current(&m4, t, t4.amps(n))[0];
        let secular: f64 = combined_current(&m6, t, t6.amps(n)).iter().sum();
        if nonsecular < 0.0 && secular > 0.0 {
            witnesses += 1;
        }
        max_td = max_td.max(total_density(&m4, t4.amps(n)).trace_distance(&total_density(&m6, t6.amps(n))));
    }
    r.line(
        9,
        "shared-bath interference changes currents and reduced state",
        witnesses > 0 && max_td > INTERFERENCE_TRACE_DISTANCE,
        format!("{witnesses} steps with negative shared current and positive secular sum; max trace distance {max_td:.4}"),
    );
}

fn single_mode(r: &mut Report) {
    let spec = BathSpec::new(1.0, 1.0, vec![0.0], 1);
    let model = Model::new(System::Tla, &spec).unwrap();
    let g = model.grid().couplings()[0];
    let t_max = (10.0 / g * 1000.0).floor() / 1000.0;
    let traj = model.integrate(&model.default_initial(), t_max, 1e-3).unwrap();
    let worst = (0..traj.len())
        .map(|n| (traj.amps(n)[1].norm_sqr() - (g * traj.time(n)).cos().powi(2)).abs())
        .fold(0.0, f64::max);
    r.line(
        10,
        "single resonant mode gives vacuum Rabi oscillation",
        worst <= SINGLE_MODE_TOL,
        format!("g = {g:.4}, gt up to {:.3}, max error {worst:.3e} (tol {SINGLE_MODE_TOL:e})", g * t_max),
    );
}

fn bundle_bytes(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files: Vec<_> = std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .collect();
    files.sort();
    files
        .into_iter()
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), std::fs::read(&p).unwrap()))
        .collect()
}

fn reproducibility(r: &mut Report) {
    let tmp = tempfile::tempdir().unwrap();
    let mut identical = true;
    let mut files = 0;
    for name in ["fig3", "fig5"] {
        let scenario = builtin(name);
        let bundles: Vec<_> = [1, 1, 4]
            .iter()
            .enumerate()
            .map(|(i, &threads)| {
                let dir = tmp.path().join(format!("{name}-{i}"));
                let pool = rayon::ThreadPoolBuilder::new().num_threads(threads).build().unwrap();
                pool.install(|| harness::run(&scenario, &dir)).unwrap();
                bundle_bytes(&dir)
            })
            .collect();
        files += bundles[0].len();
        identical &= bundles.windows(2).all(|w| w[0] == w[1]);
    }
    r.line(
        11,
        "identical configuration and seed give byte-identical bundles",
        identical,
        format!("{files} files per run set compared across repeated and 1- vs 4-thread runs"),
    );
}

fn main() {
    let mut report = Report { failed: Vec::new() };
    norm_and_runtime(&mut report);
    bridge(&mut report);
    markovian_signature(&mut report);
    non_markovian_signature(&mut report);
    continuum_agreement(&mut report);
    unraveling_equivalence(&mut report);
    ensemble_populations(&mut report);
    secular_vs_tcl2(&mut report);
    nonsecular_interference(&mut report);
    single_mode(&mut report);
    reproducibility(&mut report);
    if report.failed.is_empty() {
        println!("acceptance: all criteria pass");
    } else {
        println!("acceptance: failing criteria {:?}", report.failed);
        std::process::exit(1);
    }
}

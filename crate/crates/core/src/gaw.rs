//! Piecewise-deterministic jump process over total-system property states.
//!
//! The total state is solved once; every property state is then a fixed
//! function of time and only the label of each ensemble member is random.
//! Labels are `0` for the vacuum-conditioned state and `1 + slot` for a
//! one-photon state, where a slot is a mode register (combined states) or a
//! single mode (mode-resolved diagnostics).

use num_complex::Complex64;
use rand::Rng;

use crate::density::DensityMatrix;
use crate::dynamics::{Model, Trajectory};
use crate::ensemble::{map_chunks, member_rng, Ensemble, EnsembleConfig, JumpEvent, Tally};
use crate::error::{Error, Result};
use crate::observables::{
    combined_current, gaw_transition_rates, mode_currents, projection_probabilities, GawRates,
};

/// Largest allowed per-step jump probability for the first-order scheme.
pub const MAX_STEP_PROBABILITY: f64 = 0.1;

/// Transition rates for every slot at every grid step.
#[derive(Clone, Debug)]
pub struct GawSchedule {
    slots: usize,
    t0: f64,
    dt: f64,
    rates: Vec<GawRates>,
}

impl GawSchedule {
    /// Rates between the vacuum state and the combined one-photon state of each register.
    pub fn combined(model: &Model, traj: &Trajectory) -> Result<Self> {
        let slots = model.system().registers();
        let mut rates = Vec::with_capacity(traj.len() * slots);
        for n in 0..traj.len() {
            let (t, amps) = (traj.time(n), traj.amps(n));
            let pops = projection_probabilities(model, amps);
            let currents = combined_current(model, t, amps);
            rates.extend(
                (0..slots).map(|r| gaw_transition_rates(pops.p0, pops.p1[r], currents[r])),
            );
        }
        Self::checked(slots, traj, rates, true)
    }

    /// Rates between the vacuum state and each single-mode state `1_k`.
    ///
    /// Diagnostic only: `−J_k/|c_k|²` diverges whenever a mode amplitude
    /// passes through zero, so the step-size cap is not enforced here and the
    /// per-step jump probability simply saturates at one.
    pub fn mode_resolved(model: &Model, traj: &Trajectory) -> Result<Self> {
        let n_modes = model.n_modes();
        let slots = model.system().registers() * n_modes;
        let mut rates = Vec::with_capacity(traj.len() * slots);
        for n in 0..traj.len() {
            let (t, amps) = (traj.time(n), traj.amps(n));
            let p0 = projection_probabilities(model, amps).p0;
            for (r, js) in mode_currents(model, t, amps).iter().enumerate() {
                let reg = model.register(amps, r);
                rates.extend(
                    js.iter()
                        .zip(reg)
                        .map(|(&j, c_k)| gaw_transition_rates(p0, c_k.norm_sqr(), j)),
                );
            }
        }
        Self::checked(slots, traj, rates, false)
    }

    fn checked(slots: usize, traj: &Trajectory, rates: Vec<GawRates>, enforce: bool) -> Result<Self> {
        let dt = traj.dt();
        for (n, step) in rates.chunks(slots).enumerate().filter(|_| enforce) {
            let out_of_vacuum: f64 = step.iter().map(|r| r.forward).filter(|r| r.is_finite()).sum();
            let worst_return = step
                .iter()
                .map(|r| r.reverse)
                .filter(|r| r.is_finite())
                .fold(0.0, f64::max);
            let probability = dt * out_of_vacuum.max(worst_return);
            if probability > MAX_STEP_PROBABILITY {
                return Err(Error::StepTooLarge {
                    probability,
                    t: traj.time(n),
                });
            }
        }
        Ok(GawSchedule {
            slots,
            t0: traj.time(0),
            dt,
            rates,
        })
    }

    pub fn slots(&self) -> usize {
        self.slots
    }

    pub fn len(&self) -> usize {
        self.rates.len() / self.slots
    }

    pub fn is_empty(&self) -> bool {
        self.rates.is_empty()
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn at(&self, n: usize) -> &[GawRates] {
        &self.rates[n * self.slots..(n + 1) * self.slots]
    }

    /// Replace every rate by zero (the no-jump limit).
    pub fn silenced(mut self) -> Self {
        self.rates.fill(GawRates::ZERO);
        self
    }
}

/// One first-order step of a single member: the jump happens when `u < dt·𝒯`,
/// and competing slots split `[0, dt·Σ𝒯)` in slot order. Returns the new label
/// and the slot the jump went through.
pub fn step(label: usize, rates: &[GawRates], dt: f64, u: f64) -> (usize, Option<usize>) {
    if label == 0 {
        let mut cumulative = 0.0;
        for (slot, r) in rates.iter().enumerate() {
            cumulative += dt * r.forward;
            if u < cumulative {
                return (1 + slot, Some(slot));
            }
        }
        (0, None)
    } else {
        let slot = label - 1;
        if u < dt * rates[slot].reverse {
            (0, Some(slot))
        } else {
            (label, None)
        }
    }
}

/// Simulate `config.trajectories` independent members, all starting in the vacuum label.
pub fn simulate(schedule: &GawSchedule, config: EnsembleConfig) -> Ensemble {
    let steps = schedule.len();
    let labels = 1 + schedule.slots;
    let dt = schedule.dt;
    let parts = map_chunks(config.trajectories, |members| {
        let mut tally = Tally::new(steps, labels);
        for member in members {
            let mut rng = member_rng(config.seed, member);
            let mut label = 0;
            for n in 0..steps {
                tally.record(n, label);
                if n + 1 == steps {
                    break;
                }
                let u: f64 = rng.random();
                let (next, slot) = step(label, schedule.at(n), dt, u);
                if let Some(slot) = slot {
                    tally.events.push(JumpEvent {
                        trajectory: member,
                        step: n,
                        t: schedule.t0 + n as f64 * dt,
                        from: label,
                        to: next,
                        channel: slot,
                    });
                }
                label = next;
            }
        }
        tally
    });
    let tally = Tally::merge(parts, steps, labels);
    Ensemble::new(
        config.trajectories,
        labels,
        schedule.t0,
        dt,
        tally.counts,
        tally.events,
    )
}

/// Normalized system part of the vacuum-conditioned property state.
pub fn vacuum_system_state(model: &Model, amps: &[Complex64]) -> Option<Vec<Complex64>> {
    let dim = model.system().system_dim();
    let p0: f64 = amps[..dim].iter().map(|c| c.norm_sqr()).sum();
    (p0 > 0.0).then(|| amps[..dim].iter().map(|c| c / p0.sqrt()).collect())
}

/// `ρ_S(t_n) = w_0 |φ_0⟩⟨φ_0| + (Σ_{m≠0} w_m) |g⟩⟨g|`: every one-photon
/// property state leaves the system in its ground state.
pub fn reduced_density(model: &Model, traj: &Trajectory, ensemble: &Ensemble, n: usize) -> DensityMatrix {
    let dim = model.system().system_dim();
    let mut rho = DensityMatrix::zeros(dim);
    let w0 = ensemble.weight(n, 0);
    if w0 > 0.0 {
        if let Some(phi) = vacuum_system_state(model, traj.amps(n)) {
            rho.add_projector(w0, &phi);
        }
    }
    let w1: f64 = (1..ensemble.labels()).map(|m| ensemble.weight(n, m)).sum();
    let current = rho.get(0, 0);
    rho.set(0, 0, current + w1);
    rho
}

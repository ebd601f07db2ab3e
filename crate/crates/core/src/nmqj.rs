//! Jump unraveling in the reduced Hilbert space with reverse jumps during
//! negative-rate intervals.
//!
//! For lowering-type channels the effective ensemble has two members: the
//! deterministically evolving state `ψ_0(t)` and the ground state `ψ_1`.
//! Label `0` is `ψ_0`, label `1` is `ψ_1`. Reverse jump rates depend on the
//! current ensemble counts, so members advance in lockstep, one grid step at
//! a time.

use num_complex::Complex64;
use rand::Rng;

use crate::density::DensityMatrix;
use crate::dynamics::{norm_sqr, System};
use crate::ensemble::{member_rng, Ensemble, EnsembleConfig, JumpEvent, Tally};
use crate::error::{Error, Result};
use crate::gaw::MAX_STEP_PROBABILITY;
use crate::observables::{ChannelRate, RateSeries, AMPLITUDE_FLOOR};

fn zero() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

/// Decay and Lamb-shift rate of a channel, tolerating an undefined rate only
/// when the channel amplitude is negligible.
fn usable_rate(rate: Option<ChannelRate>, amplitude: Complex64, t: f64, channel: usize) -> Result<ChannelRate> {
    match rate {
        Some(r) => Ok(r),
        None if amplitude.norm() < AMPLITUDE_FLOOR => Ok(ChannelRate::ZERO),
        None => Err(Error::MaskedRate { t, channel }),
    }
}

/// `−i H_eff ψ` with `H_eff = Σ_j ½(S_j − iΔ_j)|j⟩⟨j|` on the excited levels.
fn generator(psi: &[Complex64], rates: &[ChannelRate], out: &mut [Complex64]) {
    out[0] = zero();
    for (j, r) in rates.iter().enumerate() {
        out[1 + j] = -0.5 * Complex64::new(r.decay, r.lamb_shift) * psi[1 + j];
    }
}

/// One RK4 step of the non-Hermitian evolution. Rates are supplied at the
/// start, midpoint and end of the step. The result is not renormalized.
pub fn deterministic_step(
    psi: &[Complex64],
    start: &[Option<ChannelRate>],
    mid: &[Option<ChannelRate>],
    end: &[Option<ChannelRate>],
    t: f64,
    dt: f64,
) -> Result<Vec<Complex64>> {
    let resolve = |rates: &[Option<ChannelRate>], at: f64| -> Result<Vec<ChannelRate>> {
        rates
            .iter()
            .enumerate()
            .map(|(j, r)| usable_rate(*r, psi[1 + j], at, j))
            .collect()
    };
    let (r0, r1, r2) = (resolve(start, t)?, resolve(mid, t + 0.5 * dt)?, resolve(end, t + dt)?);
    let n = psi.len();
    let mut k = vec![vec![zero(); n]; 4];
    let mut tmp = vec![zero(); n];
    generator(psi, &r0, &mut k[0]);
    for i in 0..n {
        tmp[i] = psi[i] + 0.5 * dt * k[0][i];
    }
    generator(&tmp, &r1, &mut k[1]);
    for i in 0..n {
        tmp[i] = psi[i] + 0.5 * dt * k[1][i];
    }
    generator(&tmp, &r1, &mut k[2]);
    for i in 0..n {
        tmp[i] = psi[i] + dt * k[2][i];
    }
    generator(&tmp, &r2, &mut k[3]);
    Ok((0..n)
        .map(|i| psi[i] + dt / 6.0 * (k[0][i] + 2.0 * k[1][i] + 2.0 * k[2][i] + k[3][i]))
        .collect())
}

fn normalized(psi: &[Complex64]) -> Vec<Complex64> {
    let norm = norm_sqr(psi).sqrt();
    psi.iter().map(|c| c / norm).collect()
}

/// The normalized evolving state `ψ_0(t_n)` at every grid step, renormalized after each step.
pub fn evolve_deterministic(initial: &[Complex64], rates: &RateSeries) -> Result<Vec<Vec<Complex64>>> {
    let channels = rates.channels();
    if initial.len() != 1 + channels {
        return Err(Error::ScenarioMismatch(format!(
            "state of dimension {} for {channels} channel(s)",
            initial.len()
        )));
    }
    let mut states = Vec::with_capacity(rates.len());
    let mut psi = normalized(initial);
    states.push(psi.clone());
    for n in 0..rates.len().saturating_sub(1) {
        let at = |f: &dyn Fn(usize) -> Option<ChannelRate>| (0..channels).map(f).collect::<Vec<_>>();
        let start = at(&|j| rates.at(n, j));
        let mid = at(&|j| rates.midpoint(n, j));
        let end = at(&|j| rates.at(n + 1, j));
        psi = normalized(&deterministic_step(&psi, &start, &mid, &end, rates.time(n), rates.dt())?);
        states.push(psi.clone());
    }
    Ok(states)
}

/// Jump rates per channel. `forward[j]` applies to each member in `ψ_0`,
/// `reverse[j]` to each member in `ψ_1`.
#[derive(Clone, Debug, PartialEq)]
pub struct JumpRates {
    pub forward: Vec<f64>,
    pub reverse: Vec<f64>,
}

/// Rates from the ensemble weights `w0`, `w1` of `ψ_0` and `ψ_1` (counts or
/// probabilities; only their ratio matters), the excited populations
/// `⟨ψ_0|C_j†C_j|ψ_0⟩` and the decay rates.
///
/// Forward: `Δ_j⟨C_j†C_j⟩` when `Δ_j ≥ 0`. Reverse: the expected number of
/// returns `w0·|Δ_j|⟨C_j†C_j⟩` shared among the `w1` members of `ψ_1`, which
/// is zero when `ψ_1` is empty.
pub fn jump_rates(w0: f64, w1: f64, excited: &[f64], decays: &[f64]) -> JumpRates {
    let forward = excited
        .iter()
        .zip(decays)
        .map(|(&p, &d)| if d >= 0.0 { d * p } else { 0.0 })
        .collect();
    let reverse = excited
        .iter()
        .zip(decays)
        .map(|(&p, &d)| if d < 0.0 && w1 > 0.0 { w0 * (-d) * p / w1 } else { 0.0 })
        .collect();
    JumpRates { forward, reverse }
}

/// Label after a jump through `channel`: `0 → 1` needs `Δ ≥ 0`, `1 → 0` needs `Δ < 0`.
pub fn jump_apply(label: usize, channel: usize, decay: f64) -> Result<usize> {
    match label {
        0 if decay >= 0.0 => Ok(1),
        1 if decay < 0.0 => Ok(0),
        0 => Err(Error::JumpDirection {
            direction: "forward",
            channel,
            decay,
        }),
        _ => Err(Error::JumpDirection {
            direction: "reverse",
            channel,
            decay,
        }),
    }
}

/// `C_j ψ / ‖C_j ψ‖` for the lowering operator `C_j = |ground⟩⟨j|`.
pub fn apply_lowering(psi: &[Complex64], channel: usize) -> Option<Vec<Complex64>> {
    let amp = psi[1 + channel];
    if amp.norm() == 0.0 {
        return None;
    }
    let mut out = vec![zero(); psi.len()];
    out[0] = amp / amp.norm();
    Some(out)
}

/// Ensemble of `config.trajectories` members, all starting in `ψ_0`.
pub fn simulate(
    states: &[Vec<Complex64>],
    rates: &RateSeries,
    config: EnsembleConfig,
) -> Result<Ensemble> {
    let steps = rates.len();
    if states.len() != steps {
        return Err(Error::GridMismatch(format!(
            "{} deterministic states for {steps} rate samples",
            states.len()
        )));
    }
    let channels = rates.channels();
    let dt = rates.dt();
    let members = config.trajectories;
    let mut rngs: Vec<_> = (0..members).map(|i| member_rng(config.seed, i)).collect();
    let mut labels = vec![0u8; members];
    let mut tally = Tally::new(steps, 2);
    let (mut n0, mut n1) = (members, 0usize);
    for n in 0..steps {
        tally.counts[2 * n] = n0 as u32;
        tally.counts[2 * n + 1] = n1 as u32;
        if n + 1 == steps {
            break;
        }
        let t = rates.time(n);
        let psi = &states[n];
        let excited: Vec<f64> = (0..channels).map(|j| psi[1 + j].norm_sqr()).collect();
        let decays = (0..channels)
            .map(|j| usable_rate(rates.at(n, j), psi[1 + j], t, j).map(|r| r.decay))
            .collect::<Result<Vec<_>>>()?;
        let r = jump_rates(n0 as f64, n1 as f64, &excited, &decays);
        let p_forward: f64 = r.forward.iter().map(|x| x * dt).sum();
        let p_reverse: f64 = r.reverse.iter().map(|x| x * dt).sum();
        let probability = if n1 > 0 { p_forward.max(p_reverse) } else { p_forward };
        if probability > MAX_STEP_PROBABILITY {
            return Err(Error::StepTooLarge { probability, t });
        }
        for (member, (label, rng)) in labels.iter_mut().zip(rngs.iter_mut()).enumerate() {
            let u: f64 = rng.random();
            let per_channel = if *label == 0 { &r.forward } else { &r.reverse };
            let mut cumulative = 0.0;
            for (j, rate) in per_channel.iter().enumerate() {
                cumulative += rate * dt;
                if u < cumulative {
                    let from = *label as usize;
                    let to = jump_apply(from, j, decays[j])?;
                    tally.events.push(JumpEvent {
                        trajectory: member,
                        step: n,
                        t,
                        from,
                        to,
                        channel: j,
                    });
                    *label = to as u8;
                    break;
                }
            }
        }
        n1 = labels.iter().filter(|&&l| l == 1).count();
        n0 = members - n1;
    }
    Ok(Ensemble::new(members, 2, rates.time(0), dt, tally.counts, tally.events))
}

/// `ρ_S = (N_0/M)|ψ_0⟩⟨ψ_0| + (N_1/M)|ψ_1⟩⟨ψ_1|`.
pub fn reduced_density(psi0: &[Complex64], ensemble: &Ensemble, n: usize) -> DensityMatrix {
    let mut rho = DensityMatrix::zeros(psi0.len());
    rho.add_projector(ensemble.weight(n, 0), psi0);
    let w1 = ensemble.weight(n, 1);
    let g = rho.get(0, 0);
    rho.set(0, 0, g + w1);
    rho
}

/// Systems whose reduced dynamics has the time-local form this unraveling needs.
pub fn supports(system: System) -> bool {
    !matches!(system, System::VNonsecular)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bath::BathSpec;
    use crate::dynamics::Model;
    use crate::observables::{combined_current, gaw_transition_rates, projection_probabilities};

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn constant(decay: f64, lamb_shift: f64) -> Option<ChannelRate> {
        Some(ChannelRate { decay, lamb_shift })
    }

    #[test]
    fn zero_rates_leave_state_unchanged() {
        let psi = vec![c(0.6, 0.0), c(0.0, 0.8)];
        let r = [constant(0.0, 0.0)];
        assert_eq!(deterministic_step(&psi, &r, &r, &r, 0.0, 0.1).unwrap(), psi);
    }

    #[test]
    fn constant_decay_is_exponential() {
        let rates = RateSeries::from_fn(0.0, 1e-3, 2001, 1, |_, _| constant(0.7, 0.0));
        let mut psi = vec![c(0.0, 0.0), c(1.0, 0.0)];
        for n in 0..2000 {
            let r = [rates.at(n, 0)];
            let m = [rates.midpoint(n, 0)];
            let e = [rates.at(n + 1, 0)];
            psi = deterministic_step(&psi, &r, &m, &e, rates.time(n), 1e-3).unwrap();
        }
        assert!((psi[1].re - (-0.7f64).exp()).abs() < 1e-12);
    }

    #[test]
    fn masked_rate_with_occupied_channel_aborts() {
        let psi = vec![c(0.6, 0.0), c(0.8, 0.0)];
        let err = deterministic_step(&psi, &[None], &[None], &[None], 0.5, 1e-3).unwrap_err();
        assert!(matches!(err, Error::MaskedRate { .. }));
        let empty = vec![c(1.0, 0.0), c(0.0, 0.0)];
        assert_eq!(deterministic_step(&empty, &[None], &[None], &[None], 0.5, 1e-3).unwrap(), empty);
    }

    #[test]
    fn rate_formulas() {
        let h = 0.5f64;
        let r = jump_rates(1.0, 0.0, &[h], &[1.0]);
        assert_eq!(r.forward, vec![0.5]);
        let r = jump_rates(100.0, 0.0, &[h], &[-1.0]);
        assert_eq!(r.reverse, vec![0.0]);
        let r = jump_rates(30.0, 10.0, &[0.2, 0.1], &[-2.0, 1.0]);
        assert_eq!(r.forward, vec![0.0, 0.1]);
        assert!((r.reverse[0] - 1.2).abs() < 1e-15 && r.reverse[1] == 0.0);
    }

    #[test]
    fn lowering_lands_on_ground_ray() {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        assert_eq!(apply_lowering(&[c(h, 0.0), c(h, 0.0)], 0).unwrap(), vec![c(1.0, 0.0), c(0.0, 0.0)]);
        let psi = [c(0.1, 0.0), c(0.0, 0.7), c(-0.7, 0.1)];
        for ch in 0..2 {
            let out = apply_lowering(&psi, ch).unwrap();
            assert!((out[0].norm() - 1.0).abs() < 1e-15 && out[1] == c(0.0, 0.0) && out[2] == c(0.0, 0.0));
        }
        assert!(apply_lowering(&[c(1.0, 0.0), c(0.0, 0.0)], 0).is_none());
    }

    #[test]
    fn jump_direction_follows_rate_sign() {
        assert_eq!(jump_apply(0, 0, 0.3).unwrap(), 1);
        assert_eq!(jump_apply(1, 0, -0.3).unwrap(), 0);
        assert!(jump_apply(1, 0, 0.3).is_err());
        assert!(jump_apply(0, 1, -0.3).is_err());
    }

    fn tla(gamma0: f64, delta: f64) -> (Model, crate::dynamics::Trajectory, RateSeries) {
        let m = Model::new(System::Tla, &BathSpec::new(gamma0, 1.0, vec![delta], 180)).unwrap();
        let traj = m.integrate(&m.default_initial(), 5.0, 1e-3).unwrap();
        let rates = RateSeries::from_trajectory(&m, &traj);
        (m, traj, rates)
    }

    #[test]
    fn evolving_state_matches_total_system_vacuum_part() {
        let (m, traj, rates) = tla(4.0, -4.0);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let init = m.state_from_system(&[c(h, 0.0), c(0.0, h)]).unwrap();
        let traj2 = m.integrate(&init, 5.0, 1e-3).unwrap();
        let rates2 = RateSeries::from_trajectory(&m, &traj2);
        for (traj, rates) in [(&traj, &rates), (&traj2, &rates2)] {
            let states = evolve_deterministic(&traj.amps(0)[..2], rates).unwrap();
            for n in (0..traj.len()).step_by(25) {
                let phi = crate::gaw::vacuum_system_state(&m, traj.amps(n)).unwrap();
                let overlap: Complex64 = phi.iter().zip(&states[n]).map(|(a, b)| a.conj() * b).sum();
                assert!(overlap.norm_sqr() > 1.0 - 1e-8, "t={}", traj.time(n));
                assert!((norm_sqr(&states[n]) - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn rates_agree_with_property_state_rates() {
        let (m, traj, rates) = tla(4.0, -4.0);
        let mut negative = 0;
        for n in 0..traj.len() {
            let (t, amps) = (traj.time(n), traj.amps(n));
            let p = projection_probabilities(&m, amps);
            let gaw = gaw_transition_rates(p.p0, p.p1[0], combined_current(&m, t, amps)[0]);
            let decay = rates.at(n, 0).unwrap().decay;
            let excited = amps[1].norm_sqr() / p.p0;
            let r = jump_rates(p.p0, p.p1[0], &[excited], &[decay]);
            assert!((gaw.forward - r.forward[0]).abs() * 1e-3 < 1e-10);
            if p.p1[0] > 1e-6 {
                assert!((gaw.reverse - r.reverse[0]).abs() * 1e-3 < 1e-10, "t={t}");
            }
            negative += usize::from(decay < 0.0);
        }
        assert!(negative > 0);
    }

    #[test]
    fn expected_occupancy_follows_combined_current() {
        let (m, traj, rates) = tla(4.0, -4.0);
        let states = evolve_deterministic(&traj.amps(0)[..2], &rates).unwrap();
        let members = 10_000;
        let ens = simulate(&states, &rates, EnsembleConfig { trajectories: members, seed: 9 }).unwrap();
        let mut outside = 0;
        let samples: Vec<usize> = (0..traj.len()).step_by(100).collect();
        for &n in &samples {
            let p1 = projection_probabilities(&m, traj.amps(n)).p1[0];
            let sigma = (p1 * (1.0 - p1) / members as f64).sqrt();
            outside += usize::from((ens.weight(n, 1) - p1).abs() > 3.0 * sigma + 1e-12);
        }
        assert!(outside <= 1, "{outside}");
        // reverse jumps only inside negative-rate steps
        for e in ens.events() {
            let d = rates.at(e.step, e.channel).unwrap().decay;
            assert_eq!(e.from == 1, d < 0.0);
        }
        assert!(ens.events().iter().any(|e| e.from == 1));
    }

    #[test]
    fn density_endpoints() {
        let ens = Ensemble::new(10, 2, 0.0, 1e-3, vec![10, 0, 0, 10], vec![]);
        let psi = [c(0.0, 0.0), c(1.0, 0.0)];
        assert_eq!(reduced_density(&psi, &ens, 0), DensityMatrix::basis(2, 1));
        assert_eq!(reduced_density(&psi, &ens, 1), DensityMatrix::basis(2, 0));
    }
}

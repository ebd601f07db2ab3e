//! Quantities derived from the total-system amplitudes: photon-number
//! probabilities, probability currents between property states, the
//! property-state transition rates and the time-local decay rates.
//!
//! Sign convention: a positive current flows from the vacuum configuration
//! into the one-photon configurations, so `dP(1,t)/dt = 𝒥(t)`.

use num_complex::Complex64;

use crate::dynamics::{Model, Trajectory};
use crate::error::{Error, Result};

/// Below this `|c_i|` the decay rate `−2Re[ċ_i/c_i]` is reported as undefined.
pub const AMPLITUDE_FLOOR: f64 = 1e-10;

/// Below this probability a transition rate denominator counts as empty.
pub const PROBABILITY_FLOOR: f64 = 1e-12;

/// Currents smaller than this are treated as zero when the source is empty.
const CURRENT_FLOOR: f64 = 1e-14;

#[derive(Clone, Debug, PartialEq)]
pub struct Populations {
    /// Probability of the bath vacuum.
    pub p0: f64,
    /// Probability of one photon, per mode register.
    pub p1: Vec<f64>,
}

impl Populations {
    pub fn p1_total(&self) -> f64 {
        self.p1.iter().sum()
    }
}

pub fn projection_probabilities(model: &Model, amps: &[Complex64]) -> Populations {
    let dim = model.system().system_dim();
    let p0 = amps[..dim].iter().map(|c| c.norm_sqr()).sum();
    let p1 = (0..model.system().registers())
        .map(|r| model.register(amps, r).iter().map(|c| c.norm_sqr()).sum())
        .collect();
    Populations { p0, p1 }
}

/// `Σ_{i→r} g_k e^{iΩ_{k,i} t} c_i`, the amplitude pushed into mode `k` of register `r`.
fn mode_drive(model: &Model, t: f64, amps: &[Complex64], register: usize, k: usize) -> Complex64 {
    let g = model.grid().couplings()[k];
    model
        .channels_of(register)
        .map(|ch| {
            let (s, c) = (model.channel_frequencies(ch)[k] * t).sin_cos();
            g * Complex64::new(c, s) * amps[1 + ch]
        })
        .sum()
}

/// Current `J_{1_k,0}(t) = 2 Im⟨Ψ|π_{1_k} H_I π_0|Ψ⟩ = 2 Re[c_k* Σ_i g_k e^{iΩ_{k,i}t} c_i]`.
pub fn per_mode_current(
    model: &Model,
    t: f64,
    amps: &[Complex64],
    register: usize,
    k: usize,
) -> Result<f64> {
    let n = model.n_modes();
    if k >= n {
        return Err(Error::ModeIndex { index: k, n });
    }
    if register >= model.system().registers() {
        return Err(Error::ModeIndex {
            index: register,
            n: model.system().registers(),
        });
    }
    let c_k = model.register(amps, register)[k];
    Ok(2.0 * (c_k.conj() * mode_drive(model, t, amps, register, k)).re)
}

/// All per-mode currents, indexed `[register][k]`.
pub fn mode_currents(model: &Model, t: f64, amps: &[Complex64]) -> Vec<Vec<f64>> {
    (0..model.system().registers())
        .map(|r| {
            let reg = model.register(amps, r);
            (0..model.n_modes())
                .map(|k| 2.0 * (reg[k].conj() * mode_drive(model, t, amps, r, k)).re)
                .collect()
        })
        .collect()
}

/// Combined current `𝒥_{1,0} = Σ_k J_{1_k,0}` per register.
pub fn combined_current(model: &Model, t: f64, amps: &[Complex64]) -> Vec<f64> {
    mode_currents(model, t, amps)
        .iter()
        .map(|js| js.iter().sum())
        .collect()
}

/// Property-state transition rates for one channel.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GawRates {
    /// `𝒯_{1,0}`: vacuum → one photon.
    pub forward: f64,
    /// `𝒯_{0,1}`: one photon → vacuum.
    pub reverse: f64,
}

impl GawRates {
    pub const ZERO: GawRates = GawRates {
        forward: 0.0,
        reverse: 0.0,
    };
}

fn guarded_ratio(num: f64, den: f64) -> f64 {
    if den >= PROBABILITY_FLOOR {
        num / den
    } else if num.abs() <= CURRENT_FLOOR {
        0.0
    } else {
        // empty source with a nonzero outflow: the jump is forced
        f64::INFINITY
    }
}

/// Rates from a current: positive current drives vacuum → photon jumps at
/// `𝒥/P0`, negative current drives photon → vacuum jumps at `−𝒥/P1`.
pub fn gaw_transition_rates(p0: f64, p1: f64, current: f64) -> GawRates {
    if current >= 0.0 {
        GawRates {
            forward: guarded_ratio(current, p0),
            reverse: 0.0,
        }
    } else {
        GawRates {
            forward: 0.0,
            reverse: guarded_ratio(-current, p1),
        }
    }
}

/// Time-local decay and Lamb-shift rates of one channel.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct ChannelRate {
    /// `Δ_i = −2 Re[ċ_i/c_i]`
    pub decay: f64,
    /// `S_i = −2 Im[ċ_i/c_i]`
    pub lamb_shift: f64,
}

impl ChannelRate {
    pub const ZERO: ChannelRate = ChannelRate {
        decay: 0.0,
        lamb_shift: 0.0,
    };
}

fn rate_from(c: Complex64, dc: Complex64) -> Option<ChannelRate> {
    if c.norm() < AMPLITUDE_FLOOR {
        return None;
    }
    let r = -2.0 * dc / c;
    Some(ChannelRate {
        decay: r.re,
        lamb_shift: r.im,
    })
}

/// Rates per channel from the analytic right-hand side; `None` where `|c_i|` is below the floor.
pub fn channel_rates(model: &Model, t: f64, amps: &[Complex64]) -> Vec<Option<ChannelRate>> {
    let d = model.derivative_vec(t, amps);
    (0..model.system().channels())
        .map(|ch| rate_from(amps[1 + ch], d[1 + ch]))
        .collect()
}

/// Decay and Lamb-shift rates on the integration grid and at its midpoints.
#[derive(Clone, Debug)]
pub struct RateSeries {
    t0: f64,
    dt: f64,
    len: usize,
    channels: usize,
    at_steps: Vec<Option<ChannelRate>>,
    at_midpoints: Vec<Option<ChannelRate>>,
}

impl RateSeries {
    /// Midpoint amplitudes come from an RK4 half step off each grid point.
    pub fn from_trajectory(model: &Model, traj: &Trajectory) -> Self {
        let channels = model.system().channels();
        let len = traj.len();
        let mut at_steps = Vec::with_capacity(len * channels);
        let mut at_midpoints = Vec::with_capacity(len.saturating_sub(1) * channels);
        for n in 0..len {
            let t = traj.time(n);
            at_steps.extend(channel_rates(model, t, traj.amps(n)));
            if n + 1 < len {
                let h = 0.5 * traj.dt();
                let mid = model.rk4_step(t, traj.amps(n), h);
                at_midpoints.extend(channel_rates(model, t + h, &mid));
            }
        }
        RateSeries {
            t0: traj.time(0),
            dt: traj.dt(),
            len,
            channels,
            at_steps,
            at_midpoints,
        }
    }

    /// Tabulate a rate function on the grid `t0 + n·dt` and its midpoints.
    pub fn from_fn(
        t0: f64,
        dt: f64,
        len: usize,
        channels: usize,
        f: impl Fn(f64, usize) -> Option<ChannelRate>,
    ) -> Self {
        let mut at_steps = Vec::with_capacity(len * channels);
        let mut at_midpoints = Vec::new();
        for n in 0..len {
            let t = t0 + n as f64 * dt;
            at_steps.extend((0..channels).map(|ch| f(t, ch)));
            if n + 1 < len {
                at_midpoints.extend((0..channels).map(|ch| f(t + 0.5 * dt, ch)));
            }
        }
        RateSeries {
            t0,
            dt,
            len,
            channels,
            at_steps,
            at_midpoints,
        }
    }

    pub fn len(&self) -> usize {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn time(&self, n: usize) -> f64 {
        self.t0 + n as f64 * self.dt
    }

    pub fn at(&self, n: usize, channel: usize) -> Option<ChannelRate> {
        self.at_steps[n * self.channels + channel]
    }

    /// Rate at `t_n + dt/2`.
    pub fn midpoint(&self, n: usize, channel: usize) -> Option<ChannelRate> {
        self.at_midpoints[n * self.channels + channel]
    }
}

/// Currents and probabilities sampled every `stride` steps.
#[derive(Clone, Debug)]
pub struct CurrentSeries {
    pub steps: Vec<usize>,
    pub times: Vec<f64>,
    /// `[sample][register][k]`
    pub per_mode: Vec<Vec<Vec<f64>>>,
    /// `[sample][register]`
    pub combined: Vec<Vec<f64>>,
    pub populations: Vec<Populations>,
}

impl CurrentSeries {
    pub fn from_trajectory(model: &Model, traj: &Trajectory, stride: usize) -> Self {
        let steps: Vec<usize> = (0..traj.len()).step_by(stride.max(1)).collect();
        let mut series = CurrentSeries {
            times: steps.iter().map(|&n| traj.time(n)).collect(),
            per_mode: Vec::with_capacity(steps.len()),
            combined: Vec::with_capacity(steps.len()),
            populations: Vec::with_capacity(steps.len()),
            steps,
        };
        for &n in &series.steps {
            let (t, amps) = (traj.time(n), traj.amps(n));
            let per_mode = mode_currents(model, t, amps);
            series
                .combined
                .push(per_mode.iter().map(|js| js.iter().sum()).collect());
            series.per_mode.push(per_mode);
            series.populations.push(projection_probabilities(model, amps));
        }
        series
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }
}

//! Total-system Schrödinger equation in the one-excitation sector.
//!
//! Amplitudes are stored flat: the ground amplitude first, then one excited
//! amplitude per decay channel, then the mode registers. A two-level atom
//! uses `[c_g, c_e, c_1..c_N]`; the V-system uses `[c_c, c_a, c_b, ...]` with
//! one shared register (non-secular) or one register per channel (secular).

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bath::{build_grid, BathSpec, ModeGrid};
use crate::error::{Error, Result};

/// Default integration step in units of `1/λ`.
pub const DEFAULT_DT: f64 = 1e-3;

/// Norm drift beyond which integration is aborted.
pub const NORM_ABORT: f64 = 1e-6;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum System {
    /// Two-level atom.
    Tla,
    /// V-system with both transitions coupled to one shared bath.
    VNonsecular,
    /// V-system with an independent bath per transition.
    VSecular,
}

impl System {
    pub fn channels(self) -> usize {
        match self {
            System::Tla => 1,
            System::VNonsecular | System::VSecular => 2,
        }
    }

    /// Number of system amplitudes (ground plus one per channel).
    pub fn system_dim(self) -> usize {
        1 + self.channels()
    }

    pub fn registers(self) -> usize {
        match self {
            System::Tla | System::VNonsecular => 1,
            System::VSecular => 2,
        }
    }

    /// Mode register the given channel emits into.
    pub fn register_of(self, channel: usize) -> usize {
        match self {
            System::VNonsecular => 0,
            _ => channel,
        }
    }

    pub fn channel_name(self, channel: usize) -> &'static str {
        match (self, channel) {
            (System::Tla, _) => "e",
            (_, 0) => "a",
            _ => "b",
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            System::Tla => "tla",
            System::VNonsecular => "v_nonsecular",
            System::VSecular => "v_secular",
        }
    }
}

/// Amplitudes of the total state at one instant.
#[derive(Clone, Debug, PartialEq)]
pub struct TotalAmplitudes {
    pub system: System,
    pub t: f64,
    pub amps: Vec<Complex64>,
}

impl TotalAmplitudes {
    pub fn ground(&self) -> Complex64 {
        self.amps[0]
    }

    pub fn excited(&self, channel: usize) -> Complex64 {
        self.amps[1 + channel]
    }

    pub fn norm_sqr(&self) -> f64 {
        norm_sqr(&self.amps)
    }
}

pub(crate) fn norm_sqr(amps: &[Complex64]) -> f64 {
    amps.iter().map(|c| c.norm_sqr()).sum()
}

/// A system coupled to a discretized bath, with per-channel mode frequencies.
#[derive(Clone, Debug)]
pub struct Model {
    system: System,
    grid: ModeGrid,
    detunings: Vec<f64>,
    /// `Ω_{k,i}` per channel.
    frequencies: Vec<Vec<f64>>,
}

impl Model {
    pub fn new(system: System, spec: &BathSpec) -> Result<Self> {
        let grid = build_grid(spec)?;
        Self::with_grid(system, grid, spec.detunings.clone())
    }

    pub fn with_grid(system: System, grid: ModeGrid, detunings: Vec<f64>) -> Result<Self> {
        if detunings.len() != system.channels() {
            return Err(Error::ScenarioMismatch(format!(
                "{} needs {} detuning(s), got {}",
                system.as_str(),
                system.channels(),
                detunings.len()
            )));
        }
        let frequencies = detunings
            .iter()
            .map(|&d| grid.channel_frequencies(d))
            .collect();
        Ok(Model {
            system,
            grid,
            detunings,
            frequencies,
        })
    }

    pub fn system(&self) -> System {
        self.system
    }

    pub fn grid(&self) -> &ModeGrid {
        &self.grid
    }

    pub fn detunings(&self) -> &[f64] {
        &self.detunings
    }

    pub fn channel_frequencies(&self, channel: usize) -> &[f64] {
        &self.frequencies[channel]
    }

    pub fn n_modes(&self) -> usize {
        self.grid.len()
    }

    pub fn n_amps(&self) -> usize {
        self.system.system_dim() + self.system.registers() * self.n_modes()
    }

    /// Offset of a mode register inside the flat amplitude vector.
    pub fn register_start(&self, register: usize) -> usize {
        self.system.system_dim() + register * self.n_modes()
    }

    pub fn register<'a>(&self, amps: &'a [Complex64], register: usize) -> &'a [Complex64] {
        let start = self.register_start(register);
        &amps[start..start + self.n_modes()]
    }

    /// Channels emitting into a register.
    pub fn channels_of(&self, register: usize) -> impl Iterator<Item = usize> + '_ {
        let system = self.system;
        (0..system.channels()).filter(move |&i| system.register_of(i) == register)
    }

    /// Bath in vacuum with the given (normalized) system amplitudes.
    pub fn state_from_system(&self, system_amps: &[Complex64]) -> Result<TotalAmplitudes> {
        if system_amps.len() != self.system.system_dim() {
            return Err(Error::ScenarioMismatch(format!(
                "{} has {} system amplitudes, got {}",
                self.system.as_str(),
                self.system.system_dim(),
                system_amps.len()
            )));
        }
        let mut amps = vec![Complex64::new(0.0, 0.0); self.n_amps()];
        amps[..system_amps.len()].copy_from_slice(system_amps);
        Ok(TotalAmplitudes {
            system: self.system,
            t: 0.0,
            amps,
        })
    }

    /// `|e⟩|0⟩` for the atom, `(|a⟩ + |b⟩)/√2 ⊗ |0⟩` for the V-system.
    pub fn default_initial(&self) -> TotalAmplitudes {
        let zero = Complex64::new(0.0, 0.0);
        let sys = match self.system {
            System::Tla => vec![zero, Complex64::new(1.0, 0.0)],
            _ => {
                let h = Complex64::new(std::f64::consts::FRAC_1_SQRT_2, 0.0);
                vec![zero, h, h]
            }
        };
        self.state_from_system(&sys).expect("dimension matches system")
    }

    /// Right-hand side of `i d/dt |Ψ⟩ = H_I(t)|Ψ⟩` in amplitude form.
    pub fn derivative(&self, t: f64, amps: &[Complex64], out: &mut [Complex64]) {
        let n = self.n_modes();
        debug_assert_eq!(amps.len(), self.n_amps());
        out.fill(Complex64::new(0.0, 0.0));
        let g = self.grid.couplings();
        for ch in 0..self.system.channels() {
            let start = self.register_start(self.system.register_of(ch));
            let c_i = amps[1 + ch];
            let mut acc = Complex64::new(0.0, 0.0);
            for k in 0..n {
                // e^{iΩt}; recomputed from Ω at every evaluation
                let (s, c) = (self.frequencies[ch][k] * t).sin_cos();
                let phase = Complex64::new(c, s);
                let c_k = amps[start + k];
                acc += g[k] * phase.conj() * c_k;
                out[start + k] += g[k] * phase * c_i;
            }
            out[1 + ch] = -acc;
        }
    }

    pub fn derivative_vec(&self, t: f64, amps: &[Complex64]) -> Vec<Complex64> {
        let mut out = vec![Complex64::new(0.0, 0.0); amps.len()];
        self.derivative(t, amps, &mut out);
        out
    }

    /// One classical fourth-order Runge–Kutta step of size `h`.
    pub fn rk4_step(&self, t: f64, y: &[Complex64], h: f64) -> Vec<Complex64> {
        let mut work = Rk4Work::new(y.len());
        let mut next = y.to_vec();
        work.step(self, t, &mut next, h);
        next
    }

    /// Integrate on the fixed grid `t_n = n·dt`, storing every step.
    pub fn integrate(&self, initial: &TotalAmplitudes, t_max: f64, dt: f64) -> Result<Trajectory> {
        if initial.system != self.system || initial.amps.len() != self.n_amps() {
            return Err(Error::ScenarioMismatch(
                "initial state does not match the model layout".into(),
            ));
        }
        let steps = step_count(t_max, dt)?;
        let n_amps = self.n_amps();
        let norm0 = initial.norm_sqr();
        let mut data = Vec::with_capacity((steps + 1) * n_amps);
        data.extend_from_slice(&initial.amps);
        let mut y = initial.amps.clone();
        let mut work = Rk4Work::new(n_amps);
        let mut max_drift: f64 = 0.0;
        for n in 0..steps {
            let t = initial.t + n as f64 * dt;
            work.step(self, t, &mut y, dt);
            let drift = (norm_sqr(&y) - norm0).abs();
            max_drift = max_drift.max(drift);
            if drift > NORM_ABORT || !drift.is_finite() {
                return Err(Error::NormDrift { drift, t: t + dt });
            }
            data.extend_from_slice(&y);
        }
        Ok(Trajectory {
            system: self.system,
            t0: initial.t,
            dt,
            n_amps,
            data,
            max_norm_drift: max_drift,
        })
    }
}

pub(crate) fn step_count(t_max: f64, dt: f64) -> Result<usize> {
    if !(dt.is_finite() && dt > 0.0 && t_max.is_finite() && t_max >= 0.0) {
        return Err(Error::InvalidStep { dt, t_max });
    }
    let steps = (t_max / dt).round();
    if (steps * dt - t_max).abs() > 1e-9 * t_max.max(1.0) {
        return Err(Error::InvalidStep { dt, t_max });
    }
    Ok(steps as usize)
}

struct Rk4Work {
    k1: Vec<Complex64>,
    k2: Vec<Complex64>,
    k3: Vec<Complex64>,
    k4: Vec<Complex64>,
    tmp: Vec<Complex64>,
}

impl Rk4Work {
    fn new(n: usize) -> Self {
        let z = vec![Complex64::new(0.0, 0.0); n];
        Rk4Work {
            k1: z.clone(),
            k2: z.clone(),
            k3: z.clone(),
            k4: z.clone(),
            tmp: z,
        }
    }

    fn step(&mut self, model: &Model, t: f64, y: &mut [Complex64], h: f64) {
        model.derivative(t, y, &mut self.k1);
        for i in 0..y.len() {
            self.tmp[i] = y[i] + 0.5 * h * self.k1[i];
        }
        model.derivative(t + 0.5 * h, &self.tmp, &mut self.k2);
        for i in 0..y.len() {
            self.tmp[i] = y[i] + 0.5 * h * self.k2[i];
        }
        model.derivative(t + 0.5 * h, &self.tmp, &mut self.k3);
        for i in 0..y.len() {
            self.tmp[i] = y[i] + h * self.k3[i];
        }
        model.derivative(t + h, &self.tmp, &mut self.k4);
        for i in 0..y.len() {
            y[i] += h / 6.0 * (self.k1[i] + 2.0 * self.k2[i] + 2.0 * self.k3[i] + self.k4[i]);
        }
    }
}

/// Amplitudes at every step of a fixed-step integration.
#[derive(Clone, Debug)]
pub struct Trajectory {
    system: System,
    t0: f64,
    dt: f64,
    n_amps: usize,
    data: Vec<Complex64>,
    max_norm_drift: f64,
}

impl Trajectory {
    pub fn system(&self) -> System {
        self.system
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    /// Number of stored samples (steps + 1).
    pub fn len(&self) -> usize {
        self.data.len() / self.n_amps
    }

    pub fn is_empty(&self) -> bool {
        self.data.is_empty()
    }

    pub fn time(&self, n: usize) -> f64 {
        self.t0 + n as f64 * self.dt
    }

    pub fn amps(&self, n: usize) -> &[Complex64] {
        &self.data[n * self.n_amps..(n + 1) * self.n_amps]
    }

    pub fn state(&self, n: usize) -> TotalAmplitudes {
        TotalAmplitudes {
            system: self.system,
            t: self.time(n),
            amps: self.amps(n).to_vec(),
        }
    }

    pub fn last(&self) -> TotalAmplitudes {
        self.state(self.len() - 1)
    }

    /// Largest `| ‖Ψ(t)‖² − ‖Ψ(0)‖² |` seen during integration.
    pub fn max_norm_drift(&self) -> f64 {
        self.max_norm_drift
    }

    pub fn excited_population(&self, n: usize, channel: usize) -> f64 {
        self.amps(n)[1 + channel].norm_sqr()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bath::BathSpec;

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn single_mode(g: f64) -> Model {
        let grid = ModeGrid::from_parts(vec![0.0], vec![g], 1.0).unwrap();
        Model::with_grid(System::Tla, grid, vec![0.0]).unwrap()
    }

    #[test]
    fn zero_coupling_has_zero_derivative() {
        let spec = BathSpec::new(0.0, 1.0, vec![3.0, -3.0], 20);
        for system in [System::VNonsecular, System::VSecular] {
            let m = Model::new(system, &spec).unwrap();
            let mut s = m.default_initial();
            s.amps[5] = c(0.3, 0.1);
            let d = m.derivative_vec(0.7, &s.amps);
            assert!(d.iter().all(|z| z.norm() == 0.0));
        }
    }

    #[test]
    fn single_resonant_mode_substitution() {
        let m = single_mode(0.7);
        let d = m.derivative_vec(0.0, &[c(0.0, 0.0), c(1.0, 0.0), c(0.0, 0.0)]);
        assert_eq!(d, vec![c(0.0, 0.0), c(0.0, 0.0), c(0.7, 0.0)]);
    }

    #[test]
    fn vacuum_rabi_oscillation() {
        let g = 1.3;
        let m = single_mode(g);
        let t_max = 10.0 / g;
        let dt = 1e-3;
        let t_max = (t_max / dt).round() * dt;
        let traj = m.integrate(&m.default_initial(), t_max, dt).unwrap();
        let worst = (0..traj.len())
            .map(|n| (traj.excited_population(n, 0) - (g * traj.time(n)).cos().powi(2)).abs())
            .fold(0.0, f64::max);
        assert!(worst < 1e-6, "{worst}");
    }

    #[test]
    fn nonsecular_with_one_channel_empty_reduces_to_atom() {
        let spec = BathSpec::new(2.0, 1.0, vec![1.5, -2.0], 60);
        let v = Model::new(System::VNonsecular, &spec).unwrap();
        let tla = Model::new(System::Tla, &BathSpec::new(2.0, 1.0, vec![1.5], 60)).unwrap();
        let mut sv = v.state_from_system(&[c(0.0, 0.0), c(0.6, 0.0), c(0.0, 0.0)]).unwrap();
        sv.amps[3 + 7] = c(0.0, 0.8);
        let mut st = tla.state_from_system(&[c(0.0, 0.0), c(0.6, 0.0)]).unwrap();
        st.amps[2 + 7] = c(0.0, 0.8);
        let dv = v.derivative_vec(0.4, &sv.amps);
        let dt = tla.derivative_vec(0.4, &st.amps);
        assert_eq!(dv[1], dt[1]);
        assert_eq!(&dv[3..], &dt[2..]);
    }

    #[test]
    fn secular_equal_detunings_reproduce_atom() {
        let spec = BathSpec::new(4.0, 1.0, vec![-2.0, -2.0], 80);
        let v = Model::new(System::VSecular, &spec).unwrap();
        let tla = Model::new(System::Tla, &BathSpec::new(4.0, 1.0, vec![-2.0], 80)).unwrap();
        let one = c(1.0, 0.0);
        let zero = c(0.0, 0.0);
        let tv = v
            .integrate(&v.state_from_system(&[zero, one, zero]).unwrap(), 2.0, 1e-3)
            .unwrap();
        let tt = tla.integrate(&tla.default_initial(), 2.0, 1e-3).unwrap();
        for n in 0..tt.len() {
            assert!((tv.amps(n)[1] - tt.amps(n)[1]).norm() < 1e-12);
            assert_eq!(tv.amps(n)[2], zero);
        }
    }

    #[test]
    fn ground_amplitude_is_bit_constant() {
        let spec = BathSpec::new(4.0, 1.0, vec![-4.0], 40);
        let m = Model::new(System::Tla, &spec).unwrap();
        let h = std::f64::consts::FRAC_1_SQRT_2;
        let init = m.state_from_system(&[c(h, 0.0), c(0.0, h)]).unwrap();
        let traj = m.integrate(&init, 1.0, 1e-3).unwrap();
        for n in 0..traj.len() {
            assert_eq!(traj.amps(n)[0], c(h, 0.0));
        }
    }

    #[test]
    fn fourth_order_convergence() {
        let mut spec = BathSpec::new(4.0, 1.0, vec![-4.0], 30);
        spec.window_halfwidth = 5.0;
        let m = Model::new(System::Tla, &spec).unwrap();
        let init = m.default_initial();
        let end = |dt: f64| m.integrate(&init, 2.0, dt).unwrap().last().amps;
        let (a, b, c) = (end(0.04), end(0.02), end(0.01));
        let diff = |x: &[Complex64], y: &[Complex64]| {
            x.iter().zip(y).map(|(p, q)| (p - q).norm_sqr()).sum::<f64>().sqrt()
        };
        let ratio = diff(&a, &b) / diff(&b, &c);
        assert!((ratio - 16.0).abs() < 2.0, "ratio {ratio}");
    }

    #[test]
    fn rejects_mismatched_inputs() {
        let spec = BathSpec::new(1.0, 1.0, vec![0.0], 10);
        assert!(Model::new(System::VSecular, &spec).is_err());
        let m = Model::new(System::Tla, &spec).unwrap();
        assert!(m.state_from_system(&[c(1.0, 0.0)]).is_err());
        let v = Model::new(System::VSecular, &BathSpec::new(1.0, 1.0, vec![0.0, 1.0], 10)).unwrap();
        assert!(m.integrate(&v.default_initial(), 1.0, 0.01).is_err());
        assert!(m.integrate(&m.default_initial(), 1.0, 0.0).is_err());
        assert!(m.integrate(&m.default_initial(), 1.0, 0.3).is_err());
    }

    #[test]
    fn oversized_step_trips_norm_guard() {
        let spec = BathSpec::new(4.0, 1.0, vec![0.0], 40);
        let m = Model::new(System::Tla, &spec).unwrap();
        let err = m.integrate(&m.default_initial(), 2.0, 0.5).unwrap_err();
        assert!(matches!(err, Error::NormDrift { .. }), "{err}");
    }
}

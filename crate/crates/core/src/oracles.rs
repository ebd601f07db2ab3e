//! Reference solutions that do not go through the discretized bath.
//!
//! In the continuum limit the Lorentzian bath gives the memory kernel
//! `f(τ) = (γ0 λ/2) e^{−(λ − iδ)τ}` for a channel detuned by `δ = ω_sys − ω_c`,
//! and the excited amplitude obeys `ċ(t) = −∫₀ᵗ f(t−s) c(s) ds`.

use num_complex::Complex64;

use crate::density::DensityMatrix;
use crate::error::{Error, Result};
use crate::observables::{ChannelRate, RateSeries};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct LorentzianChannel {
    pub gamma0: f64,
    pub lambda: f64,
    pub detuning: f64,
}

impl LorentzianChannel {
    pub fn new(gamma0: f64, lambda: f64, detuning: f64) -> Self {
        LorentzianChannel {
            gamma0,
            lambda,
            detuning,
        }
    }

    fn strength(&self) -> f64 {
        0.5 * self.gamma0 * self.lambda
    }

    fn decay_constant(&self) -> Complex64 {
        Complex64::new(self.lambda, -self.detuning)
    }

    /// Memory kernel `f(τ)`.
    pub fn kernel(&self, tau: f64) -> Complex64 {
        self.strength() * (-self.decay_constant() * tau).exp()
    }

    fn discriminant(&self) -> Complex64 {
        let k = self.decay_constant();
        (k * k - 4.0 * self.strength()).sqrt()
    }

    /// `sinh(d t/2)/d`, finite as `d → 0`.
    fn sinh_over_d(d: Complex64, t: f64) -> Complex64 {
        let x = d * t * 0.5;
        if x.norm() < 1e-4 {
            0.5 * t * (1.0 + x * x / 6.0 + x * x * x * x / 120.0)
        } else {
            x.sinh() / d
        }
    }

    /// Closed-form `c_e(t)` for `c_e(0) = 1`:
    /// `e^{−κt/2}[cosh(dt/2) + (κ/d) sinh(dt/2)]` with `κ = λ − iδ`, `d² = κ² − 2γ0λ`.
    pub fn exact_ce(&self, t: f64) -> Complex64 {
        let k = self.decay_constant();
        let d = self.discriminant();
        (-k * t * 0.5).exp() * ((d * t * 0.5).cosh() + k * Self::sinh_over_d(d, t))
    }

    /// `ċ_e(t) = −γ0λ e^{−κt/2} sinh(dt/2)/d`.
    pub fn exact_ce_derivative(&self, t: f64) -> Complex64 {
        let k = self.decay_constant();
        -2.0 * self.strength() * (-k * t * 0.5).exp() * Self::sinh_over_d(self.discriminant(), t)
    }

    /// Continuum decay and Lamb-shift rates; `None` where `c_e` vanishes.
    pub fn exact_rates(&self, t: f64) -> Option<ChannelRate> {
        let c = self.exact_ce(t);
        if c.norm() < crate::observables::AMPLITUDE_FLOOR {
            return None;
        }
        let r = -2.0 * self.exact_ce_derivative(t) / c;
        Some(ChannelRate {
            decay: r.re,
            lamb_shift: r.im,
        })
    }

    /// Second-order time-convolutionless rates, `Δ + iS = 2∫₀ᵗ f(τ) dτ`, by adaptive quadrature.
    pub fn tcl2_rate(&self, t: f64) -> ChannelRate {
        let integral = adaptive_simpson(|tau| self.kernel(tau), 0.0, t, 1e-12);
        ChannelRate {
            decay: 2.0 * integral.re,
            lamb_shift: 2.0 * integral.im,
        }
    }

    /// `c_e` on the grid `n·h` from the integro-differential equation itself:
    /// trapezoidal memory quadrature plus trapezoidal time stepping, Richardson
    /// extrapolated from steps `h` and `h/2`. Accuracy is O(h⁴).
    pub fn volterra_ce(&self, t_max: f64, h: f64) -> Vec<Complex64> {
        let coarse = self.volterra_trapezoid(t_max, h);
        let fine = self.volterra_trapezoid(t_max, 0.5 * h);
        coarse
            .iter()
            .enumerate()
            .map(|(n, c)| (4.0 * fine[2 * n] - c) / 3.0)
            .collect()
    }

    fn volterra_trapezoid(&self, t_max: f64, h: f64) -> Vec<Complex64> {
        let steps = (t_max / h).round() as usize;
        let a = self.strength();
        let decay = (-self.decay_constant() * h).exp();
        let mut c = Vec::with_capacity(steps + 1);
        c.push(Complex64::new(1.0, 0.0));
        // history = Σ_{j<n} w_j e^{−κ(t_n − t_j)} c_j, with w_0 = ½
        let mut history = Complex64::new(0.0, 0.0);
        let mut memory_prev = Complex64::new(0.0, 0.0);
        for n in 1..=steps {
            let w = if n == 1 { 0.5 } else { 1.0 };
            history = decay * (history + w * c[n - 1]);
            // memory_n = h a (history + c_n/2); c_n = c_{n−1} − h/2 (memory_{n−1} + memory_n)
            let rhs = c[n - 1] - 0.5 * h * (memory_prev + h * a * history);
            let c_n = rhs / (1.0 + 0.25 * h * h * a);
            memory_prev = h * a * (history + 0.5 * c_n);
            c.push(c_n);
        }
        c
    }
}

/// Adaptive Simpson quadrature of a complex integrand.
pub fn adaptive_simpson(f: impl Fn(f64) -> Complex64, a: f64, b: f64, tol: f64) -> Complex64 {
    if b <= a {
        return Complex64::new(0.0, 0.0);
    }
    let (fa, fm, fb) = (f(a), f(0.5 * (a + b)), f(b));
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(&f, a, b, fa, fm, fb, whole, tol, 48)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step(
    f: &impl Fn(f64) -> Complex64,
    a: f64,
    b: f64,
    fa: Complex64,
    fm: Complex64,
    fb: Complex64,
    whole: Complex64,
    tol: f64,
    depth: u32,
) -> Complex64 {
    let m = 0.5 * (a + b);
    let (lm, rm) = (0.5 * (a + m), 0.5 * (m + b));
    let (flm, frm) = (f(lm), f(rm));
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.norm() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// `dρ/dt` of the time-local master equation with lowering channels
/// `C_j = |0⟩⟨j+1|`, Lamb-shift Hamiltonian `½Σ S_j |j+1⟩⟨j+1|` and decay rates `Δ_j`.
fn master_rhs(rho: &DensityMatrix, rates: &[ChannelRate]) -> DensityMatrix {
    let dim = rho.dim();
    let energy = |a: usize| if a == 0 { 0.0 } else { 0.5 * rates[a - 1].lamb_shift };
    let loss = |a: usize| if a == 0 { 0.0 } else { rates[a - 1].decay };
    let mut out = DensityMatrix::zeros(dim);
    for a in 0..dim {
        for b in 0..dim {
            let r = rho.get(a, b);
            let coherent = Complex64::new(0.0, -(energy(a) - energy(b))) * r;
            out.set(a, b, coherent - 0.5 * (loss(a) + loss(b)) * r);
        }
    }
    let feed: Complex64 = (1..dim).map(|j| rates[j - 1].decay * rho.get(j, j)).sum();
    out.set(0, 0, out.get(0, 0) + feed);
    out
}

fn resolve_rates(rates: &RateSeries, pick: impl Fn(usize) -> Option<ChannelRate>, rho: &DensityMatrix, t: f64) -> Result<Vec<ChannelRate>> {
    (0..rates.channels())
        .map(|j| match pick(j) {
            Some(r) => Ok(r),
            None if rho.get(j + 1, j + 1).norm() < 1e-20 => Ok(ChannelRate::ZERO),
            None => Err(Error::MaskedRate { t, channel: j }),
        })
        .collect()
}

/// RK4 integration of the master equation on the grid of `rates`.
pub fn dense_master(rates: &RateSeries, initial: &DensityMatrix) -> Result<Vec<DensityMatrix>> {
    if initial.dim() != rates.channels() + 1 {
        return Err(Error::ScenarioMismatch(format!(
            "density matrix of dimension {} for {} channel(s)",
            initial.dim(),
            rates.channels()
        )));
    }
    let dt = rates.dt();
    let axpy = |x: &DensityMatrix, h: f64, k: &DensityMatrix| {
        let mut y = x.clone();
        for (a, b) in y.as_mut_slice().iter_mut().zip(k.as_slice()) {
            *a += h * b;
        }
        y
    };
    let mut out = Vec::with_capacity(rates.len());
    let mut rho = initial.clone();
    out.push(rho.clone());
    for n in 0..rates.len().saturating_sub(1) {
        let t = rates.time(n);
        let r0 = resolve_rates(rates, |j| rates.at(n, j), &rho, t)?;
        let r1 = resolve_rates(rates, |j| rates.midpoint(n, j), &rho, t + 0.5 * dt)?;
        let r2 = resolve_rates(rates, |j| rates.at(n + 1, j), &rho, t + dt)?;
        let k1 = master_rhs(&rho, &r0);
        let k2 = master_rhs(&axpy(&rho, 0.5 * dt, &k1), &r1);
        let k3 = master_rhs(&axpy(&rho, 0.5 * dt, &k2), &r1);
        let k4 = master_rhs(&axpy(&rho, dt, &k3), &r2);
        for i in 0..rho.as_slice().len() {
            let inc = dt / 6.0
                * (k1.as_slice()[i] + 2.0 * k2.as_slice()[i] + 2.0 * k3.as_slice()[i] + k4.as_slice()[i]);
            rho.as_mut_slice()[i] += inc;
        }
        out.push(rho.clone());
    }
    Ok(out)
}

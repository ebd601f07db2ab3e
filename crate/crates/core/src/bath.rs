//! Lorentzian environment and its discretization into a finite set of modes.
//!
//! Frequencies are stored as offsets from the spectral peak `ω_c`. A decay
//! channel whose transition sits at `ω_c + δ` sees mode `k` at the
//! interaction-picture frequency `Ω_k = (ν_k − ω_c) − δ`.

use std::f64::consts::PI;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Default frequency halfwidth of the mode grid, in units of the spectral width.
pub const DEFAULT_WINDOW: f64 = 20.0;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BathSpec {
    /// Peak coupling strength `γ0`.
    pub gamma0: f64,
    /// Spectral width `λ`; sets the time unit.
    pub lambda: f64,
    /// Transition detuning from the spectral peak, one entry per decay channel.
    pub detunings: Vec<f64>,
    pub n_modes: usize,
    #[serde(default = "default_window")]
    pub window_halfwidth: f64,
}

fn default_window() -> f64 {
    DEFAULT_WINDOW
}

impl BathSpec {
    pub fn new(gamma0: f64, lambda: f64, detunings: Vec<f64>, n_modes: usize) -> Self {
        BathSpec {
            gamma0,
            lambda,
            detunings,
            n_modes,
            window_halfwidth: DEFAULT_WINDOW * lambda,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |what: &str| Err(Error::InvalidBath(what.to_string()));
        if !(self.gamma0.is_finite() && self.gamma0 >= 0.0) {
            return bad("gamma0 must be finite and nonnegative");
        }
        if !(self.lambda.is_finite() && self.lambda > 0.0) {
            return bad("lambda must be positive");
        }
        if self.n_modes == 0 {
            return bad("n_modes must be at least 1");
        }
        if !(self.window_halfwidth.is_finite() && self.window_halfwidth > 0.0) {
            return bad("window_halfwidth must be positive");
        }
        if self.detunings.is_empty() || self.detunings.iter().any(|d| !d.is_finite()) {
            return bad("detunings must be a nonempty list of finite numbers");
        }
        Ok(())
    }

    /// `ρ(ν)` at offset `ν − ω_c`.
    pub fn spectral_density(&self, offset: f64) -> f64 {
        let l2 = self.lambda * self.lambda;
        self.gamma0 * l2 / (2.0 * PI * (offset * offset + l2))
    }

    /// Weight of the spectral density inside the grid window, `∫_{−W}^{W} ρ`.
    pub fn window_weight(&self) -> f64 {
        0.5 * self.gamma0 * (2.0 / PI) * (self.window_halfwidth / self.lambda).atan()
    }
}

/// Discretized bath: uniformly spaced modes with real couplings `g_k = √(dν ρ(ν_k))`.
#[derive(Clone, Debug, PartialEq)]
pub struct ModeGrid {
    offsets: Vec<f64>,
    couplings: Vec<f64>,
    spacing: f64,
}

impl ModeGrid {
    /// Assemble a grid directly. Used for hand-built baths such as a single resonant mode.
    pub fn from_parts(offsets: Vec<f64>, couplings: Vec<f64>, spacing: f64) -> Result<Self> {
        if offsets.is_empty() || offsets.len() != couplings.len() {
            return Err(Error::InvalidBath(
                "offsets and couplings must be nonempty and of equal length".into(),
            ));
        }
        if couplings.iter().any(|g| !g.is_finite() || *g < 0.0) {
            return Err(Error::InvalidBath("couplings must be finite and nonnegative".into()));
        }
        if !(spacing.is_finite() && spacing > 0.0) {
            return Err(Error::InvalidBath("mode spacing must be positive".into()));
        }
        Ok(ModeGrid {
            offsets,
            couplings,
            spacing,
        })
    }

    pub fn len(&self) -> usize {
        self.offsets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.offsets.is_empty()
    }

    /// Mode frequencies relative to the spectral peak.
    pub fn offsets(&self) -> &[f64] {
        &self.offsets
    }

    pub fn couplings(&self) -> &[f64] {
        &self.couplings
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    /// Time after which the discrete bath starts returning excitation coherently.
    pub fn recurrence_time(&self) -> f64 {
        2.0 * PI / self.spacing
    }

    /// `Σ_k g_k²`, the discrete counterpart of `∫ρ dν`.
    pub fn total_weight(&self) -> f64 {
        self.couplings.iter().map(|g| g * g).sum()
    }

    /// Interaction-picture frequencies `Ω_k` for a channel detuned by `detuning`.
    pub fn channel_frequencies(&self, detuning: f64) -> Vec<f64> {
        self.offsets.iter().map(|x| x - detuning).collect()
    }
}

/// Uniform grid over `[ω_c − W, ω_c + W]`, endpoints included. A single mode
/// sits at the peak with `dν = 2W`.
pub fn build_grid(spec: &BathSpec) -> Result<ModeGrid> {
    spec.validate()?;
    let n = spec.n_modes;
    let w = spec.window_halfwidth;
    let (offsets, spacing) = if n == 1 {
        (vec![0.0], 2.0 * w)
    } else {
        let dnu = 2.0 * w / (n - 1) as f64;
        ((0..n).map(|k| -w + k as f64 * dnu).collect(), dnu)
    };
    let couplings = offsets
        .iter()
        .map(|&x| (spacing * spec.spectral_density(x)).sqrt())
        .collect();
    Ok(ModeGrid {
        offsets,
        couplings,
        spacing,
    })
}

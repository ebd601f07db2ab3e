//! Scenario configuration and the built-in scenarios.

use std::path::Path;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::bath::{build_grid, BathSpec};
use crate::dynamics::{System, DEFAULT_DT};
use crate::error::{Error, Result};
use crate::nmqj;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Engine {
    Total,
    Gaw,
    Nmqj,
}

impl Engine {
    pub fn as_str(self) -> &'static str {
        match self {
            Engine::Total => "total",
            Engine::Gaw => "gaw",
            Engine::Nmqj => "nmqj",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimSettings {
    #[serde(default = "default_t_max")]
    pub t_max: f64,
    #[serde(default = "default_dt")]
    pub dt: f64,
    /// Output every `stride`-th grid step.
    #[serde(default = "default_stride")]
    pub stride: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct McSettings {
    #[serde(default = "default_trajectories")]
    pub trajectories: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
}

fn default_t_max() -> f64 {
    5.0
}
fn default_dt() -> f64 {
    DEFAULT_DT
}
fn default_stride() -> usize {
    10
}
fn default_trajectories() -> usize {
    10_000
}
fn default_seed() -> u64 {
    1
}

impl Default for SimSettings {
    fn default() -> Self {
        SimSettings {
            t_max: default_t_max(),
            dt: default_dt(),
            stride: default_stride(),
        }
    }
}

impl Default for McSettings {
    fn default() -> Self {
        McSettings {
            trajectories: default_trajectories(),
            seed: default_seed(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Scenario {
    pub name: String,
    pub system: System,
    pub bath: BathSpec,
    #[serde(default)]
    pub sim: SimSettings,
    #[serde(default)]
    pub mc: McSettings,
    /// Initial system amplitudes as `[re, im]` pairs, ground first. Defaults
    /// to the excited atom or the symmetric V superposition.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub initial: Option<Vec<[f64; 2]>>,
    #[serde(default = "all_engines")]
    pub engines: Vec<Engine>,
}

fn all_engines() -> Vec<Engine> {
    vec![Engine::Total, Engine::Gaw, Engine::Nmqj]
}

pub const BUILTIN: [&str; 6] = ["fig1", "fig2", "fig3", "fig4", "fig5", "fig6"];

impl Scenario {
    pub fn builtin(name: &str) -> Result<Scenario> {
        use Engine::*;
        let (system, gamma0, detunings, n_modes, engines) = match name {
            "fig1" => (System::Tla, 0.8, vec![3.0], 180, vec![Total, Gaw, Nmqj]),
            "fig2" => (System::Tla, 4.0, vec![-4.0], 180, vec![Total]),
            "fig3" => (System::Tla, 4.0, vec![-4.0], 180, vec![Total, Gaw, Nmqj]),
            "fig4" => (System::VNonsecular, 4.0, vec![3.0, -3.0], 240, vec![Total, Gaw]),
            "fig5" => (System::VSecular, 4.0, vec![3.0, -3.0], 240, vec![Total, Gaw, Nmqj]),
            "fig6" => (System::VSecular, 4.0, vec![3.0, -3.0], 240, vec![Total]),
            _ => {
                return Err(Error::Config(format!(
                    "unknown scenario '{name}', expected one of {}",
                    BUILTIN.join(", ")
                )))
            }
        };
        Ok(Scenario {
            name: name.to_string(),
            system,
            bath: BathSpec::new(gamma0, 1.0, detunings, n_modes),
            sim: SimSettings::default(),
            mc: McSettings::default(),
            initial: None,
            engines,
        })
    }

    pub fn from_json(text: &str) -> Result<Scenario> {
        let s: Scenario = serde_json::from_str(text)?;
        s.validate()?;
        Ok(s)
    }

    pub fn load(path: &Path) -> Result<Scenario> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        Scenario::from_json(&text)
    }

    pub fn has(&self, engine: Engine) -> bool {
        self.engines.contains(&engine)
    }

    pub fn initial_amplitudes(&self) -> Option<Vec<Complex64>> {
        self.initial
            .as_ref()
            .map(|v| v.iter().map(|&[re, im]| Complex64::new(re, im)).collect())
    }

    pub fn validate(&self) -> Result<()> {
        self.bath.validate()?;
        if self.bath.detunings.len() != self.system.channels() {
            return Err(Error::ScenarioMismatch(format!(
                "{} needs {} detuning(s), got {}",
                self.system.as_str(),
                self.system.channels(),
                self.bath.detunings.len()
            )));
        }
        let sim = &self.sim;
        if !(sim.t_max.is_finite() && sim.t_max > 0.0 && sim.dt.is_finite() && sim.dt > 0.0) {
            return Err(Error::InvalidStep {
                dt: sim.dt,
                t_max: sim.t_max,
            });
        }
        if sim.stride == 0 {
            return Err(Error::Config("stride must be at least 1".into()));
        }
        if self.engines.is_empty() {
            return Err(Error::Config("no engines selected".into()));
        }
        if self.has(Engine::Nmqj) && !nmqj::supports(self.system) {
            return Err(Error::ScenarioMismatch(format!(
                "the nmqj engine has no time-local form for {}",
                self.system.as_str()
            )));
        }
        if (self.has(Engine::Gaw) || self.has(Engine::Nmqj)) && self.mc.trajectories == 0 {
            return Err(Error::Config("trajectories must be at least 1".into()));
        }
        if let Some(init) = self.initial_amplitudes() {
            if init.len() != self.system.system_dim() {
                return Err(Error::ScenarioMismatch(format!(
                    "initial state has {} amplitudes, {} expected",
                    init.len(),
                    self.system.system_dim()
                )));
            }
            let norm: f64 = init.iter().map(|c| c.norm_sqr()).sum();
            if (norm - 1.0).abs() > 1e-9 {
                return Err(Error::Config(format!("initial state has norm {norm}")));
            }
        }
        let grid = build_grid(&self.bath)?;
        if grid.len() > 1 && grid.recurrence_time() <= sim.t_max {
            return Err(Error::Recurrence {
                recurrence: grid.recurrence_time(),
                t_max: sim.t_max,
            });
        }
        Ok(())
    }
}

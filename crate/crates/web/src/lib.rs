//! WebAssembly entry points for the browser demo. Each export runs a small
//! simulation and returns its curves as a JSON string.

mod demos;

pub use demos::{current_heatmap, tla_dynamics, unravelings, Ensembles, Heatmap, TlaCurves, TlaParams};

use wasm_bindgen::prelude::*;

fn to_js<T: serde::Serialize>(value: unravel::Result<T>) -> Result<String, JsError> {
    let value = value.map_err(|e| JsError::new(&e.to_string()))?;
    serde_json::to_string(&value).map_err(|e| JsError::new(&e.to_string()))
}

/// Excited population and decay rate of the atom, discrete bath against the continuum.
#[wasm_bindgen(js_name = tlaDynamics)]
pub fn tla_dynamics_js(gamma0: f64, delta: f64, n_modes: usize, t_max: f64) -> Result<String, JsError> {
    to_js(tla_dynamics(&TlaParams::new(gamma0, delta, n_modes, t_max)))
}

/// Per-mode probability currents `J_k(t)` on a time × detuning grid.
#[wasm_bindgen(js_name = currentHeatmap)]
pub fn current_heatmap_js(gamma0: f64, delta: f64, n_modes: usize, t_max: f64) -> Result<String, JsError> {
    to_js(current_heatmap(&TlaParams::new(gamma0, delta, n_modes, t_max)))
}

/// Excited population from both jump unravelings next to the exact value.
#[wasm_bindgen(js_name = unravelings)]
pub fn unravelings_js(
    gamma0: f64,
    delta: f64,
    n_modes: usize,
    t_max: f64,
    trajectories: usize,
    seed: u32,
) -> Result<String, JsError> {
    to_js(unravelings(&TlaParams::new(gamma0, delta, n_modes, t_max), trajectories, seed as u64))
}

//! wasm-bindgen entry points for the browser demo. Arguments and results
//! cross the boundary as JSON strings.

pub mod demo;

use fusetrack::geo::EnuPosition;
use wasm_bindgen::prelude::*;

fn to_js<T: serde::Serialize>(value: &T) -> Result<String, JsError> {
    serde_json::to_string(value).map_err(|e| JsError::new(&e.to_string()))
}

/// Simulate and fuse; `params_json` may set any of `seed`,
/// `rf_outlier_prob`, `rf_dropout_prob`, `radar_max_range_m`, `nis_gating`
/// and `mode` (`fused`, `radar-only`, `rf-only`).
#[wasm_bindgen]
pub fn run_scenario(params_json: &str) -> Result<String, JsError> {
    let params: demo::RunParams =
        serde_json::from_str(params_json).map_err(|e| JsError::new(&e.to_string()))?;
    let summary = demo::run_scenario(&params).map_err(|e| JsError::new(&e.to_string()))?;
    to_js(&summary)
}

/// Predicted TDOA error map for the default RF sensors.
#[wasm_bindgen]
pub fn tdoa_gdop_map(
    timing_sigma_ns: f64,
    east_min: f64,
    east_max: f64,
    north_min: f64,
    north_max: f64,
    n: usize,
) -> Result<String, JsError> {
    let map = demo::tdoa_gdop_map(
        &demo::default_rf_sensors(),
        timing_sigma_ns * 1e-9,
        [east_min, east_max, north_min, north_max],
        n,
        n,
    );
    to_js(&map)
}

/// Noisy TDOA fix for an emitter placed at (`east`, `north`).
#[wasm_bindgen]
pub fn localize_point(
    east: f64,
    north: f64,
    timing_sigma_ns: f64,
    seed: u32,
) -> Result<String, JsError> {
    let sensors: Vec<EnuPosition> = demo::default_rf_sensors();
    to_js(&demo::localize_point(
        &sensors,
        [east, north],
        timing_sigma_ns * 1e-9,
        seed.into(),
    ))
}

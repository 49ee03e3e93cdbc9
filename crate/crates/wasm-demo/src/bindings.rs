use wasm_bindgen::prelude::*;

use crate::{neuron_trace, noise_raster, run_json, variance_curve};

#[wasm_bindgen(js_name = neuronTrace)]
pub fn neuron_trace_js(params: &str) -> Result<String, JsError> {
    run_json(params, neuron_trace).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = varianceCurve)]
pub fn variance_curve_js(params: &str) -> Result<String, JsError> {
    run_json(params, variance_curve).map_err(|e| JsError::new(&e))
}

#[wasm_bindgen(js_name = noiseRaster)]
pub fn noise_raster_js(params: &str) -> Result<String, JsError> {
    run_json(params, noise_raster).map_err(|e| JsError::new(&e))
}

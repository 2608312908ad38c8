//! Browser bindings. Every export takes plain numbers or JSON text and
//! returns JSON text, so the same functions run natively in tests.

use cpa_core::codegen::{check_orthogonality, construct, uniform01_weights, CpaCode};
use cpa_core::harness::{run_experiment, ExperimentConfig};
use cpa_core::pattern::{random_pattern_with_intersection, SystemParams};
use cpa_core::polyalg::chebyshev_points;
use cpa_core::rng::{derive_seed, rng_from};
use cpa_core::simulator::{run_round_with_set, Instance};
use serde_json::{json, Value};
use wasm_bindgen::prelude::*;

fn respond(result: Result<Value, String>) -> String {
    match result {
        Ok(v) => v.to_string(),
        Err(e) => json!({ "error": e }).to_string(),
    }
}

fn draw_code(k: usize, d: usize, s: usize, n: usize, i: usize, g_max: usize, seed: u64) -> Result<Value, String> {
    let params = SystemParams::new(k, d, s, n);
    let alpha = chebyshev_points(k).map_err(|e| e.to_string())?;
    let mut rng = rng_from(seed);
    let pattern = random_pattern_with_intersection(n, s, i, g_max, &mut rng).map_err(|e| e.to_string())?;
    let weights = uniform01_weights(k, &mut rng);
    let (code, report) =
        construct(&params, &pattern, &alpha, &weights, derive_seed(seed, &[1])).map_err(|e| e.to_string())?;
    Ok(json!({
        "code": code,
        "intersection": code.stats().intersection,
        "report": report,
    }))
}

fn decode_set(code_json: &str, active_json: &str, seed: u64) -> Result<Value, String> {
    let code: CpaCode = serde_json::from_str(code_json).map_err(|e| e.to_string())?;
    let mut active: Vec<usize> = serde_json::from_str(active_json).map_err(|e| e.to_string())?;
    active.sort_unstable();
    let admissible = code.pattern.sets().contains(&active);
    let inst = Instance::random(code.weights.clone(), code.params.d, 1, 1, &mut rng_from(seed))
        .map_err(|e| e.to_string())?;
    let rec = run_round_with_set(&inst, &code, &active).map_err(|e| e.to_string())?;
    Ok(json!({
        "admissible": admissible,
        "rel_error": rec.rel_error,
        "orthogonality_residual": check_orthogonality(&code).map_err(|e| e.to_string())?.max,
    }))
}

fn sweep(k: usize, d: usize, s: usize, n: usize, g_max: usize, samples: usize, seed: u64) -> Result<Value, String> {
    let mut cfg = ExperimentConfig::new(k, d, s, vec![n], g_max, seed);
    cfg.samples_per_g = samples;
    let curve = run_experiment(&cfg).map_err(|e| e.to_string())?;
    Ok(json!({ "threshold": cfg.threshold(), "aggregate": curve.aggregate }))
}

/// Builds a code whose pattern has intersection size `i`.
#[wasm_bindgen]
pub fn construct_code(k: usize, d: usize, s: usize, n: usize, i: usize, g_max: usize, seed: u64) -> String {
    respond(draw_code(k, d, s, n, i, g_max, seed))
}

/// Decodes one scalar round with exactly the workers in `active_json` responding.
#[wasm_bindgen]
pub fn decode_with(code_json: &str, active_json: &str, seed: u64) -> String {
    respond(decode_set(code_json, active_json, seed))
}

/// Empirical `p_eq(I)` for a single worker count.
#[wasm_bindgen]
pub fn feasibility_sweep(k: usize, d: usize, s: usize, n: usize, g_max: usize, samples: usize, seed: u64) -> String {
    respond(sweep(k, d, s, n, g_max, samples, seed))
}

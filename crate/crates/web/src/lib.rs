//! Browser bindings: weight profiles, Poincaré sweeps and best Hardy constants.

use hardy_trees::spectral::{pencil_ratio, poincare_bottom_sweep};
use hardy_trees::{RadialTreeSpec, WeightSpec};
use wasm_bindgen::prelude::*;

/// Longest window the page may request; keeps a click under a second.
pub const MAX_WINDOW: u32 = 20_000;

fn parse_weight(descriptor: &str) -> Result<WeightSpec, String> {
    let spec: WeightSpec = descriptor.parse().map_err(|e: hardy_trees::Error| e.to_string())?;
    let spec = spec.snapped(1e-8);
    spec.validate_params().map_err(|v| v.to_string())?;
    Ok(spec)
}

fn check_window(n: u32) -> Result<(), String> {
    if n == 0 || n > MAX_WINDOW {
        return Err(format!("window must be in 1..={MAX_WINDOW}, got {n}"));
    }
    Ok(())
}

/// `W(n)` (or the remainder) for `n = 0..=max_n`; NaN where the family is undefined.
#[wasm_bindgen]
pub fn weight_profile(descriptor: &str, max_n: u32) -> Result<Vec<f64>, String> {
    check_window(max_n)?;
    let weight = parse_weight(descriptor)?.into_weight().map_err(|e| e.to_string())?;
    let first = weight.spec().first_radius();
    (0..=max_n as u64).map(|n| if n < first { Ok(f64::NAN) } else { weight.at(n).map_err(|e| e.to_string()) }).collect()
}

/// `λ_min` of the Dirichlet Laplacian of `T_{q+1}` on `B_N`, `N = 1..=max_n`.
#[wasm_bindgen]
pub fn poincare_sweep(q: u32, max_n: u32) -> Result<Vec<f64>, String> {
    check_window(max_n)?;
    let spec = RadialTreeSpec::homogeneous(q as u64).map_err(|e| e.to_string())?;
    let windows: Vec<u64> = (1..=max_n as u64).collect();
    let sweep = poincare_bottom_sweep(&spec, &windows).map_err(|e| e.to_string())?;
    Ok(sweep.points.iter().map(|p| p.lambda_min).collect())
}

/// Best constant `C` in `form - baseline Σφ² >= C Σ W φ²` on the annuli `[start, N)`.
#[wasm_bindgen]
pub fn hardy_constants(descriptor: &str, start: u32, ends: Vec<u32>) -> Result<Vec<f64>, String> {
    let spec = parse_weight(descriptor)?;
    let tree = spec.tree().map_err(|e| e.to_string())?;
    let start = (start as u64).max(spec.first_radius());
    let baseline = spec.poincare_baseline();
    let weight = spec.into_weight().map_err(|e| e.to_string())?;
    ends.iter()
        .map(|&end| {
            check_window(end)?;
            if end as u64 <= start {
                return Err(format!("annulus [{start}, {end}) is empty"));
            }
            pencil_ratio(&tree, baseline, &weight, start..end as u64).map_err(|e| e.to_string())
        })
        .collect()
}

//! Symmetric tridiagonal kernels: Sturm counts, bisection, inverse iteration.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Stopping width of the bisection bracket.
pub const BISECTION_WIDTH: f64 = 1e-13;

/// Inverse-iteration sweeps for the bottom eigenvector.
pub const INVERSE_ITERATIONS: usize = 3;

/// Number of eigenvalues strictly below `x` (LDLᵀ pivot signs).
pub fn sturm_count(diag: &[f64], off: &[f64], x: f64) -> usize {
    let tiny = f64::MIN_POSITIVE.sqrt();
    let mut count = 0;
    let mut d = 1.0;
    for i in 0..diag.len() {
        let coupling = if i == 0 { 0.0 } else { off[i - 1] * off[i - 1] / d };
        d = diag[i] - x - coupling;
        if d == 0.0 {
            d = tiny;
        }
        if d < 0.0 {
            count += 1;
        }
    }
    count
}

/// Gershgorin interval containing the spectrum.
pub fn gershgorin(diag: &[f64], off: &[f64]) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut hi = f64::NEG_INFINITY;
    for i in 0..diag.len() {
        let left = if i > 0 { off[i - 1].abs() } else { 0.0 };
        let right = off.get(i).map_or(0.0, |e| e.abs());
        lo = lo.min(diag[i] - left - right);
        hi = hi.max(diag[i] + left + right);
    }
    (lo, hi)
}

/// Bracket `[lo, hi]` of the smallest eigenvalue with `hi - lo <= width`
/// (or adjacent doubles).
pub fn smallest_eigenvalue_bracket(diag: &[f64], off: &[f64], width: f64) -> (f64, f64) {
    assert!(!diag.is_empty(), "empty matrix");
    assert_eq!(off.len() + 1, diag.len(), "off-diagonal length");
    let (g_lo, _) = gershgorin(diag, off);
    // The smallest diagonal entry bounds λ_min from above (Rayleigh quotient of a unit vector).
    let d_min = diag.iter().copied().fold(f64::INFINITY, f64::min);
    let mut lo = g_lo;
    let mut hi = d_min;
    while hi - lo > width {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if sturm_count(diag, off, mid) >= 1 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    (lo, hi)
}

/// Smallest eigenvalue by bisection.
pub fn smallest_eigenvalue(diag: &[f64], off: &[f64]) -> f64 {
    let (lo, hi) = smallest_eigenvalue_bracket(diag, off, BISECTION_WIDTH);
    0.5 * (lo + hi)
}

/// Solves `(T - shift) x = b` by unpivoted LDLᵀ; `T - shift` is assumed nonsingular.
fn shifted_solve(diag: &[f64], off: &[f64], shift: f64, b: &mut [f64]) {
    let n = diag.len();
    let tiny = f64::MIN_POSITIVE.sqrt();
    let mut piv = vec![0.0; n];
    let mut mult = vec![0.0; n];
    for i in 0..n {
        let mut d = diag[i] - shift;
        if i > 0 {
            mult[i] = off[i - 1] / piv[i - 1];
            d -= mult[i] * off[i - 1];
            b[i] -= mult[i] * b[i - 1];
        }
        piv[i] = if d == 0.0 { tiny } else { d };
    }
    b[n - 1] /= piv[n - 1];
    for i in (0..n - 1).rev() {
        b[i] = (b[i] - off[i] * b[i + 1]) / piv[i];
    }
}

/// Bottom eigenvector by inverse iteration with shift just below `λ_min`,
/// started from a fixed pseudo-random positive vector; unit Euclidean norm,
/// positive on average.
pub fn bottom_eigenvector(diag: &[f64], off: &[f64], shift: f64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let mut x: Vec<f64> = (0..diag.len()).map(|_| rng.gen_range(0.5..1.5)).collect();
    for _ in 0..INVERSE_ITERATIONS {
        shifted_solve(diag, off, shift, &mut x);
        normalize(&mut x);
    }
    if x.iter().sum::<f64>() < 0.0 {
        x.iter_mut().for_each(|v| *v = -*v);
    }
    x
}

fn normalize(x: &mut [f64]) {
    let scale = x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    if scale > 0.0 && scale.is_finite() {
        x.iter_mut().for_each(|v| *v /= scale);
    }
    let norm = x.iter().map(|v| v * v).sum::<f64>().sqrt();
    if norm > 0.0 {
        x.iter_mut().for_each(|v| *v /= norm);
    }
}

/// `xᵀ T x`.
pub fn quadratic(diag: &[f64], off: &[f64], x: &[f64]) -> f64 {
    let mut s = 0.0;
    for i in 0..diag.len() {
        s += diag[i] * x[i] * x[i];
        if i + 1 < diag.len() {
            s += 2.0 * off[i] * x[i] * x[i + 1];
        }
    }
    s
}

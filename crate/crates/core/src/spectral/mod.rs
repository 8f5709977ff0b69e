//! Radial Jacobi reduction of `Δ - V` and bottom-of-spectrum probes.
//!
//! A radial `φ` supported on radii `[a, b)` is written as `ψ_n = S_n^{1/2} φ_n`.
//! In that variable the form `<(Δ - V)φ, φ>` is `ψᵀ J ψ` for a symmetric
//! tridiagonal `J` whose entries never involve `S_n`:
//!
//! ```text
//! d_n = deg(n) - V(n),   e_n = -(S_{n+1}/S_n)^{1/2}
//! ```
//!
//! All window problems are radial. The form and the weights are invariant under
//! automorphisms fixing the root, and averaging a function over them does not
//! raise its Rayleigh quotient, so the infimum over all functions supported in
//! a ball or annulus is attained by radial ones. This is evidence, not proof, for
//! the criticality probe: no finite computation certifies criticality.

pub mod tridiag;

use std::fmt::Write as _;
use std::ops::Range;

use crate::csv::num;
use crate::error::{Error, Result};
use crate::forms::{poincare_excess_radial, quadform_radial, weighted_norm_radial, Normalization, RadialVector};
use crate::functions::RadialFunction;
use crate::potential::{Constant, RadialPotential};
use crate::tree_model::RadialTreeSpec;
use crate::weights::{lambda_q, Weight};

/// λ_min below this on a criticality window means the weight is not a Hardy weight.
pub const NONNEGATIVITY_TOL: f64 = 1e-9;

/// Shortest annulus tried by [`find_violator`].
pub const FIRST_VIOLATOR_WINDOW: u64 = 8;

/// What a Jacobi system was built from.
#[derive(Debug, Clone, PartialEq)]
pub struct Provenance {
    pub tree: String,
    pub potential: String,
    pub multiplier: f64,
}

/// `J` restricted to the radii `start..start + diag.len()`.
#[derive(Debug, Clone, PartialEq)]
pub struct JacobiSystem {
    pub start: u64,
    pub diag: Vec<f64>,
    pub off: Vec<f64>,
    pub provenance: Provenance,
}

impl JacobiSystem {
    pub fn end(&self) -> u64 {
        self.start + self.diag.len() as u64
    }

    /// `ψᵀ J ψ`.
    pub fn quadratic(&self, psi: &[f64]) -> f64 {
        tridiag::quadratic(&self.diag, &self.off, psi)
    }

    pub fn lambda_min(&self) -> f64 {
        tridiag::smallest_eigenvalue(&self.diag, &self.off)
    }
}

/// Jacobi system of `Δ - V` on the window.
pub fn build_jacobi(
    spec: &RadialTreeSpec,
    v: &(impl RadialPotential + ?Sized),
    window: Range<u64>,
) -> Result<JacobiSystem> {
    build_jacobi_scaled(spec, v, 1.0, window)
}

/// Jacobi system of `Δ - multiplier·V` on the window.
pub fn build_jacobi_scaled(
    spec: &RadialTreeSpec,
    v: &(impl RadialPotential + ?Sized),
    multiplier: f64,
    window: Range<u64>,
) -> Result<JacobiSystem> {
    if window.start >= window.end {
        return Err(Error::Domain(format!("empty window [{}, {})", window.start, window.end)));
    }
    let diag =
        window.clone().map(|n| Ok(spec.degree(n) as f64 - multiplier * v.value_at(n)?)).collect::<Result<Vec<_>>>()?;
    let off = (window.start..window.end - 1).map(|n| -(spec.growth_ratio(n) as f64).sqrt()).collect();
    Ok(JacobiSystem {
        start: window.start,
        diag,
        off,
        provenance: Provenance { tree: spec.to_string(), potential: v.label(), multiplier },
    })
}

pub fn lambda_min(j: &JacobiSystem) -> f64 {
    j.lambda_min()
}

pub(crate) fn map_windows<T, F>(windows: &[u64], f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> Result<T> + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        use rayon::prelude::*;
        windows.par_iter().map(|&n| f(n)).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        windows.iter().map(|&n| f(n)).collect()
    }
}

/// One window of a sweep.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepPoint {
    pub window_end: u64,
    pub lambda_min: f64,
    /// Strictly below the previous point (true for the first one).
    pub monotone_ok: bool,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepResult {
    pub points: Vec<SweepPoint>,
    pub strictly_decreasing: bool,
    /// Richardson extrapolation in `1/N^2` from the last two windows.
    pub limit: f64,
    /// Change of the extrapolated limit when the last window is dropped.
    pub uncertainty: f64,
}

impl SweepResult {
    pub const HEADER: &'static str = "window_end,lambda_min,monotone_ok";

    fn from_values(windows: &[u64], values: Vec<f64>) -> Self {
        let mut points = Vec::with_capacity(values.len());
        for (i, (&n, &lam)) in windows.iter().zip(&values).enumerate() {
            let monotone_ok = i == 0 || lam < values[i - 1];
            points.push(SweepPoint { window_end: n, lambda_min: lam, monotone_ok });
        }
        let strictly_decreasing = points.iter().all(|p| p.monotone_ok);
        let (limit, uncertainty) = richardson(windows, &values);
        Self { points, strictly_decreasing, limit, uncertainty }
    }

    pub fn to_csv(&self) -> String {
        let mut out = format!("{}\n", Self::HEADER);
        for p in &self.points {
            let _ = writeln!(out, "{},{},{}", p.window_end, num(p.lambda_min), p.monotone_ok);
        }
        out
    }
}

fn richardson_pair(n1: u64, l1: f64, n2: u64, l2: f64) -> f64 {
    let (a, b) = ((n1 as f64).powi(2), (n2 as f64).powi(2));
    (b * l2 - a * l1) / (b - a)
}

fn richardson(windows: &[u64], values: &[f64]) -> (f64, f64) {
    let k = values.len();
    match k {
        0 => (f64::NAN, f64::INFINITY),
        1 => (values[0], f64::INFINITY),
        _ => {
            let limit = richardson_pair(windows[k - 2], values[k - 2], windows[k - 1], values[k - 1]);
            let previous = if k >= 3 {
                richardson_pair(windows[k - 3], values[k - 3], windows[k - 2], values[k - 2])
            } else {
                values[k - 1]
            };
            (limit, (limit - previous).abs())
        }
    }
}

fn check_windows(windows: &[u64]) -> Result<()> {
    if windows.is_empty() {
        return Err(Error::Domain("no windows given".into()));
    }
    if windows[0] == 0 {
        return Err(Error::Domain("window ends must be >= 1".into()));
    }
    if windows.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::Domain("windows must be strictly increasing".into()));
    }
    Ok(())
}

/// λ_min of the Dirichlet Laplacian on the balls `B_N`, one per window end `N`.
pub fn poincare_bottom_sweep(spec: &RadialTreeSpec, windows: &[u64]) -> Result<SweepResult> {
    if spec.homogeneous_q().is_none() {
        return Err(Error::InvalidTree("poincare sweep needs a homogeneous tree".into()));
    }
    check_windows(windows)?;
    let values = map_windows(windows, |n| Ok(build_jacobi(spec, &Constant(0.0), 0..n)?.lambda_min()))?;
    Ok(SweepResult::from_values(windows, values))
}

/// λ_min of `Δ - W` on the balls `B_N`.
pub fn criticality_probe(
    spec: &RadialTreeSpec,
    w: &(impl RadialPotential + ?Sized),
    windows: &[u64],
) -> Result<SweepResult> {
    check_windows(windows)?;
    let values = map_windows(windows, |n| {
        let lam = build_jacobi(spec, w, 0..n)?.lambda_min();
        if lam < -NONNEGATIVITY_TOL {
            return Err(Error::NonnegativityViolated { window_end: n, value: lam });
        }
        Ok(lam)
    })?;
    Ok(SweepResult::from_values(windows, values))
}

/// Bottom of the pencil `(form - baseline·norm, W-norm)` on a window.
#[derive(Debug, Clone, PartialEq)]
pub struct PencilSolution {
    /// `inf (form - baseline·Σφ²) / Σ W φ²` over radial `φ` supported in the window.
    pub ratio: f64,
    /// Minimizer in volume normalization, scaled to max |ψ| = 1, when requested.
    pub psi: Option<Vec<f64>>,
}

struct Eliminated {
    k: usize,
    prev: Option<usize>,
    a_prev: f64,
    a_next: f64,
    a_kk: f64,
}

/// Solves the pencil; zero-weight radii are removed by Schur elimination,
/// which keeps the reduced matrix tridiagonal.
pub fn pencil_solve(
    spec: &RadialTreeSpec,
    baseline: f64,
    w: &(impl RadialPotential + ?Sized),
    window: Range<u64>,
    want_vector: bool,
) -> Result<PencilSolution> {
    let weights = window.clone().map(|n| w.value_at(n)).collect::<Result<Vec<_>>>()?;
    if let Some(i) = weights.iter().position(|x| x.is_nan() || *x < 0.0) {
        return Err(Error::NonpositiveWeight(window.start + i as u64));
    }
    if weights.iter().all(|x| *x == 0.0) {
        return Err(Error::NonpositiveWeight(window.start));
    }
    let j = build_jacobi(spec, &crate::potential::Sum(Constant(baseline), w), window.clone())?;

    let len = weights.len();
    let mut diag = Vec::with_capacity(len);
    let mut off = Vec::with_capacity(len);
    let mut kept: Vec<usize> = Vec::with_capacity(len);
    let mut eliminated = Vec::new();
    let mut pending = 0.0;
    let mut c_in = 0.0;
    for (i, &wi) in weights.iter().enumerate() {
        let d = j.diag[i] + pending;
        let e_next = j.off.get(i).copied().unwrap_or(0.0);
        if wi > 0.0 {
            if !kept.is_empty() {
                off.push(c_in);
            }
            diag.push(d);
            kept.push(i);
            pending = 0.0;
            c_in = e_next;
        } else {
            if d.is_nan() || d <= 0.0 {
                return Err(Error::Domain(format!(
                    "form is not positive at zero-weight radius {}",
                    window.start + i as u64
                )));
            }
            if let Some(last) = diag.last_mut() {
                *last -= c_in * c_in / d;
            }
            eliminated.push(Eliminated { k: i, prev: kept.last().copied(), a_prev: c_in, a_next: e_next, a_kk: d });
            pending = -e_next * e_next / d;
            c_in = if kept.is_empty() { 0.0 } else { -c_in * e_next / d };
        }
    }

    let wk: Vec<f64> = kept.iter().map(|&i| weights[i]).collect();
    let sd: Vec<f64> = diag.iter().zip(&wk).map(|(d, w)| d / w).collect();
    let so: Vec<f64> = off.iter().enumerate().map(|(i, e)| e / (wk[i] * wk[i + 1]).sqrt()).collect();
    let (lo, hi) = tridiag::smallest_eigenvalue_bracket(&sd, &so, tridiag::BISECTION_WIDTH);
    let ratio = 1.0 + 0.5 * (lo + hi);

    let psi = want_vector.then(|| {
        let y = tridiag::bottom_eigenvector(&sd, &so, lo);
        let mut psi = vec![0.0; len];
        for (idx, &i) in kept.iter().enumerate() {
            psi[i] = y[idx] / wk[idx].sqrt();
        }
        for e in eliminated.iter().rev() {
            let p = e.prev.map_or(0.0, |p| psi[p]);
            let nx = psi.get(e.k + 1).copied().unwrap_or(0.0);
            psi[e.k] = -(e.a_prev * p + e.a_next * nx) / e.a_kk;
        }
        let scale = psi.iter().fold(0.0f64, |m, v| m.max(v.abs()));
        if scale > 0.0 {
            psi.iter_mut().for_each(|v| *v /= scale);
        }
        psi
    });
    Ok(PencilSolution { ratio, psi })
}

/// `inf (form - baseline·Σφ²) / Σ W φ²` over radial `φ` supported in the window.
pub fn pencil_ratio(
    spec: &RadialTreeSpec,
    baseline: f64,
    w: &(impl RadialPotential + ?Sized),
    window: Range<u64>,
) -> Result<f64> {
    Ok(pencil_solve(spec, baseline, w, window, false)?.ratio)
}

/// Best constant `C` in `form ≥ C·Σ W φ²` (or `form - Λ_q Σφ² ≥ C·Σ R φ²`
/// for remainder families) over radial `φ` supported in the annulus.
pub fn hardy_ratio_inf(spec: &RadialTreeSpec, w: &Weight, annulus: Range<u64>) -> Result<f64> {
    pencil_ratio(spec, w.spec().poincare_baseline(), w, annulus)
}

/// `(form - baseline·Σφ²) / Σ W φ²` evaluated through the forms module.
pub fn measured_ratio(
    spec: &RadialTreeSpec,
    baseline: f64,
    w: &(impl RadialPotential + ?Sized),
    phi: &RadialVector,
) -> Result<f64> {
    let numerator = match spec.homogeneous_q() {
        Some(q) if baseline != 0.0 && baseline == lambda_q(q) => poincare_excess_radial(spec, phi)?,
        _ if baseline == 0.0 => quadform_radial(spec, phi)?,
        _ => quadform_radial(spec, phi)? - weighted_norm_radial(spec, &Constant(baseline), phi)?,
    };
    Ok(numerator / weighted_norm_radial(spec, w, phi)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Witness {
    /// Minimizer in volume normalization.
    pub psi: RadialVector,
    pub window: Range<u64>,
    pub pencil_ratio: f64,
    /// Ratio re-evaluated through the forms module.
    pub measured_ratio: f64,
}

impl Witness {
    pub const HEADER: &'static str = "radius,value,normalized";

    /// `radius, φ_n, ψ_n`; `φ_n` may underflow to 0 on deep windows.
    pub fn to_csv(&self, spec: &RadialTreeSpec) -> String {
        let plain = self.psi.to_plain(spec);
        let mut out = format!("{}\n", Self::HEADER);
        for (i, (phi, psi)) in plain.values.iter().zip(&self.psi.values).enumerate() {
            let _ = writeln!(out, "{},{},{}", self.psi.start + i as u64, num(*phi), num(*psi));
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum ViolatorOutcome {
    Found(Witness),
    NotFound { last_ratio: f64, last_window: u64 },
}

/// Annulus ends tried by [`find_violator`]: doubling lengths, capped at `max_window`.
pub fn violator_windows(annulus_start: u64, max_window: u64) -> Vec<u64> {
    let mut out = Vec::new();
    let mut len = FIRST_VIOLATOR_WINDOW;
    loop {
        let end = annulus_start.saturating_add(len);
        if end >= max_window {
            if max_window > annulus_start {
                out.push(max_window);
            }
            return out;
        }
        out.push(end);
        len *= 2;
    }
}

/// Searches annuli `[annulus_start, N)`, `N <= max_window`, for a radial `φ`
/// with `form - baseline·Σφ² < c·Σ W φ²`.
pub fn find_violator(
    spec: &RadialTreeSpec,
    baseline: f64,
    w: &(impl RadialPotential + ?Sized),
    c: f64,
    annulus_start: u64,
    max_window: u64,
) -> Result<ViolatorOutcome> {
    let mut last = (f64::NAN, annulus_start);
    for end in violator_windows(annulus_start, max_window) {
        let window = annulus_start..end;
        let ratio = pencil_ratio(spec, baseline, w, window.clone())?;
        last = (ratio, end);
        if ratio >= c {
            continue;
        }
        let sol = pencil_solve(spec, baseline, w, window.clone(), true)?;
        let psi = RadialVector {
            start: annulus_start,
            values: sol.psi.expect("vector requested"),
            normalization: Normalization::Volume,
        };
        let measured = measured_ratio(spec, baseline, w, &psi)?;
        if measured < c {
            return Ok(ViolatorOutcome::Found(Witness { psi, window, pencil_ratio: ratio, measured_ratio: measured }));
        }
    }
    Ok(ViolatorOutcome::NotFound { last_ratio: last.0, last_window: last.1 })
}

/// Partial sums `Σ_{n ≤ N} S_n z(n)^2 W(n)`, `N = 0..=n_max`.
#[derive(Debug, Clone, PartialEq)]
pub struct NullSums {
    pub partial: Vec<f64>,
}

impl NullSums {
    pub const HEADER: &'static str = "n,partial_sum,ratio";

    /// `sum(2m) / sum(m)`.
    pub fn ratio_at(&self, m: u64) -> Option<f64> {
        let a = *self.partial.get(m as usize)?;
        let b = *self.partial.get(2 * m as usize)?;
        Some(b / a)
    }

    /// Rows at `n = 1, 2, 4, ...` and at the last `n`; `ratio = sum(n) / sum(n/2)`.
    pub fn to_csv(&self) -> String {
        let last = self.partial.len() as u64 - 1;
        let mut rows: Vec<u64> =
            std::iter::successors(Some(1u64), |n| n.checked_mul(2)).take_while(|&n| n <= last).collect();
        if rows.last() != Some(&last) && last >= 1 {
            rows.push(last);
        }
        let mut out = format!("{}\n", Self::HEADER);
        for n in rows {
            let ratio =
                if n >= 2 { num(self.partial[n as usize] / self.partial[(n / 2) as usize]) } else { String::new() };
            let _ = writeln!(out, "{},{},{}", n, num(self.partial[n as usize]), ratio);
        }
        out
    }
}

/// Partial sums of `S_n z(n)^2 W(n)`, each term formed in log space.
pub fn null_criticality_sums(
    spec: &RadialTreeSpec,
    w: &(impl RadialPotential + ?Sized),
    z: &RadialFunction,
    n_max: u64,
) -> Result<NullSums> {
    let mut partial = Vec::with_capacity(n_max as usize + 1);
    let mut acc = crate::forms::CompensatedSum::default();
    let mut ln_s = 0.0;
    for n in 0..=n_max {
        let wn = w.value_at(n)?;
        let term = if wn == 0.0 {
            0.0
        } else {
            let ln_z = z.ln_value(n)?;
            wn.signum() * (ln_s + 2.0 * ln_z + wn.abs().ln()).exp()
        };
        acc.add(term);
        partial.push(acc.value());
        ln_s += (spec.growth_ratio(n) as f64).ln();
    }
    Ok(NullSums { partial })
}

//! Quadratic forms `<Δφ, φ>`, weighted norms and Hardy gaps, on explicit
//! truncations and on radial vectors, plus reproducible random test functions.

use std::fmt::Write as _;
use std::ops::Range;

use rand::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::csv::num;
use crate::error::{Error, Result};
use crate::potential::RadialPotential;
use crate::tree_model::{RadialTreeSpec, TruncatedTree};

/// Neumaier-compensated running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct CompensatedSum {
    sum: f64,
    comp: f64,
}

impl CompensatedSum {
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for CompensatedSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut s = Self::default();
        for x in iter {
            s.add(x);
        }
        s
    }
}

/// One real value per vertex of a truncation, zero outside it.
#[derive(Debug, Clone)]
pub struct VertexFunction<'a> {
    tree: &'a TruncatedTree,
    values: Vec<f64>,
}

impl<'a> VertexFunction<'a> {
    pub fn new(tree: &'a TruncatedTree, values: Vec<f64>) -> Result<Self> {
        if values.len() != tree.vertex_count() {
            return Err(Error::Domain(format!(
                "vertex function has {} values, truncation has {} vertices",
                values.len(),
                tree.vertex_count()
            )));
        }
        Ok(Self { tree, values })
    }

    pub fn zeros(tree: &'a TruncatedTree) -> Self {
        Self { tree, values: vec![0.0; tree.vertex_count()] }
    }

    /// Spreads a radial vector over the spheres of the truncation.
    pub fn from_radial(tree: &'a TruncatedTree, phi: &RadialVector) -> Result<Self> {
        if phi.end() > tree.depth() {
            return Err(Error::Domain(format!(
                "radial support [{}, {}) exceeds truncation depth {}",
                phi.start,
                phi.end(),
                tree.depth()
            )));
        }
        let plain = phi.to_plain(tree.spec());
        let mut values = vec![0.0; tree.vertex_count()];
        for (i, &c) in plain.values.iter().enumerate() {
            for v in tree.sphere(plain.start + i as u64) {
                values[v] = c;
            }
        }
        Ok(Self { tree, values })
    }

    pub fn tree(&self) -> &'a TruncatedTree {
        self.tree
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self { tree: self.tree, values: self.values.iter().map(|x| c * x).collect() }
    }
}

/// How a [`RadialVector`] stores its coefficients.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Normalization {
    /// `φ_n`, the common value on sphere `n`.
    Plain,
    /// `ψ_n = S_n^{1/2} φ_n`; stays O(1) on deep windows.
    Volume,
}

/// A radial function supported on radii `[start, start + len)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RadialVector {
    pub start: u64,
    pub values: Vec<f64>,
    pub normalization: Normalization,
}

impl RadialVector {
    pub fn plain(start: u64, values: Vec<f64>) -> Self {
        Self { start, values, normalization: Normalization::Plain }
    }

    pub fn volume(start: u64, values: Vec<f64>) -> Self {
        Self { start, values, normalization: Normalization::Volume }
    }

    pub fn end(&self) -> u64 {
        self.start + self.values.len() as u64
    }

    pub fn validate(&self) -> Result<()> {
        if self.values.is_empty() {
            return Err(Error::Domain("radial vector has an empty window".into()));
        }
        if let Some(i) = self.values.iter().position(|x| !x.is_finite()) {
            return Err(Error::Domain(format!("non-finite coefficient at radius {}", self.start + i as u64)));
        }
        Ok(())
    }

    pub fn scaled(&self, c: f64) -> Self {
        Self { values: self.values.iter().map(|x| c * x).collect(), ..self.clone() }
    }

    /// Coefficients `φ_n`; may underflow on deep windows.
    pub fn to_plain(&self, spec: &RadialTreeSpec) -> RadialVector {
        match self.normalization {
            Normalization::Plain => self.clone(),
            Normalization::Volume => {
                let values = sphere_scales(spec, self.start, self.values.len())
                    .zip(&self.values)
                    .map(|(ln_s, psi)| psi * (-0.5 * ln_s).exp())
                    .collect();
                RadialVector::plain(self.start, values)
            }
        }
    }

    /// Coefficients `ψ_n = S_n^{1/2} φ_n`.
    pub fn to_volume(&self, spec: &RadialTreeSpec) -> RadialVector {
        match self.normalization {
            Normalization::Volume => self.clone(),
            Normalization::Plain => {
                let values = sphere_scales(spec, self.start, self.values.len())
                    .zip(&self.values)
                    .map(|(ln_s, phi)| signed_exp(*phi, 0.5 * ln_s))
                    .collect();
                RadialVector::volume(self.start, values)
            }
        }
    }
}

/// `ln S_n` for `n in start..start+len`.
fn sphere_scales(spec: &RadialTreeSpec, start: u64, len: usize) -> impl Iterator<Item = f64> + '_ {
    let mut ln_s = spec.ln_sphere_size(start);
    (0..len as u64).map(move |i| {
        let out = ln_s;
        ln_s += (spec.growth_ratio(start + i) as f64).ln();
        out
    })
}

/// `x * exp(ln_scale)` without forming `exp(ln_scale)` when that overflows.
fn signed_exp(x: f64, ln_scale: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    let direct = x * ln_scale.exp();
    if direct.is_finite() && direct != 0.0 {
        direct
    } else {
        x.signum() * (x.abs().ln() + ln_scale).exp()
    }
}

/// Exact sphere sizes as doubles while they fit, with `ln S_n` alongside.
struct SphereSizes<'a> {
    spec: &'a RadialTreeSpec,
    n: u64,
    exact: Option<u128>,
    ln: f64,
}

impl<'a> SphereSizes<'a> {
    fn from(spec: &'a RadialTreeSpec, n: u64) -> Self {
        Self { spec, n, exact: spec.sphere_size(n).ok(), ln: spec.ln_sphere_size(n) }
    }

    /// `(S_n as f64, ln S_n)` for the current `n`, then advances.
    fn next_pair(&mut self) -> (f64, f64) {
        let out = (self.exact.map(|s| s as f64).unwrap_or(f64::INFINITY), self.ln);
        let g = self.spec.growth_ratio(self.n);
        self.exact = self.exact.and_then(|s| s.checked_mul(g as u128));
        self.ln += (g as f64).ln();
        self.n += 1;
        out
    }
}

/// `size * x^2`, falling back to log space when `size` is not representable.
fn scaled_square(size: f64, ln_size: f64, x: f64) -> f64 {
    if x == 0.0 {
        return 0.0;
    }
    let direct = size * x * x;
    if direct.is_finite() && direct > 0.0 {
        direct
    } else {
        (ln_size + 2.0 * x.abs().ln()).exp()
    }
}

/// `quadform - Λ_q Σ_n S_n φ_n^2` on `T_{q+1}`, summed as nonnegative
/// differences of `ψ_n = S_n^{1/2} φ_n` away from the root, so deep windows
/// where the excess is tiny relative to the form do not cancel.
pub fn poincare_excess_radial(spec: &RadialTreeSpec, phi: &RadialVector) -> Result<f64> {
    let q =
        spec.homogeneous_q().ok_or_else(|| Error::InvalidTree("poincare excess needs a homogeneous tree".into()))?;
    phi.validate()?;
    let psi = phi.to_volume(spec).values;
    let sq = (q as f64).sqrt();
    let at = |i: usize| psi.get(i).copied().unwrap_or(0.0);
    let mut acc = CompensatedSum::default();
    let first_diff = if phi.start == 0 {
        let lambda = (sq - 1.0) * (sq - 1.0);
        let (p0, p1) = (at(0), at(1));
        acc.add((((q + 1) as f64).sqrt() * p0 - p1).powi(2));
        acc.add(-lambda * p0 * p0);
        acc.add((sq - 1.0) * p1 * p1);
        1
    } else {
        acc.add(sq * at(0) * at(0));
        0
    };
    for i in first_diff..psi.len() {
        acc.add(sq * (at(i) - at(i + 1)).powi(2));
    }
    Ok(acc.value())
}

/// Which support a vertex function may have for [`quadform_full`].
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Boundary {
    /// Nonzero values on the outermost sphere are allowed; their edges to the
    /// zero-valued exterior are counted.
    Dirichlet,
    /// The function must vanish on the outermost sphere.
    StrictInterior,
}

/// `<Δφ, φ> = ½ Σ_{x~y} (φ(x) - φ(y))^2`, with `φ = 0` outside the truncation.
pub fn quadform_full(phi: &VertexFunction<'_>, boundary: Boundary) -> Result<f64> {
    let tree = phi.tree;
    let outer = tree.depth() - 1;
    if boundary == Boundary::StrictInterior && tree.sphere(outer).any(|v| phi.values[v] != 0.0) {
        return Err(Error::SupportTouchesBoundary(outer));
    }
    Ok(vertex_form_terms(phi).collect::<CompensatedSum>().value())
}

/// Per-vertex edge energy: the parent edge plus edges to exterior children.
fn vertex_form_terms<'b>(phi: &'b VertexFunction<'_>) -> impl Iterator<Item = f64> + 'b {
    let tree = phi.tree;
    (0..tree.vertex_count()).map(move |v| {
        let x = phi.values[v];
        let up = tree.parent(v).map(|p| (x - phi.values[p]).powi(2)).unwrap_or(0.0);
        up + tree.exterior_children(v) as f64 * x * x
    })
}

/// `Σ_n E_n (φ_n - φ_{n+1})^2` with `φ = 0` outside the window.
pub fn quadform_radial(spec: &RadialTreeSpec, phi: &RadialVector) -> Result<f64> {
    phi.validate()?;
    let total = radial_form_terms(spec, phi).collect::<CompensatedSum>().value();
    if total.is_finite() {
        Ok(total)
    } else {
        Err(Error::OverflowAtDepth(phi.end()))
    }
}

/// Form terms indexed by the window: term `i` holds the edges between radii
/// `start + i` and `start + i + 1`, and term 0 also the edge layer below `start`.
fn radial_form_terms<'b>(spec: &'b RadialTreeSpec, phi: &'b RadialVector) -> Box<dyn Iterator<Item = f64> + 'b> {
    let len = phi.values.len();
    let v = &phi.values;
    let next = move |i: usize| if i + 1 < len { v[i + 1] } else { 0.0 };
    match phi.normalization {
        Normalization::Volume => Box::new((0..len).map(move |i| {
            let n = phi.start + i as u64;
            let rho = (spec.growth_ratio(n) as f64).sqrt();
            let below = if i == 0 && n > 0 { v[0] * v[0] } else { 0.0 };
            below + (rho * v[i] - next(i)).powi(2)
        })),
        Normalization::Plain => {
            let mut sizes = SphereSizes::from(spec, phi.start);
            let below = if phi.start > 0 {
                let (s, ln) = (sizes.exact.map(|s| s as f64).unwrap_or(f64::INFINITY), sizes.ln);
                scaled_square(s, ln, v[0])
            } else {
                0.0
            };
            sizes.next_pair();
            Box::new((0..len).map(move |i| {
                let (s_next, ln_next) = sizes.next_pair();
                let extra = if i == 0 { below } else { 0.0 };
                extra + scaled_square(s_next, ln_next, v[i] - next(i))
            }))
        }
    }
}

/// Per-radius norm terms `S_n W(n) φ_n^2` (or `W(n) ψ_n^2`).
fn radial_norm_terms(
    spec: &RadialTreeSpec,
    w: &(impl RadialPotential + ?Sized),
    phi: &RadialVector,
) -> Result<Vec<f64>> {
    let mut sizes = SphereSizes::from(spec, phi.start);
    phi.values
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let n = phi.start + i as u64;
            let (s, ln) = sizes.next_pair();
            let wn = w.value_at(n)?;
            Ok(match phi.normalization {
                Normalization::Volume => wn * x * x,
                Normalization::Plain => wn * scaled_square(s, ln, x),
            })
        })
        .collect()
}

/// `Σ_n S_n W(n) φ_n^2`.
pub fn weighted_norm_radial(
    spec: &RadialTreeSpec,
    w: &(impl RadialPotential + ?Sized),
    phi: &RadialVector,
) -> Result<f64> {
    phi.validate()?;
    let total = radial_norm_terms(spec, w, phi)?.into_iter().collect::<CompensatedSum>().value();
    if total.is_finite() {
        Ok(total)
    } else {
        Err(Error::OverflowAtDepth(phi.end()))
    }
}

/// `Σ_x W(|x|) φ(x)^2`.
pub fn weighted_norm_vertex(w: &(impl RadialPotential + ?Sized), phi: &VertexFunction<'_>) -> Result<f64> {
    let weights = sphere_weights(w, phi)?;
    Ok((0..phi.values.len())
        .map(|v| weights[phi.tree.radius(v) as usize] * phi.values[v].powi(2))
        .collect::<CompensatedSum>()
        .value())
}

/// `W` on each sphere; spheres where `φ` vanishes are skipped, so `W` need only be defined on the support.
fn sphere_weights(w: &(impl RadialPotential + ?Sized), phi: &VertexFunction<'_>) -> Result<Vec<f64>> {
    (0..phi.tree.depth())
        .map(|r| if phi.values[phi.tree.sphere(r)].iter().all(|v| *v == 0.0) { Ok(0.0) } else { w.value_at(r) })
        .collect()
}

/// Quadratic form minus weighted norm on a radial vector.
pub fn hardy_gap_radial(spec: &RadialTreeSpec, w: &(impl RadialPotential + ?Sized), phi: &RadialVector) -> Result<f64> {
    Ok(quadform_radial(spec, phi)? - weighted_norm_radial(spec, w, phi)?)
}

/// Quadratic form (Dirichlet convention) minus weighted norm on a vertex function.
pub fn hardy_gap_vertex(w: &(impl RadialPotential + ?Sized), phi: &VertexFunction<'_>) -> Result<f64> {
    Ok(quadform_full(phi, Boundary::Dirichlet)? - weighted_norm_vertex(w, phi)?)
}

/// Where a random test function may be nonzero.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Support {
    /// Every sphere except the outermost one of the truncation.
    Ball,
    /// Radii `start..end`.
    Annulus { start: u64, end: u64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Distribution {
    /// Uniform on `[-1, 1]`.
    Uniform,
    /// Standard normal.
    Gaussian,
}

impl std::str::FromStr for Distribution {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "uniform" => Ok(Self::Uniform),
            "gaussian" => Ok(Self::Gaussian),
            other => Err(Error::Parse(format!("unknown distribution `{other}`"))),
        }
    }
}

/// Two 64-bit words per index from a ChaCha8 stream keyed by `seed`, so the
/// value at index `i` depends only on `(seed, i)`.
struct CounterStream {
    rng: ChaCha8Rng,
}

impl CounterStream {
    fn at(seed: u64, index: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_word_pos(4 * index as u128);
        Self { rng }
    }

    fn sample(&mut self, dist: Distribution) -> f64 {
        let unit = |w: u64| ((w >> 11) as f64 + 0.5) * (1.0 / (1u64 << 53) as f64);
        let (a, b) = (self.rng.next_u64(), self.rng.next_u64());
        match dist {
            Distribution::Uniform => 2.0 * unit(a) - 1.0,
            Distribution::Gaussian => (-2.0 * unit(a).ln()).sqrt() * (std::f64::consts::TAU * unit(b)).cos(),
        }
    }
}

fn support_radii(depth: u64, support: Support) -> Result<Range<u64>> {
    let (start, end) = match support {
        Support::Ball => (0, depth.saturating_sub(1)),
        Support::Annulus { start, end } => (start, end),
    };
    if start >= end {
        return Err(Error::Domain(format!("empty support [{start}, {end})")));
    }
    if end + 1 > depth {
        return Err(Error::BudgetExceeded { requested: (end + 1) as u128, budget: depth as u128 });
    }
    Ok(start..end)
}

/// Random vertex function vanishing outside `support` and on the outermost sphere.
pub fn random_vertex_function<'a>(
    tree: &'a TruncatedTree,
    seed: u64,
    support: Support,
    dist: Distribution,
) -> Result<VertexFunction<'a>> {
    let radii = support_radii(tree.depth(), support)?;
    let mut values = vec![0.0; tree.vertex_count()];
    let first = tree.sphere(radii.start).start;
    let last = tree.sphere(radii.end - 1).end;
    let mut stream = CounterStream::at(seed, first as u64);
    for x in &mut values[first..last] {
        *x = stream.sample(dist);
    }
    Ok(VertexFunction { tree, values })
}

/// Random radial vector on `window`, indexed by radius.
pub fn random_radial_vector(seed: u64, window: Range<u64>, dist: Distribution) -> Result<RadialVector> {
    if window.start >= window.end {
        return Err(Error::Domain(format!("empty window [{}, {})", window.start, window.end)));
    }
    let mut stream = CounterStream::at(seed, window.start);
    let values = window.clone().map(|_| stream.sample(dist)).collect();
    Ok(RadialVector::plain(window.start, values))
}

/// One row of a gap table; `contribution` sums to the gap over all rows.
#[derive(Debug, Clone, PartialEq)]
pub struct GapRow {
    pub index: u64,
    pub phi: f64,
    pub w: f64,
    pub contribution: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct GapTable {
    pub rows: Vec<GapRow>,
    pub total_form: f64,
    pub total_norm: f64,
    pub gap: f64,
}

impl GapTable {
    pub const HEADER: &'static str = "n_or_vertex,phi,W,contribution";

    pub fn to_csv(&self) -> String {
        let mut out = String::from(Self::HEADER);
        out.push('\n');
        for r in &self.rows {
            let _ = writeln!(out, "{},{},{},{}", r.index, num(r.phi), num(r.w), num(r.contribution));
        }
        let _ = writeln!(out, "total_form,{},,", num(self.total_form));
        let _ = writeln!(out, "total_norm,{},,", num(self.total_norm));
        let _ = writeln!(out, "gap,{},,", num(self.gap));
        out
    }
}

/// Gap table of a radial vector; rows indexed by radius.
pub fn gap_table_radial(
    spec: &RadialTreeSpec,
    w: &(impl RadialPotential + ?Sized),
    phi: &RadialVector,
) -> Result<GapTable> {
    phi.validate()?;
    let form: Vec<f64> = radial_form_terms(spec, phi).collect();
    let norm = radial_norm_terms(spec, w, phi)?;
    let rows = (0..phi.values.len())
        .map(|i| {
            let n = phi.start + i as u64;
            Ok(GapRow { index: n, phi: phi.values[i], w: w.value_at(n)?, contribution: form[i] - norm[i] })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(finish_table(rows, &form, &norm))
}

/// Gap table of a vertex function; rows indexed by vertex.
pub fn gap_table_vertex(w: &(impl RadialPotential + ?Sized), phi: &VertexFunction<'_>) -> Result<GapTable> {
    let weights = sphere_weights(w, phi)?;
    let form: Vec<f64> = vertex_form_terms(phi).collect();
    let norm: Vec<f64> =
        (0..phi.values.len()).map(|v| weights[phi.tree.radius(v) as usize] * phi.values[v].powi(2)).collect();
    let rows = (0..phi.values.len())
        .map(|v| GapRow {
            index: v as u64,
            phi: phi.values[v],
            w: weights[phi.tree.radius(v) as usize],
            contribution: form[v] - norm[v],
        })
        .collect();
    Ok(finish_table(rows, &form, &norm))
}

fn finish_table(rows: Vec<GapRow>, form: &[f64], norm: &[f64]) -> GapTable {
    let total_form = form.iter().copied().collect::<CompensatedSum>().value();
    let total_norm = norm.iter().copied().collect::<CompensatedSum>().value();
    GapTable { rows, total_form, total_norm, gap: total_form - total_norm }
}

//! Radial trees described by their branching sequence.
//!
//! A vertex at radius `n >= 1` has one parent and `m(n)` children; the root has
//! `m(0) + 1` children, so the homogeneous tree with `m == q` has constant degree
//! `q + 1`. Sphere sizes obey `S_0 = 1`, `S_1 = m(0) + 1`, `S_{n+1} = m(n) S_n`.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Default vertex budget for explicit truncations.
pub const DEFAULT_VERTEX_BUDGET: u128 = 2_000_000;

/// Natural-log magnitude above which `psi_sequence` switches to log form.
pub const DEFAULT_LOG_THRESHOLD: f64 = 600.0;

/// A positive real that is either stored directly or by its natural logarithm.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Magnitude {
    Linear(f64),
    Log(f64),
}

impl Magnitude {
    pub fn ln(self) -> f64 {
        match self {
            Magnitude::Linear(v) => v.ln(),
            Magnitude::Log(l) => l,
        }
    }

    /// Value as a double; may overflow to infinity or underflow to zero in log form.
    pub fn to_f64(self) -> f64 {
        match self {
            Magnitude::Linear(v) => v,
            Magnitude::Log(l) => l.exp(),
        }
    }
}

/// How a custom branching prefix continues past its last entry.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Extension {
    /// Repeat the last prefix value forever.
    Repeat,
    /// `n -> slope * n + intercept`, clamped below at 2.
    Affine { slope: i64, intercept: i64 },
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TreeKind {
    Homogeneous { q: u64 },
    Custom { prefix: Vec<u64>, extend: Extension },
}

/// A tree known up to radial symmetry.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RadialTreeSpec {
    kind: TreeKind,
}

impl RadialTreeSpec {
    /// The homogeneous tree of degree `q + 1`.
    pub fn homogeneous(q: u64) -> Result<Self> {
        if q < 2 {
            return Err(Error::InvalidTree(format!("homogeneous tree needs q >= 2, got {q}")));
        }
        Ok(Self { kind: TreeKind::Homogeneous { q } })
    }

    pub fn custom(prefix: Vec<u64>, extend: Extension) -> Result<Self> {
        if prefix.is_empty() {
            return Err(Error::InvalidTree("empty branching prefix".into()));
        }
        if let Some((n, &m)) = prefix.iter().enumerate().find(|(_, &m)| m < 2) {
            return Err(Error::InvalidTree(format!("branching m({n}) = {m} < 2")));
        }
        Ok(Self { kind: TreeKind::Custom { prefix, extend } })
    }

    pub fn kind(&self) -> &TreeKind {
        &self.kind
    }

    /// `Some(q)` for a homogeneous tree.
    pub fn homogeneous_q(&self) -> Option<u64> {
        match self.kind {
            TreeKind::Homogeneous { q } => Some(q),
            TreeKind::Custom { .. } => None,
        }
    }

    /// Number of children `m(n)` of a vertex at radius `n >= 1`; for `n = 0`
    /// the root has `m(0) + 1` children.
    pub fn branching(&self, n: u64) -> u64 {
        match &self.kind {
            TreeKind::Homogeneous { q } => *q,
            TreeKind::Custom { prefix, extend } => {
                if let Some(&m) = prefix.get(n as usize) {
                    return m;
                }
                match extend {
                    Extension::Repeat => *prefix.last().expect("nonempty prefix"),
                    Extension::Affine { slope, intercept } => {
                        let v = (*slope as i128) * (n as i128) + (*intercept as i128);
                        v.clamp(2, u64::MAX as i128) as u64
                    }
                }
            }
        }
    }

    /// Vertex degree at radius `n`.
    pub fn degree(&self, n: u64) -> u64 {
        self.branching(n) + 1
    }

    /// `S_{n+1} / S_n`: `m(0) + 1` at the root, `m(n)` elsewhere.
    pub fn growth_ratio(&self, n: u64) -> u64 {
        if n == 0 {
            self.branching(0) + 1
        } else {
            self.branching(n)
        }
    }

    /// Whether `m` is nondecreasing on all radii (checked, not assumed).
    pub fn is_nondecreasing(&self) -> bool {
        match &self.kind {
            TreeKind::Homogeneous { .. } => true,
            TreeKind::Custom { prefix, extend } => {
                if prefix.windows(2).any(|w| w[1] < w[0]) {
                    return false;
                }
                let len = prefix.len() as u64;
                match extend {
                    Extension::Repeat => true,
                    Extension::Affine { slope, intercept } => {
                        if *slope >= 0 {
                            self.branching(len) >= prefix[prefix.len() - 1]
                        } else {
                            // A decreasing affine tail is nondecreasing only once clamped at 2.
                            let clamp_from = len.max(((*intercept - 2).max(0) / -slope) as u64 + 1);
                            (len - 1..=clamp_from + 1)
                                .collect::<Vec<_>>()
                                .windows(2)
                                .all(|w| self.branching(w[1]) >= self.branching(w[0]))
                        }
                    }
                }
            }
        }
    }

    /// Exact number of vertices at radius `n`.
    pub fn sphere_size(&self, n: u64) -> Result<u128> {
        let mut s: u128 = 1;
        for k in 0..n {
            s = s.checked_mul(self.growth_ratio(k) as u128).ok_or(Error::OverflowAtDepth(n))?;
        }
        Ok(s)
    }

    /// Exact volume of the ball `B_n = {|x| < n}`, `n >= 1`.
    pub fn ball_volume(&self, n: u64) -> Result<u128> {
        if n == 0 {
            return Err(Error::Domain("ball volume needs n >= 1".into()));
        }
        let mut total: u128 = 0;
        let mut s: u128 = 1;
        for k in 0..n {
            total = total.checked_add(s).ok_or(Error::OverflowAtDepth(k))?;
            if k + 1 < n {
                s = s.checked_mul(self.growth_ratio(k) as u128).ok_or(Error::OverflowAtDepth(k + 1))?;
            }
        }
        Ok(total)
    }

    /// Number of edges joining sphere `n` to sphere `n + 1`.
    pub fn edge_count_between_spheres(&self, n: u64) -> Result<u128> {
        self.sphere_size(n)?.checked_mul(self.growth_ratio(n) as u128).ok_or(Error::OverflowAtDepth(n + 1))
    }

    /// `ln S_n`, valid at any depth.
    pub fn ln_sphere_size(&self, n: u64) -> f64 {
        match self.kind {
            TreeKind::Homogeneous { q } if n >= 1 => ((q + 1) as f64).ln() + (n - 1) as f64 * (q as f64).ln(),
            _ => (0..n).map(|k| (self.growth_ratio(k) as f64).ln()).sum(),
        }
    }

    /// `ln S_n` for `n in 0..len`, accumulated once.
    pub fn ln_sphere_sizes(&self, len: usize) -> Vec<f64> {
        let mut out = Vec::with_capacity(len);
        let mut acc = 0.0;
        for n in 0..len as u64 {
            out.push(acc);
            acc += (self.growth_ratio(n) as f64).ln();
        }
        out
    }

    /// `S_n` as a double: exact while it fits in 128 bits, `exp(ln S_n)` beyond.
    pub fn sphere_size_f64(&self, n: u64) -> f64 {
        match self.sphere_size(n) {
            Ok(s) => s as f64,
            Err(_) => self.ln_sphere_size(n).exp(),
        }
    }

    /// `Psi(n)` with `Psi(1) = psi1` and `Psi(n + 1) = m(n) Psi(n)`, `n >= 1`.
    pub fn psi_sequence(&self, psi1: f64, n: u64) -> Result<Magnitude> {
        self.psi_sequence_with_threshold(psi1, n, DEFAULT_LOG_THRESHOLD)
    }

    pub fn psi_sequence_with_threshold(&self, psi1: f64, n: u64, max_ln: f64) -> Result<Magnitude> {
        if n == 0 {
            return Err(Error::Domain("psi is defined for n >= 1".into()));
        }
        if !(psi1 > 0.0 && psi1.is_finite()) {
            return Err(Error::InvalidParams(format!("psi1 must be positive, got {psi1}")));
        }
        let ln: f64 = psi1.ln() + (1..n).map(|k| (self.branching(k) as f64).ln()).sum::<f64>();
        if ln.abs() > max_ln {
            return Ok(Magnitude::Log(ln));
        }
        let value = (1..n).fold(psi1, |acc, k| acc * self.branching(k) as f64);
        Ok(Magnitude::Linear(value))
    }

    /// Explicit realization of `B_depth(o)` with the default vertex budget.
    pub fn build_truncated(&self, depth: u64) -> Result<TruncatedTree> {
        TruncatedTree::build(self, depth, DEFAULT_VERTEX_BUDGET)
    }
}

impl fmt::Display for RadialTreeSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.kind {
            TreeKind::Homogeneous { q } => write!(f, "homogeneous:q={q}"),
            TreeKind::Custom { prefix, extend } => {
                let csv: Vec<String> = prefix.iter().map(|m| m.to_string()).collect();
                write!(f, "custom:prefix={};extend=", csv.join(","))?;
                match extend {
                    Extension::Repeat => write!(f, "repeat"),
                    Extension::Affine { slope, intercept } => write!(f, "affine:{slope},{intercept}"),
                }
            }
        }
    }
}

impl FromStr for RadialTreeSpec {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let s = s.trim();
        let bad = |msg: &str| Error::Parse(format!("tree spec `{s}`: {msg}"));
        if let Some(rest) = s.strip_prefix("homogeneous:") {
            let q = rest
                .trim()
                .strip_prefix("q=")
                .ok_or_else(|| bad("expected q=<int>"))?
                .trim()
                .parse::<u64>()
                .map_err(|e| bad(&e.to_string()))?;
            return RadialTreeSpec::homogeneous(q);
        }
        if let Some(rest) = s.strip_prefix("custom:") {
            let (prefix_part, extend_part) = rest.split_once(';').ok_or_else(|| bad("missing `;extend=`"))?;
            let csv = prefix_part.trim().strip_prefix("prefix=").ok_or_else(|| bad("expected prefix="))?;
            let prefix = csv
                .split(',')
                .map(|t| t.trim().parse::<u64>().map_err(|e| bad(&e.to_string())))
                .collect::<Result<Vec<_>>>()?;
            let ext = extend_part.trim().strip_prefix("extend=").ok_or_else(|| bad("expected extend="))?;
            let extend = if ext == "repeat" {
                Extension::Repeat
            } else if let Some(ab) = ext.strip_prefix("affine:") {
                let (a, b) = ab.split_once(',').ok_or_else(|| bad("affine needs a,b"))?;
                Extension::Affine {
                    slope: a.trim().parse().map_err(|e: std::num::ParseIntError| bad(&e.to_string()))?,
                    intercept: b.trim().parse().map_err(|e: std::num::ParseIntError| bad(&e.to_string()))?,
                }
            } else {
                return Err(bad("extend must be repeat or affine:a,b"));
            };
            return RadialTreeSpec::custom(prefix, extend);
        }
        Err(bad("expected homogeneous:q=<int> or custom:prefix=..;extend=.."))
    }
}

/// Explicit breadth-first realization of the ball `B_depth(o)`.
///
/// Vertices are indexed contiguously sphere by sphere; the children of a
/// vertex are contiguous and appear in the order of their parents.
#[derive(Debug, Clone)]
pub struct TruncatedTree {
    spec: RadialTreeSpec,
    depth: u64,
    radius: Vec<u32>,
    parent: Vec<Option<u32>>,
    sphere_start: Vec<usize>,
}

impl TruncatedTree {
    pub fn build(spec: &RadialTreeSpec, depth: u64, budget: u128) -> Result<Self> {
        if depth == 0 {
            return Err(Error::Domain("truncation depth must be >= 1".into()));
        }
        let requested = spec.ball_volume(depth).map_err(|_| Error::BudgetExceeded { requested: u128::MAX, budget })?;
        if requested > budget {
            return Err(Error::BudgetExceeded { requested, budget });
        }
        let count = requested as usize;
        let mut radius = Vec::with_capacity(count);
        let mut parent = Vec::with_capacity(count);
        let mut sphere_start = vec![0usize];
        radius.push(0u32);
        parent.push(None);
        let mut prev = 0..1usize;
        for r in 1..depth {
            sphere_start.push(radius.len());
            let kids = spec.growth_ratio(r - 1) as usize;
            let begin = radius.len();
            for p in prev.clone() {
                for _ in 0..kids {
                    radius.push(r as u32);
                    parent.push(Some(p as u32));
                }
            }
            prev = begin..radius.len();
        }
        sphere_start.push(radius.len());
        Ok(Self { spec: spec.clone(), depth, radius, parent, sphere_start })
    }

    pub fn spec(&self) -> &RadialTreeSpec {
        &self.spec
    }

    /// Number of spheres kept: radii `0..depth`.
    pub fn depth(&self) -> u64 {
        self.depth
    }

    pub fn vertex_count(&self) -> usize {
        self.radius.len()
    }

    pub fn radius(&self, v: usize) -> u64 {
        self.radius[v] as u64
    }

    pub fn parent(&self, v: usize) -> Option<usize> {
        self.parent[v].map(|p| p as usize)
    }

    /// Index range of the vertices at radius `r`.
    pub fn sphere(&self, r: u64) -> std::ops::Range<usize> {
        let r = r as usize;
        self.sphere_start[r]..self.sphere_start[r + 1]
    }

    /// Children of `v` inside the truncation (empty on the outermost sphere).
    pub fn children(&self, v: usize) -> std::ops::Range<usize> {
        let r = self.radius(v);
        if r + 1 >= self.depth {
            return 0..0;
        }
        let kids = self.spec.growth_ratio(r) as usize;
        let offset = v - self.sphere_start[r as usize];
        let start = self.sphere_start[r as usize + 1] + offset * kids;
        start..start + kids
    }

    /// Number of (implicitly zero) children a vertex on the outermost sphere has outside.
    pub fn exterior_children(&self, v: usize) -> u64 {
        let r = self.radius(v);
        if r + 1 == self.depth {
            self.spec.growth_ratio(r)
        } else {
            0
        }
    }
}

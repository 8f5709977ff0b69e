//! Closed-form radial functions, the radial combinatorial Laplacian and
//! Schrödinger operators `H = Δ + Q` acting on them.
//!
//! Quotients `Δf/f` are assembled from neighbor ratios `f(n±1)/f(n)` that each
//! family supplies in closed form, so the exponential factors `q^{-n/2}` or
//! `Psi^{-1/2}(n)` cancel before any double is formed and deep radii never
//! underflow.

use crate::descriptor::Descriptor;
use crate::error::{Error, Result};
use crate::potential::RadialPotential;
use crate::tree_model::{Magnitude, RadialTreeSpec};
use crate::weights::lambda_q;

/// Radii above which `evaluate` reports values in log form.
pub const DEEP_RADIUS: u64 = 600;

/// Default slack for one-sided checks such as `Hf >= 0`.
pub const ONE_SIDED_TOL: f64 = 1e-12;

/// `f(horizon) <= DECAY_THRESHOLD * f(1)` counts as decay to zero.
pub const DECAY_THRESHOLD: f64 = 1e-3;

#[derive(Debug, Clone, PartialEq)]
pub enum RadialFunction {
    /// Square root of the Green function at the root: `sqrt(q/(q-1) q^-n)`.
    GreenSqrt {
        q: u64,
    },
    /// `gamma` at 0, `q^{-n/2} n^beta` for `n >= 1`.
    UBetaGamma {
        q: u64,
        beta: f64,
        gamma: Option<f64>,
    },
    /// `gamma` at 0, `q^{alpha n} n^beta` for `n >= 1`.
    UAlphaBetaGamma {
        q: u64,
        alpha: f64,
        beta: f64,
        gamma: Option<f64>,
    },
    /// `gamma` at 0, `q^{-n/2}` for `n >= 1`.
    PairU {
        q: u64,
        gamma: Option<f64>,
    },
    /// `gamma` at 0, `n q^{-n/2}` for `n >= 1`.
    PairV {
        q: u64,
        gamma: Option<f64>,
    },
    /// `(PairU * PairV)^{1/2}`, the ground state of the critical pair construction.
    GroundZ {
        q: u64,
        gamma: Option<f64>,
    },
    /// `PairU / PairV`: 1 at the root, `1/n` elsewhere.
    QuotientU0,
    /// `gamma` at 0, `n^beta Psi^{-1/2}(n)` for `n >= 1` on a radial tree.
    RadialTreeU {
        tree: RadialTreeSpec,
        beta: f64,
        gamma: Option<f64>,
        psi1: f64,
    },
    Constant(f64),
    /// Values at radii `0..len`.
    Tabulated(Vec<f64>),
    /// Natural logarithms of positive values at radii `0..len`.
    LogTabulated(Vec<f64>),
}

/// `kappa q^{alpha n} n^beta` for `n >= 1`, `gamma` at 0.
#[derive(Debug, Clone, Copy)]
struct PowerForm {
    q: f64,
    kappa: f64,
    alpha: f64,
    beta: f64,
    gamma: Option<f64>,
}

impl PowerForm {
    fn gamma(&self) -> Result<f64> {
        self.gamma.ok_or_else(|| Error::Domain("family has no value at the root: gamma not given".into()))
    }

    fn ln_value(&self, n: u64) -> Result<f64> {
        if n == 0 {
            return Ok(self.gamma()?.ln());
        }
        Ok(self.kappa.ln() + self.alpha * n as f64 * self.q.ln() + self.beta * (n as f64).ln())
    }

    fn value(&self, n: u64) -> Result<f64> {
        if n == 0 {
            return self.gamma();
        }
        Ok(self.kappa * self.q.powf(self.alpha * n as f64) * (n as f64).powf(self.beta))
    }

    fn ratio_up(&self, n: u64) -> Result<f64> {
        if n == 0 {
            return Ok(self.kappa * self.q.powf(self.alpha) / self.gamma()?);
        }
        Ok(self.q.powf(self.alpha) * (self.beta * (1.0 / n as f64).ln_1p()).exp())
    }

    fn ratio_down(&self, n: u64) -> Result<f64> {
        match n {
            0 => Err(Error::Domain("no radius below the root".into())),
            1 => Ok(self.gamma()? / (self.kappa * self.q.powf(self.alpha))),
            _ => Ok(self.q.powf(-self.alpha) * (self.beta * (-1.0 / n as f64).ln_1p()).exp()),
        }
    }
}

impl RadialFunction {
    fn power_form(&self) -> Option<PowerForm> {
        let p = |q: u64, kappa, alpha, beta, gamma| PowerForm { q: q as f64, kappa, alpha, beta, gamma };
        Some(match *self {
            RadialFunction::GreenSqrt { q } => {
                let kappa = (q as f64 / (q as f64 - 1.0)).sqrt();
                p(q, kappa, -0.5, 0.0, Some(kappa))
            }
            RadialFunction::UBetaGamma { q, beta, gamma } => p(q, 1.0, -0.5, beta, gamma),
            RadialFunction::UAlphaBetaGamma { q, alpha, beta, gamma } => p(q, 1.0, alpha, beta, gamma),
            RadialFunction::PairU { q, gamma } => p(q, 1.0, -0.5, 0.0, gamma),
            RadialFunction::PairV { q, gamma } => p(q, 1.0, -0.5, 1.0, gamma),
            RadialFunction::GroundZ { q, gamma } => p(q, 1.0, -0.5, 0.5, gamma),
            RadialFunction::QuotientU0 => p(1, 1.0, 0.0, -1.0, Some(1.0)),
            _ => return None,
        })
    }

    fn tabulated(values: &[f64], n: u64) -> Result<f64> {
        values
            .get(n as usize)
            .copied()
            .ok_or_else(|| Error::Domain(format!("tabulated function undefined at radius {n}")))
    }

    /// Natural log of the value at `n` (the function must be positive there).
    pub fn ln_value(&self, n: u64) -> Result<f64> {
        if let Some(p) = self.power_form() {
            return p.ln_value(n);
        }
        match self {
            RadialFunction::RadialTreeU { tree, beta, gamma, psi1 } => {
                if n == 0 {
                    return gamma.map(f64::ln).ok_or_else(|| Error::Domain("radial-u has no value at the root".into()));
                }
                Ok(beta * (n as f64).ln() - 0.5 * tree.psi_sequence(*psi1, n)?.ln())
            }
            RadialFunction::LogTabulated(v) => Self::tabulated(v, n),
            _ => {
                let v = self.value(n)?;
                if v > 0.0 {
                    Ok(v.ln())
                } else {
                    Err(Error::NonpositiveFunction(n))
                }
            }
        }
    }

    /// The value at `n` as a double (may underflow to zero at deep radii).
    pub fn value(&self, n: u64) -> Result<f64> {
        if n > DEEP_RADIUS {
            if let RadialFunction::Constant(c) = self {
                return Ok(*c);
            }
            if let RadialFunction::Tabulated(v) = self {
                return Self::tabulated(v, n);
            }
            return Ok(self.ln_value(n)?.exp());
        }
        if let Some(p) = self.power_form() {
            if let RadialFunction::GroundZ { q, gamma } = *self {
                if n == 0 {
                    return p.gamma();
                }
                let u = RadialFunction::PairU { q, gamma }.value(n)?;
                let v = RadialFunction::PairV { q, gamma }.value(n)?;
                return Ok((u * v).sqrt());
            }
            return p.value(n);
        }
        match self {
            RadialFunction::RadialTreeU { .. } | RadialFunction::LogTabulated(_) => Ok(self.ln_value(n)?.exp()),
            RadialFunction::Constant(c) => Ok(*c),
            RadialFunction::Tabulated(v) => Self::tabulated(v, n),
            _ => unreachable!("power families handled above"),
        }
    }

    /// Closed-form value, switching to log form at deep radii or extreme magnitudes.
    pub fn evaluate(&self, n: u64) -> Result<Magnitude> {
        match self {
            RadialFunction::Constant(_) | RadialFunction::Tabulated(_) => Ok(Magnitude::Linear(self.value(n)?)),
            _ => {
                if n > DEEP_RADIUS {
                    return Ok(Magnitude::Log(self.ln_value(n)?));
                }
                let ln = self.ln_value(n)?;
                if ln.abs() > crate::tree_model::DEFAULT_LOG_THRESHOLD {
                    Ok(Magnitude::Log(ln))
                } else {
                    Ok(Magnitude::Linear(self.value(n)?))
                }
            }
        }
    }

    /// `f(n+1) / f(n)` without forming either value.
    pub fn ratio_up(&self, n: u64) -> Result<f64> {
        if let Some(p) = self.power_form() {
            return p.ratio_up(n);
        }
        match self {
            RadialFunction::RadialTreeU { tree, beta, gamma, psi1 } => {
                if n == 0 {
                    let g = gamma.ok_or_else(|| Error::Domain("radial-u has no value at the root".into()))?;
                    return Ok(1.0 / (psi1.sqrt() * g));
                }
                Ok((beta * (1.0 / n as f64).ln_1p()).exp() / (tree.branching(n) as f64).sqrt())
            }
            RadialFunction::Constant(_) => Ok(1.0),
            RadialFunction::Tabulated(v) => Ok(Self::tabulated(v, n + 1)? / Self::tabulated(v, n)?),
            RadialFunction::LogTabulated(v) => Ok((Self::tabulated(v, n + 1)? - Self::tabulated(v, n)?).exp()),
            _ => unreachable!("power families handled above"),
        }
    }

    /// `f(n-1) / f(n)` for `n >= 1`.
    pub fn ratio_down(&self, n: u64) -> Result<f64> {
        if n == 0 {
            return Err(Error::Domain("no radius below the root".into()));
        }
        if let Some(p) = self.power_form() {
            return p.ratio_down(n);
        }
        match self {
            RadialFunction::RadialTreeU { tree, beta, gamma, psi1 } => {
                if n == 1 {
                    let g = gamma.ok_or_else(|| Error::Domain("radial-u has no value at the root".into()))?;
                    return Ok(g * psi1.sqrt());
                }
                Ok((beta * (-1.0 / n as f64).ln_1p()).exp() * (tree.branching(n - 1) as f64).sqrt())
            }
            _ => Ok(1.0 / self.ratio_up(n - 1)?),
        }
    }

    /// Whether the function is strictly positive at `n`.
    pub fn is_positive_at(&self, n: u64) -> Result<bool> {
        match self {
            RadialFunction::Constant(c) => Ok(*c > 0.0),
            RadialFunction::Tabulated(v) => Ok(Self::tabulated(v, n)? > 0.0),
            RadialFunction::LogTabulated(v) => Self::tabulated(v, n).map(|_| true),
            _ if n == 0 => Ok(self.ln_value(0)?.is_finite()),
            _ => Ok(true),
        }
    }

    /// Parses the CLI family descriptors; homogeneous families take `q` from
    /// the descriptor or else from `tree`.
    pub fn parse(text: &str, tree: &RadialTreeSpec) -> Result<Self> {
        let d = Descriptor::parse(text, &["q", "alpha", "beta", "gamma", "psi1"])?;
        let q = || -> Result<u64> {
            match d.u64("q")? {
                Some(q) if q >= 2 => Ok(q),
                Some(q) => Err(Error::InvalidParams(format!("q must be >= 2, got {q}"))),
                None => {
                    tree.homogeneous_q().ok_or_else(|| Error::Parse(format!("`{text}` needs q= or a homogeneous tree")))
                }
            }
        };
        let gamma = d.f64("gamma")?;
        Ok(match d.name.as_str() {
            "green-sqrt" => RadialFunction::GreenSqrt { q: q()? },
            "u" => RadialFunction::UBetaGamma { q: q()?, beta: d.required_f64("beta")?, gamma },
            "u3" => RadialFunction::UAlphaBetaGamma {
                q: q()?,
                alpha: d.required_f64("alpha")?,
                beta: d.required_f64("beta")?,
                gamma,
            },
            "pair-u" => RadialFunction::PairU { q: q()?, gamma },
            "pair-v" => RadialFunction::PairV { q: q()?, gamma },
            "ground-z" => RadialFunction::GroundZ { q: q()?, gamma },
            "quotient-u0" => RadialFunction::QuotientU0,
            "radial-u" => RadialFunction::RadialTreeU {
                tree: tree.clone(),
                beta: d.required_f64("beta")?,
                gamma,
                psi1: d.f64("psi1")?.unwrap_or(1.0),
            },
            other => return Err(Error::Parse(format!("unknown function family `{other}`"))),
        })
    }
}

/// Radial potential of a Schrödinger operator `H = Δ + Q`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PotentialQ {
    Zero,
    /// `root` at radius 0, `first` at radius 1, `beyond` for radii `>= 2`.
    Piecewise {
        root: f64,
        first: f64,
        beyond: f64,
    },
}

impl PotentialQ {
    /// The potential `0, q^{1/2}, -Λ_q` under which the pair `u = q^{-n/2}`,
    /// `v = n q^{-n/2}` is harmonic outside the ball of radius 2.
    pub fn harmonic_pair(q: u64) -> Self {
        PotentialQ::Piecewise { root: 0.0, first: (q as f64).sqrt(), beyond: -lambda_q(q) }
    }

    pub fn at(&self, n: u64) -> f64 {
        match *self {
            PotentialQ::Zero => 0.0,
            PotentialQ::Piecewise { root, first, beyond } => match n {
                0 => root,
                1 => first,
                _ => beyond,
            },
        }
    }
}

impl RadialPotential for PotentialQ {
    fn value_at(&self, n: u64) -> Result<f64> {
        Ok(self.at(n))
    }

    fn label(&self) -> String {
        format!("{self:?}")
    }
}

/// Radial combinatorial Laplacian `Δf(n)` from function values.
pub fn laplacian_radial(spec: &RadialTreeSpec, f: &RadialFunction, n: u64) -> Result<f64> {
    if n == 0 {
        let deg = spec.degree(0) as f64;
        return Ok(deg * (f.value(0)? - f.value(1)?));
    }
    let m = spec.branching(n) as f64;
    Ok((m + 1.0) * f.value(n)? - m * f.value(n + 1)? - f.value(n - 1)?)
}

/// `Δf(n)/f(n)` assembled from neighbor ratios.
pub fn laplacian_quotient_at(spec: &RadialTreeSpec, f: &RadialFunction, n: u64) -> Result<f64> {
    if !f.is_positive_at(n)? {
        return Err(Error::NonpositiveFunction(n));
    }
    if n == 0 {
        let deg = spec.degree(0) as f64;
        return Ok(deg * (1.0 - f.ratio_up(0)?));
    }
    let m = spec.branching(n) as f64;
    Ok(m + 1.0 - m * f.ratio_up(n)? - f.ratio_down(n)?)
}

/// The weight `n -> Δf(n)/f(n)` generated by a positive function `f`.
#[derive(Debug, Clone)]
pub struct LaplacianQuotient {
    pub spec: RadialTreeSpec,
    pub f: RadialFunction,
}

impl RadialPotential for LaplacianQuotient {
    fn value_at(&self, n: u64) -> Result<f64> {
        laplacian_quotient_at(&self.spec, &self.f, n)
    }

    fn label(&self) -> String {
        format!("Δf/f[{:?}]", self.f)
    }
}

pub fn laplacian_quotient(spec: &RadialTreeSpec, f: &RadialFunction) -> LaplacianQuotient {
    LaplacianQuotient { spec: spec.clone(), f: f.clone() }
}

/// `Hf(n) = Δf(n) + Q(n) f(n)`.
pub fn schrodinger_apply(spec: &RadialTreeSpec, q: &impl RadialPotential, f: &RadialFunction, n: u64) -> Result<f64> {
    Ok(laplacian_radial(spec, f, n)? + q.value_at(n)? * f.value(n)?)
}

#[derive(Debug, Clone, PartialEq)]
pub struct SuperharmonicReport {
    /// Smallest `Hf/f` seen on the range.
    pub min_quotient: f64,
    pub argmin: u64,
    /// First radius with `Hf/f < -tol`.
    pub first_violation: Option<u64>,
}

impl SuperharmonicReport {
    pub fn is_superharmonic(&self) -> bool {
        self.first_violation.is_none()
    }
}

/// Checks `Hf >= 0` pointwise on `range` through `Hf/f = Δf/f + Q`.
pub fn superharmonic_report(
    spec: &RadialTreeSpec,
    q: &impl RadialPotential,
    f: &RadialFunction,
    range: std::ops::RangeInclusive<u64>,
    tol: f64,
) -> Result<SuperharmonicReport> {
    let mut report = SuperharmonicReport { min_quotient: f64::INFINITY, argmin: *range.start(), first_violation: None };
    for n in range {
        let h = laplacian_quotient_at(spec, f, n)? + q.value_at(n)?;
        if h < report.min_quotient {
            report.min_quotient = h;
            report.argmin = n;
        }
        if h < -tol && report.first_violation.is_none() {
            report.first_violation = Some(n);
        }
    }
    Ok(report)
}

#[derive(Debug, Clone, PartialEq)]
pub struct RatioReport {
    /// `max f(x)/f(y)` over neighbor pairs with radii up to the horizon.
    pub sup_ratio: f64,
    /// The edge `(n, n+1)` attaining the supremum.
    pub sup_edge: u64,
    /// Strictly decreasing on `[1, horizon]` and `f(horizon) <= DECAY_THRESHOLD f(1)`.
    pub monotone_to_zero: bool,
}

/// Neighbor-ratio bound and properness evidence for a positive radial function.
pub fn ratio_properness_report(f: &RadialFunction, horizon: u64) -> Result<RatioReport> {
    let mut sup_ratio = 0.0f64;
    let mut sup_edge = 0;
    let mut decreasing = true;
    let mut ln_decay = 0.0;
    for n in 0..horizon.max(1) {
        let r = f.ratio_up(n)?;
        if !(r > 0.0 && r.is_finite()) {
            return Err(Error::NonpositiveFunction(n + 1));
        }
        let worst = r.max(1.0 / r);
        if worst > sup_ratio {
            sup_ratio = worst;
            sup_edge = n;
        }
        if n >= 1 {
            decreasing &= r < 1.0;
            ln_decay += r.ln();
        }
    }
    let monotone_to_zero = decreasing && horizon > 1 && ln_decay <= DECAY_THRESHOLD.ln();
    Ok(RatioReport { sup_ratio, sup_edge, monotone_to_zero })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    const INV_SQRT2: f64 = std::f64::consts::FRAC_1_SQRT_2;

    fn t3() -> RadialTreeSpec {
        RadialTreeSpec::homogeneous(2).unwrap()
    }

    #[test]
    fn evaluate_examples() {
        let g = RadialFunction::GreenSqrt { q: 2 };
        assert_relative_eq!(g.value(0).unwrap(), 2f64.sqrt(), max_relative = 1e-15);
        let u = RadialFunction::UBetaGamma { q: 2, beta: 0.5, gamma: Some(1.0) };
        assert_relative_eq!(u.value(4).unwrap(), 0.5, max_relative = 1e-15);
        assert_relative_eq!(RadialFunction::QuotientU0.value(5).unwrap(), 0.2, max_relative = 1e-15);
    }

    #[test]
    fn missing_gamma_is_a_domain_error() {
        let u = RadialFunction::UBetaGamma { q: 2, beta: 0.5, gamma: None };
        assert!(matches!(u.value(0), Err(Error::Domain(_))));
        assert!(u.value(3).is_ok());
        assert!(matches!(laplacian_quotient_at(&t3(), &u, 1), Err(Error::Domain(_))));
    }

    #[test]
    fn deep_radii_switch_to_log_form() {
        let g = RadialFunction::GreenSqrt { q: 2 };
        let deep = g.evaluate(5000).unwrap();
        assert!(matches!(deep, Magnitude::Log(_)));
        let expected = 0.5 * (2f64.ln() - 5000.0 * 2f64.ln());
        assert_relative_eq!(deep.ln(), expected, max_relative = 1e-14);
        assert!(matches!(g.evaluate(3).unwrap(), Magnitude::Linear(_)));
        // Quotients stay exact far beyond the underflow point of q^{-n/2}.
        assert_relative_eq!(laplacian_quotient_at(&t3(), &g, 5000).unwrap(), lambda_q(2), max_relative = 1e-12);
    }

    #[test]
    fn green_sqrt_laplacian() {
        let g = RadialFunction::GreenSqrt { q: 2 };
        let lap2 = laplacian_radial(&t3(), &g, 2).unwrap() / g.value(2).unwrap();
        assert_relative_eq!(lap2, 3.0 - 2.0 * 2f64.sqrt(), max_relative = 1e-12);
        let lap0 = laplacian_radial(&t3(), &g, 0).unwrap() / g.value(0).unwrap();
        assert_relative_eq!(lap0, 0.878_679_656_440_357_3, max_relative = 1e-12);
    }

    #[test]
    fn laplacian_annihilates_constants() {
        let c = RadialFunction::Constant(3.5);
        let spec = RadialTreeSpec::custom(vec![2, 5, 3], crate::tree_model::Extension::Repeat).unwrap();
        for n in 0..8 {
            assert_eq!(laplacian_radial(&spec, &c, n).unwrap(), 0.0);
            assert_eq!(laplacian_quotient_at(&spec, &c, n).unwrap(), 0.0);
        }
    }

    #[test]
    fn quotient_examples() {
        let u = RadialFunction::UBetaGamma { q: 2, beta: 0.5, gamma: Some(INV_SQRT2) };
        assert_relative_eq!(laplacian_quotient_at(&t3(), &u, 2).unwrap(), 2.0 - 3f64.sqrt(), max_relative = 1e-12);
        let pu = RadialFunction::PairU { q: 2, gamma: Some(INV_SQRT2) };
        for n in 2..50 {
            assert_relative_eq!(laplacian_quotient_at(&t3(), &pu, n).unwrap(), lambda_q(2), max_relative = 1e-12);
        }
        let neg = RadialFunction::Tabulated(vec![1.0, -1.0, 1.0]);
        assert_eq!(laplacian_quotient_at(&t3(), &neg, 1), Err(Error::NonpositiveFunction(1)));
    }

    #[test]
    fn schrodinger_examples() {
        let q = PotentialQ::harmonic_pair(2);
        let pu = RadialFunction::PairU { q: 2, gamma: Some(INV_SQRT2) };
        let pv = RadialFunction::PairV { q: 2, gamma: Some(INV_SQRT2) };
        assert!(schrodinger_apply(&t3(), &q, &pu, 3).unwrap().abs() < 1e-15);
        assert!(schrodinger_apply(&t3(), &q, &pv, 5).unwrap().abs() < 1e-15);
        assert_relative_eq!(schrodinger_apply(&t3(), &q, &pu, 1).unwrap(), 2f64.sqrt(), max_relative = 1e-12);
    }

    #[test]
    fn superharmonic_examples() {
        let zero = PotentialQ::Zero;
        let ok = RadialFunction::UBetaGamma { q: 2, beta: 0.5, gamma: Some(INV_SQRT2) };
        let r = superharmonic_report(&t3(), &zero, &ok, 0..=10_000, ONE_SIDED_TOL).unwrap();
        assert!(r.is_superharmonic());
        let bad = RadialFunction::UBetaGamma { q: 2, beta: 0.5, gamma: Some(10.0) };
        let r = superharmonic_report(&t3(), &zero, &bad, 0..=2, ONE_SIDED_TOL).unwrap();
        assert_eq!(r.first_violation, Some(1));
        let tree =
            RadialTreeSpec::custom(vec![2, 3, 4], crate::tree_model::Extension::Affine { slope: 1, intercept: 2 })
                .unwrap();
        let ru = RadialFunction::RadialTreeU { tree: tree.clone(), beta: 0.5, gamma: Some(1.0), psi1: 1.0 };
        assert!(superharmonic_report(&tree, &zero, &ru, 0..=1000, ONE_SIDED_TOL).unwrap().is_superharmonic());
    }

    #[test]
    fn ratio_reports() {
        let r = ratio_properness_report(&RadialFunction::QuotientU0, 10_000).unwrap();
        assert_relative_eq!(r.sup_ratio, 2.0, max_relative = 1e-15);
        assert_eq!(r.sup_edge, 1);
        assert!(r.monotone_to_zero);
        let r = ratio_properness_report(&RadialFunction::PairU { q: 2, gamma: Some(1.0) }, 1000).unwrap();
        assert_relative_eq!(r.sup_ratio, 2f64.sqrt(), max_relative = 1e-14);
        let r = ratio_properness_report(&RadialFunction::Constant(2.0), 50).unwrap();
        assert_eq!(r.sup_ratio, 1.0);
        assert!(!r.monotone_to_zero);
    }

    #[test]
    fn ground_state_is_geometric_mean() {
        for n in 1..200 {
            let u = RadialFunction::PairU { q: 3, gamma: Some(0.7) }.value(n).unwrap();
            let v = RadialFunction::PairV { q: 3, gamma: Some(0.7) }.value(n).unwrap();
            let z = RadialFunction::GroundZ { q: 3, gamma: Some(0.7) }.value(n).unwrap();
            assert_relative_eq!(z * z, u * v, max_relative = 1e-15);
        }
    }

    #[test]
    fn ratios_match_values() {
        let tree = RadialTreeSpec::custom(vec![3, 4], crate::tree_model::Extension::Affine { slope: 2, intercept: 1 })
            .unwrap();
        let families = [
            RadialFunction::GreenSqrt { q: 3 },
            RadialFunction::UAlphaBetaGamma { q: 3, alpha: -0.3, beta: 0.7, gamma: Some(0.4) },
            RadialFunction::PairV { q: 2, gamma: Some(0.9) },
            RadialFunction::RadialTreeU { tree, beta: 0.3, gamma: Some(0.8), psi1: 2.0 },
        ];
        for f in &families {
            for n in 0..40 {
                let up = f.value(n + 1).unwrap() / f.value(n).unwrap();
                assert_relative_eq!(f.ratio_up(n).unwrap(), up, max_relative = 1e-12);
                if n >= 1 {
                    let down = f.value(n - 1).unwrap() / f.value(n).unwrap();
                    assert_relative_eq!(f.ratio_down(n).unwrap(), down, max_relative = 1e-12);
                }
            }
        }
    }

    #[test]
    fn descriptor_parsing() {
        let t = t3();
        assert_eq!(RadialFunction::parse("green-sqrt", &t).unwrap(), RadialFunction::GreenSqrt { q: 2 });
        assert_eq!(
            RadialFunction::parse("u:beta=0.5,gamma=1", &t).unwrap(),
            RadialFunction::UBetaGamma { q: 2, beta: 0.5, gamma: Some(1.0) }
        );
        assert_eq!(
            RadialFunction::parse("ground-z:gamma=0.5", &t).unwrap(),
            RadialFunction::GroundZ { q: 2, gamma: Some(0.5) }
        );
        assert!(matches!(
            RadialFunction::parse("radial-u:beta=0.5,gamma=1", &t).unwrap(),
            RadialFunction::RadialTreeU { psi1, .. } if psi1 == 1.0
        ));
        let custom: RadialTreeSpec = "custom:prefix=2,3;extend=repeat".parse().unwrap();
        assert!(RadialFunction::parse("green-sqrt", &custom).is_err());
        assert!(RadialFunction::parse("nope", &t).is_err());
    }
}

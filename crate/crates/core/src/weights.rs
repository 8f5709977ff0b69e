//! Closed-form Hardy weights and Poincaré remainders with their admissible
//! parameter ranges.
//!
//! Families on the homogeneous tree `T_{q+1}`:
//!
//! | descriptor | family |
//! |---|---|
//! | `wopt`  | weight generated by the square root of the Green function |
//! | `wbg`   | two-parameter weight `W_{β,γ}` |
//! | `whg`   | `W_{1/2,γ}`, the critical member of `wbg` |
//! | `rq`    | remainder over `Λ_q` supported at the root |
//! | `rbg`   | global remainder `R_{β,γ} = W_{β,γ} - Λ_q` |
//! | `rbar`  | remainder `W_{1/2,γ} - Λ_q` outside the ball of radius 2 |
//!
//! plus `wradial`, the weight generated by `n^β Psi^{-1/2}(n)` on a radial tree
//! with nondecreasing branching.

use std::fmt;

use crate::descriptor::Descriptor;
use crate::error::{Error, Result};
use crate::functions::{laplacian_quotient_at, RadialFunction};
use crate::potential::{RadialPotential, Tabulated};
use crate::tree_model::RadialTreeSpec;

/// Absolute slack applied at the endpoints of every closed parameter interval.
pub const PARAM_TOL: f64 = 1e-12;

/// Bottom of the ℓ² spectrum of the Laplacian on `T_{q+1}`: `(q^{1/2} - 1)^2`.
pub fn lambda_q(q: u64) -> f64 {
    let s = (q as f64).sqrt();
    (s - 1.0) * (s - 1.0)
}

/// `2 - (1+x)^β - (1-x)^β`, evaluated without cancellation for small `x`.
pub fn power_deficit(beta: f64, x: f64) -> f64 {
    -(beta * x.ln_1p()).exp_m1() - (beta * (-x).ln_1p()).exp_m1()
}

/// `log_2 q^{1/2}`, the largest admissible β of `wbg`.
pub fn max_beta_wbg(q: u64) -> f64 {
    0.5 * (q as f64).ln() / std::f64::consts::LN_2
}

/// `log_2(3/2 - 1/(2q))`, the largest admissible β of `rbg`.
pub fn max_beta_rbg(q: u64) -> f64 {
    (1.5 - 0.5 / q as f64).log2()
}

#[derive(Debug, Clone, PartialEq)]
pub enum WeightSpec {
    Wopt { q: u64 },
    WbetaGamma { q: u64, beta: f64, gamma: f64 },
    WhalfGamma { q: u64, gamma: f64 },
    RadialTreeW { tree: RadialTreeSpec, beta: f64, gamma: f64, psi1: f64 },
    RemainderRq { q: u64 },
    RemainderBetaGamma { q: u64, beta: f64, gamma: f64 },
    RemainderBar { q: u64 },
}

/// The first violated parameter bound.
#[derive(Debug, Clone, PartialEq)]
pub struct ParamViolation {
    pub family: &'static str,
    pub bound: String,
    pub value: f64,
    pub limit: f64,
}

impl fmt::Display for ParamViolation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}: bound `{}` violated (value {}, limit {})", self.family, self.bound, self.value, self.limit)
    }
}

struct Checker {
    family: &'static str,
}

impl Checker {
    fn at_least(&self, bound: &str, value: f64, limit: f64) -> Result<(), ParamViolation> {
        if value.is_finite() && value >= limit - PARAM_TOL {
            Ok(())
        } else {
            Err(self.violation(bound, value, limit))
        }
    }

    fn at_most(&self, bound: &str, value: f64, limit: f64) -> Result<(), ParamViolation> {
        if value.is_finite() && value <= limit + PARAM_TOL {
            Ok(())
        } else {
            Err(self.violation(bound, value, limit))
        }
    }

    fn violation(&self, bound: &str, value: f64, limit: f64) -> ParamViolation {
        ParamViolation { family: self.family, bound: bound.to_string(), value, limit }
    }

    fn q(&self, q: u64) -> Result<(), ParamViolation> {
        self.at_least("q >= 2", q as f64, 2.0)
    }
}

impl WeightSpec {
    pub fn family_name(&self) -> &'static str {
        match self {
            WeightSpec::Wopt { .. } => "wopt",
            WeightSpec::WbetaGamma { .. } => "wbg",
            WeightSpec::WhalfGamma { .. } => "whg",
            WeightSpec::RadialTreeW { .. } => "wradial",
            WeightSpec::RemainderRq { .. } => "rq",
            WeightSpec::RemainderBetaGamma { .. } => "rbg",
            WeightSpec::RemainderBar { .. } => "rbar",
        }
    }

    pub fn is_remainder(&self) -> bool {
        matches!(
            self,
            WeightSpec::RemainderRq { .. } | WeightSpec::RemainderBetaGamma { .. } | WeightSpec::RemainderBar { .. }
        )
    }

    /// `q` of the homogeneous tree the family lives on.
    pub fn q(&self) -> Option<u64> {
        match *self {
            WeightSpec::Wopt { q }
            | WeightSpec::WbetaGamma { q, .. }
            | WeightSpec::WhalfGamma { q, .. }
            | WeightSpec::RemainderRq { q }
            | WeightSpec::RemainderBetaGamma { q, .. }
            | WeightSpec::RemainderBar { q } => Some(q),
            WeightSpec::RadialTreeW { .. } => None,
        }
    }

    /// The tree the family is defined on.
    pub fn tree(&self) -> Result<RadialTreeSpec> {
        match self {
            WeightSpec::RadialTreeW { tree, .. } => Ok(tree.clone()),
            _ => RadialTreeSpec::homogeneous(self.q().expect("homogeneous family")),
        }
    }

    /// Constant in front of the plain ℓ² norm: `Λ_q` for remainders, 0 for weights.
    pub fn poincare_baseline(&self) -> f64 {
        match self.q() {
            Some(q) if self.is_remainder() => lambda_q(q),
            _ => 0.0,
        }
    }

    /// Smallest radius where the family is defined.
    pub fn first_radius(&self) -> u64 {
        match self {
            WeightSpec::RemainderBar { .. } => 2,
            _ => 0,
        }
    }

    /// Reports the first violated bound of the family's closed parameter ranges.
    pub fn validate_params(&self) -> Result<(), ParamViolation> {
        let c = Checker { family: self.family_name() };
        match self {
            WeightSpec::Wopt { q } | WeightSpec::RemainderRq { q } | WeightSpec::RemainderBar { q } => c.q(*q),
            WeightSpec::WbetaGamma { q, beta, gamma } => {
                c.q(*q)?;
                let s = (*q as f64).sqrt();
                c.at_least("beta >= 0", *beta, 0.0)?;
                c.at_most("beta <= log2(q^(1/2))", *beta, max_beta_wbg(*q))?;
                c.at_least("gamma >= q^(-1/2)", *gamma, 1.0 / s)?;
                c.at_most("gamma <= q^(-1/2) + q^(1/2) - 2^beta", *gamma, 1.0 / s + s - beta.exp2())
            }
            WeightSpec::WhalfGamma { q, gamma } => {
                c.q(*q)?;
                let s = (*q as f64).sqrt();
                c.at_least("gamma >= q^(-1/2)", *gamma, 1.0 / s)?;
                c.at_most("gamma <= q^(-1/2) + q^(1/2) - 2^(1/2)", *gamma, 1.0 / s + s - 0.5f64.exp2())
            }
            WeightSpec::RemainderBetaGamma { q, beta, gamma } => {
                c.q(*q)?;
                c.at_least("beta >= 0", *beta, 0.0)?;
                c.at_most("beta <= log2(3/2 - 1/(2q))", *beta, max_beta_rbg(*q))?;
                c.at_least("gamma >= 1/2 + 1/(2q)", *gamma, 0.5 + 0.5 / *q as f64)?;
                c.at_most("gamma <= 2 - 2^beta", *gamma, 2.0 - beta.exp2())
            }
            WeightSpec::RadialTreeW { tree, beta, gamma, psi1 } => {
                if !tree.is_nondecreasing() {
                    return Err(c.violation("branching nondecreasing", 0.0, 0.0));
                }
                c.at_least("psi1 > 0", *psi1, f64::MIN_POSITIVE)?;
                c.at_least("beta >= 0", *beta, 0.0)?;
                if beta.is_nan() || *beta >= 1.0 {
                    return Err(c.violation("beta < 1", *beta, 1.0));
                }
                let base = 1.0 / psi1.sqrt();
                let m1 = tree.branching(1) as f64;
                c.at_least("gamma >= psi1^(-1/2)", *gamma, base)?;
                c.at_most(
                    "gamma <= psi1^(-1/2) (m(1) + 1 - m(1)^(1/2) 2^beta)",
                    *gamma,
                    base * (m1 + 1.0 - m1.sqrt() * beta.exp2()),
                )
            }
        }
    }

    /// Moves β and γ onto a range endpoint when they lie within `tol` of it.
    /// Used for truncated decimal input such as `gamma=0.70710678`.
    pub fn snapped(&self, tol: f64) -> WeightSpec {
        let snap = |v: f64, ends: &[f64]| ends.iter().copied().find(|e| (v - e).abs() <= tol).unwrap_or(v);
        match self.clone() {
            WeightSpec::WbetaGamma { q, beta, gamma } => {
                let s = (q as f64).sqrt();
                let beta = snap(beta, &[0.0, max_beta_wbg(q)]);
                let gamma = snap(gamma, &[1.0 / s, 1.0 / s + s - beta.exp2()]);
                WeightSpec::WbetaGamma { q, beta, gamma }
            }
            WeightSpec::WhalfGamma { q, gamma } => {
                let s = (q as f64).sqrt();
                WeightSpec::WhalfGamma { q, gamma: snap(gamma, &[1.0 / s, 1.0 / s + s - 0.5f64.exp2()]) }
            }
            WeightSpec::RemainderBetaGamma { q, beta, gamma } => {
                let beta = snap(beta, &[0.0, max_beta_rbg(q)]);
                let gamma = snap(gamma, &[0.5 + 0.5 / q as f64, 2.0 - beta.exp2()]);
                WeightSpec::RemainderBetaGamma { q, beta, gamma }
            }
            WeightSpec::RadialTreeW { tree, beta, gamma, psi1 } => {
                let base = 1.0 / psi1.sqrt();
                let m1 = tree.branching(1) as f64;
                let beta = snap(beta, &[0.0]);
                let gamma = snap(gamma, &[base, base * (m1 + 1.0 - m1.sqrt() * beta.exp2())]);
                WeightSpec::RadialTreeW { tree, beta, gamma, psi1 }
            }
            other => other,
        }
    }

    fn checked(&self) -> Result<()> {
        self.validate_params().map_err(|v| Error::InvalidParams(v.to_string()))
    }

    /// Value of a weight family at radius `n`.
    pub fn evaluate_weight(&self, n: u64) -> Result<f64> {
        self.checked()?;
        if self.is_remainder() {
            return Err(Error::InvalidParams(format!(
                "{} is a remainder family; use evaluate_remainder",
                self.family_name()
            )));
        }
        Ok(self.weight_unchecked(n))
    }

    /// Value of a remainder family at radius `n`.
    pub fn evaluate_remainder(&self, n: u64) -> Result<f64> {
        self.checked()?;
        if !self.is_remainder() {
            return Err(Error::InvalidParams(format!(
                "{} is a weight family; use evaluate_weight",
                self.family_name()
            )));
        }
        self.remainder_unchecked(n)
    }

    fn weight_unchecked(&self, n: u64) -> f64 {
        match *self {
            WeightSpec::Wopt { q } => {
                let s = (q as f64).sqrt();
                if n == 0 {
                    lambda_q(q) + s - 1.0 / s
                } else {
                    lambda_q(q)
                }
            }
            WeightSpec::WbetaGamma { q, beta, gamma } => w_beta_gamma(q, beta, gamma, n),
            WeightSpec::WhalfGamma { q, gamma } => w_beta_gamma(q, 0.5, gamma, n),
            WeightSpec::RadialTreeW { ref tree, beta, gamma, psi1 } => {
                let sqrt_psi1 = psi1.sqrt();
                match n {
                    0 => {
                        let deg = tree.degree(0) as f64;
                        snap_cancellation(deg - deg / (gamma * sqrt_psi1), deg)
                    }
                    1 => {
                        let m1 = tree.branching(1) as f64;
                        snap_cancellation(m1 + 1.0 - m1.sqrt() * beta.exp2() - sqrt_psi1 * gamma, m1 + 1.0)
                    }
                    _ => {
                        let s = (tree.branching(n) as f64).sqrt();
                        let s_prev = (tree.branching(n - 1) as f64).sqrt();
                        let x = 1.0 / n as f64;
                        (s - 1.0) * (s - 1.0) + s * power_deficit(beta, x) + (s - s_prev) * (beta * (-x).ln_1p()).exp()
                    }
                }
            }
            _ => unreachable!("remainder families have no weight form"),
        }
    }

    fn remainder_unchecked(&self, n: u64) -> Result<f64> {
        Ok(match *self {
            WeightSpec::RemainderRq { q } => {
                let s = (q as f64).sqrt();
                if n == 0 {
                    s - 1.0 / s
                } else {
                    0.0
                }
            }
            WeightSpec::RemainderBetaGamma { q, beta, gamma } => {
                let s = (q as f64).sqrt();
                match n {
                    0 => s * snap_cancellation(2.0 - 1.0 / gamma - 1.0 / (q as f64 * gamma), 2.0),
                    1 => s * snap_cancellation(2.0 - beta.exp2() - gamma, 2.0),
                    _ => s * power_deficit(beta, 1.0 / n as f64),
                }
            }
            WeightSpec::RemainderBar { q } => {
                if n < 2 {
                    return Err(Error::Domain(format!("rbar is defined for radii >= 2, got {n}")));
                }
                (q as f64).sqrt() * power_deficit(0.5, 1.0 / n as f64)
            }
            _ => unreachable!("weight families have no remainder form"),
        })
    }

    /// `n^2 (W(n) - Λ_q) / q^{1/2}` (or `n^2 R(n) / q^{1/2}` for remainders), `n >= 2`.
    pub fn asymptotic_gap(&self, n: u64) -> Result<f64> {
        self.checked()?;
        let q = self.q().ok_or_else(|| Error::InvalidParams("asymptotic gap needs a homogeneous family".into()))?;
        if n < 2 {
            return Err(Error::Domain("asymptotic gap needs n >= 2".into()));
        }
        let excess =
            if self.is_remainder() { self.remainder_unchecked(n)? } else { self.weight_unchecked(n) - lambda_q(q) };
        Ok((n as f64).powi(2) * excess / (q as f64).sqrt())
    }

    /// Validates and wraps the family as a radial potential.
    pub fn into_weight(self) -> Result<Weight> {
        Weight::new(self)
    }
}

fn w_beta_gamma(q: u64, beta: f64, gamma: f64, n: u64) -> f64 {
    let qf = q as f64;
    let s = qf.sqrt();
    match n {
        0 => snap_cancellation(qf + 1.0 - s * (1.0 / gamma + 1.0 / (qf * gamma)), qf + 1.0),
        1 => snap_cancellation(qf + 1.0 - s * (beta.exp2() + gamma), qf + 1.0),
        _ => lambda_q(q) + s * power_deficit(beta, 1.0 / n as f64),
    }
}

/// Maps rounding residue of a difference of terms of size `scale` to an exact 0.
/// Boundary parameters make the root and first-sphere values vanish exactly.
fn snap_cancellation(value: f64, scale: f64) -> f64 {
    if value.abs() <= 8.0 * f64::EPSILON * scale {
        0.0
    } else {
        value
    }
}

impl fmt::Display for WeightSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            WeightSpec::Wopt { q } => write!(f, "wopt:q={q}"),
            WeightSpec::WbetaGamma { q, beta, gamma } => write!(f, "wbg:q={q},beta={beta},gamma={gamma}"),
            WeightSpec::WhalfGamma { q, gamma } => write!(f, "whg:q={q},gamma={gamma}"),
            WeightSpec::RadialTreeW { tree, beta, gamma, psi1 } => {
                write!(f, "wradial:spec={tree},beta={beta},gamma={gamma},psi1={psi1}")
            }
            WeightSpec::RemainderRq { q } => write!(f, "rq:q={q}"),
            WeightSpec::RemainderBetaGamma { q, beta, gamma } => write!(f, "rbg:q={q},beta={beta},gamma={gamma}"),
            WeightSpec::RemainderBar { q } => write!(f, "rbar:q={q}"),
        }
    }
}

impl std::str::FromStr for WeightSpec {
    type Err = Error;

    /// Parses a descriptor without validating the parameter ranges.
    fn from_str(s: &str) -> Result<Self> {
        let d = Descriptor::parse(s, &["q", "beta", "gamma", "psi1", "spec"])?;
        let q = || d.required_u64("q");
        Ok(match d.name.as_str() {
            "wopt" => WeightSpec::Wopt { q: q()? },
            "wbg" => WeightSpec::WbetaGamma { q: q()?, beta: d.required_f64("beta")?, gamma: d.required_f64("gamma")? },
            "whg" => WeightSpec::WhalfGamma { q: q()?, gamma: d.required_f64("gamma")? },
            "rq" => WeightSpec::RemainderRq { q: q()? },
            "rbg" => WeightSpec::RemainderBetaGamma {
                q: q()?,
                beta: d.required_f64("beta")?,
                gamma: d.required_f64("gamma")?,
            },
            "rbar" => WeightSpec::RemainderBar { q: q()? },
            "wradial" => WeightSpec::RadialTreeW {
                tree: d.get("spec").ok_or_else(|| Error::Parse(format!("`{s}`: missing spec=")))?.parse()?,
                beta: d.required_f64("beta")?,
                gamma: d.required_f64("gamma")?,
                psi1: d.f64("psi1")?.unwrap_or(1.0),
            },
            other => return Err(Error::Parse(format!("unknown weight family `{other}`"))),
        })
    }
}

/// A validated weight or remainder family, usable wherever a radial potential is expected.
#[derive(Debug, Clone, PartialEq)]
pub struct Weight {
    spec: WeightSpec,
}

impl Weight {
    pub fn new(spec: WeightSpec) -> Result<Self> {
        spec.checked()?;
        Ok(Self { spec })
    }

    pub fn spec(&self) -> &WeightSpec {
        &self.spec
    }

    /// Weight value, or remainder value for remainder families.
    pub fn at(&self, n: u64) -> Result<f64> {
        if self.spec.is_remainder() {
            self.spec.remainder_unchecked(n)
        } else {
            Ok(self.spec.weight_unchecked(n))
        }
    }
}

impl RadialPotential for Weight {
    fn value_at(&self, n: u64) -> Result<f64> {
        self.at(n)
    }

    fn label(&self) -> String {
        self.spec.to_string()
    }
}

/// `Δf/f` tabulated on a radius range, with the radii where it is negative.
#[derive(Debug, Clone, PartialEq)]
pub struct SupersolutionWeight {
    pub table: Tabulated,
    /// Radii with `Δf/f < -tol`: there `f` does not generate a nonnegative weight.
    pub negative_at: Vec<u64>,
}

/// Tabulates the weight `W = Δf/f` generated by a positive function `f`.
pub fn weight_from_supersolution(
    spec: &RadialTreeSpec,
    f: &RadialFunction,
    range: std::ops::RangeInclusive<u64>,
    tol: f64,
) -> Result<SupersolutionWeight> {
    let start = *range.start();
    let mut values = Vec::new();
    let mut negative_at = Vec::new();
    for n in range {
        let w = laplacian_quotient_at(spec, f, n)?;
        if w < -tol {
            negative_at.push(n);
        }
        values.push(w);
    }
    Ok(SupersolutionWeight { table: Tabulated::new(start, values), negative_at })
}

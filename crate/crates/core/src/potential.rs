//! Radial potentials and weights as a common evaluation interface.

use crate::error::{Error, Result};

/// A real function of the radius, used as a weight `W` or a potential `V`.
pub trait RadialPotential: Sync {
    fn value_at(&self, n: u64) -> Result<f64>;

    /// Short label used in provenance records and CSV summaries.
    fn label(&self) -> String {
        "potential".into()
    }
}

impl<P: RadialPotential + ?Sized> RadialPotential for &P {
    fn value_at(&self, n: u64) -> Result<f64> {
        (**self).value_at(n)
    }

    fn label(&self) -> String {
        (**self).label()
    }
}

impl<P: RadialPotential + ?Sized> RadialPotential for Box<P> {
    fn value_at(&self, n: u64) -> Result<f64> {
        (**self).value_at(n)
    }

    fn label(&self) -> String {
        (**self).label()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Constant(pub f64);

impl RadialPotential for Constant {
    fn value_at(&self, _n: u64) -> Result<f64> {
        Ok(self.0)
    }

    fn label(&self) -> String {
        format!("const({})", self.0)
    }
}

/// Values listed from radius `start` on; undefined elsewhere.
#[derive(Debug, Clone, PartialEq)]
pub struct Tabulated {
    pub start: u64,
    pub values: Vec<f64>,
}

impl Tabulated {
    pub fn new(start: u64, values: Vec<f64>) -> Self {
        Self { start, values }
    }
}

impl RadialPotential for Tabulated {
    fn value_at(&self, n: u64) -> Result<f64> {
        n.checked_sub(self.start)
            .and_then(|i| self.values.get(i as usize).copied())
            .ok_or_else(|| Error::Domain(format!("tabulated potential undefined at radius {n}")))
    }

    fn label(&self) -> String {
        format!("tabulated[{}..{})", self.start, self.start + self.values.len() as u64)
    }
}

/// `factor * inner`.
#[derive(Debug, Clone)]
pub struct Scaled<P> {
    pub factor: f64,
    pub inner: P,
}

impl<P: RadialPotential> RadialPotential for Scaled<P> {
    fn value_at(&self, n: u64) -> Result<f64> {
        Ok(self.factor * self.inner.value_at(n)?)
    }

    fn label(&self) -> String {
        format!("{}*{}", self.factor, self.inner.label())
    }
}

/// `first + second`.
#[derive(Debug, Clone)]
pub struct Sum<A, B>(pub A, pub B);

impl<A: RadialPotential, B: RadialPotential> RadialPotential for Sum<A, B> {
    fn value_at(&self, n: u64) -> Result<f64> {
        Ok(self.0.value_at(n)? + self.1.value_at(n)?)
    }

    fn label(&self) -> String {
        format!("{}+{}", self.0.label(), self.1.label())
    }
}

/// Adapter for closures.
pub struct FnPotential<F>(pub F);

impl<F: Fn(u64) -> f64 + Sync> RadialPotential for FnPotential<F> {
    fn value_at(&self, n: u64) -> Result<f64> {
        Ok((self.0)(n))
    }

    fn label(&self) -> String {
        "fn".into()
    }
}

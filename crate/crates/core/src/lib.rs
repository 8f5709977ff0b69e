//! Hardy weights and improved Poincaré inequalities for the combinatorial
//! Laplacian on homogeneous and radial trees.
//!
//! * [`tree_model`]: radial trees given by their branching sequence, sphere
//!   sizes, explicit truncations.
//! * [`functions`]: closed-form radial functions, the radial Laplacian and
//!   Schrödinger operators.
//! * [`weights`]: closed-form Hardy weights and Poincaré remainders.
//! * [`forms`]: quadratic forms, weighted norms, Hardy gaps, random test functions.
//! * [`spectral`]: Jacobi reduction, bottom eigenvalues, sweeps and violator search.
//! * [`cli`]: the `hardy-trees` command line.

pub mod cli;
pub mod csv;
pub mod descriptor;
pub mod error;
pub mod forms;
pub mod functions;
pub mod potential;
pub mod spectral;
pub mod tree_model;
pub mod weights;

pub use error::{Error, Result};
pub use forms::{RadialVector, VertexFunction};
pub use functions::{PotentialQ, RadialFunction};
pub use potential::RadialPotential;
pub use tree_model::{RadialTreeSpec, TruncatedTree};
pub use weights::{Weight, WeightSpec};

//! Optimal causal imputation: choose which nodes of a structural equation
//! model to force to constants, and to which values, so that imputation
//! cost plus expected downstream system cost is minimal.
//!
//! - [`graph`]: validated DAGs with ancestry and path counting.
//! - [`sem`]: mechanisms, seeded sampling, the do-operator, exact joints.
//! - [`oci`]: the optimization problem, plan evaluation, brute force.
//! - [`submodular`]: set functions, Lovász minimization, greedy maximization.
//! - [`additive`]: closed-form variance objectives for additive models.
//! - [`linear_gaussian`]: linear dynamics unrolled over time.
//! - [`io`]: problem files, reports and the `oci` command line.

pub mod additive;
pub mod error;
pub mod graph;
pub mod io;
pub mod linear_gaussian;
pub mod oci;
pub mod sem;
pub mod submodular;

pub use error::{Error, Result};

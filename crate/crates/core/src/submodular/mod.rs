//! Set-function optimization for the single-value case: exhaustive
//! submodularity and monotonicity checks, the Lovász extension with a
//! relaxation-based minimizer, and greedy constrained maximization.

mod checks;
mod greedy;
mod lovasz;
mod set_function;
mod subset;

pub use checks::{
    is_nondecreasing, is_submodular, monotonicity_violation, submodularity_violation, MonotonicityViolation,
    SubmodularityViolation, CHECK_SLACK, MAX_CHECK,
};
pub use greedy::{brute_force_extremum, greedy_maximize, ConstraintOracle, Direction};
pub use lovasz::{lovasz_extension, lovasz_subgradient, minimize_single_value, Minimum, SubgradientOptions};
pub use set_function::{Oracle, SetFunction, MAX_GROUND, MAX_TABLE};
pub use subset::{all_subsets_by_size, Subset};

//! Exhaustive verification of submodularity and monotonicity.

use serde::Serialize;

use super::{SetFunction, Subset};
use crate::error::{Error, Result};

/// Largest ground set the exhaustive checks accept.
pub const MAX_CHECK: usize = 12;

/// Slack allowed on floating-point oracles.
pub const CHECK_SLACK: f64 = 1e-9;

/// A triple `(I₁ ⊂ I₂, i ∉ I₂)` with
/// `F(I₁ ∪ {i}) − F(I₁) < F(I₂ ∪ {i}) − F(I₂)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SubmodularityViolation {
    pub smaller: Subset,
    pub larger: Subset,
    pub element: usize,
    /// Amount by which the larger set's marginal exceeds the smaller one's.
    pub excess: f64,
}

/// A pair `(S, S ∪ {i})` with `F(S) > F(S ∪ {i})`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MonotonicityViolation {
    pub set: Subset,
    pub element: usize,
    pub drop: f64,
}

fn dense(f: &SetFunction) -> Result<Vec<f64>> {
    if f.ground_size() > MAX_CHECK {
        return Err(Error::too_large(
            "ground set for exhaustive check",
            f.ground_size() as u128,
            MAX_CHECK as u128,
        ));
    }
    f.table()
}

/// First violating triple of the diminishing-returns inequality, scanning
/// the element, then `I₂`, then `I₁ ⊆ I₂` in increasing bitmask order.
pub fn submodularity_violation(f: &SetFunction) -> Result<Option<SubmodularityViolation>> {
    let table = dense(f)?;
    let full = f.full();
    for i in 0..f.ground_size() {
        let rest = full.without(i);
        for larger in rest.subsets() {
            let big_gain = table[larger.with(i).bits() as usize] - table[larger.bits() as usize];
            for smaller in larger.subsets() {
                let small_gain = table[smaller.with(i).bits() as usize] - table[smaller.bits() as usize];
                if small_gain < big_gain - CHECK_SLACK {
                    return Ok(Some(SubmodularityViolation {
                        smaller,
                        larger,
                        element: i,
                        excess: big_gain - small_gain,
                    }));
                }
            }
        }
    }
    Ok(None)
}

pub fn is_submodular(f: &SetFunction) -> Result<bool> {
    Ok(submodularity_violation(f)?.is_none())
}

/// First pair `(S, i)` with `F(S ∪ {i}) < F(S)`, in increasing bitmask order.
pub fn monotonicity_violation(f: &SetFunction) -> Result<Option<MonotonicityViolation>> {
    let table = dense(f)?;
    for set in f.full().subsets() {
        for i in (0..f.ground_size()).filter(|&i| !set.contains(i)) {
            let drop = table[set.bits() as usize] - table[set.with(i).bits() as usize];
            if drop > CHECK_SLACK {
                return Ok(Some(MonotonicityViolation { set, element: i, drop }));
            }
        }
    }
    Ok(None)
}

pub fn is_nondecreasing(f: &SetFunction) -> Result<bool> {
    Ok(monotonicity_violation(f)?.is_none())
}

use std::collections::HashSet;
use std::fmt;
use std::sync::Arc;

use super::{all_subsets_by_size, SetFunction, Subset, MAX_TABLE};
use crate::error::{Error, Result};

/// Feasible family `S ⊆ 2^V` for constrained optimization. The empty set is
/// always feasible.
#[derive(Clone)]
pub enum ConstraintOracle {
    Unconstrained,
    /// `|I| ≤ k`.
    Cardinality(usize),
    Explicit(Arc<HashSet<Subset>>),
    Custom(Arc<dyn Fn(Subset) -> bool + Send + Sync>),
}

impl ConstraintOracle {
    pub fn cardinality(k: usize) -> Self {
        ConstraintOracle::Cardinality(k)
    }

    pub fn explicit(sets: impl IntoIterator<Item = Subset>) -> Result<Self> {
        let sets: HashSet<Subset> = sets.into_iter().collect();
        if !sets.contains(&Subset::EMPTY) {
            return Err(Error::InvalidArgument(
                "explicit feasible family must contain the empty set".into(),
            ));
        }
        Ok(ConstraintOracle::Explicit(Arc::new(sets)))
    }

    pub fn custom(pred: impl Fn(Subset) -> bool + Send + Sync + 'static) -> Result<Self> {
        if !pred(Subset::EMPTY) {
            return Err(Error::InvalidArgument(
                "custom constraint must admit the empty set".into(),
            ));
        }
        Ok(ConstraintOracle::Custom(Arc::new(pred)))
    }

    pub fn allows(&self, s: Subset) -> bool {
        match self {
            ConstraintOracle::Unconstrained => true,
            ConstraintOracle::Cardinality(k) => s.len() <= *k,
            ConstraintOracle::Explicit(sets) => sets.contains(&s),
            ConstraintOracle::Custom(pred) => pred(s),
        }
    }
}

impl fmt::Debug for ConstraintOracle {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ConstraintOracle::Unconstrained => write!(f, "Unconstrained"),
            ConstraintOracle::Cardinality(k) => write!(f, "Cardinality({k})"),
            ConstraintOracle::Explicit(sets) => write!(f, "Explicit({} sets)", sets.len()),
            ConstraintOracle::Custom(_) => write!(f, "Custom"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Direction {
    Minimize,
    Maximize,
}

/// Greedy constrained maximization.
///
/// Starting from `∅`, repeatedly adds the feasible element with the largest
/// `F(I ∪ {i})` (lowest index on ties) as long as its marginal gain is
/// non-negative. For nondecreasing submodular `F` under a cardinality
/// constraint the result is within `1 − 1/e` of the optimum.
pub fn greedy_maximize(f: &SetFunction, constraint: &ConstraintOracle) -> Subset {
    let mut current = Subset::EMPTY;
    let mut current_value = f.eval(current);
    loop {
        let mut best: Option<(usize, f64)> = None;
        for i in (0..f.ground_size()).filter(|&i| !current.contains(i)) {
            let candidate = current.with(i);
            if !constraint.allows(candidate) {
                continue;
            }
            let v = f.eval(candidate);
            if best.is_none_or(|(_, b)| v > b) {
                best = Some((i, v));
            }
        }
        match best {
            Some((i, v)) if v - current_value >= 0.0 => {
                current = current.with(i);
                current_value = v;
            }
            _ => return current,
        }
    }
}

/// Exact constrained optimum by enumeration. Ties go to the smaller set,
/// then the smaller bitmask.
pub fn brute_force_extremum(
    f: &SetFunction,
    constraint: &ConstraintOracle,
    direction: Direction,
) -> Result<(Subset, f64)> {
    if f.ground_size() > MAX_TABLE {
        return Err(Error::too_large(
            "ground set for enumeration",
            f.ground_size() as u128,
            MAX_TABLE as u128,
        ));
    }
    let mut best: Option<(Subset, f64)> = None;
    for s in all_subsets_by_size(f.ground_size()) {
        if !constraint.allows(s) {
            continue;
        }
        let v = f.eval(s);
        let better = match (best, direction) {
            (None, _) => true,
            (Some((_, b)), Direction::Minimize) => v < b,
            (Some((_, b)), Direction::Maximize) => v > b,
        };
        if better {
            best = Some((s, v));
        }
    }
    Ok(best.expect("the empty set is always feasible"))
}

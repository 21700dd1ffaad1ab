//! Closed-form variance objective for additive location models.
//!
//! Every node is `X_j = Σ pa(X_j) + ε_j` with independent zero-mean noise of
//! variance `v_j`, and the system cost is the variance of one target node.
//! When every ancestor of the target reaches it along exactly one path, the
//! target variance is `Σ_{j ∈ {i} ∪ anc(i)} v_j`, and imputing a set `I`
//! removes the terms of `J ∪ anc(J)` where `J` is the part of `I` on the
//! target's ancestry.
//!
//! The variance `G(I)` is nonincreasing and supermodular: an imputation
//! removes less variance once more of the ancestry is already cut. So
//! `c(I) − G(I)` is submodular (and nondecreasing) when `c` is, while
//! `c(I) + G(I)` generally is not.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::graph::{NodeId, ValidatedDag};
use crate::sem::{ImputationPlan, Mechanism, NodeModel, NoiseSpec, Sem, Values};
use crate::submodular::{
    monotonicity_violation, submodularity_violation, MonotonicityViolation, SetFunction, SubmodularityViolation,
    Subset, MAX_CHECK, MAX_GROUND,
};

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum HypothesisViolation {
    /// An ancestor reaches the target along more than one path.
    MultiplePaths {
        from: NodeId,
        to: NodeId,
        paths: u128,
    },
    CostNotSubmodular(SubmodularityViolation),
    CostDecreasing(MonotonicityViolation),
}

#[derive(Debug, Clone)]
pub struct AdditiveSemSpec {
    dag: ValidatedDag,
    variances: Vec<f64>,
    target: NodeId,
    cost: SetFunction,
    violations: Vec<HypothesisViolation>,
}

impl AdditiveSemSpec {
    pub fn new(dag: ValidatedDag, variances: Vec<f64>, target: NodeId, cost: SetFunction) -> Result<Self> {
        let n = dag.node_count();
        if n > MAX_GROUND {
            return Err(Error::too_large("node count", n as u128, MAX_GROUND as u128));
        }
        if variances.len() != n {
            return Err(Error::validation(
                "variances",
                format!("{} variances for {n} nodes", variances.len()),
            ));
        }
        if let Some(j) = variances.iter().position(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::validation(
                format!("variances[{j}]"),
                format!("{} is not a finite non-negative variance", variances[j]),
            ));
        }
        if target >= n {
            return Err(Error::validation("target", format!("node {target} out of range")));
        }
        if cost.ground_size() != n {
            return Err(Error::validation(
                "cost",
                format!("cost is over {} elements, graph has {n} nodes", cost.ground_size()),
            ));
        }
        let mut spec = AdditiveSemSpec {
            dag,
            variances,
            target,
            cost,
            violations: Vec::new(),
        };
        spec.violations = spec.compute_violations()?;
        Ok(spec)
    }

    fn compute_violations(&self) -> Result<Vec<HypothesisViolation>> {
        let mut out = Vec::new();
        for j in self.dag.ancestors(self.target).ones() {
            let paths = self.dag.path_count(j, self.target);
            if paths != 1 {
                out.push(HypothesisViolation::MultiplePaths {
                    from: j,
                    to: self.target,
                    paths,
                });
            }
        }
        if self.cost.ground_size() <= MAX_CHECK {
            if let Some(v) = submodularity_violation(&self.cost)? {
                out.push(HypothesisViolation::CostNotSubmodular(v));
            }
        }
        Ok(out)
    }

    pub fn dag(&self) -> &ValidatedDag {
        &self.dag
    }

    pub fn variances(&self) -> &[f64] {
        &self.variances
    }

    pub fn target(&self) -> NodeId {
        self.target
    }

    pub fn cost(&self) -> &SetFunction {
        &self.cost
    }

    /// Violated hypotheses: non-unique ancestor paths to the target and,
    /// for at most [`MAX_CHECK`] nodes, a non-submodular cost. Empty when
    /// the closed form applies.
    pub fn check_hypotheses(&self) -> &[HypothesisViolation] {
        &self.violations
    }

    fn require_hypotheses(&self) -> Result<()> {
        if self.violations.is_empty() {
            Ok(())
        } else {
            Err(Error::Hypothesis(format!("{:?}", self.violations)))
        }
    }

    /// `{i} ∪ anc(i)` for the target `i`.
    pub fn relevant_nodes(&self) -> Subset {
        Subset::from_members(self.dag.ancestors(self.target).ones()).with(self.target)
    }

    /// Target variance after imputing `set`: the sum of `v_j` over
    /// `({i} ∪ anc(i)) \ (J ∪ anc(J))` with `J = I ∩ ({i} ∪ anc(i))`, and
    /// zero when the target is imputed.
    pub fn closed_form_variance(&self, set: Subset) -> Result<f64> {
        self.require_hypotheses()?;
        Ok(variance_after(
            &self.dag,
            &self.variances,
            self.relevant_nodes(),
            self.target,
            set,
        ))
    }

    /// `F(I) = c(I) + Var(Y_i)` with `Y = do(X; I)`. Not submodular in
    /// general, see the module docs; check it before minimizing through the
    /// Lovász relaxation.
    pub fn build_objective(&self) -> Result<SetFunction> {
        self.require_hypotheses()?;
        let (dag, variances, relevant, target) = (
            self.dag.clone(),
            self.variances.clone(),
            self.relevant_nodes(),
            self.target,
        );
        let cost = self.cost.clone();
        SetFunction::new(self.dag.node_count(), move |s| {
            cost.eval(s) + variance_after(&dag, &variances, relevant, target, s)
        })
    }

    /// `F'(I) = c(I) − Var(Y_i)`, nondecreasing and submodular when `c` is.
    pub fn build_max_objective(&self) -> Result<SetFunction> {
        self.require_hypotheses()?;
        if self.cost.ground_size() <= MAX_CHECK {
            if let Some(v) = monotonicity_violation(&self.cost)? {
                return Err(Error::Hypothesis(format!(
                    "{:?}",
                    HypothesisViolation::CostDecreasing(v)
                )));
            }
        }
        let (dag, variances, relevant, target) = (
            self.dag.clone(),
            self.variances.clone(),
            self.relevant_nodes(),
            self.target,
        );
        let cost = self.cost.clone();
        SetFunction::new(self.dag.node_count(), move |s| {
            cost.eval(s) - variance_after(&dag, &variances, relevant, target, s)
        })
    }

    /// The corresponding simulation model: unit-weight additive mechanisms
    /// with `N(0, v_j)` noise.
    pub fn materialize(&self) -> Result<Sem> {
        let nodes = self
            .variances
            .iter()
            .map(|&v| NodeModel::scalar(Mechanism::additive(NoiseSpec::gaussian_with_variance(v))))
            .collect();
        Sem::new(self.dag.clone(), nodes)
    }

    /// The single-value plan for `set`: every member imputed to 0, which is
    /// the noise mean, so `E[Y_i] = 0` under every plan.
    pub fn plan(&self, set: Subset) -> ImputationPlan {
        ImputationPlan::scalar(&set.members().collect::<Vec<_>>(), &vec![0.0; set.len()]).expect("distinct members")
    }

    /// `g(Y) = (Y_i − E Y_i)²` for the materialized model.
    pub fn system_cost(&self) -> impl Fn(&Values) -> f64 + Send + Sync + 'static {
        let target = self.target;
        move |v: &Values| v.scalar(target).powi(2)
    }
}

fn variance_after(dag: &ValidatedDag, variances: &[f64], relevant: Subset, target: NodeId, set: Subset) -> f64 {
    if set.contains(target) {
        return 0.0;
    }
    // Imputing a node off the target's ancestry leaves its own ancestors'
    // influence on the target intact.
    let cut = Subset(set.bits() & relevant.bits());
    let zeroed = Subset::from_members(dag.ancestors_of_set(cut.members()).ones()).union(cut);
    relevant
        .members()
        .filter(|&j| !zeroed.contains(j))
        .map(|j| variances[j])
        .sum()
}

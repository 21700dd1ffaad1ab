//! The optimal causal imputation problem
//! `min_I min_{x_I} c_I(x_I) + E[g(do(X; I, x_I))]` and its exhaustive
//! reference solver.

use std::fmt;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::NodeId;
use crate::sem::{Domain, ImputationPlan, Sem, Values};
use crate::submodular::{all_subsets_by_size, SetFunction, Subset, MAX_TABLE};

/// Largest graph [`brute_force_solve`] enumerates.
pub const MAX_BRUTE_NODES: usize = 16;

/// Largest number of candidate plans [`brute_force_solve`] evaluates.
pub const MAX_BRUTE_PLANS: u128 = 1_000_000;

/// Plans evaluated together on one pass over the noise records.
const PLAN_BLOCK: usize = 256;

/// Cost `c_I(x_I)` of imputing a plan. Must be defined for every plan;
/// return `f64::INFINITY` for forbidden ones.
pub trait ImputationCost: Send + Sync {
    fn cost(&self, plan: &ImputationPlan) -> f64;
}

impl<F> ImputationCost for F
where
    F: Fn(&ImputationPlan) -> f64 + Send + Sync,
{
    fn cost(&self, plan: &ImputationPlan) -> f64 {
        self(plan)
    }
}

/// `c_I(x_I) = setup·1{I ≠ ∅} + Σ_{i∈I} (fixed_i + quadratic_i‖x_i‖²)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SeparableCost {
    pub fixed: Vec<f64>,
    pub quadratic: Vec<f64>,
    #[serde(default)]
    pub setup: f64,
}

impl SeparableCost {
    pub fn zero(n: usize) -> Self {
        SeparableCost {
            fixed: vec![0.0; n],
            quadratic: vec![0.0; n],
            setup: 0.0,
        }
    }
}

impl ImputationCost for SeparableCost {
    fn cost(&self, plan: &ImputationPlan) -> f64 {
        if plan.is_empty() {
            return 0.0;
        }
        self.setup
            + plan
                .entries()
                .iter()
                .map(|(i, x)| self.fixed[*i] + self.quadratic[*i] * x.iter().map(|v| v * v).sum::<f64>())
                .sum::<f64>()
    }
}

/// Commonly used system costs `g`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum SystemCostSpec {
    /// `Σ_k ‖Y_{nodes[k]} − target[k]‖²`, the target applied to every
    /// coordinate of a vector node.
    SquaredDeviation {
        nodes: Vec<NodeId>,
        target: Vec<f64>,
    },
    /// `Σ_i weights[i] · Y_i` over the first coordinate of each node.
    Linear {
        weights: Vec<f64>,
    },
    Constant(f64),
}

pub type SystemCostFn = dyn Fn(&Values) -> f64 + Send + Sync;

impl SystemCostSpec {
    pub fn validate(&self, node_count: usize) -> Result<()> {
        match self {
            SystemCostSpec::SquaredDeviation { nodes, target } => {
                if nodes.len() != target.len() {
                    return Err(Error::validation(
                        "system_cost.squared_deviation.target",
                        format!("{} targets for {} nodes", target.len(), nodes.len()),
                    ));
                }
                if let Some(&bad) = nodes.iter().find(|&&n| n >= node_count) {
                    return Err(Error::validation(
                        "system_cost.squared_deviation.nodes",
                        format!("node {bad} out of range"),
                    ));
                }
            }
            SystemCostSpec::Linear { weights } => {
                if weights.len() != node_count {
                    return Err(Error::validation(
                        "system_cost.linear.weights",
                        format!("{} weights for {node_count} nodes", weights.len()),
                    ));
                }
            }
            SystemCostSpec::Constant(_) => {}
        }
        Ok(())
    }

    pub fn to_fn(&self) -> Arc<SystemCostFn> {
        match self.clone() {
            SystemCostSpec::SquaredDeviation { nodes, target } => Arc::new(move |v: &Values| {
                nodes
                    .iter()
                    .zip(&target)
                    .map(|(&n, &t)| v.get(n).iter().map(|y| (y - t) * (y - t)).sum::<f64>())
                    .sum()
            }),
            SystemCostSpec::Linear { weights } => {
                Arc::new(move |v: &Values| weights.iter().enumerate().map(|(i, w)| w * v.scalar(i)).sum())
            }
            SystemCostSpec::Constant(c) => Arc::new(move |_: &Values| c),
        }
    }
}

/// A model, an imputation cost and a system cost.
#[derive(Clone)]
pub struct OciProblem {
    pub sem: Sem,
    pub cost: Arc<dyn ImputationCost>,
    pub system_cost: Arc<SystemCostFn>,
}

impl fmt::Debug for OciProblem {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("OciProblem")
            .field("nodes", &self.sem.node_count())
            .finish_non_exhaustive()
    }
}

impl OciProblem {
    pub fn new(
        sem: Sem,
        cost: impl ImputationCost + 'static,
        system_cost: impl Fn(&Values) -> f64 + Send + Sync + 'static,
    ) -> Self {
        OciProblem {
            sem,
            cost: Arc::new(cost),
            system_cost: Arc::new(system_cost),
        }
    }
}

/// How `E[g(Y)]` is computed.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExpectationMode {
    MonteCarlo {
        samples: usize,
        seed: u64,
    },
    /// Enumeration of the joint; finite models only.
    Exact,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Evaluation {
    pub objective: f64,
    pub imputation_cost: f64,
    pub expected_system_cost: f64,
    /// Zero in exact mode.
    pub std_error: f64,
}

/// `c_I(x_I) + E[g(do(X; I, x_I))]` for one plan.
pub fn evaluate(problem: &OciProblem, plan: &ImputationPlan, mode: ExpectationMode) -> Result<Evaluation> {
    Ok(evaluate_many(problem, std::slice::from_ref(plan), mode)?.remove(0))
}

fn evaluate_many(problem: &OciProblem, plans: &[ImputationPlan], mode: ExpectationMode) -> Result<Vec<Evaluation>> {
    let g = problem.system_cost.as_ref();
    let system: Vec<(f64, f64)> = match mode {
        ExpectationMode::MonteCarlo { samples, seed } => {
            let mut out = Vec::with_capacity(plans.len());
            for block in plans.chunks(PLAN_BLOCK) {
                for est in problem.sem.expectation_batch(block, g, samples, seed)? {
                    out.push((est.mean, est.std_error));
                }
            }
            out
        }
        ExpectationMode::Exact => plans
            .par_iter()
            .map(|p| problem.sem.exact_expectation(p, g).map(|e| (e, 0.0)))
            .collect::<Result<_>>()?,
    };
    Ok(plans
        .iter()
        .zip(system)
        .map(|(plan, (mean, std_error))| {
            let c = problem.cost.cost(plan);
            Evaluation {
                objective: c + mean,
                imputation_cost: c,
                expected_system_cost: mean,
                std_error,
            }
        })
        .collect())
}

/// Candidate imputed values per node.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ValueGrid {
    per_node: Vec<Vec<Vec<f64>>>,
}

impl ValueGrid {
    pub fn new(per_node: Vec<Vec<Vec<f64>>>) -> Self {
        ValueGrid { per_node }
    }

    /// The same scalar candidates at every node.
    pub fn scalar(node_count: usize, candidates: &[f64]) -> Self {
        let values: Vec<Vec<f64>> = candidates.iter().map(|&c| vec![c]).collect();
        ValueGrid {
            per_node: vec![values; node_count],
        }
    }

    /// Every symbol of every finite node; real nodes get no candidates.
    pub fn alphabet(sem: &Sem) -> Self {
        ValueGrid {
            per_node: (0..sem.node_count())
                .map(|i| match sem.domain(i) {
                    Domain::Finite(k) => (0..k).map(|x| vec![x as f64]).collect(),
                    Domain::Real(_) => Vec::new(),
                })
                .collect(),
        }
    }

    pub fn candidates(&self, node: NodeId) -> &[Vec<f64>] {
        &self.per_node[node]
    }

    pub fn push(&mut self, node: NodeId, value: Vec<f64>) {
        self.per_node[node].push(value);
    }
}

/// Best plan found for one subset.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SubsetRecord {
    pub nodes: Vec<NodeId>,
    pub values: Vec<Vec<f64>>,
    pub objective: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub std_error: Option<f64>,
}

/// Outcome of a solver run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SolveReport {
    pub method: String,
    pub nodes: Vec<NodeId>,
    /// Imputed value per node of `nodes`; empty for bare set functions.
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub values: Vec<Vec<f64>>,
    pub objective: f64,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub std_error: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub seed: Option<u64>,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub samples: Option<usize>,
    #[serde(skip_serializing_if = "Vec::is_empty", default)]
    pub table: Vec<SubsetRecord>,
    #[serde(skip)]
    pub wall_time: Duration,
}

impl SolveReport {
    pub fn plan(&self) -> Result<ImputationPlan> {
        ImputationPlan::new(self.nodes.iter().copied().zip(self.values.iter().cloned()))
    }

    pub fn subset(&self) -> Subset {
        Subset::from_members(self.nodes.iter().copied())
    }
}

/// Odometer over grid indices, last member fastest, so plans come out in
/// lexicographic order of their index tuples.
fn grid_plans(members: &[NodeId], grid: &ValueGrid) -> Vec<ImputationPlan> {
    let sizes: Vec<usize> = members.iter().map(|&n| grid.candidates(n).len()).collect();
    if sizes.contains(&0) {
        return Vec::new();
    }
    let mut idx = vec![0usize; members.len()];
    let mut out = Vec::new();
    loop {
        let entries = members
            .iter()
            .zip(&idx)
            .map(|(&n, &k)| (n, grid.candidates(n)[k].clone()));
        out.push(ImputationPlan::new(entries).expect("members are distinct"));
        let mut pos = members.len();
        loop {
            if pos == 0 {
                return out;
            }
            pos -= 1;
            idx[pos] += 1;
            if idx[pos] < sizes[pos] {
                break;
            }
            idx[pos] = 0;
        }
    }
}

/// Exhaustive search over every subset and every grid combination.
///
/// All plans share the same noise records in Monte-Carlo mode. Ties go to
/// the smaller subset, then the smaller bitmask, then the earlier grid
/// combination.
pub fn brute_force_solve(problem: &OciProblem, grid: &ValueGrid, mode: ExpectationMode) -> Result<SolveReport> {
    let started = Instant::now();
    let n = problem.sem.node_count();
    if n > MAX_BRUTE_NODES {
        return Err(Error::too_large(
            "node count for brute force",
            n as u128,
            MAX_BRUTE_NODES as u128,
        ));
    }
    if grid.per_node.len() != n {
        return Err(Error::Dimension(format!(
            "grid covers {} nodes, model has {n}",
            grid.per_node.len()
        )));
    }
    let empty_cost = problem.cost.cost(&ImputationPlan::empty());
    if !empty_cost.is_finite() {
        return Err(Error::validation(
            "imputation_cost",
            "cost of the empty imputation must be finite",
        ));
    }

    let subsets = all_subsets_by_size(n);
    let mut total: u128 = 0;
    for s in &subsets {
        total += s.members().map(|i| grid.candidates(i).len() as u128).product::<u128>();
        if total > MAX_BRUTE_PLANS {
            return Err(Error::too_large("number of candidate plans", total, MAX_BRUTE_PLANS));
        }
    }

    let mut plans = Vec::new();
    let mut ranges = Vec::with_capacity(subsets.len());
    for s in &subsets {
        let members: Vec<NodeId> = s.members().collect();
        let start = plans.len();
        plans.extend(grid_plans(&members, grid));
        ranges.push((members, start..plans.len()));
    }
    let evals = evaluate_many(problem, &plans, mode)?;
    let with_error = matches!(mode, ExpectationMode::MonteCarlo { .. });

    let mut table = Vec::new();
    let mut best: Option<(usize, usize)> = None;
    for (members, range) in ranges {
        if range.is_empty() {
            continue;
        }
        let mut local = range.start;
        for k in range {
            if evals[k].objective < evals[local].objective {
                local = k;
            }
        }
        if best.is_none_or(|(_, b)| evals[local].objective < evals[b].objective) {
            best = Some((table.len(), local));
        }
        table.push(SubsetRecord {
            nodes: members,
            values: plans[local].entries().iter().map(|(_, v)| v.clone()).collect(),
            objective: evals[local].objective,
            std_error: with_error.then_some(evals[local].std_error),
        });
    }
    let (row, k) = best.expect("the empty plan is always a candidate");
    let (seed, samples) = match mode {
        ExpectationMode::MonteCarlo { samples, seed } => (Some(seed), Some(samples)),
        ExpectationMode::Exact => (None, None),
    };
    Ok(SolveReport {
        method: "brute".into(),
        nodes: table[row].nodes.clone(),
        values: table[row].values.clone(),
        objective: evals[k].objective,
        std_error: with_error.then_some(evals[k].std_error),
        seed,
        samples,
        table,
        wall_time: started.elapsed(),
    })
}

/// The single-value objective `F(I) = c_I(x_I) + E[g(do(X; I, x_I))]` with
/// `x_I` read from `values`, tabulated over every subset with common random
/// numbers.
pub fn single_value_function(problem: &OciProblem, values: &[Vec<f64>], mode: ExpectationMode) -> Result<SetFunction> {
    let n = problem.sem.node_count();
    if values.len() != n {
        return Err(Error::Dimension(format!(
            "{} imputation values for {n} nodes",
            values.len()
        )));
    }
    if n > MAX_TABLE {
        return Err(Error::too_large(
            "node count for a tabulated objective",
            n as u128,
            MAX_TABLE as u128,
        ));
    }
    let plans: Vec<ImputationPlan> = (0..1u32 << n)
        .map(|b| ImputationPlan::new(Subset(b).members().map(|i| (i, values[i].clone()))))
        .collect::<Result<_>>()?;
    for p in &plans {
        problem.sem.check_plan(p)?;
    }
    let evals = evaluate_many(problem, &plans, mode)?;
    SetFunction::from_table(evals.into_iter().map(|e| e.objective).collect())
}

//! Exact joint distributions of finite models by enumeration.

use std::sync::Arc;

use super::{ConditionalTable, Domain, ImputationPlan, Mechanism, ParentValues, Sem, Values};
use crate::error::{Error, Result};
use crate::graph::NodeId;

/// Largest product state space [`Sem::exact_joint`] will enumerate.
pub const MAX_JOINT_STATES: u128 = 1_000_000;

/// Dense probability table over node-value tuples. The tuple
/// `(x_0, …, x_{n-1})` sits at the mixed-radix index with node 0 most
/// significant.
#[derive(Debug, Clone, PartialEq)]
pub struct JointTable {
    cards: Vec<usize>,
    probs: Vec<f64>,
}

impl JointTable {
    pub fn cards(&self) -> &[usize] {
        &self.cards
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn index(&self, values: &[usize]) -> usize {
        values.iter().zip(&self.cards).fold(0, |idx, (&x, &k)| idx * k + x)
    }

    pub fn tuple(&self, mut index: usize) -> Vec<usize> {
        let mut out = vec![0; self.cards.len()];
        for (slot, &k) in out.iter_mut().zip(&self.cards).rev() {
            *slot = index % k;
            index /= k;
        }
        out
    }

    pub fn prob(&self, values: &[usize]) -> f64 {
        self.probs[self.index(values)]
    }

    pub fn total(&self) -> f64 {
        self.probs.iter().sum()
    }

    /// Marginal over `nodes`, in the given order.
    pub fn marginal(&self, nodes: &[NodeId]) -> JointTable {
        let cards: Vec<usize> = nodes.iter().map(|&n| self.cards[n]).collect();
        let size = cards.iter().product();
        let mut out = JointTable {
            cards,
            probs: vec![0.0; size],
        };
        for (idx, &p) in self.probs.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            let tuple = self.tuple(idx);
            let sub: Vec<usize> = nodes.iter().map(|&n| tuple[n]).collect();
            let j = out.index(&sub);
            out.probs[j] += p;
        }
        out
    }
}

impl Sem {
    /// Exact joint distribution of a finite model.
    pub fn exact_joint(&self) -> Result<JointTable> {
        self.exact_joint_under(&ImputationPlan::empty())
    }

    /// Exact joint distribution of `do(X; plan)` for a finite model.
    pub fn exact_joint_under(&self, plan: &ImputationPlan) -> Result<JointTable> {
        let cards = self.finite_cards()?;
        let mut probs = vec![0.0; cards.iter().product()];
        let index_of = |values: &[f64]| {
            values
                .iter()
                .zip(&cards)
                .fold(0usize, |idx, (&x, &k)| idx * k + x as usize)
        };
        self.for_each_outcome(plan, |values, p| probs[index_of(values)] += p)?;
        Ok(JointTable { cards, probs })
    }

    /// Exact `E[g(do(X; plan))]` for a finite model.
    pub fn exact_expectation<G>(&self, plan: &ImputationPlan, g: &G) -> Result<f64>
    where
        G: Fn(&Values) -> f64 + ?Sized,
    {
        self.finite_cards()?;
        let mut total = 0.0;
        let mut bad = None;
        let layout = Arc::clone(&self.layout);
        self.for_each_outcome(plan, |data, p| {
            let values = Values {
                data: data.to_vec(),
                layout: Arc::clone(&layout),
            };
            let cost = g(&values);
            if !cost.is_finite() && bad.is_none() {
                bad = Some(cost);
            }
            total += p * cost;
        })?;
        match bad {
            Some(value) => Err(Error::NonFiniteCost { sample: 0, value }),
            None => Ok(total),
        }
    }

    fn finite_cards(&self) -> Result<Vec<usize>> {
        let mut cards = Vec::with_capacity(self.nodes.len());
        let mut states: u128 = 1;
        for (i, model) in self.nodes.iter().enumerate() {
            match (model.domain, &model.mechanism) {
                (Domain::Finite(k), Mechanism::Table(_)) => {
                    cards.push(k);
                    states = states.saturating_mul(k as u128);
                }
                _ => {
                    return Err(Error::domain(
                        i,
                        "exact enumeration needs finite domains with table mechanisms",
                    ))
                }
            }
        }
        if states > MAX_JOINT_STATES {
            return Err(Error::too_large("joint state space", states, MAX_JOINT_STATES));
        }
        Ok(cards)
    }

    /// Calls `visit(values, probability)` once per positive-probability
    /// outcome, enumerating node values in topological order.
    fn for_each_outcome(&self, plan: &ImputationPlan, mut visit: impl FnMut(&[f64], f64)) -> Result<()> {
        self.check_plan(plan)?;
        let fixed = self.fixed_table(plan);
        let mut data = vec![0.0; self.nodes.len()];
        self.enumerate_from(0, 1.0, &fixed, &mut data, &mut visit);
        Ok(())
    }

    fn enumerate_from(
        &self,
        depth: usize,
        mass: f64,
        fixed: &[Option<&[f64]>],
        data: &mut Vec<f64>,
        visit: &mut impl FnMut(&[f64], f64),
    ) {
        let topo = self.dag.topological_order();
        if depth == topo.len() {
            visit(data, mass);
            return;
        }
        let node = topo[depth];
        if let Some(v) = fixed[node] {
            data[node] = v[0];
            self.enumerate_from(depth + 1, mass, fixed, data, visit);
            return;
        }
        let Mechanism::Table(table) = &self.nodes[node].mechanism else {
            unreachable!("checked by finite_cards");
        };
        let row = {
            let parents = ParentValues {
                data,
                offsets: &self.layout.value_offsets,
                parents: self.dag.parents(node),
            };
            ConditionalTable::row_index(table, &parents, &self.parent_cards[node])
        };
        for (x, &p) in table.rows[row].iter().enumerate() {
            if p > 0.0 {
                data[node] = x as f64;
                self.enumerate_from(depth + 1, mass * p, fixed, data, visit);
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::Dag;
    use crate::sem::NodeModel;

    fn coin() -> NodeModel {
        NodeModel::new(
            Domain::Finite(2),
            Mechanism::Table(ConditionalTable::root(vec![0.5, 0.5])),
        )
    }

    #[test]
    fn fair_coin() {
        let sem = Sem::new(Dag::new(1).validate().unwrap(), vec![coin()]).unwrap();
        assert_eq!(sem.exact_joint().unwrap().probs(), &[0.5, 0.5]);
    }

    #[test]
    fn copy_mechanism_is_diagonal() {
        let dag = Dag::with_edges(2, [(0, 1)]).validate().unwrap();
        let copy = NodeModel::new(
            Domain::Finite(2),
            Mechanism::Table(ConditionalTable::new(vec![vec![1.0, 0.0], vec![0.0, 1.0]])),
        );
        let sem = Sem::new(dag, vec![coin(), copy]).unwrap();
        let joint = sem.exact_joint().unwrap();
        assert_eq!(joint.prob(&[0, 0]), 0.5);
        assert_eq!(joint.prob(&[1, 1]), 0.5);
        assert_eq!(joint.prob(&[0, 1]), 0.0);
        assert_eq!(joint.prob(&[1, 0]), 0.0);

        let forced = sem
            .exact_joint_under(&ImputationPlan::scalar(&[0], &[1.0]).unwrap())
            .unwrap();
        assert_eq!(forced.prob(&[1, 1]), 1.0);
        let e = sem
            .exact_expectation(&ImputationPlan::empty(), &|v: &Values| v.scalar(1))
            .unwrap();
        assert_eq!(e, 0.5);
    }

    #[test]
    fn marginal_and_tuple() {
        let dag = Dag::new(2).validate().unwrap();
        let skew = NodeModel::new(
            Domain::Finite(3),
            Mechanism::Table(ConditionalTable::root(vec![0.2, 0.3, 0.5])),
        );
        let sem = Sem::new(dag, vec![coin(), skew]).unwrap();
        let joint = sem.exact_joint().unwrap();
        assert_eq!(joint.tuple(joint.index(&[1, 2])), vec![1, 2]);
        let m = joint.marginal(&[1]);
        assert!((m.prob(&[2]) - 0.5).abs() < 1e-15);
        assert!((joint.total() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn rejects_continuous_and_huge() {
        let sem = Sem::new(
            Dag::new(1).validate().unwrap(),
            vec![NodeModel::scalar(Mechanism::additive(
                crate::sem::NoiseSpec::standard_normal(),
            ))],
        )
        .unwrap();
        assert!(matches!(sem.exact_joint(), Err(Error::Domain { .. })));

        let wide = || {
            NodeModel::new(
                Domain::Finite(100),
                Mechanism::Table(ConditionalTable::root(vec![0.01; 100])),
            )
        };
        let sem = Sem::new(Dag::new(4).validate().unwrap(), (0..4).map(|_| wide()).collect()).unwrap();
        assert!(matches!(sem.exact_joint(), Err(Error::TooLarge { .. })));
    }
}

//! Structural equation models on a DAG.
//!
//! Every node `i` carries a mechanism `x_i = f_i(pa(x_i), u_i)` where `u_i`
//! is a fixed-width vector of independent uniforms. The uniforms of one
//! sample form a [`NoiseRecord`]; holding the record fixed while replacing
//! some mechanisms by constants is the do-operator ([`Sem::impute`]).
//!
//! Noise for sample `k` under seed `s` comes from a ChaCha8 stream keyed by
//! `s` with stream id `k`; node `i` reads the words starting at its noise
//! offset. Draws therefore depend only on `(seed, sample, node)` and never
//! on evaluation order or the number of worker threads.

mod exact;
mod mechanism;

use std::sync::Arc;

use fixedbitset::FixedBitSet;
use rand::distr::Open01;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::{NodeId, ValidatedDag};

pub use exact::JointTable;
pub use mechanism::{ConditionalTable, CustomFn, CustomMechanism, Domain, Mechanism, NoiseSpec, ParentValues};

/// Samples per work unit in Monte-Carlo estimation. Fixed so that the
/// reduction order, and hence every reported bit, is scheduling-independent.
const CHUNK: usize = 2048;

#[derive(Debug, Clone)]
pub struct NodeModel {
    pub domain: Domain,
    pub mechanism: Mechanism,
}

impl NodeModel {
    pub fn new(domain: Domain, mechanism: Mechanism) -> Self {
        NodeModel { domain, mechanism }
    }

    /// Scalar real node with an additive mechanism.
    pub fn scalar(mechanism: Mechanism) -> Self {
        NodeModel {
            domain: Domain::Real(1),
            mechanism,
        }
    }
}

/// Offsets of node values and node noise inside the flat buffers.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Layout {
    value_offsets: Vec<usize>,
    noise_offsets: Vec<usize>,
}

impl Layout {
    pub fn value_width(&self) -> usize {
        *self.value_offsets.last().unwrap()
    }

    pub fn noise_width(&self) -> usize {
        *self.noise_offsets.last().unwrap()
    }

    fn value_range(&self, node: NodeId) -> std::ops::Range<usize> {
        self.value_offsets[node]..self.value_offsets[node + 1]
    }

    fn noise_range(&self, node: NodeId) -> std::ops::Range<usize> {
        self.noise_offsets[node]..self.noise_offsets[node + 1]
    }
}

/// Node values of one realization, flattened.
#[derive(Debug, Clone, PartialEq)]
pub struct Values {
    data: Vec<f64>,
    layout: Arc<Layout>,
}

impl Values {
    pub fn get(&self, node: NodeId) -> &[f64] {
        &self.data[self.layout.value_range(node)]
    }

    /// First coordinate of the node's value.
    pub fn scalar(&self, node: NodeId) -> f64 {
        self.data[self.layout.value_offsets[node]]
    }

    pub fn node_count(&self) -> usize {
        self.layout.value_offsets.len() - 1
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

/// The uniform draws `u_i ∈ (0,1)` of every node for one sample.
#[derive(Debug, Clone, PartialEq)]
pub struct NoiseRecord {
    uniforms: Vec<f64>,
    layout: Arc<Layout>,
}

impl NoiseRecord {
    pub fn get(&self, node: NodeId) -> &[f64] {
        &self.uniforms[self.layout.noise_range(node)]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.uniforms
    }
}

/// One sample path: values, the noise that produced them, and which nodes
/// are held fixed by imputation.
#[derive(Debug, Clone, PartialEq)]
pub struct Realization {
    pub values: Values,
    pub noise: NoiseRecord,
    imputed: Vec<bool>,
}

impl Realization {
    pub fn value(&self, node: NodeId) -> &[f64] {
        self.values.get(node)
    }

    pub fn is_imputed(&self, node: NodeId) -> bool {
        self.imputed[node]
    }

    pub fn imputed_nodes(&self) -> Vec<NodeId> {
        (0..self.imputed.len()).filter(|&i| self.imputed[i]).collect()
    }
}

/// A set of nodes `I` with the constants `x_I` they are forced to.
/// Entries are kept sorted by node.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct ImputationPlan {
    entries: Vec<(NodeId, Vec<f64>)>,
}

impl ImputationPlan {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn new(entries: impl IntoIterator<Item = (NodeId, Vec<f64>)>) -> Result<Self> {
        let mut entries: Vec<(NodeId, Vec<f64>)> = entries.into_iter().collect();
        entries.sort_by_key(|(n, _)| *n);
        if let Some(w) = entries.windows(2).find(|w| w[0].0 == w[1].0) {
            return Err(Error::InvalidArgument(format!("node {} imputed twice", w[0].0)));
        }
        Ok(ImputationPlan { entries })
    }

    /// Plan over scalar nodes.
    pub fn scalar(nodes: &[NodeId], values: &[f64]) -> Result<Self> {
        if nodes.len() != values.len() {
            return Err(Error::InvalidArgument(format!(
                "{} nodes but {} values",
                nodes.len(),
                values.len()
            )));
        }
        Self::new(nodes.iter().zip(values).map(|(&n, &v)| (n, vec![v])))
    }

    pub fn single(node: NodeId, value: Vec<f64>) -> Self {
        ImputationPlan {
            entries: vec![(node, value)],
        }
    }

    pub fn nodes(&self) -> impl Iterator<Item = NodeId> + '_ {
        self.entries.iter().map(|(n, _)| *n)
    }

    pub fn entries(&self) -> &[(NodeId, Vec<f64>)] {
        &self.entries
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn value(&self, node: NodeId) -> Option<&[f64]> {
        self.entries
            .binary_search_by_key(&node, |(n, _)| *n)
            .ok()
            .map(|i| self.entries[i].1.as_slice())
    }

    /// Node set as a bitmask. Only meaningful for graphs of at most 64 nodes.
    pub fn mask(&self) -> u64 {
        self.nodes().fold(0, |m, n| m | (1u64 << n))
    }
}

/// Monte-Carlo estimate of an expectation.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub mean: f64,
    pub std_error: f64,
    pub samples: usize,
}

#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: usize,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1;
        let delta = x - self.mean;
        self.mean += delta / self.n as f64;
        self.m2 += delta * (x - self.mean);
    }

    fn merge(&mut self, other: &Moments) {
        if other.n == 0 {
            return;
        }
        if self.n == 0 {
            *self = *other;
            return;
        }
        let n = self.n + other.n;
        let delta = other.mean - self.mean;
        self.mean += delta * other.n as f64 / n as f64;
        self.m2 += other.m2 + delta * delta * (self.n as f64 * other.n as f64) / n as f64;
        self.n = n;
    }

    fn estimate(&self) -> Estimate {
        let var = if self.n > 1 { self.m2 / (self.n - 1) as f64 } else { 0.0 };
        Estimate {
            mean: self.mean,
            std_error: (var.max(0.0) / self.n as f64).sqrt(),
            samples: self.n,
        }
    }
}

/// A structural equation model: a validated DAG and one mechanism per node.
#[derive(Debug, Clone)]
pub struct Sem {
    dag: ValidatedDag,
    nodes: Vec<NodeModel>,
    layout: Arc<Layout>,
    /// Alphabet sizes of each node's parents, for table lookups.
    parent_cards: Vec<Vec<usize>>,
}

impl Sem {
    pub fn new(dag: ValidatedDag, nodes: Vec<NodeModel>) -> Result<Self> {
        if nodes.len() != dag.node_count() {
            return Err(Error::Dimension(format!(
                "{} mechanisms for {} nodes",
                nodes.len(),
                dag.node_count()
            )));
        }
        let mut value_offsets = vec![0];
        let mut noise_offsets = vec![0];
        for model in &nodes {
            value_offsets.push(value_offsets.last().unwrap() + model.domain.width());
            noise_offsets.push(noise_offsets.last().unwrap() + model.mechanism.noise_width(&model.domain));
        }
        let mut parent_cards = Vec::with_capacity(nodes.len());
        for (i, model) in nodes.iter().enumerate() {
            let parents = dag.parents(i);
            if let Domain::Real(0) = model.domain {
                return Err(Error::domain(i, "real domain needs dimension >= 1"));
            }
            if let Domain::Finite(0) = model.domain {
                return Err(Error::domain(i, "finite domain needs at least one symbol"));
            }
            match &model.mechanism {
                Mechanism::Additive { noise, weights } => {
                    noise.validate(i)?;
                    let Domain::Real(d) = model.domain else {
                        return Err(Error::domain(i, "additive mechanism needs a real domain"));
                    };
                    if let Some(w) = weights {
                        if w.len() != parents.len() {
                            return Err(Error::domain(
                                i,
                                format!("{} weights for {} parents", w.len(), parents.len()),
                            ));
                        }
                        if w.iter().any(|x| !x.is_finite()) {
                            return Err(Error::domain(i, "non-finite parent weight"));
                        }
                    }
                    for &p in parents {
                        if nodes[p].domain.width() != d {
                            return Err(Error::domain(
                                i,
                                format!(
                                    "parent {p} has width {} but node has dimension {d}",
                                    nodes[p].domain.width()
                                ),
                            ));
                        }
                    }
                }
                Mechanism::Table(table) => {
                    let Domain::Finite(k) = model.domain else {
                        return Err(Error::domain(i, "table mechanism needs a finite domain"));
                    };
                    let mut rows = 1usize;
                    for &p in parents {
                        let Domain::Finite(pk) = nodes[p].domain else {
                            return Err(Error::domain(i, format!("table mechanism with non-finite parent {p}")));
                        };
                        rows = rows.saturating_mul(pk);
                    }
                    if table.rows.len() != rows {
                        return Err(Error::domain(
                            i,
                            format!("table has {} rows, parent configurations need {rows}", table.rows.len()),
                        ));
                    }
                    for (r, row) in table.rows.iter().enumerate() {
                        if row.len() != k {
                            return Err(Error::domain(
                                i,
                                format!("row {r} has {} entries, alphabet is {k}", row.len()),
                            ));
                        }
                        if row.iter().any(|p| !p.is_finite() || *p < 0.0) {
                            return Err(Error::domain(
                                i,
                                format!("row {r} has a negative or non-finite probability"),
                            ));
                        }
                        let total: f64 = row.iter().sum();
                        if (total - 1.0).abs() > 1e-9 {
                            return Err(Error::domain(i, format!("row {r} sums to {total}")));
                        }
                    }
                }
                Mechanism::Custom(_) => {}
            }
            parent_cards.push(
                parents
                    .iter()
                    .map(|&p| nodes[p].domain.cardinality().unwrap_or(0))
                    .collect(),
            );
        }
        Ok(Sem {
            dag,
            nodes,
            layout: Arc::new(Layout {
                value_offsets,
                noise_offsets,
            }),
            parent_cards,
        })
    }

    pub fn dag(&self) -> &ValidatedDag {
        &self.dag
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn node(&self, i: NodeId) -> &NodeModel {
        &self.nodes[i]
    }

    pub fn domain(&self, i: NodeId) -> Domain {
        self.nodes[i].domain
    }

    pub fn layout(&self) -> &Layout {
        &self.layout
    }

    /// True when every node has a finite alphabet and a table mechanism.
    pub fn is_finite(&self) -> bool {
        self.nodes
            .iter()
            .all(|m| matches!((m.domain, &m.mechanism), (Domain::Finite(_), Mechanism::Table(_))))
    }

    pub fn check_plan(&self, plan: &ImputationPlan) -> Result<()> {
        for (node, value) in plan.entries() {
            self.dag.check_node(*node)?;
            let domain = self.nodes[*node].domain;
            if !domain.contains(value) {
                return Err(Error::domain(
                    *node,
                    format!("imputed value {value:?} is outside {domain:?}"),
                ));
            }
        }
        Ok(())
    }

    /// The noise record of sample `index` under `seed`.
    pub fn noise_record(&self, seed: u64, index: u64) -> NoiseRecord {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(index);
        let uniforms = (0..self.layout.noise_width())
            .map(|_| rng.sample::<f64, _>(Open01))
            .collect();
        NoiseRecord {
            uniforms,
            layout: Arc::clone(&self.layout),
        }
    }

    fn innovations(&self, noise: &NoiseRecord, out: &mut [f64]) {
        for (i, model) in self.nodes.iter().enumerate() {
            let range = self.layout.noise_range(i);
            model
                .mechanism
                .innovation(&noise.uniforms[range.clone()], &mut out[range]);
        }
    }

    fn eval_node(&self, node: NodeId, data: &mut [f64], innovations: &[f64], scratch: &mut Vec<f64>) -> Result<()> {
        let model = &self.nodes[node];
        let width = model.domain.width();
        scratch.clear();
        scratch.resize(width, 0.0);
        {
            let parents = ParentValues {
                data,
                offsets: &self.layout.value_offsets,
                parents: self.dag.parents(node),
            };
            model.mechanism.apply(
                &parents,
                &self.parent_cards[node],
                &innovations[self.layout.noise_range(node)],
                scratch,
            );
        }
        if !model.domain.contains(scratch) {
            return Err(Error::domain(
                node,
                format!("mechanism produced {scratch:?}, outside {:?}", model.domain),
            ));
        }
        data[self.layout.value_range(node)].copy_from_slice(scratch);
        Ok(())
    }

    /// Evaluates every node in topological order. Nodes with `fixed` entries
    /// take the given constant instead of their mechanism.
    fn propagate(
        &self,
        innovations: &[f64],
        fixed: &[Option<&[f64]>],
        data: &mut [f64],
        scratch: &mut Vec<f64>,
    ) -> Result<()> {
        for &node in self.dag.topological_order() {
            match fixed[node] {
                Some(v) => data[self.layout.value_range(node)].copy_from_slice(v),
                None => self.eval_node(node, data, innovations, scratch)?,
            }
        }
        Ok(())
    }

    fn fixed_table<'a>(&self, plan: &'a ImputationPlan) -> Vec<Option<&'a [f64]>> {
        let mut fixed = vec![None; self.nodes.len()];
        for (node, value) in plan.entries() {
            fixed[*node] = Some(value.as_slice());
        }
        fixed
    }

    /// Evaluates the model on a given noise record with `plan` applied.
    pub fn realize(&self, noise: NoiseRecord, plan: &ImputationPlan) -> Result<Realization> {
        self.check_plan(plan)?;
        if noise.uniforms.len() != self.layout.noise_width() {
            return Err(Error::Dimension(format!(
                "noise record has {} entries, model needs {}",
                noise.uniforms.len(),
                self.layout.noise_width()
            )));
        }
        let mut innovations = vec![0.0; self.layout.noise_width()];
        self.innovations(&noise, &mut innovations);
        let mut data = vec![0.0; self.layout.value_width()];
        let fixed = self.fixed_table(plan);
        self.propagate(&innovations, &fixed, &mut data, &mut Vec::new())?;
        let mut imputed = vec![false; self.nodes.len()];
        for n in plan.nodes() {
            imputed[n] = true;
        }
        Ok(Realization {
            values: Values {
                data,
                layout: Arc::clone(&self.layout),
            },
            noise,
            imputed,
        })
    }

    /// Draws sample 0 of `seed`.
    pub fn sample(&self, seed: u64) -> Result<Realization> {
        self.sample_at(seed, 0)
    }

    pub fn sample_at(&self, seed: u64, index: u64) -> Result<Realization> {
        self.realize(self.noise_record(seed, index), &ImputationPlan::empty())
    }

    /// Recomputes every non-imputed node from the realization's own noise
    /// record, holding imputed nodes at their values.
    pub fn replay(&self, realization: &Realization) -> Result<Realization> {
        let plan = ImputationPlan::new(
            realization
                .imputed_nodes()
                .into_iter()
                .map(|n| (n, realization.value(n).to_vec())),
        )?;
        self.realize(realization.noise.clone(), &plan)
    }

    /// The do-operator: forces the plan's nodes to their constants and
    /// re-evaluates their descendants with the base realization's noise.
    /// Every other node keeps its base value bit for bit. Nodes imputed in
    /// `base` stay imputed unless the plan overrides their value.
    pub fn impute(&self, base: &Realization, plan: &ImputationPlan) -> Result<Realization> {
        self.check_plan(plan)?;
        let mut out = base.clone();
        for (node, value) in plan.entries() {
            out.values.data[self.layout.value_range(*node)].copy_from_slice(value);
            out.imputed[*node] = true;
        }
        let affected: FixedBitSet = self.dag.descendants_of_set(plan.nodes());
        if affected.is_clear() {
            return Ok(out);
        }
        let mut innovations = vec![0.0; self.layout.noise_width()];
        let mut scratch = Vec::new();
        for &node in self.dag.topological_order() {
            if !affected.contains(node) || out.imputed[node] {
                continue;
            }
            let range = self.layout.noise_range(node);
            self.nodes[node]
                .mechanism
                .innovation(&base.noise.uniforms[range.clone()], &mut innovations[range]);
            self.eval_node(node, &mut out.values.data, &innovations, &mut scratch)?;
        }
        Ok(out)
    }

    /// Monte-Carlo estimate of `E[g(do(X; plan))]` over `n_samples` noise
    /// records of `seed`.
    pub fn expectation<G>(&self, plan: &ImputationPlan, g: &G, n_samples: usize, seed: u64) -> Result<Estimate>
    where
        G: Fn(&Values) -> f64 + Sync + ?Sized,
    {
        Ok(self
            .expectation_batch(std::slice::from_ref(plan), g, n_samples, seed)?
            .remove(0))
    }

    /// Estimates `E[g(do(X; plan))]` for several plans on common random
    /// numbers: every plan sees the same noise records. Results are
    /// identical to calling [`Sem::expectation`] per plan.
    pub fn expectation_batch<G>(
        &self,
        plans: &[ImputationPlan],
        g: &G,
        n_samples: usize,
        seed: u64,
    ) -> Result<Vec<Estimate>>
    where
        G: Fn(&Values) -> f64 + Sync + ?Sized,
    {
        if n_samples < 2 {
            return Err(Error::InvalidArgument(format!(
                "need at least 2 samples, got {n_samples}"
            )));
        }
        for plan in plans {
            self.check_plan(plan)?;
        }
        let fixed: Vec<Vec<Option<&[f64]>>> = plans.iter().map(|p| self.fixed_table(p)).collect();
        let chunks = n_samples.div_ceil(CHUNK);
        let partials: Vec<Result<Vec<Moments>>> = (0..chunks)
            .into_par_iter()
            .map(|c| {
                let mut moments = vec![Moments::default(); plans.len()];
                let mut innovations = vec![0.0; self.layout.noise_width()];
                let mut values = Values {
                    data: vec![0.0; self.layout.value_width()],
                    layout: Arc::clone(&self.layout),
                };
                let mut scratch = Vec::new();
                for k in c * CHUNK..((c + 1) * CHUNK).min(n_samples) {
                    let noise = self.noise_record(seed, k as u64);
                    self.innovations(&noise, &mut innovations);
                    for (acc, fixed) in moments.iter_mut().zip(&fixed) {
                        self.propagate(&innovations, fixed, &mut values.data, &mut scratch)?;
                        let cost = g(&values);
                        if !cost.is_finite() {
                            return Err(Error::NonFiniteCost { sample: k, value: cost });
                        }
                        acc.push(cost);
                    }
                }
                Ok(moments)
            })
            .collect();
        let mut total = vec![Moments::default(); plans.len()];
        for partial in partials {
            for (acc, m) in total.iter_mut().zip(&partial?) {
                acc.merge(m);
            }
        }
        Ok(total.iter().map(Moments::estimate).collect())
    }
}

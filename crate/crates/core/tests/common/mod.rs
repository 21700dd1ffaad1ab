//! Random instance generators shared by the integration tests.

#![allow(dead_code)]

use causal_imputation::additive::AdditiveSemSpec;
use causal_imputation::graph::{Dag, NodeId, ValidatedDag};
use causal_imputation::linear_gaussian::TrellisProblem;
use causal_imputation::sem::{ConditionalTable, Domain, ImputationPlan, Mechanism, NodeModel, NoiseSpec, Sem};
use causal_imputation::submodular::{SetFunction, Subset};
use nalgebra::DMatrix;
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Edges go forward in a random permutation, each with probability `p`.
pub fn random_dag(rng: &mut impl Rng, n: usize, p: f64) -> ValidatedDag {
    let mut order: Vec<NodeId> = (0..n).collect();
    order.shuffle(rng);
    let mut dag = Dag::new(n);
    for a in 0..n {
        for b in a + 1..n {
            if rng.random_bool(p) {
                dag.add_edge(order[a], order[b]);
            }
        }
    }
    dag.validate().unwrap()
}

fn random_distribution(rng: &mut impl Rng, k: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..k).map(|_| rng.random_range(0.05..1.0)).collect();
    let total: f64 = raw.iter().sum();
    raw.iter().map(|x| x / total).collect()
}

fn random_noise(rng: &mut impl Rng) -> NoiseSpec {
    if rng.random_bool(0.5) {
        NoiseSpec::Gaussian {
            mean: rng.random_range(-1.0..1.0),
            std_dev: rng.random_range(0.1..2.0),
        }
    } else {
        let low = rng.random_range(-2.0..0.0);
        NoiseSpec::Uniform {
            low,
            high: low + rng.random_range(0.1..3.0),
        }
    }
}

/// A model over `dag` mixing finite table nodes (alphabet 2..=`max_card`)
/// and real additive nodes. With `finite_only` every node is a table.
pub fn random_sem_on(rng: &mut impl Rng, dag: ValidatedDag, finite_only: bool, max_card: usize) -> Sem {
    let n = dag.node_count();
    let mut domains: Vec<Option<Domain>> = vec![None; n];
    let mut models: Vec<Option<NodeModel>> = vec![None; n];
    for &i in dag.topological_order() {
        let parents = dag.parents(i);
        let finite_parents = parents.iter().all(|&p| matches!(domains[p], Some(Domain::Finite(_))));
        let model = if finite_only || (finite_parents && rng.random_bool(0.5)) {
            let k = rng.random_range(2..=max_card);
            let rows: usize = parents
                .iter()
                .map(|&p| domains[p].unwrap().cardinality().unwrap())
                .product();
            let table = ConditionalTable::new((0..rows).map(|_| random_distribution(rng, k)).collect());
            NodeModel::new(Domain::Finite(k), Mechanism::Table(table))
        } else if rng.random_bool(0.5) {
            NodeModel::scalar(Mechanism::additive(random_noise(rng)))
        } else {
            let w = parents.iter().map(|_| rng.random_range(-1.5..1.5)).collect();
            NodeModel::scalar(Mechanism::weighted(random_noise(rng), w))
        };
        domains[i] = Some(model.domain);
        models[i] = Some(model);
    }
    Sem::new(dag, models.into_iter().map(Option::unwrap).collect()).unwrap()
}

pub fn random_sem(rng: &mut impl Rng, max_nodes: usize, finite_only: bool, max_card: usize) -> Sem {
    let n = rng.random_range(1..=max_nodes);
    let p = rng.random_range(0.2..0.7);
    let dag = random_dag(rng, n, p);
    random_sem_on(rng, dag, finite_only, max_card)
}

/// A value in the node's domain.
pub fn random_value(rng: &mut impl Rng, sem: &Sem, node: NodeId) -> Vec<f64> {
    match sem.domain(node) {
        Domain::Finite(k) => vec![rng.random_range(0..k) as f64],
        Domain::Real(d) => (0..d).map(|_| rng.random_range(-3.0..3.0)).collect(),
    }
}

pub fn random_plan(rng: &mut impl Rng, sem: &Sem, nodes: &[NodeId]) -> ImputationPlan {
    ImputationPlan::new(nodes.iter().map(|&i| (i, random_value(rng, sem, i)))).unwrap()
}

pub fn random_subset(rng: &mut impl Rng, n: usize) -> Subset {
    Subset::from_members((0..n).filter(|_| rng.random_bool(0.5)))
}

pub fn bits_equal(a: &[f64], b: &[f64]) -> bool {
    a.len() == b.len() && a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits())
}

/// Weighted coverage: element `i` covers a random subset of a universe of
/// weighted items. Monotone, submodular, zero at `∅`.
pub fn coverage(rng: &mut impl Rng, m: usize) -> SetFunction {
    let universe = 2 * m + 2;
    let weights: Vec<f64> = (0..universe).map(|_| rng.random_range(0.1..2.0)).collect();
    let covers: Vec<Vec<usize>> = (0..m)
        .map(|_| (0..universe).filter(|_| rng.random_bool(0.3)).collect())
        .collect();
    SetFunction::new(m, move |s| {
        let mut hit = vec![false; universe];
        for i in s.members() {
            for &u in &covers[i] {
                hit[u] = true;
            }
        }
        hit.iter().zip(&weights).filter(|(h, _)| **h).map(|(_, w)| w).sum()
    })
    .unwrap()
}

/// Facility location `Σ_j max_{i∈S} M_ij`. Monotone, submodular, zero at `∅`.
pub fn facility_location(rng: &mut impl Rng, m: usize) -> SetFunction {
    let customers = m + 3;
    let score: Vec<Vec<f64>> = (0..m)
        .map(|_| (0..customers).map(|_| rng.random_range(0.0..1.0)).collect())
        .collect();
    SetFunction::new(m, move |s| {
        (0..customers)
            .map(|j| s.members().map(|i| score[i][j]).fold(0.0, f64::max))
            .sum()
    })
    .unwrap()
}

/// `a·sqrt(Σ_{i∈S} w_i)` with `w > 0`. Monotone, submodular, zero at `∅`.
pub fn concave_of_modular(rng: &mut impl Rng, m: usize) -> SetFunction {
    let w: Vec<f64> = (0..m).map(|_| rng.random_range(0.1..3.0)).collect();
    let a = rng.random_range(0.5..2.0);
    SetFunction::new(m, move |s| a * s.members().map(|i| w[i]).sum::<f64>().sqrt()).unwrap()
}

/// A monotone submodular function from one of three families.
pub fn monotone_submodular(rng: &mut impl Rng, m: usize) -> SetFunction {
    match rng.random_range(0..3) {
        0 => coverage(rng, m),
        1 => facility_location(rng, m),
        _ => concave_of_modular(rng, m),
    }
}

/// Directed cut plus signed unary terms plus a concave term: submodular
/// and usually neither monotone nor minimized at `∅` or `V`.
pub fn general_submodular(rng: &mut impl Rng, m: usize) -> SetFunction {
    let mut edges = Vec::new();
    for a in 0..m {
        for b in 0..m {
            if a != b && rng.random_bool(0.3) {
                edges.push((a, b, rng.random_range(0.1..2.0)));
            }
        }
    }
    let unary: Vec<f64> = (0..m).map(|_| rng.random_range(-2.5..1.5)).collect();
    let concave = concave_of_modular(rng, m);
    SetFunction::new(m, move |s| {
        let cut: f64 = edges
            .iter()
            .filter(|(a, b, _)| s.contains(*a) && !s.contains(*b))
            .map(|e| e.2)
            .sum();
        cut + s.members().map(|i| unary[i]).sum::<f64>() + concave.eval(s)
    })
    .unwrap()
}

/// A tree directed toward node `target`: every other node has exactly one
/// child, so every node reaches the target along one path.
pub fn random_in_tree(rng: &mut impl Rng, n: usize) -> (ValidatedDag, NodeId) {
    let mut order: Vec<NodeId> = (0..n).collect();
    order.shuffle(rng);
    let target = order[n - 1];
    let mut dag = Dag::new(n);
    for k in 0..n - 1 {
        let child = order[rng.random_range(k + 1..n)];
        dag.add_edge(order[k], child);
    }
    (dag.validate().unwrap(), target)
}

/// An additive instance on an in-tree with a monotone submodular cost.
pub fn random_additive(rng: &mut impl Rng, n: usize) -> AdditiveSemSpec {
    let (dag, target) = random_in_tree(rng, n);
    let variances = (0..n).map(|_| rng.random_range(0.1..3.0)).collect();
    let modular: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..2.0)).collect();
    let concave = concave_of_modular(rng, n);
    let cost = SetFunction::new(n, move |s| {
        s.members().map(|i| modular[i]).sum::<f64>() + concave.eval(s)
    })
    .unwrap();
    AdditiveSemSpec::new(dag, variances, target, cost).unwrap()
}

/// `n ≤ max_n`, `T ≤ max_t`, entries of moderate size.
pub fn random_trellis(rng: &mut impl Rng, max_n: usize, max_t: usize, zero_target: bool) -> TrellisProblem {
    let n = rng.random_range(1..=max_n);
    let t = rng.random_range(1..=max_t);
    let big_n = n * (t + 1);
    let a = DMatrix::from_fn(n, n, |_, _| rng.random_range(-1.2..1.2));
    let sigma2 = rng.random_range(0.2..2.0);
    let q = (0..big_n).map(|_| rng.random_range(0.0..1.0)).collect();
    let delta = (0..big_n).map(|_| rng.random_range(0.0..2.0)).collect();
    let ybar = (0..big_n)
        .map(|_| if zero_target { 0.0 } else { rng.random_range(-2.0..2.0) })
        .collect();
    TrellisProblem::new(a, sigma2, t, q, delta, ybar).unwrap()
}

//! The Lovász extension and minimization through its convex relaxation.

use serde::Serialize;

use super::{SetFunction, Subset};
use crate::error::{Error, Result};

fn check_point(f: &SetFunction, z: &[f64]) -> Result<()> {
    if z.len() != f.ground_size() {
        return Err(Error::Dimension(format!(
            "point has {} coordinates, ground set has {}",
            z.len(),
            f.ground_size()
        )));
    }
    if let Some(i) = z.iter().position(|v| !(0.0..=1.0).contains(v)) {
        return Err(Error::domain(i, format!("coordinate {} is outside [0, 1]", z[i])));
    }
    Ok(())
}

fn level_set(z: &[f64], threshold: f64) -> Subset {
    Subset::from_members((0..z.len()).filter(|&i| z[i] > threshold))
}

/// Evaluates `f(z) = E_λ[F({i : z_i > λ})]` for `λ ~ U[0,1]` exactly.
///
/// The level set is constant between consecutive distinct coordinates of
/// `z`, so with thresholds `0 = t_0 < t_1 < … < t_k = 1` drawn from those
/// coordinates, `f(z) = Σ_j (t_{j+1} − t_j) · F({i : z_i > t_j})`.
pub fn lovasz_extension(f: &SetFunction, z: &[f64]) -> Result<f64> {
    check_point(f, z)?;
    let mut thresholds: Vec<f64> = z.iter().copied().chain([0.0, 1.0]).collect();
    thresholds.sort_by(f64::total_cmp);
    thresholds.dedup();
    Ok(thresholds
        .windows(2)
        .map(|w| (w[1] - w[0]) * f.eval(level_set(z, w[0])))
        .sum())
}

/// Greedy subgradient of the Lovász extension at `z`.
///
/// Sorting coordinates in decreasing order (ties by index) gives a chain
/// `∅ = S_0 ⊂ S_1 ⊂ … ⊂ S_m`; the subgradient puts `F(S_k) − F(S_{k−1})`
/// on the `k`-th sorted coordinate. Returns the chain alongside.
pub fn lovasz_subgradient(f: &SetFunction, z: &[f64]) -> Result<(Vec<f64>, Vec<Subset>)> {
    check_point(f, z)?;
    Ok(subgradient_unchecked(f, z))
}

fn subgradient_unchecked(f: &SetFunction, z: &[f64]) -> (Vec<f64>, Vec<Subset>) {
    let m = z.len();
    let mut order: Vec<usize> = (0..m).collect();
    order.sort_by(|&a, &b| z[b].total_cmp(&z[a]).then(a.cmp(&b)));
    let mut grad = vec![0.0; m];
    let mut chain = Vec::with_capacity(m + 1);
    let mut set = Subset::EMPTY;
    let mut prev = f.eval(set);
    chain.push(set);
    for &i in &order {
        set = set.with(i);
        let cur = f.eval(set);
        grad[i] = cur - prev;
        prev = cur;
        chain.push(set);
    }
    (grad, chain)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SubgradientOptions {
    pub max_iterations: usize,
    pub start: f64,
}

impl Default for SubgradientOptions {
    fn default() -> Self {
        SubgradientOptions {
            max_iterations: 5000,
            start: 0.5,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Minimum {
    pub set: Subset,
    pub value: f64,
    /// Final iterate of the relaxation.
    pub relaxed_point: Vec<f64>,
    pub iterations: usize,
}

#[derive(Clone, Copy)]
struct Best {
    set: Subset,
    value: f64,
}

impl Best {
    fn offer(&mut self, set: Subset, value: f64) {
        if value < self.value || (value == self.value && set.tie_key() < self.set.tie_key()) {
            *self = Best { set, value };
        }
    }
}

/// Minimizes a set function through projected subgradient descent on its
/// Lovász extension over `[0,1]^m`, then rounds.
///
/// Steps are `z ← Π(z − g / (a·√t))` where `a` is the spread of `F` over
/// `∅`, `V` and the singletons, which makes the iteration invariant to
/// rescaling `F`. Rounding takes the best of every level set of the final
/// iterate, `∅`, `V`, and every chain set visited by the subgradient
/// oracle. Ties go to the smaller set, then the smaller bitmask.
///
/// The result is a global minimizer when `F` is submodular; otherwise it is
/// only the best set seen.
pub fn minimize_single_value(f: &SetFunction, options: SubgradientOptions) -> Minimum {
    let m = f.ground_size();
    let full = f.full();
    let mut best = Best {
        set: Subset::EMPTY,
        value: f.eval(Subset::EMPTY),
    };
    best.offer(full, f.eval(full));
    if m == 0 {
        return Minimum {
            set: best.set,
            value: best.value,
            relaxed_point: Vec::new(),
            iterations: 0,
        };
    }

    let probes = [Subset::EMPTY, full]
        .into_iter()
        .chain((0..m).map(Subset::singleton))
        .map(|s| f.eval(s));
    let (lo, hi) = probes.fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), v| (lo.min(v), hi.max(v)));
    let scale = if hi - lo > 0.0 && (hi - lo).is_finite() {
        hi - lo
    } else {
        1.0
    };

    let mut z = vec![options.start.clamp(0.0, 1.0); m];
    let mut iterations = 0;
    for t in 1..=options.max_iterations {
        iterations = t;
        let (grad, chain) = subgradient_unchecked(f, &z);
        for s in chain {
            best.offer(s, f.eval(s));
        }
        if grad.iter().all(|&g| g == 0.0) {
            break;
        }
        let step = 1.0 / (scale * (t as f64).sqrt());
        for (zi, gi) in z.iter_mut().zip(&grad) {
            *zi = (*zi - step * gi).clamp(0.0, 1.0);
        }
    }

    let mut thresholds = z.clone();
    thresholds.push(0.0);
    for t in thresholds {
        let s = level_set(&z, t);
        best.offer(s, f.eval(s));
    }
    Minimum {
        set: best.set,
        value: best.value,
        relaxed_point: z,
        iterations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::submodular::{brute_force_extremum, ConstraintOracle, Direction};

    fn example() -> SetFunction {
        SetFunction::from_table(vec![0.0, 1.0, 2.0, 2.5]).unwrap()
    }

    #[test]
    fn agrees_on_vertices() {
        let f = example();
        for b in 0..4u32 {
            let z: Vec<f64> = (0..2).map(|i| (b >> i & 1) as f64).collect();
            assert_eq!(lovasz_extension(&f, &z).unwrap(), f.eval(Subset(b)));
        }
    }

    #[test]
    fn piecewise_example() {
        // Hand integration over λ: 0.5·F({1,2}) + 0.3·F({2}) + 0.2·F(∅).
        let v = lovasz_extension(&example(), &[0.5, 0.8]).unwrap();
        assert!((v - 1.85).abs() < 1e-12);
    }

    #[test]
    fn constant_function() {
        let f = SetFunction::constant(3, 4.25).unwrap();
        assert_eq!(lovasz_extension(&f, &[0.1, 0.7, 0.3]).unwrap(), 4.25);
    }

    #[test]
    fn rejects_out_of_box() {
        assert!(matches!(
            lovasz_extension(&example(), &[0.5, 1.2]),
            Err(Error::Domain { node: 1, .. })
        ));
        assert!(lovasz_extension(&example(), &[0.5]).is_err());
    }

    #[test]
    fn subgradient_matches_directional_derivative() {
        let f = example();
        let z = [0.3, 0.6];
        let (g, chain) = lovasz_subgradient(&f, &z).unwrap();
        assert_eq!(chain, vec![Subset(0), Subset(2), Subset(3)]);
        // f is linear near z with slope g, since the ordering is strict.
        let h = 1e-3;
        let f0 = lovasz_extension(&f, &z).unwrap();
        let f1 = lovasz_extension(&f, &[z[0] + h, z[1]]).unwrap();
        assert!(((f1 - f0) / h - g[0]).abs() < 1e-9);
    }

    #[test]
    fn modular_minimum_picks_negative_weights() {
        let f = SetFunction::modular(vec![1.0, -2.0, 3.0]).unwrap();
        let min = minimize_single_value(&f, SubgradientOptions::default());
        assert_eq!(min.set, Subset::singleton(1));
        assert_eq!(min.value, -2.0);
    }

    #[test]
    fn small_example_minimum_is_empty() {
        let min = minimize_single_value(&example(), SubgradientOptions::default());
        assert_eq!((min.set, min.value), (Subset::EMPTY, 0.0));
    }

    #[test]
    fn cut_function_matches_brute_force() {
        // Directed cut plus modular terms: submodular.
        let edges = [(0, 1, 2.0), (1, 2, 1.5), (2, 0, 0.5), (2, 3, 3.0), (3, 1, 1.0)];
        let unary = [-1.0, 0.5, -2.5, 1.0];
        let f = SetFunction::new(4, move |s| {
            let cut: f64 = edges
                .iter()
                .filter(|(a, b, _)| s.contains(*a) && !s.contains(*b))
                .map(|e| e.2)
                .sum();
            cut + s.members().map(|i| unary[i]).sum::<f64>()
        })
        .unwrap();
        let min = minimize_single_value(&f, SubgradientOptions::default());
        let (set, value) = brute_force_extremum(&f, &ConstraintOracle::Unconstrained, Direction::Minimize).unwrap();
        assert_eq!((min.set, min.value), (set, value));
    }
}

//! Imputation on the time-unrolled linear system `X_{t+1} = A X_t + ε_t`,
//! `ε_t ~ N(0, σ²I)`, with cost `Σ_{i∈S} δ_i + q_i x_i²` and tracking
//! objective `E‖Y − ȳ‖²`.
//!
//! Nodes are indexed time-major: state `k` at time `t` is node `t·n + k`,
//! for `t = 0..=T`, so there are `N = n(T+1)` nodes. Every node that is not
//! imputed carries its own innovation, including the roots `X_0 = ε_0`.
//!
//! For an imputation set `S` with values `x̄` (zero off `S`):
//!
//! ```text
//! Ã   = I_S · blocksubdiag(A),   I_S = I − diag(S)
//! P   = (I − Ã)^{-1},            D = PᵀP
//! E Y = P diag(S) x̄,             Cov Y = σ² P I_S Pᵀ
//! ```

use std::time::Instant;

use nalgebra::{DMatrix, DVector};
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::graph::Dag;
use crate::oci::{OciProblem, SeparableCost, SolveReport, SubsetRecord};
use crate::sem::{ImputationPlan, Mechanism, NodeModel, NoiseSpec, Sem, Values};
use crate::submodular::{Subset, MAX_GROUND};

/// Largest trellis [`TrellisProblem::enumerate_solve`] accepts.
pub const MAX_ENUMERATE_NODES: usize = 20;

/// Largest trellis whose full objective table goes into the report.
pub const MAX_REPORT_TABLE_NODES: usize = 12;

#[derive(Debug, Clone, PartialEq)]
pub struct TrellisProblem {
    a: DMatrix<f64>,
    sigma2: f64,
    horizon: usize,
    q: DVector<f64>,
    delta: DVector<f64>,
    ybar: DVector<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct TrellisMatrices {
    pub a_tilde: DMatrix<f64>,
    pub p: DMatrix<f64>,
    pub d: DMatrix<f64>,
    /// Diagonal of `I_S`: 1 for free nodes, 0 for imputed ones.
    pub free: DVector<f64>,
}

impl TrellisProblem {
    pub fn new(
        a: DMatrix<f64>,
        sigma2: f64,
        horizon: usize,
        q: Vec<f64>,
        delta: Vec<f64>,
        ybar: Vec<f64>,
    ) -> Result<Self> {
        let n = a.nrows();
        if n == 0 || a.ncols() != n {
            return Err(Error::validation(
                "a",
                format!("expected a non-empty square matrix, got {}x{}", n, a.ncols()),
            ));
        }
        if a.iter().any(|x| !x.is_finite()) {
            return Err(Error::validation("a", "entries must be finite"));
        }
        if !(sigma2.is_finite() && sigma2 > 0.0) {
            return Err(Error::validation(
                "sigma2",
                format!("{sigma2} is not a positive variance"),
            ));
        }
        if horizon == 0 {
            return Err(Error::validation("horizon", "must be at least 1"));
        }
        let nodes = n * (horizon + 1);
        if nodes > MAX_GROUND {
            return Err(Error::too_large(
                "trellis node count",
                nodes as u128,
                MAX_GROUND as u128,
            ));
        }
        for (name, v, nonneg) in [("q", &q, true), ("delta", &delta, true), ("ybar", &ybar, false)] {
            if v.len() != nodes {
                return Err(Error::validation(
                    name,
                    format!("{} entries, trellis has {nodes} nodes", v.len()),
                ));
            }
            if let Some(i) = v.iter().position(|x| !x.is_finite() || (nonneg && *x < 0.0)) {
                return Err(Error::validation(
                    format!("{name}[{i}]"),
                    format!(
                        "{} must be finite{}",
                        v[i],
                        if nonneg { " and non-negative" } else { "" }
                    ),
                ));
            }
        }
        Ok(TrellisProblem {
            a,
            sigma2,
            horizon,
            q: DVector::from_vec(q),
            delta: DVector::from_vec(delta),
            ybar: DVector::from_vec(ybar),
        })
    }

    pub fn state_dim(&self) -> usize {
        self.a.nrows()
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    pub fn node_count(&self) -> usize {
        self.state_dim() * (self.horizon + 1)
    }

    pub fn index(&self, state: usize, time: usize) -> usize {
        time * self.state_dim() + state
    }

    pub fn a(&self) -> &DMatrix<f64> {
        &self.a
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    pub fn q(&self) -> &DVector<f64> {
        &self.q
    }

    pub fn delta(&self) -> &DVector<f64> {
        &self.delta
    }

    pub fn ybar(&self) -> &DVector<f64> {
        &self.ybar
    }

    /// Same problem with a different `δ`.
    pub fn with_delta(&self, delta: Vec<f64>) -> Result<Self> {
        TrellisProblem::new(
            self.a.clone(),
            self.sigma2,
            self.horizon,
            self.q.as_slice().to_vec(),
            delta,
            self.ybar.as_slice().to_vec(),
        )
    }

    fn check_set(&self, s: Subset) -> Result<()> {
        if !s.is_subset_of(Subset::full(self.node_count())) {
            return Err(Error::Dimension(format!(
                "subset {s} exceeds {} nodes",
                self.node_count()
            )));
        }
        Ok(())
    }

    fn check_xbar(&self, s: Subset, xbar: &DVector<f64>) -> Result<()> {
        if xbar.len() != self.node_count() {
            return Err(Error::Dimension(format!(
                "x̄ has {} entries, trellis has {} nodes",
                xbar.len(),
                self.node_count()
            )));
        }
        if let Some(i) = (0..xbar.len()).find(|&i| !s.contains(i) && xbar[i] != 0.0) {
            return Err(Error::InvalidArgument(format!(
                "x̄[{i}] is non-zero outside the imputation set"
            )));
        }
        Ok(())
    }

    pub fn build_matrices(&self, s: Subset) -> Result<TrellisMatrices> {
        self.check_set(s)?;
        let n = self.state_dim();
        let big_n = self.node_count();
        let free = DVector::from_fn(big_n, |i, _| if s.contains(i) { 0.0 } else { 1.0 });
        let mut a_tilde = DMatrix::zeros(big_n, big_n);
        for t in 1..=self.horizon {
            for k in 0..n {
                let row = self.index(k, t);
                if s.contains(row) {
                    continue;
                }
                for j in 0..n {
                    a_tilde[(row, self.index(j, t - 1))] = self.a[(k, j)];
                }
            }
        }
        // (I − Ã) P = I with Ã strictly block-lower-triangular, so row r of
        // P is e_r + Σ_c Ã[r,c]·P[c,:] over earlier rows c.
        let mut p = DMatrix::identity(big_n, big_n);
        for t in 1..=self.horizon {
            for k in 0..n {
                let row = self.index(k, t);
                for j in 0..n {
                    let col = self.index(j, t - 1);
                    let w = a_tilde[(row, col)];
                    if w != 0.0 {
                        for c in 0..=col {
                            let v = p[(col, c)];
                            p[(row, c)] += w * v;
                        }
                    }
                }
            }
        }
        let d = p.transpose() * &p;
        Ok(TrellisMatrices { a_tilde, p, d, free })
    }

    /// Mean and covariance of `Y = do(X; S, x̄_S)`.
    pub fn moments(&self, s: Subset, xbar: &DVector<f64>) -> Result<(DVector<f64>, DMatrix<f64>)> {
        self.check_xbar(s, xbar)?;
        let m = self.build_matrices(s)?;
        Ok(self.moments_with(&m, xbar))
    }

    fn moments_with(&self, m: &TrellisMatrices, xbar: &DVector<f64>) -> (DVector<f64>, DMatrix<f64>) {
        let mean = &m.p * xbar;
        let scaled = DMatrix::from_fn(m.p.nrows(), m.p.ncols(), |r, c| m.p[(r, c)] * m.free[c]);
        let cov = (scaled * m.p.transpose()) * self.sigma2;
        (mean, cov)
    }

    /// `Σ_{i∈S} δ_i + q_i x̄_i²`.
    pub fn imputation_cost(&self, s: Subset, xbar: &DVector<f64>) -> f64 {
        s.members().map(|i| self.delta[i] + self.q[i] * xbar[i] * xbar[i]).sum()
    }

    /// `c_S(x̄) + E‖Y − ȳ‖²`, from the moments of `Y`.
    pub fn analytic_objective(&self, s: Subset, xbar: &DVector<f64>) -> Result<f64> {
        self.check_xbar(s, xbar)?;
        let m = self.build_matrices(s)?;
        Ok(self.objective_with(&m, s, xbar))
    }

    fn objective_with(&self, m: &TrellisMatrices, s: Subset, xbar: &DVector<f64>) -> f64 {
        let mean = &m.p * xbar;
        let tracking = (mean - &self.ybar).norm_squared();
        // trace(σ² P I_S Pᵀ) = σ² Σ_{j free} ‖P[:, j]‖².
        let spread: f64 = (0..m.p.ncols())
            .filter(|&j| m.free[j] != 0.0)
            .map(|j| m.p.column(j).norm_squared())
            .sum();
        self.imputation_cost(s, xbar) + tracking + self.sigma2 * spread
    }

    /// `x̄ᵀ(Q + D)x̄ + σ² tr(D I_S) + δᵀS − 2ȳᵀx̄`.
    ///
    /// Agrees with [`analytic_objective`](Self::analytic_objective) when
    /// `ȳ = 0`. For other targets the two differ by more than the constant
    /// `ȳᵀȳ` unless `P diag(S) = diag(S)`, since the tracking cross term of
    /// the simulated process is `−2ȳᵀP diag(S) x̄`.
    pub fn quadratic_form_objective(&self, s: Subset, xbar: &DVector<f64>) -> Result<f64> {
        self.check_xbar(s, xbar)?;
        let m = self.build_matrices(s)?;
        let qd = DMatrix::from_diagonal(&self.q) + &m.d;
        let quad = xbar.dot(&(qd * xbar));
        let trace: f64 = (0..m.d.nrows()).map(|i| m.d[(i, i)] * m.free[i]).sum();
        let delta: f64 = s.members().map(|i| self.delta[i]).sum();
        Ok(quad + self.sigma2 * trace + delta - 2.0 * self.ybar.dot(xbar))
    }

    /// Optimal imputed values for a fixed set `S` and the resulting
    /// objective. Solves `(Q + D)_S x̄_S = (Pᵀȳ)_S` by Cholesky; `Q + D` is
    /// positive definite because `P` is invertible and `Q ⪰ 0`.
    pub fn inner_minimize(&self, s: Subset) -> Result<(DVector<f64>, f64)> {
        let m = self.build_matrices(s)?;
        let xbar = self.minimizer_with(&m, s)?;
        let value = self.objective_with(&m, s, &xbar);
        Ok((xbar, value))
    }

    fn minimizer_with(&self, m: &TrellisMatrices, s: Subset) -> Result<DVector<f64>> {
        let big_n = self.node_count();
        let mut xbar = DVector::zeros(big_n);
        if s.is_empty() {
            return Ok(xbar);
        }
        let idx: Vec<usize> = s.members().collect();
        let k = idx.len();
        let system = DMatrix::from_fn(k, k, |a, b| {
            let (i, j) = (idx[a], idx[b]);
            m.d[(i, j)] + if i == j { self.q[i] } else { 0.0 }
        });
        let pt_y = m.p.transpose() * &self.ybar;
        let rhs = DVector::from_fn(k, |a, _| pt_y[idx[a]]);
        let chol = system
            .cholesky()
            .ok_or_else(|| Error::Singular(format!("(Q + D) restricted to {s}")))?;
        let sol = chol.solve(&rhs);
        for (a, &i) in idx.iter().enumerate() {
            xbar[i] = sol[a];
        }
        Ok(xbar)
    }

    /// `F(S)` for every imputation set, minimized. Ties go to the smaller
    /// set, then the smaller bitmask.
    pub fn enumerate_solve(&self) -> Result<SolveReport> {
        let started = Instant::now();
        let big_n = self.node_count();
        if big_n > MAX_ENUMERATE_NODES {
            return Err(Error::too_large(
                "trellis node count for enumeration",
                big_n as u128,
                MAX_ENUMERATE_NODES as u128,
            ));
        }
        let values: Vec<f64> = (0..1u32 << big_n)
            .into_par_iter()
            .map(|b| self.inner_minimize(Subset(b)).map(|(_, v)| v))
            .collect::<Result<_>>()?;
        let mut best = Subset::EMPTY;
        for (b, &v) in values.iter().enumerate() {
            let s = Subset(b as u32);
            let incumbent = values[best.bits() as usize];
            if v < incumbent || (v == incumbent && s.tie_key() < best.tie_key()) {
                best = s;
            }
        }
        let table = if big_n <= MAX_REPORT_TABLE_NODES {
            crate::submodular::all_subsets_by_size(big_n)
                .into_iter()
                .map(|s| {
                    let (xbar, objective) = self.inner_minimize(s)?;
                    Ok(SubsetRecord {
                        nodes: s.members().collect(),
                        values: s.members().map(|i| vec![xbar[i]]).collect(),
                        objective,
                        std_error: None,
                    })
                })
                .collect::<Result<Vec<_>>>()?
        } else {
            Vec::new()
        };
        let (xbar, objective) = self.inner_minimize(best)?;
        Ok(SolveReport {
            method: "enumerate".into(),
            nodes: best.members().collect(),
            values: best.members().map(|i| vec![xbar[i]]).collect(),
            objective,
            std_error: None,
            seed: None,
            samples: None,
            table,
            wall_time: started.elapsed(),
        })
    }

    /// The trellis as a structural equation model: node `(k, t)` has the
    /// parents `(j, t−1)` with `A[k][j] ≠ 0`, weighted by `A[k][j]`.
    pub fn to_sem(&self) -> Result<Sem> {
        let n = self.state_dim();
        let mut dag = Dag::new(self.node_count());
        let mut nodes = Vec::with_capacity(self.node_count());
        for t in 0..=self.horizon {
            for k in 0..n {
                let mut weights = Vec::new();
                if t > 0 {
                    for j in 0..n {
                        if self.a[(k, j)] != 0.0 {
                            dag.add_edge(self.index(j, t - 1), self.index(k, t));
                            weights.push(self.a[(k, j)]);
                        }
                    }
                }
                nodes.push(NodeModel::scalar(Mechanism::weighted(
                    NoiseSpec::gaussian_with_variance(self.sigma2),
                    weights,
                )));
            }
        }
        Sem::new(dag.validate()?, nodes)
    }

    /// The trellis as a generic problem, for simulation-based solvers.
    pub fn to_oci_problem(&self) -> Result<OciProblem> {
        let cost = SeparableCost {
            fixed: self.delta.as_slice().to_vec(),
            quadratic: self.q.as_slice().to_vec(),
            setup: 0.0,
        };
        let ybar = self.ybar.clone();
        Ok(OciProblem::new(self.to_sem()?, cost, move |v: &Values| {
            v.as_slice()
                .iter()
                .zip(ybar.iter())
                .map(|(y, t)| (y - t) * (y - t))
                .sum()
        }))
    }

    /// The plan imputing `S` to `x̄_S`.
    pub fn plan(&self, s: Subset, xbar: &DVector<f64>) -> ImputationPlan {
        ImputationPlan::new(s.members().map(|i| (i, vec![xbar[i]]))).expect("distinct members")
    }
}

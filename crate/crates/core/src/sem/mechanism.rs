use std::fmt;
use std::sync::Arc;

use serde::{Deserialize, Serialize};
use statrs::function::erf::erfc_inv;

use crate::error::{Error, Result};

/// Value space of a node.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Domain {
    /// Symbols `0..k`, stored as the reals `0.0, 1.0, ...`.
    Finite(usize),
    /// Real vectors of the given dimension.
    Real(usize),
}

impl Domain {
    /// Number of `f64` slots a value occupies.
    pub fn width(&self) -> usize {
        match *self {
            Domain::Finite(_) => 1,
            Domain::Real(d) => d,
        }
    }

    pub fn contains(&self, value: &[f64]) -> bool {
        if value.len() != self.width() {
            return false;
        }
        match *self {
            Domain::Finite(k) => {
                let v = value[0];
                v.fract() == 0.0 && v >= 0.0 && (v as usize) < k
            }
            Domain::Real(_) => value.iter().all(|v| v.is_finite()),
        }
    }

    pub fn cardinality(&self) -> Option<usize> {
        match *self {
            Domain::Finite(k) => Some(k),
            Domain::Real(_) => None,
        }
    }
}

/// Distribution of a scalar innovation, realized from one uniform draw by
/// its inverse CDF.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseSpec {
    Gaussian { mean: f64, std_dev: f64 },
    Uniform { low: f64, high: f64 },
    Constant(f64),
}

impl NoiseSpec {
    pub fn standard_normal() -> Self {
        NoiseSpec::Gaussian {
            mean: 0.0,
            std_dev: 1.0,
        }
    }

    pub fn gaussian_with_variance(variance: f64) -> Self {
        NoiseSpec::Gaussian {
            mean: 0.0,
            std_dev: variance.sqrt(),
        }
    }

    /// Inverse CDF at `u ∈ (0, 1)`.
    pub fn transform(&self, u: f64) -> f64 {
        match *self {
            NoiseSpec::Gaussian { mean, std_dev } => {
                if std_dev == 0.0 {
                    mean
                } else {
                    mean - std_dev * std::f64::consts::SQRT_2 * erfc_inv(2.0 * u)
                }
            }
            NoiseSpec::Uniform { low, high } => low + (high - low) * u,
            NoiseSpec::Constant(c) => c,
        }
    }

    pub fn mean(&self) -> f64 {
        match *self {
            NoiseSpec::Gaussian { mean, .. } => mean,
            NoiseSpec::Uniform { low, high } => 0.5 * (low + high),
            NoiseSpec::Constant(c) => c,
        }
    }

    pub fn variance(&self) -> f64 {
        match *self {
            NoiseSpec::Gaussian { std_dev, .. } => std_dev * std_dev,
            NoiseSpec::Uniform { low, high } => (high - low).powi(2) / 12.0,
            NoiseSpec::Constant(_) => 0.0,
        }
    }

    pub(crate) fn validate(&self, node: usize) -> Result<()> {
        let ok = match *self {
            NoiseSpec::Gaussian { mean, std_dev } => mean.is_finite() && std_dev.is_finite() && std_dev >= 0.0,
            NoiseSpec::Uniform { low, high } => low.is_finite() && high.is_finite() && low <= high,
            NoiseSpec::Constant(c) => c.is_finite(),
        };
        if ok {
            Ok(())
        } else {
            Err(Error::domain(node, format!("invalid noise parameters {self:?}")))
        }
    }
}

/// Conditional probability table of a finite node given finite parents.
///
/// Row `r` is the distribution of the node when the parent values, read in
/// ascending parent index order, spell `r` in mixed radix with the first
/// parent most significant. A root node has exactly one row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionalTable {
    pub rows: Vec<Vec<f64>>,
}

impl ConditionalTable {
    pub fn new(rows: Vec<Vec<f64>>) -> Self {
        ConditionalTable { rows }
    }

    /// A parentless distribution.
    pub fn root(probs: Vec<f64>) -> Self {
        ConditionalTable { rows: vec![probs] }
    }

    pub(crate) fn row_index(&self, parents: &ParentValues<'_>, cards: &[usize]) -> usize {
        let mut idx = 0;
        for (k, &card) in cards.iter().enumerate() {
            idx = idx * card + parents.get(k)[0] as usize;
        }
        idx
    }

    /// Inverse-CDF draw: the first symbol whose cumulative mass exceeds `u`.
    pub(crate) fn draw(row: &[f64], u: f64) -> usize {
        let mut cum = 0.0;
        let mut last_positive = 0;
        for (x, &p) in row.iter().enumerate() {
            if p > 0.0 {
                last_positive = x;
                cum += p;
                if u < cum {
                    return x;
                }
            }
        }
        last_positive
    }
}

/// Signature of a user-supplied mechanism: parent values, the node's uniform
/// draws, and the output slot to fill.
pub type CustomFn = dyn Fn(&ParentValues<'_>, &[f64], &mut [f64]) + Send + Sync;

/// A pure user function of the parent values and `noise_width` uniforms.
#[derive(Clone)]
pub struct CustomMechanism {
    pub noise_width: usize,
    pub f: Arc<CustomFn>,
}

impl CustomMechanism {
    pub fn new(noise_width: usize, f: impl Fn(&ParentValues<'_>, &[f64], &mut [f64]) + Send + Sync + 'static) -> Self {
        CustomMechanism {
            noise_width,
            f: Arc::new(f),
        }
    }
}

impl fmt::Debug for CustomMechanism {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CustomMechanism")
            .field("noise_width", &self.noise_width)
            .finish_non_exhaustive()
    }
}

/// How a node's value is produced from its parents and its noise.
#[derive(Debug, Clone)]
pub enum Mechanism {
    /// `x = Σ_p w_p · x_p + ε`, coordinatewise, with `w_p = 1` when no
    /// weights are given. One noise draw per coordinate.
    Additive {
        noise: NoiseSpec,
        weights: Option<Vec<f64>>,
    },
    Table(ConditionalTable),
    Custom(CustomMechanism),
}

impl Mechanism {
    pub fn additive(noise: NoiseSpec) -> Self {
        Mechanism::Additive { noise, weights: None }
    }

    pub fn weighted(noise: NoiseSpec, weights: Vec<f64>) -> Self {
        Mechanism::Additive {
            noise,
            weights: Some(weights),
        }
    }

    pub(crate) fn noise_width(&self, domain: &Domain) -> usize {
        match self {
            Mechanism::Additive { .. } => domain.width(),
            Mechanism::Table(_) => 1,
            Mechanism::Custom(c) => c.noise_width,
        }
    }

    /// Maps the node's raw uniforms to the innovation the mechanism consumes.
    pub(crate) fn innovation(&self, uniforms: &[f64], out: &mut [f64]) {
        match self {
            Mechanism::Additive { noise, .. } => {
                for (o, &u) in out.iter_mut().zip(uniforms) {
                    *o = noise.transform(u);
                }
            }
            Mechanism::Table(_) | Mechanism::Custom(_) => out.copy_from_slice(uniforms),
        }
    }

    pub(crate) fn apply(
        &self,
        parents: &ParentValues<'_>,
        parent_cards: &[usize],
        innovation: &[f64],
        out: &mut [f64],
    ) {
        match self {
            Mechanism::Additive { weights, .. } => {
                out.copy_from_slice(innovation);
                for k in 0..parents.len() {
                    let w = weights.as_ref().map_or(1.0, |w| w[k]);
                    for (o, &p) in out.iter_mut().zip(parents.get(k)) {
                        *o += w * p;
                    }
                }
            }
            Mechanism::Table(table) => {
                let row = &table.rows[table.row_index(parents, parent_cards)];
                out[0] = ConditionalTable::draw(row, innovation[0]) as f64;
            }
            Mechanism::Custom(c) => (c.f)(parents, innovation, out),
        }
    }
}

/// Read-only view of a node's parent values, in ascending parent order.
pub struct ParentValues<'a> {
    pub(crate) data: &'a [f64],
    pub(crate) offsets: &'a [usize],
    pub(crate) parents: &'a [usize],
}

impl<'a> ParentValues<'a> {
    pub fn len(&self) -> usize {
        self.parents.len()
    }

    pub fn is_empty(&self) -> bool {
        self.parents.is_empty()
    }

    /// Value of the `k`-th parent.
    pub fn get(&self, k: usize) -> &'a [f64] {
        let node = self.parents[k];
        &self.data[self.offsets[node]..self.offsets[node + 1]]
    }

    /// Node index of the `k`-th parent.
    pub fn node(&self, k: usize) -> usize {
        self.parents[k]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_inverse_cdf() {
        let n = NoiseSpec::standard_normal();
        assert!(n.transform(0.5).abs() < 1e-15);
        assert!((n.transform(0.975) - 1.959_963_984_540_054).abs() < 1e-9);
        assert!((n.transform(0.025) + 1.959_963_984_540_054).abs() < 1e-9);
        let shifted = NoiseSpec::Gaussian {
            mean: 2.0,
            std_dev: 0.0,
        };
        assert_eq!(shifted.transform(0.123), 2.0);
    }

    #[test]
    fn table_draw_skips_zero_mass() {
        let row = [0.0, 0.25, 0.0, 0.75];
        assert_eq!(ConditionalTable::draw(&row, 0.0), 1);
        assert_eq!(ConditionalTable::draw(&row, 0.2499), 1);
        assert_eq!(ConditionalTable::draw(&row, 0.25), 3);
        assert_eq!(ConditionalTable::draw(&row, 0.999_999_999), 3);
    }

    #[test]
    fn finite_domain_membership() {
        let d = Domain::Finite(3);
        assert!(d.contains(&[2.0]));
        assert!(!d.contains(&[3.0]));
        assert!(!d.contains(&[0.5]));
        assert!(!d.contains(&[-1.0]));
        assert!(!Domain::Real(2).contains(&[1.0]));
        assert!(!Domain::Real(1).contains(&[f64::NAN]));
    }
}

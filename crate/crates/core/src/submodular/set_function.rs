use std::collections::HashMap;
use std::fmt;
use std::sync::{Arc, RwLock};

use super::Subset;
use crate::error::{Error, Result};

/// Largest ground set a [`SetFunction`] may have.
pub const MAX_GROUND: usize = 30;

/// Largest ground set for which a dense value table is materialized.
pub const MAX_TABLE: usize = 20;

pub type Oracle = dyn Fn(Subset) -> f64 + Send + Sync;

/// A memoized set function `F: 2^{0..m} → ℝ`.
///
/// The oracle must be deterministic. Noisy objectives should be frozen
/// first, e.g. by estimating every subset on common random numbers.
pub struct SetFunction {
    ground_size: usize,
    oracle: Arc<Oracle>,
    cache: RwLock<HashMap<u32, f64>>,
}

impl SetFunction {
    pub fn new(ground_size: usize, oracle: impl Fn(Subset) -> f64 + Send + Sync + 'static) -> Result<Self> {
        if ground_size > MAX_GROUND {
            return Err(Error::too_large("ground set", ground_size as u128, MAX_GROUND as u128));
        }
        Ok(SetFunction {
            ground_size,
            oracle: Arc::new(oracle),
            cache: RwLock::new(HashMap::new()),
        })
    }

    /// Function given by its full value table, indexed by bitmask.
    pub fn from_table(values: Vec<f64>) -> Result<Self> {
        let m = values.len().trailing_zeros() as usize;
        if values.is_empty() || values.len() != 1 << m {
            return Err(Error::Dimension(format!(
                "value table of length {} is not a power of two",
                values.len()
            )));
        }
        if m > MAX_TABLE {
            return Err(Error::too_large("value table ground set", m as u128, MAX_TABLE as u128));
        }
        let values = Arc::new(values);
        SetFunction::new(m, move |s| values[s.bits() as usize])
    }

    /// `F(I) = Σ_{i ∈ I} w_i`.
    pub fn modular(weights: Vec<f64>) -> Result<Self> {
        let m = weights.len();
        SetFunction::new(m, move |s| s.members().map(|i| weights[i]).sum())
    }

    pub fn constant(ground_size: usize, c: f64) -> Result<Self> {
        SetFunction::new(ground_size, move |_| c)
    }

    pub fn ground_size(&self) -> usize {
        self.ground_size
    }

    pub fn full(&self) -> Subset {
        Subset::full(self.ground_size)
    }

    pub fn eval(&self, s: Subset) -> f64 {
        debug_assert!(s.is_subset_of(self.full()));
        if let Some(&v) = self.cache.read().expect("cache lock").get(&s.bits()) {
            return v;
        }
        let v = (self.oracle)(s);
        self.cache.write().expect("cache lock").insert(s.bits(), v);
        v
    }

    /// Evaluates the oracle without touching the cache.
    pub fn eval_fresh(&self, s: Subset) -> f64 {
        (self.oracle)(s)
    }

    /// Dense table of all `2^m` values, indexed by bitmask.
    pub fn table(&self) -> Result<Vec<f64>> {
        if self.ground_size > MAX_TABLE {
            return Err(Error::too_large(
                "ground set for tabulation",
                self.ground_size as u128,
                MAX_TABLE as u128,
            ));
        }
        Ok((0..1u32 << self.ground_size).map(|b| self.eval(Subset(b))).collect())
    }

    /// `I ↦ F(I) + G(I)`.
    pub fn sum(&self, other: &SetFunction) -> Result<SetFunction> {
        if self.ground_size != other.ground_size {
            return Err(Error::Dimension(format!(
                "ground sets differ: {} vs {}",
                self.ground_size, other.ground_size
            )));
        }
        let (f, g) = (Arc::clone(&self.oracle), Arc::clone(&other.oracle));
        SetFunction::new(self.ground_size, move |s| f(s) + g(s))
    }

    /// `I ↦ -F(I)`.
    pub fn negated(&self) -> SetFunction {
        let f = Arc::clone(&self.oracle);
        SetFunction::new(self.ground_size, move |s| -f(s)).expect("same ground size")
    }
}

impl Clone for SetFunction {
    fn clone(&self) -> Self {
        SetFunction {
            ground_size: self.ground_size,
            oracle: Arc::clone(&self.oracle),
            cache: RwLock::new(self.cache.read().expect("cache lock").clone()),
        }
    }
}

impl fmt::Debug for SetFunction {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("SetFunction")
            .field("ground_size", &self.ground_size)
            .field("cached", &self.cache.read().map(|c| c.len()).unwrap_or(0))
            .finish()
    }
}

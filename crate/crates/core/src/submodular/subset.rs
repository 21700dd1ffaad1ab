use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// A subset of a ground set `{0, …, m-1}` with `m ≤ 32`, as a bitmask.
/// Serializes as the sorted array of its members.
#[derive(Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Default)]
pub struct Subset(pub u32);

impl Subset {
    pub const EMPTY: Subset = Subset(0);

    pub fn full(m: usize) -> Subset {
        if m >= 32 {
            Subset(u32::MAX)
        } else {
            Subset((1u32 << m) - 1)
        }
    }

    pub fn singleton(i: usize) -> Subset {
        Subset(1 << i)
    }

    pub fn from_members(members: impl IntoIterator<Item = usize>) -> Subset {
        Subset(members.into_iter().fold(0, |m, i| m | (1 << i)))
    }

    pub fn bits(self) -> u32 {
        self.0
    }

    pub fn contains(self, i: usize) -> bool {
        self.0 >> i & 1 == 1
    }

    pub fn with(self, i: usize) -> Subset {
        Subset(self.0 | 1 << i)
    }

    pub fn without(self, i: usize) -> Subset {
        Subset(self.0 & !(1 << i))
    }

    pub fn union(self, other: Subset) -> Subset {
        Subset(self.0 | other.0)
    }

    pub fn is_subset_of(self, other: Subset) -> bool {
        self.0 & !other.0 == 0
    }

    pub fn len(self) -> usize {
        self.0.count_ones() as usize
    }

    pub fn is_empty(self) -> bool {
        self.0 == 0
    }

    pub fn members(self) -> impl Iterator<Item = usize> {
        let bits = self.0;
        (0..32).filter(move |i| bits >> i & 1 == 1)
    }

    /// All subsets of `self`, in increasing bitmask order.
    pub fn subsets(self) -> impl Iterator<Item = Subset> {
        let full = self.0;
        let mut next = Some(0u32);
        std::iter::from_fn(move || {
            let cur = next?;
            next = if cur == full {
                None
            } else {
                Some((cur.wrapping_sub(full)) & full)
            };
            Some(Subset(cur))
        })
    }

    /// Tie-break order used by every exact solver: smaller cardinality
    /// first, then smaller bitmask.
    pub fn tie_key(self) -> (u32, u32) {
        (self.0.count_ones(), self.0)
    }
}

/// Every subset of `{0, …, m-1}` in tie-break order.
pub fn all_subsets_by_size(m: usize) -> Vec<Subset> {
    let mut all: Vec<Subset> = (0..1u64 << m).map(|b| Subset(b as u32)).collect();
    all.sort_by_key(|s| s.tie_key());
    all
}

impl fmt::Debug for Subset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_set().entries(self.members()).finish()
    }
}

impl fmt::Display for Subset {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl Serialize for Subset {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_seq(self.members())
    }
}

impl<'de> Deserialize<'de> for Subset {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let members = Vec::<usize>::deserialize(deserializer)?;
        if let Some(&bad) = members.iter().find(|&&i| i >= 32) {
            return Err(serde::de::Error::custom(format!("subset member {bad} out of range")));
        }
        Ok(Subset::from_members(members))
    }
}

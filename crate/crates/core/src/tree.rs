//! Vertices of the rooted dyadic tree and the boundary metric.
//!
//! A vertex is addressed by `(level, index)` with `0 <= index < 2^level`.
//! The root is `(0, 0)`; the children of `(n, j)` are `(n + 1, 2j)` and
//! `(n + 1, 2j + 1)`. Under the boundary-to-circle map the vertex `(n, j)`
//! owns the arc `[j 2^-n, (j + 1) 2^-n)` of the unit circle, measured as a
//! fraction of a full turn.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Deepest level whose indices fit in a `u64`.
pub const MAX_ADDRESSABLE_LEVEL: u32 = 63;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(try_from = "(u32, u64)", into = "(u32, u64)")]
pub struct VertexId {
    level: u32,
    index: u64,
}

impl VertexId {
    pub const ROOT: VertexId = VertexId { level: 0, index: 0 };

    pub fn new(level: u32, index: u64) -> Result<Self> {
        if level > MAX_ADDRESSABLE_LEVEL {
            return Err(Error::ResolutionOverflow {
                level: level as u64,
                max: MAX_ADDRESSABLE_LEVEL as u64,
            });
        }
        if index >> level != 0 {
            return Err(Error::IndexOutOfRange { level, index });
        }
        Ok(VertexId { level, index })
    }

    #[inline]
    pub fn level(self) -> u32 {
        self.level
    }

    #[inline]
    pub fn index(self) -> u64 {
        self.index
    }

    pub fn parent(self) -> Option<VertexId> {
        (self.level > 0).then(|| VertexId {
            level: self.level - 1,
            index: self.index >> 1,
        })
    }

    pub fn child(self, right: bool) -> Result<VertexId> {
        VertexId::new(self.level + 1, (self.index << 1) | right as u64)
    }

    pub fn children(self) -> Result<(VertexId, VertexId)> {
        Ok((self.child(false)?, self.child(true)?))
    }

    /// Ancestor at `level`, or `None` when `level` is deeper than `self`.
    pub fn ancestor_at(self, level: u32) -> Option<VertexId> {
        (level <= self.level).then(|| VertexId {
            level,
            index: self.index >> (self.level - level),
        })
    }

    /// Partial order of the tree: `self <= other` iff `self` lies on the
    /// geodesic from the root to `other`.
    pub fn is_ancestor_of(self, other: VertexId) -> bool {
        other.ancestor_at(self.level) == Some(self)
    }

    /// Direction taken from the ancestor at `level` (which must be shallower
    /// than `self`) towards `self`: `true` for the right child.
    pub fn turn_at(self, level: u32) -> bool {
        debug_assert!(level < self.level);
        (self.index >> (self.level - level - 1)) & 1 == 1
    }

    /// Boundary arc `[start, end)` as fractions of a full turn.
    pub fn arc(self) -> (f64, f64) {
        let width = (-(self.level as f64)).exp2();
        (self.index as f64 * width, (self.index + 1) as f64 * width)
    }

    /// Deepest common ancestor of `a` and `b`.
    pub fn confluent(a: VertexId, b: VertexId) -> VertexId {
        let m = a.level.min(b.level);
        let ia = a.index >> (a.level - m);
        let ib = b.index >> (b.level - m);
        let diff = ia ^ ib;
        let shared = m - (64 - diff.leading_zeros());
        VertexId {
            level: shared,
            index: ia >> (m - shared),
        }
    }
}

impl fmt::Display for VertexId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}:{}", self.level, self.index)
    }
}

impl FromStr for VertexId {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let (n, j) = s
            .trim()
            .split_once([':', ','])
            .ok_or_else(|| Error::Parse(format!("expected `n:j`, got {s:?}")))?;
        let n = n
            .trim()
            .parse::<u32>()
            .map_err(|e| Error::Parse(format!("level {n:?}: {e}")))?;
        let j = j
            .trim()
            .parse::<u64>()
            .map_err(|e| Error::Parse(format!("index {j:?}: {e}")))?;
        VertexId::new(n, j)
    }
}

impl TryFrom<(u32, u64)> for VertexId {
    type Error = Error;

    fn try_from((n, j): (u32, u64)) -> Result<Self> {
        VertexId::new(n, j)
    }
}

impl From<VertexId> for (u32, u64) {
    fn from(v: VertexId) -> Self {
        (v.level, v.index)
    }
}

/// Tree metric `rho(a, b) = 2^-d(a∧b) - (2^-d(a) + 2^-d(b)) / 2` on vertices.
pub fn rho(a: VertexId, b: VertexId) -> f64 {
    let c = VertexId::confluent(a, b);
    let p = |v: VertexId| (-(v.level as f64)).exp2();
    p(c) - 0.5 * (p(a) + p(b))
}

/// Distance between boundary points known only through finite prefixes.
///
/// Two prefixes determine the distance `2^-d(ξ∧ζ)` of every pair of points
/// through them exactly when neither prefix is an ancestor of the other.
pub fn boundary_rho(a: VertexId, b: VertexId) -> Option<f64> {
    if a.is_ancestor_of(b) || b.is_ancestor_of(a) {
        return None;
    }
    Some((-(VertexId::confluent(a, b).level as f64)).exp2())
}

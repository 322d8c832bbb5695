//! Tree capacities, condenser capacities and the extremal machinery.
//!
//! For a closed set `E` of the boundary, `c(x)` is the capacity of the part
//! of `E` seen from the subtree rooted at `x`. Full shadows have `c = 1/2`,
//! empty ones `c = 0`, and internal vertices satisfy `c = s / (1 + s)` with
//! `s` the sum over the two children. The condenser capacity at level `n`
//! is the sum of `c(x)` over the `2^n` vertices of that level.
//!
//! The extremal function is built top-down from the capacities:
//! `h(x) = (1 - H(parent)) c(x)` and `H(x) = H(parent) + h(x)`.

use std::collections::HashMap;
use std::sync::Arc;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use serde::{Deserialize, Serialize};

use crate::boundary_set::{BoundarySet, Leaf, Node};
use crate::error::{Error, Result};
use crate::tree::VertexId;

/// Arithmetic needed by the capacity recursion, so the same traversal runs
/// in binary64 and in exact rationals.
pub trait CapacityScalar: Clone {
    fn zero() -> Self;
    fn half() -> Self;
    fn add(&self, other: &Self) -> Self;
    fn double(&self) -> Self;
    /// `s / (1 + s)`
    fn merge(&self) -> Self;
    /// `c / (1 + len c)`: `len` merges with an empty sibling.
    fn run(&self, len: u64) -> Self;
    /// `self * 2^k`
    fn scale_pow2(&self, k: u64) -> Self;
}

impl CapacityScalar for f64 {
    fn zero() -> Self {
        0.0
    }
    fn half() -> Self {
        0.5
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn double(&self) -> Self {
        2.0 * self
    }
    fn merge(&self) -> Self {
        self / (1.0 + self)
    }
    fn run(&self, len: u64) -> Self {
        self / (1.0 + len as f64 * self)
    }
    fn scale_pow2(&self, k: u64) -> Self {
        self * (k as f64).exp2()
    }
}

impl CapacityScalar for BigRational {
    fn zero() -> Self {
        Zero::zero()
    }
    fn half() -> Self {
        BigRational::new(BigInt::one(), BigInt::from(2))
    }
    fn add(&self, other: &Self) -> Self {
        self + other
    }
    fn double(&self) -> Self {
        self * BigInt::from(2)
    }
    fn merge(&self) -> Self {
        self / (BigRational::one() + self)
    }
    fn run(&self, len: u64) -> Self {
        self / (BigRational::one() + self * BigInt::from(len))
    }
    fn scale_pow2(&self, k: u64) -> Self {
        self * (BigInt::one() << k)
    }
}

fn subtree_capacity<S: CapacityScalar>(node: &Arc<Node>) -> S {
    match &**node {
        Node::Empty => S::zero(),
        Node::Full => S::half(),
        Node::Split { left, right, .. } => {
            let s = if Arc::ptr_eq(left, right) {
                subtree_capacity::<S>(left).double()
            } else {
                subtree_capacity::<S>(left).add(&subtree_capacity::<S>(right))
            };
            s.merge()
        }
        Node::Run { len, child, .. } => subtree_capacity::<S>(child).run(*len),
    }
}

fn level_sum<S: CapacityScalar>(node: &Arc<Node>, n: u64) -> S {
    match &**node {
        Node::Empty => S::zero(),
        // 2^n full subtrees of capacity 1/2 each
        Node::Full => S::half().scale_pow2(n),
        Node::Split { left, right, .. } => {
            if n == 0 {
                return subtree_capacity(node);
            }
            if Arc::ptr_eq(left, right) {
                level_sum::<S>(left, n - 1).double()
            } else {
                level_sum::<S>(left, n - 1).add(&level_sum::<S>(right, n - 1))
            }
        }
        Node::Run { len, child, .. } => {
            if n <= *len {
                // the only nonempty level-n vertex is on the spine
                subtree_capacity::<S>(child).run(len - n)
            } else {
                level_sum(child, n - len)
            }
        }
    }
}

/// Capacity of `E` seen from the root, `c(o)`.
pub fn capacity(e: &BoundarySet) -> f64 {
    e.node().capacity()
}

/// Capacity recomputed in exact rational arithmetic.
pub fn capacity_exact(e: &BoundarySet) -> BigRational {
    subtree_capacity(e.node())
}

/// Condenser capacity `Σ_{d(x)=n} c(x)`; level `0` gives `capacity(E)`.
pub fn condenser_capacity(e: &BoundarySet, n: u64) -> f64 {
    level_sum(e.node(), n)
}

pub fn condenser_capacity_exact(e: &BoundarySet, n: u64) -> BigRational {
    level_sum(e.node(), n)
}

/// Per-vertex subtree capacity.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CapacityEntry {
    pub vertex: VertexId,
    pub c: f64,
}

/// Subtree capacities on every vertex of the trie, runs expanded.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct CapacityTable {
    pub entries: Vec<CapacityEntry>,
}

impl CapacityTable {
    pub fn new(e: &BoundarySet) -> Result<Self> {
        let mut entries = Vec::new();
        walk(e.node(), VertexId::ROOT, &mut |v, node| {
            entries.push(CapacityEntry {
                vertex: v,
                c: node.capacity(),
            })
        })?;
        Ok(CapacityTable { entries })
    }

    /// Largest `|c(x)(1 + s) - s|` over internal vertices.
    pub fn recursion_residual(&self) -> f64 {
        let index: HashMap<VertexId, f64> = self.entries.iter().map(|e| (e.vertex, e.c)).collect();
        self.entries
            .iter()
            .filter_map(|e| {
                let (l, r) = e.vertex.children().ok()?;
                let s = index.get(&l)? + index.get(&r)?;
                Some((e.c * (1.0 + s) - s).abs())
            })
            .fold(0.0, f64::max)
    }
}

/// Pre-order walk over trie vertices with their addresses; runs are unrolled.
fn walk(node: &Arc<Node>, v: VertexId, f: &mut impl FnMut(VertexId, &Arc<Node>)) -> Result<()> {
    f(v, node);
    if let Some((l, r)) = node.children() {
        let (vl, vr) = v.children()?;
        walk(&l, vl, f)?;
        walk(&r, vr, f)?;
    }
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FluxEntry {
    pub vertex: VertexId,
    pub c: f64,
    pub h: f64,
    #[serde(rename = "H")]
    pub big_h: f64,
    /// Tag of the trie leaf at this vertex, if it is one.
    #[serde(with = "leaf_tag")]
    pub leaf: Option<Leaf>,
}

mod leaf_tag {
    use super::Leaf;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(leaf: &Option<Leaf>, s: S) -> Result<S::Ok, S::Error> {
        match leaf {
            Some(Leaf::Full) => s.serialize_some("full"),
            Some(Leaf::Empty) => s.serialize_some("empty"),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Leaf>, D::Error> {
        match Option::<String>::deserialize(d)?.as_deref() {
            None => Ok(None),
            Some("full") => Ok(Some(Leaf::Full)),
            Some("empty") => Ok(Some(Leaf::Empty)),
            Some(other) => Err(serde::de::Error::custom(format!("unknown leaf tag {other:?}"))),
        }
    }
}

/// The extremal function `h` and its path sums `H = Ih` on trie vertices.
///
/// Below a full leaf the extremal continues implicitly: both children carry
/// half of the parent's flux, so `h` and the deficit `1 - H` halve with
/// every level.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct FluxTable {
    pub entries: Vec<FluxEntry>,
}

/// Extremal function of `E`. Fails on sets of zero capacity.
pub fn extremal(e: &BoundarySet) -> Result<FluxTable> {
    if capacity(e) <= 0.0 {
        return Err(Error::Degenerate(
            "zero capacity: the extremal function vanishes identically".into(),
        ));
    }
    let mut entries = Vec::new();
    fn visit(node: &Arc<Node>, v: VertexId, parent_h: f64, out: &mut Vec<FluxEntry>) -> Result<()> {
        let c = node.capacity();
        let h = (1.0 - parent_h) * c;
        let big_h = parent_h + h;
        out.push(FluxEntry {
            vertex: v,
            c,
            h,
            big_h,
            leaf: node.leaf(),
        });
        if let Some((l, r)) = node.children() {
            let (vl, vr) = v.children()?;
            visit(&l, vl, big_h, out)?;
            visit(&r, vr, big_h, out)?;
        }
        Ok(())
    }
    visit(e.node(), VertexId::ROOT, 0.0, &mut entries)?;
    Ok(FluxTable { entries })
}

impl FluxTable {
    pub fn root(&self) -> &FluxEntry {
        &self.entries[0]
    }

    pub fn get(&self, v: VertexId) -> Option<&FluxEntry> {
        self.entries.iter().find(|e| e.vertex == v)
    }

    fn index(&self) -> HashMap<VertexId, usize> {
        self.entries
            .iter()
            .enumerate()
            .map(|(i, e)| (e.vertex, i))
            .collect()
    }

    /// Largest `|h(x) - h(x+) - h(x-)|` over internal vertices.
    pub fn flux_residual(&self) -> f64 {
        let index = self.index();
        self.entries
            .iter()
            .filter(|e| e.leaf.is_none())
            .filter_map(|e| {
                let (l, r) = e.vertex.children().ok()?;
                let hl = self.entries[*index.get(&l)?].h;
                let hr = self.entries[*index.get(&r)?].h;
                Some((e.h - hl - hr).abs())
            })
            .fold(0.0, f64::max)
    }

    /// `(h, H)` at a vertex `k` levels below the full leaf `leaf`, obtained
    /// by stepping the top-down rule with `c = 1/2` at every level.
    pub fn continue_below(&self, leaf: VertexId, k: u32) -> Option<(f64, f64)> {
        let entry = self.get(leaf)?;
        if entry.leaf != Some(Leaf::Full) {
            return None;
        }
        let (mut h, mut big_h) = (entry.h, entry.big_h);
        for _ in 0..k {
            h = (1.0 - big_h) * 0.5;
            big_h += h;
        }
        Some((h, big_h))
    }
}

/// `‖h‖²`: explicit vertices plus the closed-form tail below full leaves,
/// `Σ_{k≥1} 2^k (h 2^-k)² = h²`.
pub fn energy(flux: &FluxTable) -> f64 {
    flux.entries
        .iter()
        .map(|e| match e.leaf {
            Some(Leaf::Full) => 2.0 * e.h * e.h,
            _ => e.h * e.h,
        })
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ArcMass {
    pub arc: VertexId,
    pub mass: f64,
}

/// Equilibrium measure: `μ(S(x)) = h(x)`, carried by the full leaves.
#[derive(Debug, Clone, PartialEq)]
pub struct EquilibriumMeasure {
    flux: FluxTable,
}

pub fn equilibrium_measure(e: &BoundarySet) -> Result<EquilibriumMeasure> {
    Ok(EquilibriumMeasure { flux: extremal(e)? })
}

impl EquilibriumMeasure {
    pub fn total_mass(&self) -> f64 {
        self.arcs().iter().map(|a| a.mass).sum()
    }

    /// Masses of the full-leaf arcs.
    pub fn arcs(&self) -> Vec<ArcMass> {
        self.flux
            .entries
            .iter()
            .filter(|e| e.leaf == Some(Leaf::Full))
            .map(|e| ArcMass {
                arc: e.vertex,
                mass: e.h,
            })
            .collect()
    }

    /// `μ(S(v))` for any vertex.
    pub fn mass(&self, v: VertexId) -> f64 {
        let mut cur = v;
        loop {
            if let Some(e) = self.flux.get(cur) {
                return match e.leaf {
                    Some(Leaf::Full) => e.h * (-((v.level() - cur.level()) as f64)).exp2(),
                    Some(Leaf::Empty) => 0.0,
                    None if cur == v => e.h,
                    None => unreachable!("a non-leaf trie vertex has both children in the table"),
                };
            }
            cur = cur.parent().expect("the root is always in the table");
        }
    }

    pub fn flux(&self) -> &FluxTable {
        &self.flux
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::boundary_set::DEFAULT_MAX_RESOLUTION;
    use crate::dyadic::Dyadic;
    use num_traits::ToPrimitive;
    use proptest::prelude::*;

    fn v(n: u32, j: u64) -> VertexId {
        VertexId::new(n, j).unwrap()
    }

    fn prefix(s: &str) -> BoundarySet {
        BoundarySet::prefix(&s.parse::<Dyadic>().unwrap(), DEFAULT_MAX_RESOLUTION).unwrap()
    }

    fn ratio(p: i64, q: i64) -> BigRational {
        BigRational::new(p.into(), q.into())
    }

    /// Iterate `c -> c / (1 + c)` from `1/2`, the hand derivation of a shadow's capacity.
    fn shadow_oracle(n: u32) -> f64 {
        (0..n).fold(0.5, |c, _| c / (1.0 + c))
    }

    #[test]
    fn capacity_examples() {
        assert_eq!(capacity(&BoundarySet::full()), 0.5);
        assert_eq!(capacity(&BoundarySet::empty()), 0.0);
        for n in 0..=20u32 {
            let s = BoundarySet::shadow(v(n, 0));
            assert!((capacity(&s) - 1.0 / (n as f64 + 2.0)).abs() < 1e-15);
            assert!((capacity(&s) - shadow_oracle(n)).abs() < 1e-15);
            assert_eq!(capacity_exact(&s), ratio(1, n as i64 + 2));
        }
        assert!((capacity(&BoundarySet::shadow(v(1, 1))) - 1.0 / 3.0).abs() < 1e-15);
        assert!((capacity(&BoundarySet::shadow(v(4, 11))) - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn condenser_examples() {
        let full = BoundarySet::full();
        assert_eq!(condenser_capacity(&full, 2), 2.0);
        for n in 0..=20 {
            assert_eq!(condenser_capacity(&full, n), (n as f64 - 1.0).exp2());
        }
        let e = prefix("3/8");
        assert_eq!(condenser_capacity(&e, 0), capacity(&e));
        assert_eq!(condenser_capacity(&BoundarySet::empty(), 5), 0.0);
        // S(2,0) ∪ S(3,2): 2^(n-3) + 2^(n-4) once n >= 3
        assert_eq!(condenser_capacity(&e, 5), 6.0);
        assert_eq!(condenser_capacity_exact(&e, 5), ratio(6, 1));
    }

    #[test]
    fn condenser_inside_a_run() {
        let t = Dyadic::from_positions(vec![40]).unwrap();
        let e = BoundarySet::prefix(&t, 64).unwrap();
        // E = S(40, 0): a single chain; the level-n vertex on it has capacity 1/(40 - n + 2)
        for n in [0u64, 1, 17, 39, 40, 45] {
            let expect = if n <= 40 {
                1.0 / (40.0 - n as f64 + 2.0)
            } else {
                0.5 * ((n - 40) as f64).exp2()
            };
            assert!((condenser_capacity(&e, n) - expect).abs() < 1e-15, "n = {n}");
        }
    }

    #[test]
    fn exact_and_float_agree() {
        let e = prefix("11/32").union(&BoundarySet::shadow(v(3, 6)));
        let exact = capacity_exact(&e).to_f64().unwrap();
        assert!((exact - capacity(&e)).abs() < 1e-15);
        for n in 0..6 {
            let exact = condenser_capacity_exact(&e, n).to_f64().unwrap();
            assert!((exact - condenser_capacity(&e, n)).abs() < 1e-14);
        }
    }

    #[test]
    fn extremal_of_full_boundary() {
        let flux = extremal(&BoundarySet::full()).unwrap();
        assert_eq!(flux.entries.len(), 1);
        assert_eq!(flux.root().h, 0.5);
        assert_eq!(energy(&flux), 0.5);
        // implicit continuation: h at level k is 2^(-k-1)
        for k in 1..10 {
            let (h, _) = flux.continue_below(VertexId::ROOT, k).unwrap();
            assert!((h - (-(k as f64) - 1.0).exp2()).abs() < 1e-15);
        }
        let mu = equilibrium_measure(&BoundarySet::full()).unwrap();
        assert_eq!(mu.total_mass(), 0.5);
        for j in 0..8 {
            assert_eq!(mu.mass(v(3, j)), 1.0 / 16.0);
        }
    }

    #[test]
    fn extremal_of_half_shadow() {
        let e = BoundarySet::shadow(v(1, 0));
        let flux = extremal(&e).unwrap();
        let at = |x| flux.get(x).unwrap().h;
        assert!((at(VertexId::ROOT) - 1.0 / 3.0).abs() < 1e-15);
        assert!((at(v(1, 0)) - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(at(v(1, 1)), 0.0);
        assert!((energy(&flux) - 1.0 / 3.0).abs() < 1e-15);
        let mu = equilibrium_measure(&e).unwrap();
        assert_eq!(mu.mass(v(4, 12)), 0.0);
        assert!((mu.mass(v(2, 1)) - 1.0 / 6.0).abs() < 1e-15);
    }

    #[test]
    fn extremal_rejects_null_sets() {
        assert!(matches!(extremal(&BoundarySet::empty()), Err(Error::Degenerate(_))));
    }

    #[test]
    fn energy_scales_quadratically() {
        let mut flux = extremal(&prefix("13/16")).unwrap();
        let base = energy(&flux);
        for e in &mut flux.entries {
            e.h *= 3.0;
        }
        assert!((energy(&flux) - 9.0 * base).abs() < 1e-14);
    }

    #[test]
    fn deficit_halves_below_full_leaves() {
        let e = prefix("5/8");
        let flux = extremal(&e).unwrap();
        let leaf = v(1, 0);
        let deficit0 = 1.0 - flux.get(leaf).unwrap().big_h;
        for k in 1..30 {
            let (_, big_h) = flux.continue_below(leaf, k).unwrap();
            let expect = deficit0 * (-(k as f64)).exp2();
            assert!(((1.0 - big_h) - expect).abs() < 1e-15);
        }
    }

    #[test]
    fn table_export_shape() {
        let flux = extremal(&BoundarySet::shadow(v(1, 0))).unwrap();
        let json = serde_json::to_value(&flux).unwrap();
        let first = &json[0];
        assert_eq!(first["vertex"], serde_json::json!([0, 0]));
        assert!(first.get("H").is_some());
        let back: FluxTable = serde_json::from_value(json).unwrap();
        assert_eq!(back, flux);
        let mu = equilibrium_measure(&BoundarySet::shadow(v(1, 0))).unwrap();
        let arcs = serde_json::to_value(mu.arcs()).unwrap();
        assert_eq!(arcs[0]["arc"], serde_json::json!([1, 0]));
    }

    fn arb_set(depth: u32) -> impl Strategy<Value = BoundarySet> {
        let leaf = prop_oneof![Just(BoundarySet::empty()), Just(BoundarySet::full())];
        leaf.prop_recursive(depth, 1 << depth, 2, |inner| {
            (inner.clone(), inner).prop_map(|(l, r)| BoundarySet::join(&l, &r))
        })
    }

    proptest! {
        #[test]
        fn recursion_and_range(e in arb_set(7)) {
            let table = CapacityTable::new(&e).unwrap();
            prop_assert!(table.recursion_residual() <= 1e-12);
            for entry in &table.entries {
                prop_assert!((0.0..=0.5).contains(&entry.c));
                let full = e.coverage(entry.vertex) == crate::boundary_set::Coverage::Full;
                prop_assert_eq!(entry.c == 0.5, full);
            }
        }

        #[test]
        fn condenser_is_monotone_in_level(e in arb_set(7)) {
            let mut prev = condenser_capacity(&e, 0);
            for n in 1..12 {
                let cur = condenser_capacity(&e, n);
                prop_assert!(cur >= prev - 1e-15);
                prev = cur;
            }
        }

        #[test]
        fn monotone_and_subadditive(a in arb_set(6), b in arb_set(6)) {
            let u = a.union(&b);
            let i = a.intersection(&b);
            prop_assert!(capacity(&i) <= capacity(&a) + 1e-15);
            prop_assert!(capacity(&a) <= capacity(&u) + 1e-15);
            prop_assert!(capacity(&u) <= capacity(&a) + capacity(&b) + 1e-15);
        }

        #[test]
        fn extremal_identities(e in arb_set(7)) {
            prop_assume!(!e.is_empty());
            let flux = extremal(&e).unwrap();
            prop_assert!((energy(&flux) - capacity(&e)).abs() <= 1e-9);
            prop_assert!(flux.flux_residual() <= 1e-12);
            for entry in &flux.entries {
                prop_assert!(entry.big_h <= 1.0);
                prop_assert_eq!(entry.h > 0.0, entry.c > 0.0);
            }
            let mu = equilibrium_measure(&e).unwrap();
            prop_assert!((mu.total_mass() - capacity(&e)).abs() <= 1e-12);
            for entry in &flux.entries {
                if let Ok((l, r)) = entry.vertex.children() {
                    let split = mu.mass(l) + mu.mass(r);
                    prop_assert!((split - mu.mass(entry.vertex)).abs() <= 1e-12);
                }
            }
        }
    }
}

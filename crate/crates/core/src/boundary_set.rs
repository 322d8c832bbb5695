//! Closed subsets of the tree boundary encoded as canonical binary tries.
//!
//! A trie leaf is either `Full` (the whole shadow of that vertex belongs to
//! the set) or `Empty`. Internal nodes are immutable and shared through
//! `Arc`, so replicating a set into all `2^n` shadows of a level costs `n`
//! nodes. A left spine whose right siblings are all empty is stored as a
//! single `Run` node; this keeps sets of tiny capacity (which must sit in
//! arcs of length `2^-k` with `k` in the tens of thousands) cheap.
//!
//! Canonical form, enforced by the smart constructors:
//! * no split has two leaf children with the same tag;
//! * a split whose right child is `Empty` and whose left child is not a leaf
//!   is folded into a `Run`, and runs never nest;
//! * the child of a `Run` is always a `Split`.
//!
//! Every node caches its subtree capacity, computed bottom-up by the
//! recursion `c = s / (1 + s)` with `s` the sum of the children's values.

use std::fmt::Write as _;
use std::sync::{Arc, LazyLock};

use crate::dyadic::Dyadic;
use crate::error::{Error, Result};
use crate::tree::{VertexId, MAX_ADDRESSABLE_LEVEL};

/// Default cap on the resolution of user-facing prefix sets.
pub const DEFAULT_MAX_RESOLUTION: u64 = 30;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Leaf {
    Empty,
    Full,
}

#[derive(Debug)]
pub(crate) struct Meta {
    pub(crate) capacity: f64,
    pub(crate) depth: u64,
    pub(crate) full_leaves: u64,
}

#[derive(Debug)]
pub(crate) enum Node {
    Empty,
    Full,
    Split {
        left: Arc<Node>,
        right: Arc<Node>,
        meta: Meta,
    },
    /// `len` left steps with empty right siblings, then `child`.
    Run {
        len: u64,
        child: Arc<Node>,
        meta: Meta,
    },
}

static EMPTY: LazyLock<Arc<Node>> = LazyLock::new(|| Arc::new(Node::Empty));
static FULL: LazyLock<Arc<Node>> = LazyLock::new(|| Arc::new(Node::Full));

pub(crate) fn empty_node() -> Arc<Node> {
    Arc::clone(&EMPTY)
}

pub(crate) fn full_node() -> Arc<Node> {
    Arc::clone(&FULL)
}

#[inline]
pub(crate) fn merge(s: f64) -> f64 {
    s / (1.0 + s)
}

impl Node {
    pub(crate) fn capacity(&self) -> f64 {
        match self {
            Node::Empty => 0.0,
            Node::Full => 0.5,
            Node::Split { meta, .. } | Node::Run { meta, .. } => meta.capacity,
        }
    }

    pub(crate) fn depth(&self) -> u64 {
        match self {
            Node::Empty | Node::Full => 0,
            Node::Split { meta, .. } | Node::Run { meta, .. } => meta.depth,
        }
    }

    fn full_leaves(&self) -> u64 {
        match self {
            Node::Empty => 0,
            Node::Full => 1,
            Node::Split { meta, .. } | Node::Run { meta, .. } => meta.full_leaves,
        }
    }

    pub(crate) fn leaf(&self) -> Option<Leaf> {
        match self {
            Node::Empty => Some(Leaf::Empty),
            Node::Full => Some(Leaf::Full),
            _ => None,
        }
    }

    /// Children of an internal node; a run is unrolled by one step.
    pub(crate) fn children(&self) -> Option<(Arc<Node>, Arc<Node>)> {
        match self {
            Node::Empty | Node::Full => None,
            Node::Split { left, right, .. } => Some((Arc::clone(left), Arc::clone(right))),
            Node::Run { len, child, .. } => Some((run(len - 1, Arc::clone(child)), empty_node())),
        }
    }
}

/// Canonical join of two subtries.
pub(crate) fn split(left: Arc<Node>, right: Arc<Node>) -> Arc<Node> {
    match (left.leaf(), right.leaf()) {
        (Some(Leaf::Empty), Some(Leaf::Empty)) => empty_node(),
        (Some(Leaf::Full), Some(Leaf::Full)) => full_node(),
        (None, Some(Leaf::Empty)) => run(1, left),
        _ => {
            let meta = Meta {
                capacity: merge(left.capacity() + right.capacity()),
                depth: 1 + left.depth().max(right.depth()),
                full_leaves: left.full_leaves() + right.full_leaves(),
            };
            Arc::new(Node::Split { left, right, meta })
        }
    }
}

/// `len` left steps (right siblings empty) above `child`.
pub(crate) fn run(len: u64, child: Arc<Node>) -> Arc<Node> {
    if len == 0 {
        return child;
    }
    match &*child {
        Node::Empty => child,
        Node::Full => run(len - 1, split(child, empty_node())),
        Node::Run { len: inner, child: c, .. } => run(len + inner, Arc::clone(c)),
        Node::Split { .. } => {
            let c = child.capacity();
            let meta = Meta {
                capacity: c / (1.0 + len as f64 * c),
                depth: len + child.depth(),
                full_leaves: child.full_leaves(),
            };
            Arc::new(Node::Run { len, child, meta })
        }
    }
}

fn eq_nodes(a: &Arc<Node>, b: &Arc<Node>) -> bool {
    if Arc::ptr_eq(a, b) {
        return true;
    }
    match (&**a, &**b) {
        (Node::Empty, Node::Empty) | (Node::Full, Node::Full) => true,
        (
            Node::Split { left: al, right: ar, .. },
            Node::Split { left: bl, right: br, .. },
        ) => eq_nodes(al, bl) && eq_nodes(ar, br),
        (Node::Run { len: la, child: ca, .. }, Node::Run { len: lb, child: cb, .. }) => {
            la == lb && eq_nodes(ca, cb)
        }
        _ => false,
    }
}

fn union_nodes(a: &Arc<Node>, b: &Arc<Node>) -> Arc<Node> {
    if Arc::ptr_eq(a, b) {
        return Arc::clone(a);
    }
    match (&**a, &**b) {
        (Node::Full, _) | (_, Node::Full) => full_node(),
        (Node::Empty, _) => Arc::clone(b),
        (_, Node::Empty) => Arc::clone(a),
        (Node::Run { len: la, child: ca, .. }, Node::Run { len: lb, child: cb, .. }) => {
            let m = (*la).min(*lb);
            let inner = union_nodes(&run(la - m, Arc::clone(ca)), &run(lb - m, Arc::clone(cb)));
            run(m, inner)
        }
        _ => {
            let (al, ar) = a.children().expect("internal");
            let (bl, br) = b.children().expect("internal");
            split(union_nodes(&al, &bl), union_nodes(&ar, &br))
        }
    }
}

fn intersection_nodes(a: &Arc<Node>, b: &Arc<Node>) -> Arc<Node> {
    if Arc::ptr_eq(a, b) {
        return Arc::clone(a);
    }
    match (&**a, &**b) {
        (Node::Empty, _) | (_, Node::Empty) => empty_node(),
        (Node::Full, _) => Arc::clone(b),
        (_, Node::Full) => Arc::clone(a),
        (Node::Run { len: la, child: ca, .. }, Node::Run { len: lb, child: cb, .. }) => {
            let m = (*la).min(*lb);
            let inner =
                intersection_nodes(&run(la - m, Arc::clone(ca)), &run(lb - m, Arc::clone(cb)));
            run(m, inner)
        }
        _ => {
            let (al, ar) = a.children().expect("internal");
            let (bl, br) = b.children().expect("internal");
            split(intersection_nodes(&al, &bl), intersection_nodes(&ar, &br))
        }
    }
}

/// How a shadow `S(v)` meets a set.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Coverage {
    Empty,
    Full,
    Partial,
}

/// A closed subset of the boundary of the dyadic tree.
#[derive(Clone)]
pub struct BoundarySet {
    root: Arc<Node>,
}

impl std::fmt::Debug for BoundarySet {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self.full_leaves() {
            Ok(leaves) if leaves.len() <= 16 => {
                let leaves: Vec<String> = leaves.iter().map(|v| v.to_string()).collect();
                write!(f, "BoundarySet[{}]", leaves.join(" "))
            }
            _ => write!(
                f,
                "BoundarySet(resolution {}, {} full leaves)",
                self.resolution(),
                self.full_leaf_count()
            ),
        }
    }
}

impl PartialEq for BoundarySet {
    fn eq(&self, other: &Self) -> bool {
        eq_nodes(&self.root, &other.root)
    }
}

impl Eq for BoundarySet {}

impl BoundarySet {
    pub(crate) fn from_node(root: Arc<Node>) -> Self {
        BoundarySet { root }
    }

    pub(crate) fn node(&self) -> &Arc<Node> {
        &self.root
    }

    pub fn empty() -> Self {
        Self::from_node(empty_node())
    }

    /// The whole boundary.
    pub fn full() -> Self {
        Self::from_node(full_node())
    }

    /// The shadow `S(v)`: every boundary point whose geodesic passes through `v`.
    pub fn shadow(v: VertexId) -> Self {
        Self::full().place(v)
    }

    /// Join two sets as the left and right halves of a new boundary.
    pub fn join(left: &BoundarySet, right: &BoundarySet) -> Self {
        Self::from_node(split(Arc::clone(&left.root), Arc::clone(&right.root)))
    }

    /// Halves `(E ∩ S(o+), E ∩ S(o-))`, each rescaled to a whole boundary.
    /// `None` for the empty set and the full boundary.
    pub fn halves(&self) -> Option<(BoundarySet, BoundarySet)> {
        self.root
            .children()
            .map(|(l, r)| (Self::from_node(l), Self::from_node(r)))
    }

    /// Rescaled copy of `self` placed inside the shadow of `v`.
    pub fn place(&self, v: VertexId) -> Self {
        let mut node = Arc::clone(&self.root);
        for level in (0..v.level()).rev() {
            node = if v.turn_at(level) {
                split(empty_node(), node)
            } else {
                split(node, empty_node())
            };
        }
        Self::from_node(node)
    }

    /// A copy of `self` in every one of the `2^n` level-`n` shadows.
    pub fn replicate(&self, n: u32) -> Self {
        let mut node = Arc::clone(&self.root);
        for _ in 0..n {
            node = split(Arc::clone(&node), node);
        }
        Self::from_node(node)
    }

    /// The initial segment `Λ⁻¹([0, t])` of the boundary, closed.
    ///
    /// Along the binary expansion of `t`, every left sibling of the expansion
    /// path is a full shadow. The endpoint geodesic through `t` itself is a
    /// single point and carries no capacity, so it is not recorded.
    pub fn prefix(t: &Dyadic, max_resolution: u64) -> Result<Self> {
        if t.resolution() > max_resolution {
            return Err(Error::ResolutionOverflow {
                level: t.resolution(),
                max: max_resolution,
            });
        }
        if t.is_one() {
            return Ok(Self::full());
        }
        let mut node = empty_node();
        let ones = t.ones();
        for (i, &p) in ones.iter().enumerate().rev() {
            node = split(full_node(), node);
            let above = if i == 0 { 0 } else { ones[i - 1] };
            node = run(p - above - 1, node);
        }
        Ok(Self::from_node(node))
    }

    pub fn union(&self, other: &BoundarySet) -> Self {
        Self::from_node(union_nodes(&self.root, &other.root))
    }

    pub fn intersection(&self, other: &BoundarySet) -> Self {
        Self::from_node(intersection_nodes(&self.root, &other.root))
    }

    pub fn is_empty(&self) -> bool {
        matches!(*self.root, Node::Empty)
    }

    pub fn is_full(&self) -> bool {
        matches!(*self.root, Node::Full)
    }

    /// Depth of the trie.
    pub fn resolution(&self) -> u64 {
        self.root.depth()
    }

    /// Cached tree capacity of the set.
    pub fn capacity(&self) -> f64 {
        self.root.capacity()
    }

    pub fn full_leaf_count(&self) -> u64 {
        self.root.full_leaves()
    }

    /// The subset `E ∩ S(v)`, rescaled to a set in the subtree rooted at `v`.
    pub fn restrict(&self, v: VertexId) -> Self {
        let mut node = Arc::clone(&self.root);
        for level in 0..v.level() {
            match node.children() {
                None => break,
                Some((l, r)) => node = if v.turn_at(level) { r } else { l },
            }
        }
        Self::from_node(node)
    }

    pub fn coverage(&self, v: VertexId) -> Coverage {
        match *self.restrict(v).root {
            Node::Empty => Coverage::Empty,
            Node::Full => Coverage::Full,
            _ => Coverage::Partial,
        }
    }

    /// Visit every trie leaf (expanding runs) in left-to-right order.
    pub fn for_each_leaf(&self, mut f: impl FnMut(VertexId, Leaf)) -> Result<()> {
        fn walk(node: &Arc<Node>, v: VertexId, f: &mut impl FnMut(VertexId, Leaf)) -> Result<()> {
            match node.leaf() {
                Some(tag) => {
                    f(v, tag);
                    Ok(())
                }
                None => {
                    let (l, r) = node.children().expect("internal");
                    let (vl, vr) = v.children()?;
                    walk(&l, vl, f)?;
                    walk(&r, vr, f)
                }
            }
        }
        if self.resolution() > MAX_ADDRESSABLE_LEVEL as u64 {
            return Err(Error::ResolutionOverflow {
                level: self.resolution(),
                max: MAX_ADDRESSABLE_LEVEL as u64,
            });
        }
        walk(&self.root, VertexId::ROOT, &mut f)
    }

    /// Full leaves sorted by `(level, index)`.
    pub fn full_leaves(&self) -> Result<Vec<VertexId>> {
        let mut out = Vec::new();
        self.for_each_leaf(|v, tag| {
            if tag == Leaf::Full {
                out.push(v)
            }
        })?;
        out.sort_unstable();
        Ok(out)
    }

    /// Union of the shadows of `leaves`.
    pub fn from_leaves<I: IntoIterator<Item = VertexId>>(leaves: I) -> Self {
        leaves
            .into_iter()
            .fold(Self::empty(), |acc, v| acc.union(&Self::shadow(v)))
    }

    /// Text form: one `n:j` line per full leaf, sorted.
    pub fn to_text(&self) -> Result<String> {
        let mut out = String::new();
        for v in self.full_leaves()? {
            writeln!(out, "{v}").expect("write to string");
        }
        Ok(out)
    }

    /// Parse the text form. Blank lines and `#` comments are ignored.
    pub fn from_text(text: &str) -> Result<Self> {
        let leaves = text
            .lines()
            .map(|l| l.split('#').next().unwrap_or("").trim())
            .filter(|l| !l.is_empty())
            .map(str::parse)
            .collect::<Result<Vec<VertexId>>>()?;
        Ok(Self::from_leaves(leaves))
    }

    /// JSON form `[[n, j], ...]`.
    pub fn to_json(&self) -> Result<serde_json::Value> {
        Ok(serde_json::to_value(self.full_leaves()?)?)
    }

    pub fn from_json(value: &serde_json::Value) -> Result<Self> {
        let leaves: Vec<VertexId> = serde_json::from_value(value.clone())?;
        Ok(Self::from_leaves(leaves))
    }

    /// Parse either serialization, detected by the first non-blank character.
    pub fn parse_any(text: &str) -> Result<Self> {
        if text.trim_start().starts_with('[') {
            Self::from_json(&serde_json::from_str(text)?)
        } else {
            Self::from_text(text)
        }
    }
}

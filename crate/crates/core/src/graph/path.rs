use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use super::dag::{LayeredDag, VertexId};
use super::explore::{Explorer, Gate, Mark, QueryLedger};
use crate::error::{domain, Result};

/// A root-anchored path `r = u₀ → u₁ → … → u_l`, stored as the child index
/// taken at each step together with the vertex reached.
#[derive(Clone, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathSpec {
    pub steps: Vec<PathStep>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct PathStep {
    pub vertex: VertexId,
    pub child_index: usize,
}

impl PathSpec {
    pub fn empty() -> Self {
        Self::default()
    }

    pub fn push(&mut self, vertex: VertexId, child_index: usize) {
        self.steps.push(PathStep { vertex, child_index });
    }

    pub fn len(&self) -> usize {
        self.steps.len()
    }

    pub fn is_empty(&self) -> bool {
        self.steps.is_empty()
    }

    /// `[u₀, u₁, …, u_l]` for a path starting at `root`.
    pub fn vertices(&self, root: VertexId) -> Vec<VertexId> {
        std::iter::once(root).chain(self.steps.iter().map(|s| s.vertex)).collect()
    }

    /// Path from the root of `tree` to `target`, following parent links.
    pub fn to_vertex(tree: &LayeredDag, target: VertexId) -> Result<Self> {
        if !tree.contains(target) {
            return Err(domain(format!("unknown vertex id {target}")));
        }
        let mut rev = Vec::new();
        let mut v = target;
        while let Some(p) = tree.parent(v) {
            let idx = tree.children(p).iter().position(|&c| c == v).expect("child of its parent");
            rev.push(PathStep { vertex: v, child_index: idx });
            v = p;
        }
        rev.reverse();
        Ok(Self { steps: rev })
    }

    /// Checks that the path starts at the root and follows child links.
    pub fn validate(&self, tree: &LayeredDag) -> Result<()> {
        let mut u = tree.root();
        for s in &self.steps {
            match tree.children(u).get(s.child_index) {
                Some(&c) if c == s.vertex => u = c,
                _ => return Err(domain(format!("step to {} is not child {} of {u}", s.vertex, s.child_index))),
            }
        }
        Ok(())
    }

    /// Vertices of the restricted tree `T_m` in depth-first order.
    ///
    /// `T_m` holds the path vertices and the full subtrees of every child of
    /// `u_i` that precedes `u_{i+1}`. The last vertex `u_l` is kept without
    /// its children, so the set is exactly a prefix of the depth-first order.
    pub fn restricted_vertices(&self, tree: &LayeredDag) -> Result<Vec<VertexId>> {
        self.validate(tree)?;
        let mut out = Vec::new();
        let mut u = tree.root();
        for s in &self.steps {
            out.push(u);
            for &c in &tree.children(u)[..s.child_index] {
                dfs_into(tree, c, &mut out);
            }
            u = s.vertex;
        }
        out.push(u);
        Ok(out)
    }

    /// Membership mask over `1..=V` for [`restricted_vertices`](Self::restricted_vertices).
    pub fn restricted_mask(&self, tree: &LayeredDag) -> Result<Vec<bool>> {
        let mut mask = vec![false; tree.vertex_count() + 1];
        for v in self.restricted_vertices(tree)? {
            mask[v] = true;
        }
        Ok(mask)
    }
}

fn dfs_into(tree: &LayeredDag, v: VertexId, out: &mut Vec<VertexId>) {
    let mut stack = vec![v];
    while let Some(u) = stack.pop() {
        out.push(u);
        stack.extend(tree.children(u).iter().rev());
    }
}

/// Black-box view of the restricted tree `T_m` of an underlying explorer.
///
/// At a path vertex `u_i` only the children up to and including `u_{i+1}`
/// are visible, and the last path vertex appears as a leaf. All other
/// queries pass through and are charged to the underlying ledger.
pub struct RestrictedView<'a> {
    inner: &'a dyn Explorer,
    /// Visible child count at each path vertex.
    cut: HashMap<VertexId, usize>,
    last: VertexId,
}

impl<'a> RestrictedView<'a> {
    pub fn new(inner: &'a dyn Explorer, path: &PathSpec) -> Result<Self> {
        let mut cut = HashMap::new();
        let mut u = inner.root();
        for s in &path.steps {
            let k = inner.child_count(u)?;
            if s.child_index >= k || inner.child(u, s.child_index)? != s.vertex {
                return Err(domain(format!("step to {} is not child {} of {u}", s.vertex, s.child_index)));
            }
            cut.insert(u, s.child_index + 1);
            u = s.vertex;
        }
        Ok(Self { inner, cut, last: u })
    }
}

impl Explorer for RestrictedView<'_> {
    fn root(&self) -> VertexId {
        self.inner.root()
    }

    fn child_count(&self, v: VertexId) -> Result<usize> {
        let k = self.inner.child_count(v)?;
        Ok(if v == self.last { 0 } else { self.cut.get(&v).map_or(k, |&c| c.min(k)) })
    }

    fn child(&self, v: VertexId, i: usize) -> Result<VertexId> {
        let visible = if v == self.last { 0 } else { self.cut.get(&v).copied().unwrap_or(usize::MAX) };
        if i >= visible {
            return Err(domain(format!("child {i} of {v} is hidden")));
        }
        self.inner.child(v, i)
    }

    fn parent_count(&self, v: VertexId) -> Result<usize> {
        self.inner.parent_count(v)
    }

    fn parent(&self, v: VertexId, i: usize) -> Result<VertexId> {
        self.inner.parent(v, i)
    }

    fn gate(&self, v: VertexId) -> Result<Option<Gate>> {
        self.inner.gate(v)
    }

    fn leaf_value(&self, v: VertexId) -> Result<Option<bool>> {
        self.inner.leaf_value(v)
    }

    fn mark(&self, v: VertexId) -> Result<Mark> {
        self.inner.mark(v)
    }

    fn ledger(&self) -> QueryLedger {
        self.inner.ledger()
    }

    fn charge_controlled_u(&self, count: u64) {
        self.inner.charge_controlled_u(count)
    }
}

use std::collections::{HashSet, VecDeque};

use serde::{Deserialize, Serialize};

use crate::error::{domain, Result};

/// 1-based vertex identifier. The root is always vertex 1.
pub type VertexId = usize;

/// A rooted layered DAG, validated at construction and immutable afterwards.
///
/// Edges are stored in insertion order, and the children of a vertex are
/// listed in the order their edges were inserted. That order is the visiting
/// order of the classical backtracking algorithm.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct LayeredDag {
    vertex_count: usize,
    edges: Vec<(VertexId, VertexId)>,
    children: Vec<Vec<VertexId>>,
    parents: Vec<Vec<VertexId>>,
    child_edges: Vec<Vec<usize>>,
    parent_edges: Vec<Vec<usize>>,
    layer: Vec<usize>,
    depth: usize,
}

impl LayeredDag {
    /// Builds and validates a graph on vertices `1..=vertex_count` rooted at 1.
    pub fn new(vertex_count: usize, edges: Vec<(VertexId, VertexId)>) -> Result<Self> {
        if vertex_count == 0 {
            return Err(domain("graph needs at least one vertex"));
        }
        let mut children = vec![Vec::new(); vertex_count + 1];
        let mut parents = vec![Vec::new(); vertex_count + 1];
        let mut child_edges = vec![Vec::new(); vertex_count + 1];
        let mut parent_edges = vec![Vec::new(); vertex_count + 1];
        let mut seen = HashSet::with_capacity(edges.len());
        for (k, &(u, v)) in edges.iter().enumerate() {
            if u == 0 || v == 0 || u > vertex_count || v > vertex_count {
                return Err(domain(format!("edge ({u},{v}) references an unknown vertex")));
            }
            if u == v {
                return Err(domain(format!("self loop at vertex {u}")));
            }
            if !seen.insert((u, v)) {
                return Err(domain(format!("duplicate edge ({u},{v})")));
            }
            children[u].push(v);
            parents[v].push(u);
            child_edges[u].push(k);
            parent_edges[v].push(k);
        }
        if !parents[1].is_empty() {
            return Err(domain("the root must not have incoming edges"));
        }

        let mut layer = vec![usize::MAX; vertex_count + 1];
        layer[1] = 0;
        let mut queue = VecDeque::from([1usize]);
        while let Some(u) = queue.pop_front() {
            for &v in &children[u] {
                if layer[v] == usize::MAX {
                    layer[v] = layer[u] + 1;
                    queue.push_back(v);
                }
            }
        }
        if let Some(v) = (1..=vertex_count).find(|&v| layer[v] == usize::MAX) {
            return Err(domain(format!("vertex {v} is not reachable from the root")));
        }
        for &(u, v) in &edges {
            if layer[v] != layer[u] + 1 {
                return Err(domain(format!("edge ({u},{v}) joins layers {} and {}", layer[u], layer[v])));
            }
        }
        layer[0] = 0;
        let depth = layer[1..].iter().copied().max().unwrap_or(0);
        Ok(Self { vertex_count, edges, children, parents, child_edges, parent_edges, layer, depth })
    }

    /// Builds a tree from a parent list: `parents[k]` is the parent of vertex `k + 2`.
    pub fn from_parents(parents: &[VertexId]) -> Result<Self> {
        let edges = parents.iter().enumerate().map(|(k, &p)| (p, k + 2)).collect();
        Self::new(parents.len() + 1, edges)
    }

    pub fn vertex_count(&self) -> usize {
        self.vertex_count
    }

    pub fn root(&self) -> VertexId {
        1
    }

    /// Number of edges `T`.
    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Edges in insertion order; edge `k` is basis vector `e_{k+1}` of the walk.
    pub fn edges(&self) -> &[(VertexId, VertexId)] {
        &self.edges
    }

    /// Depth `n`, the largest layer index.
    pub fn depth(&self) -> usize {
        self.depth
    }

    /// Distance `ℓ(v)` from the root.
    pub fn layer(&self, v: VertexId) -> usize {
        self.layer[v]
    }

    pub fn contains(&self, v: VertexId) -> bool {
        (1..=self.vertex_count).contains(&v)
    }

    pub fn vertices(&self) -> impl Iterator<Item = VertexId> {
        1..=self.vertex_count
    }

    pub fn children(&self, v: VertexId) -> &[VertexId] {
        &self.children[v]
    }

    pub fn parents(&self, v: VertexId) -> &[VertexId] {
        &self.parents[v]
    }

    /// Indices of the edges leaving `v`, aligned with [`children`](Self::children).
    pub fn child_edges(&self, v: VertexId) -> &[usize] {
        &self.child_edges[v]
    }

    /// Indices of the edges entering `v`, aligned with [`parents`](Self::parents).
    pub fn parent_edges(&self, v: VertexId) -> &[usize] {
        &self.parent_edges[v]
    }

    /// Total degree `d_v`, counting edges in both directions.
    pub fn degree(&self, v: VertexId) -> usize {
        self.children[v].len() + self.parents[v].len()
    }

    /// Maximum total degree `d`.
    pub fn max_degree(&self) -> usize {
        self.vertices().map(|v| self.degree(v)).max().unwrap_or(0)
    }

    pub fn max_out_degree(&self) -> usize {
        self.vertices().map(|v| self.children[v].len()).max().unwrap_or(0)
    }

    /// Indices of all edges incident to `v`, the set `N(v)`.
    pub fn incident_edges(&self, v: VertexId) -> impl Iterator<Item = usize> + '_ {
        self.parent_edges[v].iter().chain(self.child_edges[v].iter()).copied()
    }

    /// Every non-root vertex has exactly one parent.
    pub fn is_tree(&self) -> bool {
        self.vertices().skip(1).all(|v| self.parents[v].len() == 1)
    }

    pub fn is_leaf(&self, v: VertexId) -> bool {
        self.children[v].is_empty()
    }

    pub fn parent(&self, v: VertexId) -> Option<VertexId> {
        self.parents[v].first().copied()
    }

    /// Even/odd split of the vertices by layer parity.
    pub fn even_odd_partition(&self) -> EvenOddPartition {
        let (set_a, set_b) = self.vertices().partition(|&v| self.layer[v].is_multiple_of(2));
        EvenOddPartition { set_a, set_b }
    }

    /// Number of vertices in the sub-DAG reachable from `v`, including `v`.
    pub fn reachable_count(&self, v: VertexId) -> usize {
        self.reachable_from(v).len()
    }

    /// Vertices reachable from `v` in breadth-first order.
    pub fn reachable_from(&self, v: VertexId) -> Vec<VertexId> {
        let mut seen = vec![false; self.vertex_count + 1];
        let mut out = vec![v];
        seen[v] = true;
        let mut k = 0;
        while k < out.len() {
            let u = out[k];
            k += 1;
            for &w in &self.children[u] {
                if !seen[w] {
                    seen[w] = true;
                    out.push(w);
                }
            }
        }
        out
    }

    /// The sub-DAG reachable from `v`, relabelled so that `v` becomes the root.
    /// Returns the graph and the map from new ids to old ids (index 0 unused).
    pub fn subgraph_from(&self, v: VertexId) -> (LayeredDag, Vec<VertexId>) {
        let order = self.reachable_from(v);
        self.induced(&order)
    }

    /// The graph induced on `vertices`, whose first entry becomes the root.
    /// Edge order follows the order of `vertices` and then the child order.
    pub(crate) fn induced(&self, vertices: &[VertexId]) -> (LayeredDag, Vec<VertexId>) {
        let mut new_id = vec![0usize; self.vertex_count + 1];
        for (k, &u) in vertices.iter().enumerate() {
            new_id[u] = k + 1;
        }
        let mut edges = Vec::new();
        for &u in vertices {
            for &w in &self.children[u] {
                if new_id[w] != 0 {
                    edges.push((new_id[u], new_id[w]));
                }
            }
        }
        let dag = LayeredDag::new(vertices.len(), edges).expect("induced subgraph stays layered");
        let mut map = vec![0];
        map.extend_from_slice(vertices);
        (dag, map)
    }
}

/// Vertices at even and odd distance from the root.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct EvenOddPartition {
    /// Even layers, ascending ids; the root comes first.
    pub set_a: Vec<VertexId>,
    /// Odd layers, ascending ids.
    pub set_b: Vec<VertexId>,
}

impl EvenOddPartition {
    pub fn a(&self) -> usize {
        self.set_a.len()
    }

    pub fn b(&self) -> usize {
        self.set_b.len()
    }
}

//! Seeded random and structured instance generators.

use rand::seq::IndexedRandom;
use rand::Rng;

use super::dag::{LayeredDag, VertexId};
use crate::error::{domain, parameter, Result};
use crate::rng::stream;

/// Limit on the number of children a generated vertex may receive.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Branching {
    /// At most two children.
    Binary,
    /// At most `d` children.
    UpTo(usize),
}

impl Branching {
    fn cap(self) -> usize {
        match self {
            Branching::Binary => 2,
            Branching::UpTo(d) => d,
        }
    }
}

/// Largest tree with the given depth and branching cap, saturating.
fn capacity(depth: usize, cap: usize) -> usize {
    let mut total: usize = 1;
    let mut level: usize = 1;
    for _ in 0..depth {
        level = level.saturating_mul(cap);
        total = total.saturating_add(level);
    }
    total
}

/// Random tree with exactly `vertex_budget` vertices and depth at most
/// `depth_bound`. New vertices attach to a uniformly chosen open vertex, and
/// ids are assigned in creation order.
pub fn random_tree(vertex_budget: usize, depth_bound: usize, branching: Branching, seed: u64) -> Result<LayeredDag> {
    if vertex_budget == 0 {
        return Err(parameter("vertex budget must be positive"));
    }
    let cap = branching.cap();
    if cap == 0 && vertex_budget > 1 {
        return Err(domain("branching cap 0 admits only the single-vertex tree"));
    }
    if capacity(depth_bound, cap) < vertex_budget {
        return Err(domain(format!(
            "no tree with {vertex_budget} vertices has depth <= {depth_bound} and branching <= {cap}"
        )));
    }
    let mut rng = stream(seed, 0x7472_6565);
    let mut layer = vec![0usize, 0];
    let mut out = vec![0usize, 0];
    let mut open: Vec<VertexId> = if depth_bound > 0 { vec![1] } else { vec![] };
    let mut edges = Vec::with_capacity(vertex_budget - 1);
    for v in 2..=vertex_budget {
        let k = rng.random_range(0..open.len());
        let u = open[k];
        edges.push((u, v));
        layer.push(layer[u] + 1);
        out.push(0);
        out[u] += 1;
        if out[u] == cap {
            open.swap_remove(k);
        }
        if layer[v] < depth_bound {
            open.push(v);
        }
    }
    LayeredDag::new(vertex_budget, edges)
}

/// Random layered DAG: a random tree plus extra edges between consecutive
/// layers, each candidate pair kept with probability `extra_edge_prob`.
pub fn random_layered_dag(
    vertex_budget: usize,
    depth_bound: usize,
    branching: Branching,
    extra_edge_prob: f64,
    seed: u64,
) -> Result<LayeredDag> {
    if !(0.0..=1.0).contains(&extra_edge_prob) {
        return Err(parameter("extra edge probability must lie in [0, 1]"));
    }
    let tree = random_tree(vertex_budget, depth_bound, branching, seed)?;
    let mut rng = stream(seed, 0x0064_6167);
    let mut by_layer: Vec<Vec<VertexId>> = vec![Vec::new(); tree.depth() + 1];
    for v in tree.vertices() {
        by_layer[tree.layer(v)].push(v);
    }
    let mut edges = tree.edges().to_vec();
    for l in 0..tree.depth() {
        for &u in &by_layer[l] {
            for &w in &by_layer[l + 1] {
                if tree.parent(w) != Some(u) && rng.random_bool(extra_edge_prob) {
                    edges.push((u, w));
                }
            }
        }
    }
    LayeredDag::new(vertex_budget, edges)
}

/// A random tree plus one chord to a vertex in the next layer from a
/// non-parent, when such a pair exists.
pub fn tree_with_chord(
    vertex_budget: usize,
    depth_bound: usize,
    branching: Branching,
    seed: u64,
) -> Result<LayeredDag> {
    let tree = random_tree(vertex_budget, depth_bound, branching, seed)?;
    let mut rng = stream(seed, 0x6368_6f72);
    let candidates: Vec<(VertexId, VertexId)> = tree
        .vertices()
        .flat_map(|u| tree.vertices().map(move |w| (u, w)))
        .filter(|&(u, w)| tree.layer(w) == tree.layer(u) + 1 && tree.parent(w) != Some(u))
        .collect();
    let mut edges = tree.edges().to_vec();
    if let Some(&e) = candidates.choose(&mut rng) {
        edges.push(e);
    }
    LayeredDag::new(vertex_budget, edges)
}

/// Path `v1 - v2 - ... - v_len`.
pub fn path(len: usize) -> Result<LayeredDag> {
    LayeredDag::new(len, (1..len).map(|v| (v, v + 1)).collect())
}

/// Root with `k` leaf children.
pub fn star(k: usize) -> Result<LayeredDag> {
    LayeredDag::new(k + 1, (2..=k + 1).map(|v| (1, v)).collect())
}

/// Complete binary tree of the given depth in heap numbering.
pub fn complete_binary(depth: usize) -> Result<LayeredDag> {
    let v = (1usize << (depth + 1)) - 1;
    LayeredDag::new(v, (2..=v).map(|w| (w / 2, w)).collect())
}

/// Random full binary tree with `leaves` leaves: a uniformly chosen leaf of
/// depth below `depth_bound` is split until the leaf count is reached.
pub fn random_full_binary(leaves: usize, depth_bound: usize, seed: u64) -> Result<LayeredDag> {
    if leaves == 0 {
        return Err(parameter("a tree needs at least one leaf"));
    }
    if depth_bound < usize::BITS as usize && (1usize << depth_bound) < leaves {
        return Err(domain(format!("{leaves} leaves do not fit below depth {depth_bound}")));
    }
    let mut rng = stream(seed, 0x0066_6269);
    let mut layer = vec![0usize, 0];
    let mut open: Vec<VertexId> = if depth_bound > 0 { vec![1] } else { vec![] };
    let mut edges = Vec::with_capacity(2 * leaves);
    let mut count = 1;
    for _ in 1..leaves {
        let k = rng.random_range(0..open.len());
        let u = open.swap_remove(k);
        for _ in 0..2 {
            count += 1;
            edges.push((u, count));
            layer.push(layer[u] + 1);
            if layer[count] < depth_bound {
                open.push(count);
            }
        }
    }
    LayeredDag::new(count, edges)
}

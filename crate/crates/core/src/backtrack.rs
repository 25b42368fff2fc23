//! Backtracking search accelerated by quantum walks.
//!
//! Detection runs phase estimation on the marked walk: marked vertices make
//! their diffusion trivial, which creates a 1-eigenvector overlapping the
//! anchor state. The doubling search grows a depth-first prefix `T_m` of the
//! tree, located by [`generate_path`], and runs detection on it, so the cost
//! depends on how early the classical order would reach a solution.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

use crate::error::{parameter, Result};
use crate::graph::{explore_from, Explorer, Mark, PathSpec, RestrictedView, VertexId};
use crate::measure::PhaseSpectrum;
use crate::qpe::sample_bin;
use crate::rng::{fork, StreamRng};
use crate::size::{SizeOutcome, VertexSizeOracle};
use crate::walk::build_reflections;

/// Outcome of one detection call.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Detection {
    pub marked: bool,
    pub zero_votes: u64,
    pub runs: u64,
    pub controlled_u: u64,
    /// Vertices of the explored tree.
    pub explored_vertices: usize,
}

/// Window bits `⌈log₂ √(T₁ n)⌉ + 3`.
pub fn detection_bits(t1: f64, n: u64) -> u32 {
    ((t1 * n as f64).sqrt().log2().ceil().max(0.0) as u32) + 3
}

/// Votes `2⌈ln(1/ε)⌉ + 1`.
pub fn detection_runs(epsilon: f64) -> u64 {
    2 * (1.0 / epsilon).ln().ceil().max(0.0) as u64 + 1
}

/// Controlled-U cost of one detection with these bounds.
pub fn detection_cost(t1: f64, n: u64, epsilon: f64) -> u64 {
    (1u64 << detection_bits(t1, n)) * detection_runs(epsilon)
}

/// Decides whether the tree behind `ex` contains a marked vertex.
///
/// The walk uses `α² = 8n`, so the anchor state has squared overlap at least
/// `8/9` with the 1-eigenspace when a marked vertex exists. Each independent
/// run lands in the zero bin with at least that probability; without marks
/// the smallest phase is at least `2/√(9nT)`, which keeps the zero-bin
/// probability near 5%. The answer is the strict majority of the runs.
pub fn detect_marked(ex: &dyn Explorer, t1: f64, n: u64, epsilon: f64, rng: &mut StreamRng) -> Result<Detection> {
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(parameter(format!("epsilon must lie in (0,1), got {epsilon}")));
    }
    if !(t1 >= 1.0) || n < 1 {
        return Err(parameter("size and depth bounds must be at least 1"));
    }
    let explored = explore_from(ex, ex.root())?;
    let mut marked = BTreeSet::new();
    for (local, &global) in explored.global.iter().enumerate().skip(1) {
        if ex.mark(global)? == Mark::Marked {
            marked.insert(local);
        }
    }
    let vertices = explored.dag.vertex_count();
    if explored.dag.edge_count() == 0 {
        // A lone root is decided by its predicate.
        let m = !marked.is_empty();
        return Ok(Detection { marked: m, zero_votes: 0, runs: 0, controlled_u: 0, explored_vertices: vertices });
    }
    let alpha = (8.0 * n as f64).sqrt();
    let ops = build_reflections(&explored.dag, alpha, &marked)?;
    let spectrum = PhaseSpectrum::of_walk_anchor(&ops)?;
    let m = 1u64 << detection_bits(t1, n);
    let runs = detection_runs(epsilon);
    let mut zero_votes = 0;
    for _ in 0..runs {
        let j = spectrum.sample_component(rng);
        if sample_bin(spectrum.phases()[j], m, rng) == 0 {
            zero_votes += 1;
        }
    }
    let cost = m * runs;
    ex.charge_controlled_u(cost);
    Ok(Detection { marked: 2 * zero_votes > runs, zero_votes, runs, controlled_u: cost, explored_vertices: vertices })
}

/// Follows last children from `v` down to a leaf.
fn path_to_last(ex: &dyn Explorer, mut v: VertexId, path: &mut PathSpec) -> Result<()> {
    loop {
        let k = ex.child_count(v)?;
        if k == 0 {
            return Ok(());
        }
        let c = ex.child(v, k - 1)?;
        path.push(c, k - 1);
        v = c;
    }
}

/// Locates the path to the `m`-th vertex of the depth-first order below `v`.
///
/// At each vertex the subtree sizes of the children are estimated in order
/// with precision `1 ± δ`, failure `ε/n`, and bound `(m−1)/(1−δ)`. The walk
/// descends into the first child whose subtree would contain the target;
/// the last child is entered without an estimate. Steps are appended to
/// `path`, which must end at `v`.
#[allow(clippy::too_many_arguments)]
pub fn generate_path(
    ex: &dyn Explorer,
    v: VertexId,
    m: u64,
    delta: f64,
    epsilon: f64,
    n: u64,
    oracle: &dyn VertexSizeOracle,
    rng: &mut StreamRng,
) -> Result<PathSpec> {
    if m < 1 {
        return Err(parameter("m must be at least 1"));
    }
    if !(delta > 0.0 && delta < 1.0) || !(epsilon > 0.0 && epsilon < 1.0) || n < 1 {
        return Err(parameter("generate_path needs delta, epsilon in (0,1) and n >= 1"));
    }
    let mut path = PathSpec::empty();
    let (mut v, mut m) = (v, m);
    let per_call = epsilon / n as f64;
    'descend: loop {
        let k = ex.child_count(v)?;
        if k == 0 || m == 1 {
            return Ok(path);
        }
        // Vertices still needed below v.
        let mut rest = m - 1;
        for i in 0..k {
            let c = ex.child(v, i)?;
            if i + 1 == k {
                path.push(c, i);
                v = c;
                m = rest;
                continue 'descend;
            }
            let bound = ((rest as f64) / (1.0 - delta)).floor() as u64;
            let est = oracle.subtree_vertices(ex, c, bound.max(rest), n, delta, per_call, rng)?;
            match est {
                SizeOutcome::Exceeds(_) => {
                    path.push(c, i);
                    v = c;
                    m = rest;
                    continue 'descend;
                }
                SizeOutcome::Value(s) if s > rest => {
                    path.push(c, i);
                    v = c;
                    m = rest;
                    continue 'descend;
                }
                SizeOutcome::Value(s) if s == rest => {
                    path.push(c, i);
                    path_to_last(ex, c, &mut path)?;
                    return Ok(path);
                }
                SizeOutcome::Value(s) => rest -= s,
            }
        }
        unreachable!("the last child always ends the scan");
    }
}

/// Options of the doubling search.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchConfig {
    /// Switch to whole-tree detection once the staged cost exceeds its budget.
    pub cutover: bool,
}

impl Default for SearchConfig {
    fn default() -> Self {
        Self { cutover: true }
    }
}

/// Record of one stage of the doubling search.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StageRecord {
    pub i: u32,
    pub m_target: u64,
    pub m_realized: usize,
    pub detect_outcome: bool,
    /// Controlled-U applications spent in this stage.
    pub controlled_u_count: u64,
    pub whole_tree: bool,
    pub path: PathSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SearchResult {
    pub found: bool,
    pub stage_reached: u32,
    pub cutover_used: bool,
    pub controlled_u_total: u64,
    pub ledger: crate::graph::QueryLedger,
    pub stages: Vec<StageRecord>,
}

/// Whether `path` ends at the last vertex of the depth-first order.
fn covers_whole_tree(ex: &dyn Explorer, path: &PathSpec) -> Result<bool> {
    let mut u = ex.root();
    for s in &path.steps {
        if s.child_index + 1 != ex.child_count(u)? {
            return Ok(false);
        }
        u = s.vertex;
    }
    Ok(ex.child_count(u)? == 0)
}

/// Doubling search: stage `i` locates `T_{2^i}` with `δ = 1/2` and runs
/// detection on it with bound `(3/2)·2^i`, stopping at the first detection or
/// once the prefix covers the tree.
pub fn search(
    ex: &dyn Explorer,
    t1: u64,
    n: u64,
    epsilon: f64,
    config: SearchConfig,
    oracle: &dyn VertexSizeOracle,
    rng: &mut StreamRng,
) -> Result<SearchResult> {
    if t1 < 1 || n < 1 {
        return Err(parameter("T1 and n must be at least 1"));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) {
        return Err(parameter(format!("epsilon must lie in (0,1), got {epsilon}")));
    }
    let start = ex.ledger();
    let log_t1 = (t1 as f64).log2().ceil().max(1.0);
    let eps_stage = epsilon / (2.0 * log_t1);
    let budget = detection_cost(t1 as f64, n, epsilon);
    let last_stage = log_t1 as u32 + 2;
    let mut stages = Vec::new();
    let spent = |ex: &dyn Explorer| ex.ledger().controlled_u - start.controlled_u;

    let finish = |stages: Vec<StageRecord>, found: bool, cutover: bool, ex: &dyn Explorer| SearchResult {
        found,
        stage_reached: stages.last().map_or(0, |s: &StageRecord| s.i),
        cutover_used: cutover,
        controlled_u_total: ex.ledger().controlled_u - start.controlled_u,
        ledger: ex.ledger().since(&start),
        stages,
    };

    for i in 1..=last_stage {
        let before = spent(ex);
        let m = 1u64 << i;
        let mut sub = fork(rng);
        let path = generate_path(ex, ex.root(), m, 0.5, eps_stage, n, oracle, &mut sub)?;
        let view = RestrictedView::new(ex, &path)?;
        let det = detect_marked(&view, 1.5 * m as f64, n, eps_stage, &mut sub)?;
        let whole = covers_whole_tree(ex, &path)?;
        stages.push(StageRecord {
            i,
            m_target: m,
            m_realized: det.explored_vertices,
            detect_outcome: det.marked,
            controlled_u_count: spent(ex) - before,
            whole_tree: whole,
            path,
        });
        if det.marked || whole {
            return Ok(finish(stages, det.marked, false, ex));
        }
        if config.cutover && spent(ex) > budget {
            break;
        }
    }
    // Either the budget ran out or the prefixes never covered the tree.
    let before = spent(ex);
    let det = detect_marked(ex, t1 as f64, n, epsilon, rng)?;
    let cutover = config.cutover && before > budget;
    stages.push(StageRecord {
        i: stages.last().map_or(1, |s| s.i + 1),
        m_target: t1,
        m_realized: det.explored_vertices,
        detect_outcome: det.marked,
        controlled_u_count: spent(ex) - before,
        whole_tree: true,
        path: PathSpec::empty(),
    });
    Ok(finish(stages, det.marked, cutover, ex))
}

//! Evaluation of AND-OR formulas whose tree shape is unknown.
//!
//! The top of the formula is cut out as a heavy-element subtree: every vertex
//! whose subtree is large, plus its children. That part is evaluated by a
//! known-structure evaluator, and each frontier leaf is itself evaluated
//! recursively with a smaller size threshold. Level 1 explores exhaustively.
//!
//! The known-structure evaluator is modelled by its contract: it returns the
//! right value with probability at least `1 − ε` and charges
//! `⌈κ √(s n) ln(1/ε)⌉` queries for a formula of size `s`.

use std::collections::{HashMap, HashSet};

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, parameter, Result};
use crate::graph::{explore_from, Explorer, Gate, LayeredDag, VertexId};
use crate::oracles::subtree_sizes;
use crate::rng::{fork, StreamRng};
use crate::size::{SizeOutcome, VertexSizeOracle};

/// Behaviour of the known-structure evaluator.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EvaluatorMode {
    /// Always returns the formula value.
    Exact,
    /// Flips the value with probability equal to the requested failure bound.
    Noisy,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct KnownEvaluatorModel {
    pub mode: EvaluatorMode,
    pub kappa: f64,
}

impl KnownEvaluatorModel {
    pub fn exact() -> Self {
        Self { mode: EvaluatorMode::Exact, kappa: 1.0 }
    }

    pub fn noisy() -> Self {
        Self { mode: EvaluatorMode::Noisy, kappa: 1.0 }
    }

    /// Queries charged for a formula of `s` vertices at failure `epsilon`.
    pub fn cost(&self, s: usize, n: u64, epsilon: f64) -> u64 {
        (self.kappa * ((s as f64) * n as f64).sqrt() * (1.0 / epsilon).ln()).ceil().max(1.0) as u64
    }

    /// Returns the reported value and the number of leaf queries charged.
    pub fn evaluate(&self, truth: bool, s: usize, n: u64, epsilon: f64, rng: &mut impl Rng) -> (bool, u64) {
        let flip = self.mode == EvaluatorMode::Noisy && rng.random_bool(epsilon.clamp(0.0, 1.0));
        (truth ^ flip, self.cost(s, n, epsilon))
    }
}

/// A root-containing subtree produced by the heavy-subtree procedure.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct HeavySubtree {
    pub root: VertexId,
    /// Members in discovery order.
    pub members: Vec<VertexId>,
    pub parent: HashMap<VertexId, VertexId>,
    /// Members whose children were all added.
    pub expanded: HashSet<VertexId>,
    /// Members that have children outside the subtree.
    pub frontier: Vec<VertexId>,
    /// Members that are leaves of the whole tree.
    pub leaves: Vec<VertexId>,
    /// The size cap stopped the exploration.
    pub capped: bool,
}

impl HeavySubtree {
    pub fn size(&self) -> usize {
        self.members.len()
    }
}

/// Hard size cap `⌊6Tn/m⌋`.
pub fn heavy_cap(t: f64, n: u64, m: u64) -> usize {
    ((6.0 * t * n as f64 / m as f64).floor() as usize).max(1)
}

/// Extracts an `m`-heavy element subtree below `r`.
///
/// Each visited vertex has its subtree size estimated with `δ = 1/4`,
/// failure `mε/(6nT)`, and bound `m`; its children are visited when the
/// estimate is at least `2m/3`. Exploration stops at `6Tn/m` vertices.
#[allow(clippy::too_many_arguments)]
pub fn heavy_subtree(
    ex: &dyn Explorer,
    r: VertexId,
    m: u64,
    epsilon: f64,
    t: f64,
    n: u64,
    oracle: &dyn VertexSizeOracle,
    rng: &mut StreamRng,
) -> Result<HeavySubtree> {
    if m < 2 {
        return Err(parameter("m must be at least 2"));
    }
    if !(epsilon > 0.0 && epsilon < 1.0) || !(t >= 1.0) || n < 1 {
        return Err(parameter("heavy_subtree needs epsilon in (0,1), T >= 1, n >= 1"));
    }
    let cap = heavy_cap(t, n, m);
    let eps_node = (m as f64 * epsilon / (6.0 * n as f64 * t)).min(0.5);
    let threshold = 2.0 * m as f64 / 3.0;
    let mut h = HeavySubtree {
        root: r,
        members: vec![r],
        parent: HashMap::new(),
        expanded: HashSet::new(),
        frontier: Vec::new(),
        leaves: Vec::new(),
        capped: false,
    };
    // Depth-first over (vertex, children, next child index).
    let mut stack: Vec<(VertexId, Vec<VertexId>, usize)> = Vec::new();
    let visit = |v: VertexId, h: &mut HeavySubtree, rng: &mut StreamRng| -> Result<Option<Vec<VertexId>>> {
        let heavy = match oracle.subtree_vertices(ex, v, m, n, 0.25, eps_node, rng)? {
            SizeOutcome::Exceeds(_) => true,
            SizeOutcome::Value(s) => s as f64 >= threshold,
        };
        if !heavy {
            return Ok(None);
        }
        let kids = ex.children(v)?;
        if kids.is_empty() {
            return Ok(None);
        }
        h.expanded.insert(v);
        Ok(Some(kids))
    };
    if let Some(kids) = visit(r, &mut h, rng)? {
        stack.push((r, kids, 0));
    }
    'outer: while let Some(top) = stack.last_mut() {
        if top.2 == top.1.len() {
            stack.pop();
            continue;
        }
        let (u, c) = (top.0, top.1[top.2]);
        top.2 += 1;
        if h.members.len() >= cap {
            h.capped = true;
            break 'outer;
        }
        h.members.push(c);
        h.parent.insert(c, u);
        if let Some(kids) = visit(c, &mut h, rng)? {
            stack.push((c, kids, 0));
        }
    }
    // Vertices whose children were not all added are not expanded.
    let added: HashSet<VertexId> = h.members.iter().copied().collect();
    let mut incomplete = Vec::new();
    for &v in &h.expanded {
        let k = ex.child_count(v)?;
        if (0..k).any(|i| ex.child(v, i).map(|c| !added.contains(&c)).unwrap_or(true)) {
            incomplete.push(v);
        }
    }
    for v in incomplete {
        h.expanded.remove(&v);
    }
    for &v in &h.members {
        if !h.expanded.contains(&v) {
            if ex.child_count(v)? == 0 {
                h.leaves.push(v);
            } else {
                h.frontier.push(v);
            }
        }
    }
    Ok(h)
}

/// Checks the two clauses of the `m`-heavy definition with exact subtree
/// sizes. Clause 1: every `x` with `|T(x)| ≥ m` is present with all its
/// children. Clause 2: every member other than the root has `|T(y)| ≥ m/2`
/// or a parent with `|T(x)| ≥ m/2`.
pub fn is_heavy_subtree(candidate: &HashSet<VertexId>, tree: &LayeredDag, m: u64) -> Result<bool> {
    if !tree.is_tree() {
        return Err(domain("heavy subtrees are defined on trees"));
    }
    if !candidate.contains(&tree.root()) {
        return Err(domain("candidate must contain the root"));
    }
    for &v in candidate {
        if !tree.contains(v) {
            return Err(domain(format!("unknown vertex {v}")));
        }
        if let Some(p) = tree.parent(v) {
            if !candidate.contains(&p) {
                return Err(domain("candidate must be connected"));
            }
        }
    }
    let size = subtree_sizes(tree);
    let m = m as f64;
    for x in tree.vertices() {
        if size[x] as f64 >= m && (!candidate.contains(&x) || tree.children(x).iter().any(|c| !candidate.contains(c))) {
            return Ok(false);
        }
    }
    for &y in candidate {
        if y == tree.root() {
            continue;
        }
        let p = tree.parent(y).expect("non-root has a parent");
        if (size[y] as f64) < m / 2.0 && (size[p] as f64) < m / 2.0 {
            return Ok(false);
        }
    }
    Ok(true)
}

/// Evaluation result with its modelled query cost.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalOutcome {
    pub value: bool,
    pub measured_queries: f64,
    pub ledger: crate::graph::QueryLedger,
}

/// Parameters of [`unknown_evaluate`].
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct EvalParams {
    pub c: u32,
    pub epsilon: f64,
    /// Upper bound on the number of vertices.
    pub t: f64,
    /// Upper bound on the depth.
    pub n: u64,
}

/// Evaluates the formula behind `ex` with `c` levels of recursion.
///
/// Level `i` uses thresholds `T_i = T^{i/c}`: it extracts the
/// `T_{i−1}`-heavy subtree with failure `ε/5`, evaluates frontier leaves at
/// level `i−1` with failure `ε/s³`, and hands the result to the evaluator
/// with failure `ε/5`. The cost of a subcall is counted once per evaluator
/// query, and doubled below the top level for uncomputation.
pub fn unknown_evaluate(
    ex: &dyn Explorer,
    params: EvalParams,
    evaluator: &KnownEvaluatorModel,
    oracle: &dyn VertexSizeOracle,
    rng: &mut StreamRng,
) -> Result<EvalOutcome> {
    if params.c < 1 {
        return Err(parameter("c must be at least 1"));
    }
    if !(params.epsilon > 0.0 && params.epsilon < 1.0) || !(params.t >= 1.0) || params.n < 1 {
        return Err(parameter("unknown_evaluate needs epsilon in (0,1), T >= 1, n >= 1"));
    }
    let start = ex.ledger();
    let ctx = Ctx { ex, params, evaluator, oracle };
    let (value, cost) = ctx.eval(ex.root(), params.c, params.epsilon, rng)?;
    Ok(EvalOutcome { value, measured_queries: cost, ledger: ex.ledger().since(&start) })
}

struct Ctx<'a> {
    ex: &'a dyn Explorer,
    params: EvalParams,
    evaluator: &'a KnownEvaluatorModel,
    oracle: &'a dyn VertexSizeOracle,
}

impl Ctx<'_> {
    fn threshold(&self, i: u32) -> f64 {
        self.params.t.powf(i as f64 / self.params.c as f64)
    }

    fn eval(&self, v: VertexId, i: u32, eps: f64, rng: &mut StreamRng) -> Result<(bool, f64)> {
        let ex = self.ex;
        let n = self.params.n;
        let before = ex.ledger();
        let double = if i < self.params.c { 2.0 } else { 1.0 };
        if i == 1 {
            let explored = explore_from(ex, v)?;
            let truth = eval_explored(ex, &explored.dag, &explored.global)?;
            let spent = ex.ledger().since(&before);
            let (value, q) = self.evaluator.evaluate(truth, explored.dag.vertex_count(), n, eps / 5.0, rng);
            let cost = (spent.classical_queries() + spent.controlled_u + q) as f64;
            return Ok((value, double * cost));
        }
        let m = self.threshold(i - 1).ceil().max(2.0) as u64;
        let heavy = heavy_subtree(ex, v, m, eps / 5.0, self.threshold(i), n, self.oracle, rng)?;
        let heavy_spent = ex.ledger().since(&before);
        let s = heavy.size() as f64;
        let mut leaf_value: HashMap<VertexId, bool> = HashMap::new();
        let mut worst_leaf: f64 = 1.0;
        for &y in &heavy.leaves {
            let x = ex.leaf_value(y)?.ok_or_else(|| domain(format!("leaf {y} has no value")))?;
            leaf_value.insert(y, x);
        }
        for &y in &heavy.frontier {
            let mut sub = fork(rng);
            let (x, c) = self.eval(y, i - 1, (eps / (s * s * s)).max(f64::MIN_POSITIVE), &mut sub)?;
            leaf_value.insert(y, x);
            worst_leaf = worst_leaf.max(c);
        }
        let truth = eval_heavy(ex, &heavy, &leaf_value)?;
        let (value, q) = self.evaluator.evaluate(truth, heavy.size(), n, eps / 5.0, rng);
        let cost = (heavy_spent.classical_queries() + heavy_spent.controlled_u) as f64 + q as f64 * worst_leaf;
        Ok((value, double * cost))
    }
}

fn eval_explored(ex: &dyn Explorer, dag: &LayeredDag, global: &[VertexId]) -> Result<bool> {
    let mut value = vec![false; dag.vertex_count() + 1];
    let mut order: Vec<VertexId> = dag.vertices().collect();
    order.sort_by_key(|&v| std::cmp::Reverse(dag.layer(v)));
    for v in order {
        let g = global[v];
        value[v] = if dag.is_leaf(v) {
            ex.leaf_value(g)?.ok_or_else(|| domain(format!("leaf {g} has no value")))?
        } else {
            let gate = ex.gate(g)?.ok_or_else(|| domain(format!("vertex {g} has no gate")))?;
            combine(gate, dag.children(v).iter().map(|&c| value[c]))
        };
    }
    Ok(value[1])
}

fn combine(gate: Gate, mut xs: impl Iterator<Item = bool>) -> bool {
    match gate {
        Gate::And => xs.all(|x| x),
        Gate::Or => xs.any(|x| x),
    }
}

fn eval_heavy(ex: &dyn Explorer, h: &HeavySubtree, leaf_value: &HashMap<VertexId, bool>) -> Result<bool> {
    let mut value: HashMap<VertexId, bool> = leaf_value.clone();
    // Members are in preorder, so reverse order visits children first.
    for &v in h.members.iter().rev() {
        if h.expanded.contains(&v) {
            let gate = ex.gate(v)?.ok_or_else(|| domain(format!("vertex {v} has no gate")))?;
            let kids = ex.children(v)?;
            let x = combine(gate, kids.iter().map(|c| value[c]));
            value.insert(v, x);
        }
    }
    Ok(value[&h.root])
}

/// `n^c √(T_c T^{1/c}) (ln T_c + ln 1/ε)^c` with `T_c = T`.
pub fn predicted_query_cost(c: u32, t: f64, n: u64, epsilon: f64) -> f64 {
    let c_f = c as f64;
    (n as f64).powf(c_f) * (t * t.powf(1.0 / c_f)).sqrt() * (t.ln() + (1.0 / epsilon).ln()).powf(c_f)
}

/// Random AND-OR formula on a full binary tree with uniform gates and bits.
pub fn random_formula(leaves: usize, depth_bound: usize, seed: u64) -> Result<crate::graph::Instance> {
    let dag = crate::graph::generate::random_full_binary(leaves, depth_bound, seed)?;
    let mut rng = crate::rng::stream(seed, 0x666f_726d);
    let mut ann = crate::graph::Annotations::default();
    for v in dag.vertices() {
        if dag.is_leaf(v) {
            ann.leaf_values.insert(v, rng.random_bool(0.5));
        } else {
            ann.gates.insert(v, if rng.random_bool(0.5) { Gate::And } else { Gate::Or });
        }
    }
    Ok(crate::graph::Instance { dag, annotations: ann })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{generate, Instance};
    use crate::rng::stream;
    use crate::size::ExactSizeOracle;

    #[test]
    fn complete_tree_heavy_subtree() {
        let inst = Instance::plain(generate::complete_binary(4).unwrap());
        let h = heavy_subtree(&inst.handle(), 1, 8, 0.1, 31.0, 4, &ExactSizeOracle, &mut stream(0, 0)).unwrap();
        assert_eq!(h.size(), 15);
        let set: HashSet<_> = h.members.iter().copied().collect();
        assert!(is_heavy_subtree(&set, &inst.dag, 8).unwrap());
        assert_eq!(h.frontier.len(), 8);
    }

    #[test]
    fn light_tree_gives_root_only() {
        let inst = Instance::plain(generate::complete_binary(2).unwrap());
        let h = heavy_subtree(&inst.handle(), 1, 20, 0.1, 7.0, 2, &ExactSizeOracle, &mut stream(0, 0)).unwrap();
        assert_eq!(h.members, vec![1]);
        assert!(is_heavy_subtree(&HashSet::from([1]), &inst.dag, 20).unwrap());
    }

    #[test]
    fn path_fails_clause_two() {
        let path = generate::path(7).unwrap();
        let all: HashSet<_> = path.vertices().collect();
        assert!(!is_heavy_subtree(&all, &path, 8).unwrap());
    }

    #[test]
    fn prediction_is_monotone() {
        let a = predicted_query_cost(2, 1e4, 10, 0.1);
        assert!(a.is_finite() && a > 0.0);
        assert!(predicted_query_cost(2, 2e4, 10, 0.1) > a);
    }

    #[test]
    fn noisy_evaluator_error_rate() {
        let e = KnownEvaluatorModel::noisy();
        let mut rng = stream(4, 0);
        let flips = (0..20_000).filter(|_| !e.evaluate(true, 10, 3, 0.1, &mut rng).0).count();
        assert!((flips as f64 / 20_000.0 - 0.1).abs() < 0.01);
    }
}

use std::cell::Cell;
use std::collections::{BTreeMap, BTreeSet, HashMap};
use std::ops::AddAssign;

use serde::{Deserialize, Serialize};

use super::dag::{LayeredDag, VertexId};
use crate::error::{domain, Result};

/// Gate label of an internal node of an AND-OR formula.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Gate {
    And,
    Or,
}

impl Gate {
    pub fn apply(self, x: bool, y: bool) -> bool {
        match self {
            Gate::And => x && y,
            Gate::Or => x || y,
        }
    }
}

/// Value of the backtracking predicate `P` at a vertex.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mark {
    Marked,
    Unmarked,
    Indeterminate,
}

/// Optional per-vertex data carried alongside a graph.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct Annotations {
    pub marked: BTreeSet<VertexId>,
    pub gates: BTreeMap<VertexId, Gate>,
    pub leaf_values: BTreeMap<VertexId, bool>,
}

/// A graph together with its annotations.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Instance {
    pub dag: LayeredDag,
    pub annotations: Annotations,
}

impl Instance {
    pub fn plain(dag: LayeredDag) -> Self {
        Self { dag, annotations: Annotations::default() }
    }

    /// A fresh query-counting handle over this instance.
    pub fn handle(&self) -> ExplorableHandle<'_> {
        ExplorableHandle::new(&self.dag, &self.annotations)
    }
}

/// Query counters for one algorithm run.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct QueryLedger {
    pub children_count: u64,
    pub child_fetch: u64,
    pub parent_count: u64,
    pub parent_fetch: u64,
    pub node_type: u64,
    pub leaf_value: u64,
    pub marked_predicate: u64,
    /// Controlled applications of a walk operator charged by simulated
    /// phase estimation.
    pub controlled_u: u64,
}

impl QueryLedger {
    /// Sum of the black-box structural and annotation queries.
    pub fn classical_queries(&self) -> u64 {
        self.children_count
            + self.child_fetch
            + self.parent_count
            + self.parent_fetch
            + self.node_type
            + self.leaf_value
            + self.marked_predicate
    }

    /// Component-wise difference `self - earlier`.
    pub fn since(&self, earlier: &QueryLedger) -> QueryLedger {
        QueryLedger {
            children_count: self.children_count - earlier.children_count,
            child_fetch: self.child_fetch - earlier.child_fetch,
            parent_count: self.parent_count - earlier.parent_count,
            parent_fetch: self.parent_fetch - earlier.parent_fetch,
            node_type: self.node_type - earlier.node_type,
            leaf_value: self.leaf_value - earlier.leaf_value,
            marked_predicate: self.marked_predicate - earlier.marked_predicate,
            controlled_u: self.controlled_u - earlier.controlled_u,
        }
    }
}

impl AddAssign for QueryLedger {
    fn add_assign(&mut self, o: Self) {
        self.children_count += o.children_count;
        self.child_fetch += o.child_fetch;
        self.parent_count += o.parent_count;
        self.parent_fetch += o.parent_fetch;
        self.node_type += o.node_type;
        self.leaf_value += o.leaf_value;
        self.marked_predicate += o.marked_predicate;
        self.controlled_u += o.controlled_u;
    }
}

/// Black-box local access to a rooted graph. Every call is counted.
pub trait Explorer {
    fn root(&self) -> VertexId;
    fn child_count(&self, v: VertexId) -> Result<usize>;
    /// The `i`-th child of `v`, 0-based.
    fn child(&self, v: VertexId, i: usize) -> Result<VertexId>;
    fn parent_count(&self, v: VertexId) -> Result<usize>;
    fn parent(&self, v: VertexId, i: usize) -> Result<VertexId>;
    /// Gate label of `v`, or `None` for formula leaves and unlabelled vertices.
    fn gate(&self, v: VertexId) -> Result<Option<Gate>>;
    fn leaf_value(&self, v: VertexId) -> Result<Option<bool>>;
    fn mark(&self, v: VertexId) -> Result<Mark>;
    fn ledger(&self) -> QueryLedger;
    fn charge_controlled_u(&self, count: u64);

    /// All children of `v`: one count query plus one fetch per child.
    fn children(&self, v: VertexId) -> Result<Vec<VertexId>> {
        let k = self.child_count(v)?;
        (0..k).map(|i| self.child(v, i)).collect()
    }
}

/// Counting handle over a borrowed graph and its annotations.
#[derive(Debug)]
pub struct ExplorableHandle<'a> {
    dag: &'a LayeredDag,
    annotations: &'a Annotations,
    ledger: Cell<QueryLedger>,
}

impl<'a> ExplorableHandle<'a> {
    pub fn new(dag: &'a LayeredDag, annotations: &'a Annotations) -> Self {
        Self { dag, annotations, ledger: Cell::new(QueryLedger::default()) }
    }

    fn bump(&self, f: impl FnOnce(&mut QueryLedger)) {
        let mut l = self.ledger.get();
        f(&mut l);
        self.ledger.set(l);
    }

    fn check(&self, v: VertexId) -> Result<()> {
        if self.dag.contains(v) {
            Ok(())
        } else {
            Err(domain(format!("unknown vertex id {v}")))
        }
    }
}

impl Explorer for ExplorableHandle<'_> {
    fn root(&self) -> VertexId {
        self.dag.root()
    }

    fn child_count(&self, v: VertexId) -> Result<usize> {
        self.check(v)?;
        self.bump(|l| l.children_count += 1);
        Ok(self.dag.children(v).len())
    }

    fn child(&self, v: VertexId, i: usize) -> Result<VertexId> {
        self.check(v)?;
        self.bump(|l| l.child_fetch += 1);
        self.dag.children(v).get(i).copied().ok_or_else(|| domain(format!("vertex {v} has no child {i}")))
    }

    fn parent_count(&self, v: VertexId) -> Result<usize> {
        self.check(v)?;
        self.bump(|l| l.parent_count += 1);
        Ok(self.dag.parents(v).len())
    }

    fn parent(&self, v: VertexId, i: usize) -> Result<VertexId> {
        self.check(v)?;
        self.bump(|l| l.parent_fetch += 1);
        self.dag.parents(v).get(i).copied().ok_or_else(|| domain(format!("vertex {v} has no parent {i}")))
    }

    fn gate(&self, v: VertexId) -> Result<Option<Gate>> {
        self.check(v)?;
        self.bump(|l| l.node_type += 1);
        Ok(self.annotations.gates.get(&v).copied())
    }

    fn leaf_value(&self, v: VertexId) -> Result<Option<bool>> {
        self.check(v)?;
        self.bump(|l| l.leaf_value += 1);
        Ok(self.annotations.leaf_values.get(&v).copied())
    }

    fn mark(&self, v: VertexId) -> Result<Mark> {
        self.check(v)?;
        self.bump(|l| l.marked_predicate += 1);
        Ok(if self.annotations.marked.contains(&v) {
            Mark::Marked
        } else if self.dag.is_leaf(v) {
            Mark::Unmarked
        } else {
            Mark::Indeterminate
        })
    }

    fn ledger(&self) -> QueryLedger {
        self.ledger.get()
    }

    fn charge_controlled_u(&self, count: u64) {
        self.bump(|l| l.controlled_u += count);
    }
}

/// A locally explored sub-DAG, relabelled so its root is vertex 1.
#[derive(Clone, Debug)]
pub struct Explored {
    pub dag: LayeredDag,
    /// `global[k]` is the explorer id of local vertex `k` (index 0 unused).
    pub global: Vec<VertexId>,
}

impl Explored {
    pub fn local_of(&self) -> HashMap<VertexId, VertexId> {
        self.global.iter().enumerate().skip(1).map(|(k, &g)| (g, k)).collect()
    }
}

/// Discovers the sub-DAG below `v` through counted child queries.
///
/// Vertices are numbered in depth-first preorder, so on trees the local ids
/// coincide with the classical visiting order.
pub fn explore_from(ex: &dyn Explorer, v: VertexId) -> Result<Explored> {
    let mut local: HashMap<VertexId, VertexId> = HashMap::new();
    let mut global = vec![0, v];
    local.insert(v, 1);
    let mut edges = Vec::new();
    // Stack of (vertex, children, next index).
    let mut stack = vec![(v, ex.children(v)?, 0usize)];
    while let Some(top) = stack.last_mut() {
        if top.2 == top.1.len() {
            stack.pop();
            continue;
        }
        let (u, w) = (top.0, top.1[top.2]);
        top.2 += 1;
        let lu = local[&u];
        match local.get(&w) {
            Some(&lw) => edges.push((lu, lw)),
            None => {
                global.push(w);
                let lw = global.len() - 1;
                local.insert(w, lw);
                edges.push((lu, lw));
                let kids = ex.children(w)?;
                stack.push((w, kids, 0));
            }
        }
    }
    let dag = LayeredDag::new(global.len() - 1, edges)?;
    Ok(Explored { dag, global })
}

/// Depth-first preorder of a tree, using counted queries.
pub fn dfs_order(ex: &dyn Explorer) -> Result<Vec<VertexId>> {
    let mut out = Vec::new();
    let mut stack = vec![ex.root()];
    while let Some(u) = stack.pop() {
        out.push(u);
        let kids = ex.children(u)?;
        stack.extend(kids.into_iter().rev());
    }
    Ok(out)
}

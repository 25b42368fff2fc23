//! Brute-force ground truths.
//!
//! These routines read the graph directly, never through a counting handle,
//! and share no code with the estimators they are used to check.

use std::cell::RefCell;
use std::collections::hash_map::DefaultHasher;
use std::collections::{HashMap, HashSet};
use std::hash::{Hash, Hasher};

use nalgebra::{Schur, SVD};
use serde::{Deserialize, Serialize};

use crate::error::{domain, Error, Result};
use crate::graph::{Gate, Instance, LayeredDag, PathSpec, VertexId};
use crate::walk::{build_gram, WalkOperators};

/// An oracle value with the method that produced it.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub quantity: String,
    pub value: f64,
    pub method: OracleMethod,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum OracleMethod {
    Bfs,
    Dfs,
    Minimax,
    DenseEigen,
    LaplacianSolve,
    Enumeration,
}

/// Edge count recounted from the adjacency lists.
pub fn exact_edge_count(dag: &LayeredDag) -> usize {
    dag.vertices().map(|v| dag.children(v).len()).sum()
}

/// Vertex count of every subtree of a tree, indexed by vertex id.
pub fn subtree_sizes(tree: &LayeredDag) -> Vec<usize> {
    let mut order: Vec<VertexId> = tree.vertices().collect();
    order.sort_by_key(|&v| std::cmp::Reverse(tree.layer(v)));
    let mut size = vec![1usize; tree.vertex_count() + 1];
    size[0] = 0;
    for v in order {
        if let Some(p) = tree.parent(v) {
            size[p] += size[v];
        }
    }
    size
}

fn dfs_rec(tree: &LayeredDag, v: VertexId, out: &mut Vec<VertexId>) {
    out.push(v);
    for &c in tree.children(v) {
        dfs_rec(tree, c, out);
    }
}

/// Depth-first preorder by plain recursion.
pub fn dfs_sequence(tree: &LayeredDag) -> Vec<VertexId> {
    let mut out = Vec::with_capacity(tree.vertex_count());
    dfs_rec(tree, tree.root(), &mut out);
    out
}

/// Size of the restricted tree encoded by `path`: one more than the
/// preorder position of its last vertex.
pub fn dfs_prefix_size(tree: &LayeredDag, path: &PathSpec) -> Result<usize> {
    let mut u = tree.root();
    for s in &path.steps {
        if tree.children(u).get(s.child_index) != Some(&s.vertex) {
            return Err(domain("path does not follow child links"));
        }
        u = s.vertex;
    }
    let seq = dfs_sequence(tree);
    Ok(seq.iter().position(|&v| v == u).expect("vertex is in the tree") + 1)
}

/// The first `m` vertices in preorder, as a set.
pub fn dfs_prefix_set(tree: &LayeredDag, m: usize) -> HashSet<VertexId> {
    dfs_sequence(tree).into_iter().take(m).collect()
}

/// Whether any vertex is marked, by scanning the annotation set.
pub fn marked_exists(inst: &Instance) -> bool {
    inst.dag.vertices().any(|v| inst.annotations.marked.contains(&v))
}

/// Minimax value of an AND-OR formula by recursion from the root.
pub fn minimax_value(inst: &Instance) -> Result<bool> {
    fn go(inst: &Instance, v: VertexId) -> Result<bool> {
        let kids = inst.dag.children(v);
        if kids.is_empty() {
            return inst
                .annotations
                .leaf_values
                .get(&v)
                .copied()
                .ok_or_else(|| domain(format!("leaf {v} has no value")));
        }
        let gate = *inst.annotations.gates.get(&v).ok_or_else(|| domain(format!("vertex {v} has no gate")))?;
        let mut acc = gate == Gate::And;
        for &c in kids {
            acc = gate.apply(acc, go(inst, c)?);
        }
        Ok(acc)
    }
    go(inst, inst.dag.root())
}

/// Prints a formula as a nested expression such as `OR(AND(1,0),1)`.
pub fn formula_expression(inst: &Instance) -> Result<String> {
    fn go(inst: &Instance, v: VertexId, out: &mut String) -> Result<()> {
        let kids = inst.dag.children(v);
        if kids.is_empty() {
            let x = inst.annotations.leaf_values.get(&v).ok_or_else(|| domain("leaf without value"))?;
            out.push(if *x { '1' } else { '0' });
            return Ok(());
        }
        match inst.annotations.gates.get(&v) {
            Some(Gate::And) => out.push_str("AND("),
            Some(Gate::Or) => out.push_str("OR("),
            None => return Err(domain("internal vertex without gate")),
        }
        for (k, &c) in kids.iter().enumerate() {
            if k > 0 {
                out.push(',');
            }
            go(inst, c, out)?;
        }
        out.push(')');
        Ok(())
    }
    let mut s = String::new();
    go(inst, inst.dag.root(), &mut s)?;
    Ok(s)
}

/// Evaluates an expression produced by [`formula_expression`] by expanding
/// each gate into the truth table of its arguments.
pub fn eval_expression(expr: &str) -> Result<bool> {
    fn parse(s: &[u8], pos: &mut usize) -> Result<bool> {
        match s.get(*pos) {
            Some(b'0') | Some(b'1') => {
                *pos += 1;
                Ok(s[*pos - 1] == b'1')
            }
            Some(b'A') | Some(b'O') => {
                let is_and = s[*pos] == b'A';
                *pos += if is_and { 4 } else { 3 };
                let mut args = vec![parse(s, pos)?];
                while s.get(*pos) == Some(&b',') {
                    *pos += 1;
                    args.push(parse(s, pos)?);
                }
                if s.get(*pos) != Some(&b')') {
                    return Err(domain("expected ')'"));
                }
                *pos += 1;
                // Row of the truth table selected by the argument bits.
                let row = args.iter().rev().fold(0usize, |acc, &b| (acc << 1) | b as usize);
                let full = (1usize << args.len()) - 1;
                Ok(if is_and { row == full } else { row != 0 })
            }
            _ => Err(domain("unexpected token")),
        }
    }
    let bytes = expr.as_bytes();
    let mut pos = 0;
    let v = parse(bytes, &mut pos)?;
    if pos != bytes.len() {
        return Err(domain("trailing input"));
    }
    Ok(v)
}

/// `ℓ(i,j)`: depth of the lowest common ancestor, by intersecting explicit
/// ancestor sets. Indexed by vertex ids.
pub fn lca_depth_table(tree: &LayeredDag) -> Result<Vec<Vec<usize>>> {
    if !tree.is_tree() {
        return Err(domain("lowest common ancestors need a tree"));
    }
    let ancestors: Vec<HashSet<VertexId>> = (0..=tree.vertex_count())
        .map(|v| {
            let mut set = HashSet::new();
            if v == 0 {
                return set;
            }
            let mut u = Some(v);
            while let Some(x) = u {
                set.insert(x);
                u = tree.parent(x);
            }
            set
        })
        .collect();
    let v = tree.vertex_count();
    let mut table = vec![vec![0usize; v + 1]; v + 1];
    for i in 1..=v {
        for j in 1..=v {
            table[i][j] = ancestors[i].intersection(&ancestors[j]).map(|&a| tree.layer(a)).max().unwrap_or(0);
        }
    }
    Ok(table)
}

/// Smallest nonzero `|θ|` of `U = R_B R_A` from a dense real Schur form.
pub fn exact_min_phase(ops: &WalkOperators) -> Result<f64> {
    let schur = Schur::try_new(ops.u(), 1e-15, 10_000)
        .ok_or_else(|| Error::Numeric("Schur decomposition did not converge".into()))?;
    schur
        .complex_eigenvalues()
        .iter()
        .map(|z| z.arg().abs())
        .filter(|&p| p > 1e-8)
        .min_by(f64::total_cmp)
        .ok_or_else(|| Error::Numeric("walk has no nontrivial phase".into()))
}

/// `θ_min = 2 arccos σ_max(L)` from the singular values of `L`.
pub fn min_phase_via_svd(dag: &LayeredDag, alpha: f64) -> Result<f64> {
    let gram = build_gram(dag, alpha)?;
    let s = SVD::new(gram.l, false, false).singular_values;
    Ok(2.0 * s.max().min(1.0).acos())
}

fn graph_hash(dag: &LayeredDag) -> u64 {
    let mut h = DefaultHasher::new();
    dag.vertex_count().hash(&mut h);
    dag.edges().hash(&mut h);
    h.finish()
}

/// Memo of oracle minimum phases keyed by graph hash and α.
#[derive(Debug, Default)]
pub struct OracleCache {
    theta_min: RefCell<HashMap<(u64, u64), f64>>,
}

impl OracleCache {
    pub fn new() -> Self {
        Self::default()
    }

    /// `θ_min` of the unmarked walk, through the singular values of `L`.
    pub fn theta_min(&self, dag: &LayeredDag, alpha: f64) -> Result<f64> {
        let key = (graph_hash(dag), alpha.to_bits());
        if let Some(&t) = self.theta_min.borrow().get(&key) {
            return Ok(t);
        }
        let t = min_phase_via_svd(dag, alpha)?;
        self.theta_min.borrow_mut().insert(key, t);
        Ok(t)
    }

    pub fn len(&self) -> usize {
        self.theta_min.borrow().len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

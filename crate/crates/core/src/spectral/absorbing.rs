//! The absorbing random walk on the extended graph `G″`.
//!
//! `G″` adds the anchor vertex `v_{V+1}` joined to the root by an edge of
//! weight `α⁻²`, and an absorbing vertex `v_{V+2}` joined to the anchor by an
//! edge of weight `d₁`. All original edges have weight 1 and are walked in
//! both directions. Rows and columns are ordered even vertices (root first),
//! odd vertices, then the anchor.

use nalgebra::{DMatrix, DVector};

use super::{k_matrix, LemmaReport};
use crate::error::{domain, parameter, Error, Result};
use crate::graph::{LayeredDag, VertexId};
use crate::oracles::lca_depth_table;
use crate::walk::build_gram;

#[derive(Clone, Debug)]
pub struct AbsorbingWalk {
    pub alpha: f64,
    /// `β = 1/(d₁α² + 1)`.
    pub beta: f64,
    /// Transient block over the original vertices and the anchor.
    pub q: DMatrix<f64>,
    /// `N = (I − Q)⁻¹`.
    pub n: DMatrix<f64>,
    /// `Ñ = N diag(p)⁻²`.
    pub n_tilde: DMatrix<f64>,
    /// `p[i] = √d″(i)`.
    pub p_vec: DVector<f64>,
    /// Vertex id behind each row, anchor excluded.
    pub order: Vec<VertexId>,
    index: Vec<usize>,
    d1: f64,
}

impl AbsorbingWalk {
    /// Row of vertex `v`.
    pub fn index(&self, v: VertexId) -> usize {
        self.index[v]
    }

    /// Row of the anchor vertex `v_{V+1}`.
    pub fn anchor(&self) -> usize {
        self.order.len()
    }

    /// `Ñ[i, j]` addressed by vertex ids.
    pub fn n_tilde_at(&self, i: VertexId, j: VertexId) -> f64 {
        self.n_tilde[(self.index[i], self.index[j])]
    }

    /// `α² + 1/d₁`, the value of `Ñ` on the root row.
    pub fn base_level(&self) -> f64 {
        self.alpha * self.alpha + 1.0 / self.d1
    }
}

pub fn fundamental_matrix(dag: &LayeredDag, alpha: f64) -> Result<AbsorbingWalk> {
    if !(alpha > 0.0 && alpha.is_finite()) {
        return Err(parameter(format!("alpha must be positive, got {alpha}")));
    }
    if dag.edge_count() == 0 {
        return Err(domain("the walk needs at least one edge"));
    }
    let part = dag.even_odd_partition();
    let order: Vec<VertexId> = part.set_a.iter().chain(&part.set_b).copied().collect();
    let mut index = vec![0; dag.vertex_count() + 1];
    for (k, &v) in order.iter().enumerate() {
        index[v] = k;
    }
    let size = order.len() + 1;
    let anchor = order.len();
    let root = index[dag.root()];
    let d1 = dag.degree(dag.root()) as f64;
    let inv_a2 = alpha.powi(-2);
    let beta = 1.0 / (d1 * alpha * alpha + 1.0);

    let mut deg = DVector::zeros(size);
    let mut q = DMatrix::zeros(size, size);
    for &v in &order {
        let i = index[v];
        let mut d = dag.degree(v) as f64;
        if v == dag.root() {
            d += inv_a2;
            q[(i, anchor)] = inv_a2 / d;
        }
        deg[i] = d;
        for w in dag.children(v).iter().chain(dag.parents(v)) {
            q[(i, index[*w])] = 1.0 / d;
        }
    }
    // The anchor leaks 1 − β to the absorbing vertex.
    deg[anchor] = inv_a2 + d1;
    q[(anchor, root)] = inv_a2 / deg[anchor];

    let n =
        (DMatrix::identity(size, size) - &q).try_inverse().ok_or_else(|| Error::Numeric("I - Q is singular".into()))?;
    let mut n_tilde = n.clone();
    for (j, mut col) in n_tilde.column_iter_mut().enumerate() {
        col /= deg[j];
    }
    let p_vec = deg.map(f64::sqrt);
    Ok(AbsorbingWalk { alpha, beta, q, n, n_tilde, p_vec, order, index, d1 })
}

/// Corner values `N[V+1,V+1] = N[1,V+1] = N[V+1,1] = 1/(1−β)`,
/// `N[1,1] = 1/(β(1−β))`, and the constant rows `Ñ[i,V+1] = 1/d₁`,
/// `Ñ[i,1] = α² + 1/d₁`. Also checks symmetry of `Ñ` and `N(I−Q) = I`.
pub fn verify_fundamental_corners(dag: &LayeredDag, alpha: f64) -> Result<LemmaReport> {
    let w = fundamental_matrix(dag, alpha)?;
    let (r, s) = (w.index(dag.root()), w.anchor());
    let b = w.beta;
    let rel = |x: f64, y: f64| (x - y).abs() / y.abs().max(1.0);
    let mut worst = rel(w.n[(s, s)], 1.0 / (1.0 - b))
        .max(rel(w.n[(r, s)], 1.0 / (1.0 - b)))
        .max(rel(w.n[(s, r)], 1.0 / (1.0 - b)))
        .max(rel(w.n[(r, r)], 1.0 / (b * (1.0 - b))));
    for i in 0..w.order.len() {
        worst = worst.max(rel(w.n_tilde[(i, s)], 1.0 / w.d1)).max(rel(w.n_tilde[(i, r)], w.base_level()));
    }
    worst = worst.max((&w.n_tilde - w.n_tilde.transpose()).amax());
    let size = w.q.nrows();
    worst = worst.max((&w.n * (DMatrix::identity(size, size) - &w.q) - DMatrix::identity(size, size)).amax());
    Ok(LemmaReport::new("fundamental-corners", worst, 1e-9))
}

/// On trees, `Ñ[i,j] = α² + 1/d₁ + ℓ(i,j)` with `ℓ(i,j)` the depth of the
/// lowest common ancestor.
pub fn verify_tree_formula(dag: &LayeredDag, alpha: f64) -> Result<LemmaReport> {
    if !dag.is_tree() {
        return Err(domain("the closed form holds on trees"));
    }
    let w = fundamental_matrix(dag, alpha)?;
    let lca = lca_depth_table(dag)?;
    let mut worst: f64 = 0.0;
    for i in dag.vertices() {
        for j in dag.vertices() {
            let expect = w.base_level() + lca[i][j] as f64;
            worst = worst.max((w.n_tilde_at(i, j) - expect).abs() / expect);
        }
    }
    Ok(LemmaReport::new("tree-formula", worst, 1e-9))
}

/// On layered DAGs, `0 ≤ Ñ[i,j] − (α² + 1/d₁) ≤ n`, with equality to zero
/// when `i` or `j` is the root.
pub fn verify_dag_bound(dag: &LayeredDag, alpha: f64) -> Result<LemmaReport> {
    let w = fundamental_matrix(dag, alpha)?;
    let n = dag.depth() as f64;
    let base = w.base_level();
    let mut worst: f64 = 0.0;
    for i in dag.vertices() {
        for j in dag.vertices() {
            let x = w.n_tilde_at(i, j) - base;
            worst = worst.max(-x / base).max((x - n) / base);
            if i == dag.root() || j == dag.root() {
                worst = worst.max(x.abs() / base);
            }
        }
    }
    Ok(LemmaReport::new("dag-bound", worst, 1e-9))
}

/// The averaging identity `Ñ[i,j] = Σ_l Q[j,l] Ñ[i,l] + δ_ij / d″(j)`.
pub fn verify_harmonic_property(dag: &LayeredDag, alpha: f64) -> Result<LemmaReport> {
    let w = fundamental_matrix(dag, alpha)?;
    let rhs = &w.n_tilde * w.q.transpose();
    let mut worst: f64 = 0.0;
    for i in 0..w.order.len() {
        for j in 0..w.q.nrows() {
            let delta = if i == j { 1.0 / w.p_vec[j].powi(2) } else { 0.0 };
            let x = w.n_tilde[(i, j)];
            worst = worst.max((x - rhs[(i, j)] - delta).abs() / x.abs().max(1.0));
        }
    }
    Ok(LemmaReport::new("harmonic-property", worst, 1e-9))
}

/// `K = diag(a)(Ñ_AA − J/d₁)diag(a)`, compared in Frobenius norm.
pub fn verify_k_identity(dag: &LayeredDag, alpha: f64) -> Result<LemmaReport> {
    let gram = build_gram(dag, alpha)?;
    let k = k_matrix(&gram.l)?;
    let w = fundamental_matrix(dag, alpha)?;
    let a = gram.a_vec.len();
    let d1 = dag.degree(dag.root()) as f64;
    let block = w.n_tilde.view((0, 0), (a, a)).map(|x| x - 1.0 / d1);
    let diag = DMatrix::from_diagonal(&gram.a_vec);
    let rhs = &diag * block * &diag;
    Ok(LemmaReport::new("k-identity", (k - rhs).norm(), 1e-8))
}

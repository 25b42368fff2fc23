//! Edge-space walk operators.
//!
//! The Hilbert space has one basis vector per edge, `e₁ … e_T` in insertion
//! order, plus the anchor edge `e₀` above the root stored at index `T`.
//! Each vertex `v` owns a vector `s_v` supported on its incident edges. The
//! reflections are `R_A = ⊕_{v even} D_v` and `R_B = |e₀⟩⟨e₀| ⊕ ⊕_{v odd} D_v`
//! with `D_v = I − 2|s_v⟩⟨s_v|/‖s_v‖²`, or `D_v = I` when `v` is marked.
//!
//! Operators are kept as sparse rank-one blocks; dense matrices are produced
//! on request.

use std::collections::BTreeSet;
use std::io::Write;
use std::path::Path;

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::error::{domain, parameter, Result};
use crate::graph::{LayeredDag, PathSpec, VertexId};

/// Index bookkeeping for the edge space of a graph.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct EdgeSpaceBasis {
    edge_count: usize,
}

impl EdgeSpaceBasis {
    pub fn new(dag: &LayeredDag) -> Self {
        Self { edge_count: dag.edge_count() }
    }

    /// `T + 1`.
    pub fn dim(&self) -> usize {
        self.edge_count + 1
    }

    /// Index of the anchor edge `e₀`, the last basis vector.
    pub fn anchor(&self) -> usize {
        self.edge_count
    }

    pub fn anchor_vector(&self) -> DVector<f64> {
        let mut v = DVector::zeros(self.dim());
        v[self.anchor()] = 1.0;
        v
    }
}

/// Sparse vector `s_v` together with its squared norm.
#[derive(Clone, Debug, PartialEq)]
pub struct SBlock {
    pub vertex: VertexId,
    pub support: Vec<usize>,
    pub coeffs: Vec<f64>,
    pub norm2: f64,
}

impl SBlock {
    pub fn to_dense(&self, dim: usize) -> DVector<f64> {
        let mut v = DVector::zeros(dim);
        for (&i, &c) in self.support.iter().zip(&self.coeffs) {
            v[i] = c;
        }
        v
    }

    /// `x ← x − 2⟨s,x⟩ s/‖s‖²`.
    fn reflect(&self, x: &mut [f64]) {
        let dot: f64 = self.support.iter().zip(&self.coeffs).map(|(&i, &c)| c * x[i]).sum();
        let f = 2.0 * dot / self.norm2;
        for (&i, &c) in self.support.iter().zip(&self.coeffs) {
            x[i] -= f * c;
        }
    }
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha > 0.0 && alpha.is_finite() {
        Ok(())
    } else {
        Err(parameter(format!("alpha must be positive and finite, got {alpha}")))
    }
}

fn s_block(dag: &LayeredDag, alpha: f64, v: VertexId, visible: Option<&[bool]>) -> SBlock {
    let basis = EdgeSpaceBasis::new(dag);
    let edge_visible = |k: usize| {
        visible.is_none_or(|m| {
            let (a, b) = dag.edges()[k];
            m[a] && m[b]
        })
    };
    let (mut support, mut coeffs) = (Vec::new(), Vec::new());
    let weight = if v == dag.root() {
        support.push(basis.anchor());
        coeffs.push(1.0);
        alpha
    } else {
        1.0
    };
    for k in dag.incident_edges(v).filter(|&k| edge_visible(k)) {
        support.push(k);
        coeffs.push(weight);
    }
    let norm2 = coeffs.iter().map(|c| c * c).sum();
    SBlock { vertex: v, support, coeffs, norm2 }
}

/// The vector `s_v` as a dense edge-space vector.
pub fn build_s_vector(dag: &LayeredDag, alpha: f64, v: VertexId) -> Result<DVector<f64>> {
    check_alpha(alpha)?;
    if !dag.contains(v) {
        return Err(domain(format!("unknown vertex id {v}")));
    }
    if dag.edge_count() == 0 {
        return Err(domain("the walk needs at least one edge"));
    }
    Ok(s_block(dag, alpha, v, None).to_dense(EdgeSpaceBasis::new(dag).dim()))
}

/// The reflections `R_A` and `R_B` of a (possibly marked or restricted) walk.
#[derive(Clone, Debug)]
pub struct WalkOperators {
    alpha: f64,
    basis: EdgeSpaceBasis,
    marked: BTreeSet<VertexId>,
    blocks_a: Vec<SBlock>,
    blocks_b: Vec<SBlock>,
}

/// Builds the walk reflections. Vertices in `marked` get `D_v = I`.
pub fn build_reflections(dag: &LayeredDag, alpha: f64, marked: &BTreeSet<VertexId>) -> Result<WalkOperators> {
    if dag.edge_count() == 0 {
        return Err(domain("the walk needs at least one edge"));
    }
    WalkOperators::assemble(dag, alpha, marked, None)
}

/// Reflections of the walk on the restricted tree `T_m` encoded by `path`,
/// embedded in the edge space of the whole tree. Hidden edges are left fixed.
pub fn path_restricted_reflections(
    tree: &LayeredDag,
    path: &PathSpec,
    alpha: f64,
    marked: &BTreeSet<VertexId>,
) -> Result<WalkOperators> {
    if !tree.is_tree() {
        return Err(domain("path restriction expects a tree"));
    }
    let mask = path.restricted_mask(tree)?;
    WalkOperators::assemble(tree, alpha, marked, Some(&mask))
}

impl WalkOperators {
    fn assemble(dag: &LayeredDag, alpha: f64, marked: &BTreeSet<VertexId>, visible: Option<&[bool]>) -> Result<Self> {
        check_alpha(alpha)?;
        if let Some(&v) = marked.iter().find(|&&v| !dag.contains(v)) {
            return Err(domain(format!("marked vertex {v} is not in the graph")));
        }
        let (mut blocks_a, mut blocks_b) = (Vec::new(), Vec::new());
        for v in dag.vertices() {
            if marked.contains(&v) || visible.is_some_and(|m| !m[v]) {
                continue;
            }
            let block = s_block(dag, alpha, v, visible);
            if block.support.is_empty() {
                continue;
            }
            if dag.layer(v).is_multiple_of(2) {
                blocks_a.push(block);
            } else {
                blocks_b.push(block);
            }
        }
        Ok(Self { alpha, basis: EdgeSpaceBasis::new(dag), marked: marked.clone(), blocks_a, blocks_b })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn dim(&self) -> usize {
        self.basis.dim()
    }

    pub fn basis(&self) -> EdgeSpaceBasis {
        self.basis
    }

    pub fn marked(&self) -> &BTreeSet<VertexId> {
        &self.marked
    }

    /// Blocks of the even vertices, in ascending vertex order.
    pub fn blocks_a(&self) -> &[SBlock] {
        &self.blocks_a
    }

    pub fn blocks_b(&self) -> &[SBlock] {
        &self.blocks_b
    }

    /// `‖s_v‖²` for every vertex that contributes a block.
    pub fn s_norms(&self) -> Vec<(VertexId, f64)> {
        self.blocks_a.iter().chain(&self.blocks_b).map(|b| (b.vertex, b.norm2)).collect()
    }

    /// Fails when two operators were built with different α.
    pub fn ensure_same_alpha(&self, alpha: f64) -> Result<()> {
        if (self.alpha - alpha).abs() > 1e-15 * self.alpha.max(alpha) {
            return Err(parameter(format!("operators built with alpha {} mixed with alpha {alpha}", self.alpha)));
        }
        Ok(())
    }

    pub fn apply_r_a(&self, x: &mut [f64]) {
        self.blocks_a.iter().for_each(|b| b.reflect(x));
    }

    pub fn apply_r_b(&self, x: &mut [f64]) {
        self.blocks_b.iter().for_each(|b| b.reflect(x));
    }

    /// `x ← R_B R_A x`.
    pub fn apply_u(&self, x: &mut [f64]) {
        self.apply_r_a(x);
        self.apply_r_b(x);
    }

    /// `x ← (R_A R_B) x`, the inverse and transpose of `U`.
    pub fn apply_u_inv(&self, x: &mut [f64]) {
        self.apply_r_b(x);
        self.apply_r_a(x);
    }

    fn dense(&self, blocks: &[SBlock]) -> DMatrix<f64> {
        let mut m = DMatrix::identity(self.dim(), self.dim());
        for b in blocks {
            for (&i, &ci) in b.support.iter().zip(&b.coeffs) {
                for (&j, &cj) in b.support.iter().zip(&b.coeffs) {
                    m[(i, j)] -= 2.0 * ci * cj / b.norm2;
                }
            }
        }
        m
    }

    pub fn r_a(&self) -> DMatrix<f64> {
        self.dense(&self.blocks_a)
    }

    pub fn r_b(&self) -> DMatrix<f64> {
        self.dense(&self.blocks_b)
    }

    /// The walk step `U = R_B R_A`.
    pub fn u(&self) -> DMatrix<f64> {
        self.r_b() * self.r_a()
    }

    /// Writes `R_A` and `R_B` as row-major text next to a JSON metadata file:
    /// `<prefix>.ra.txt`, `<prefix>.rb.txt`, `<prefix>.json`.
    pub fn dump(&self, prefix: impl AsRef<Path>) -> Result<()> {
        let prefix = prefix.as_ref().to_string_lossy().into_owned();
        for (name, m) in [("ra", self.r_a()), ("rb", self.r_b())] {
            let mut f = std::io::BufWriter::new(std::fs::File::create(format!("{prefix}.{name}.txt"))?);
            for r in 0..m.nrows() {
                let row: Vec<String> = m.row(r).iter().map(|x| format!("{x:.17e}")).collect();
                writeln!(f, "{}", row.join(" "))?;
            }
        }
        #[derive(Serialize)]
        struct Meta<'a> {
            alpha: f64,
            dimension: usize,
            anchor_index: usize,
            marked: &'a BTreeSet<VertexId>,
            layout: &'static str,
        }
        let meta = Meta {
            alpha: self.alpha,
            dimension: self.dim(),
            anchor_index: self.basis.anchor(),
            marked: &self.marked,
            layout: "row-major text, one row per line",
        };
        std::fs::write(format!("{prefix}.json"), serde_json::to_string_pretty(&meta)?)?;
        Ok(())
    }
}

/// Incidence data behind the discriminant matrix `L = ÂᵀB̂`.
#[derive(Clone, Debug)]
pub struct GramData {
    pub alpha: f64,
    /// `(T+1) × A` incidence matrix with the anchor entry `α⁻¹` in column 1.
    pub mat_a: DMatrix<f64>,
    /// `(T+1) × B` incidence matrix.
    pub mat_b: DMatrix<f64>,
    pub a_vec: DVector<f64>,
    pub b_vec: DVector<f64>,
    pub a_hat: DMatrix<f64>,
    pub b_hat: DMatrix<f64>,
    pub l: DMatrix<f64>,
    /// Vertex order of the columns of `mat_a` (root first, then ascending ids).
    pub order_a: Vec<VertexId>,
    pub order_b: Vec<VertexId>,
}

pub fn build_gram(dag: &LayeredDag, alpha: f64) -> Result<GramData> {
    check_alpha(alpha)?;
    if dag.edge_count() == 0 {
        return Err(domain("the walk needs at least one edge"));
    }
    let basis = EdgeSpaceBasis::new(dag);
    let part = dag.even_odd_partition();
    let dim = basis.dim();
    let mut mat_a = DMatrix::zeros(dim, part.a());
    let mut mat_b = DMatrix::zeros(dim, part.b());
    for (j, &v) in part.set_a.iter().enumerate() {
        for k in dag.incident_edges(v) {
            mat_a[(k, j)] = 1.0;
        }
    }
    mat_a[(basis.anchor(), 0)] = 1.0 / alpha;
    for (j, &v) in part.set_b.iter().enumerate() {
        for k in dag.incident_edges(v) {
            mat_b[(k, j)] = 1.0;
        }
    }
    let a_vec = DVector::from_iterator(
        part.a(),
        part.set_a.iter().map(|&v| {
            let d = dag.degree(v) as f64;
            if v == dag.root() {
                (d + alpha.powi(-2)).sqrt()
            } else {
                d.sqrt()
            }
        }),
    );
    let b_vec = DVector::from_iterator(part.b(), part.set_b.iter().map(|&v| (dag.degree(v) as f64).sqrt()));
    let mut a_hat = mat_a.clone();
    for (j, mut c) in a_hat.column_iter_mut().enumerate() {
        c /= a_vec[j];
    }
    let mut b_hat = mat_b.clone();
    for (j, mut c) in b_hat.column_iter_mut().enumerate() {
        c /= b_vec[j];
    }
    let l = a_hat.transpose() * &b_hat;
    Ok(GramData { alpha, mat_a, mat_b, a_vec, b_vec, a_hat, b_hat, l, order_a: part.set_a, order_b: part.set_b })
}

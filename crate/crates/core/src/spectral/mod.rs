//! Eigenstructure of the walk and numerical checks of its spectral lemmas.
//!
//! The walk step `U = R_B R_A` is diagonalized densely. Its nontrivial phases
//! are tied to the singular values of `L = ÂᵀB̂` by `cos(θ/2) = σ`, and the
//! matrix `K = (I − LLᵀ)⁻¹` controls both the smallest phase and the overlap
//! of the anchor state with the slowest eigenvectors. The absorbing-walk
//! construction in [`absorbing`] gives an independent route to `K`.

pub mod absorbing;
pub mod resistance;

use nalgebra::{Complex, DMatrix, DVector, Schur, SymmetricEigen, SVD};
use serde::{Deserialize, Serialize};

use crate::error::{parameter, Error, Result};
use crate::graph::LayeredDag;
use crate::walk::{build_gram, GramData, WalkOperators};

pub use absorbing::{
    fundamental_matrix, verify_dag_bound, verify_fundamental_corners, verify_harmonic_property, verify_k_identity,
    verify_tree_formula, AbsorbingWalk,
};
pub use resistance::{effective_resistance, harmonic_potential, verify_max_principle, ResistanceData};

/// Phases with `|θ|` at most this value count as the 1-eigenspace.
pub const PHASE_ZERO_TOL: f64 = 1e-8;

/// Result of a numerical lemma check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LemmaReport {
    pub lemma: String,
    pub instances: usize,
    pub max_violation: f64,
    pub pass: bool,
}

impl LemmaReport {
    pub fn new(lemma: &str, violation: f64, tolerance: f64) -> Self {
        Self { lemma: lemma.into(), instances: 1, max_violation: violation, pass: violation <= tolerance }
    }

    /// Folds another instance of the same check into this report.
    pub fn absorb(&mut self, other: &LemmaReport) {
        self.instances += other.instances;
        self.max_violation = self.max_violation.max(other.max_violation);
        self.pass &= other.pass;
    }

    /// Combines several instance reports under one name.
    pub fn combine(lemma: &str, reports: impl IntoIterator<Item = LemmaReport>) -> Self {
        let mut out = Self { lemma: lemma.into(), instances: 0, max_violation: 0.0, pass: true };
        for r in reports {
            out.absorb(&r);
        }
        out
    }
}

/// Dense spectral data of one walk.
#[derive(Clone, Debug)]
pub struct SpectralSummary {
    pub alpha: f64,
    /// Eigenphases of `U` in `(−π, π]`, aligned with the eigenvector columns.
    pub eigenphases: Vec<f64>,
    pub eigenvectors: DMatrix<Complex<f64>>,
    /// Smallest `|θ|` above [`PHASE_ZERO_TOL`].
    pub theta_min: f64,
    /// Largest singular value of `L`.
    pub lambda_l: f64,
    pub k: DMatrix<f64>,
    /// Largest eigenvalue of `K`.
    pub lambda_k: f64,
    pub q2_overlap: Option<f64>,
}

/// Diagonalizes `U = R_B R_A` and forms `K` from the discriminant matrix.
pub fn eigendecompose_walk(ops: &WalkOperators, gram: &GramData) -> Result<SpectralSummary> {
    ops.ensure_same_alpha(gram.alpha)?;
    let u = ops.u().map(Complex::from);
    let (q, t) = Schur::try_new(u, 1e-15, 10_000)
        .ok_or_else(|| Error::Numeric("Schur decomposition of the walk did not converge".into()))?
        .unpack();
    let off_diag = (0..t.nrows()).flat_map(|i| (0..i).map(move |j| (j, i))).map(|ij| t[ij].norm()).fold(0.0, f64::max);
    if off_diag > 1e-8 {
        return Err(Error::Numeric(format!("walk step is not numerically normal (off-diagonal {off_diag:.2e})")));
    }
    let eigenphases: Vec<f64> = (0..t.nrows()).map(|k| t[(k, k)].arg()).collect();
    let theta_min = eigenphases.iter().map(|p| p.abs()).filter(|&p| p > PHASE_ZERO_TOL).fold(f64::INFINITY, f64::min);
    let lambda_l = singular_values(&gram.l).first().copied().unwrap_or(0.0);
    let k = k_matrix(&gram.l)?;
    let lambda_k = SymmetricEigen::new(k.clone()).eigenvalues.max();
    Ok(SpectralSummary {
        alpha: gram.alpha,
        eigenphases,
        eigenvectors: q,
        theta_min,
        lambda_l,
        k,
        lambda_k,
        q2_overlap: None,
    })
}

/// Singular values in descending order.
pub fn singular_values(m: &DMatrix<f64>) -> Vec<f64> {
    SVD::new(m.clone(), false, false).singular_values.iter().copied().collect()
}

/// `K = (I − LLᵀ)⁻¹`.
pub fn k_matrix(l: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = l.nrows();
    (DMatrix::identity(n, n) - l * l.transpose())
        .try_inverse()
        .ok_or_else(|| Error::Numeric("I - LL^T is singular".into()))
}

/// Checks that every singular value `σ ∈ (0,1)` of `L` appears as a pair of
/// eigenphases `±θ` with `cos(θ/2) = σ`, counting multiplicity.
pub fn verify_szegedy(summary: &SpectralSummary, gram: &GramData) -> LemmaReport {
    const EDGE: f64 = 1e-7;
    let inside = |x: f64| x > EDGE && x < 1.0 - EDGE;
    let mut sigma: Vec<f64> = singular_values(&gram.l).into_iter().filter(|&s| inside(s)).collect();
    sigma.sort_by(f64::total_cmp);
    let mut violation: f64 = 0.0;
    for sign in [1.0, -1.0] {
        let mut c: Vec<f64> = summary
            .eigenphases
            .iter()
            .filter(|&&p| p * sign > 0.0)
            .map(|p| (p / 2.0).cos())
            .filter(|&x| inside(x))
            .collect();
        c.sort_by(f64::total_cmp);
        if c.len() != sigma.len() {
            violation = f64::INFINITY;
            break;
        }
        for (a, b) in c.iter().zip(&sigma) {
            violation = violation.max((a - b).abs());
        }
    }
    LemmaReport::new("szegedy-correspondence", violation, 1e-9)
}

fn numeric_rank(m: &DMatrix<f64>) -> usize {
    if m.ncols() == 0 || m.nrows() == 0 {
        return 0;
    }
    let s = singular_values(m);
    let tol = 1e-9 * s.first().copied().unwrap_or(0.0).max(1.0);
    s.iter().filter(|&&x| x > tol).count()
}

/// Norm of the projection of the anchor state onto the 1-eigenspace of `U`,
/// and `dim(H_A ∩ H_B)` from ranks.
pub fn verify_one_eigenspace(ops: &WalkOperators, gram: &GramData) -> Result<LemmaReport> {
    ops.ensure_same_alpha(gram.alpha)?;
    let n = ops.dim();
    let shifted = ops.u() - DMatrix::<f64>::identity(n, n);
    let svd = SVD::new(shifted, false, true);
    let v_t = svd.v_t.ok_or_else(|| Error::Numeric("SVD did not return right vectors".into()))?;
    let anchor = ops.basis().anchor();
    let projection: f64 = svd
        .singular_values
        .iter()
        .enumerate()
        .filter(|(_, &s)| s <= 1e-8)
        .map(|(k, _)| v_t[(k, anchor)].powi(2))
        .sum::<f64>()
        .sqrt();
    let mut both = DMatrix::zeros(n, gram.a_hat.ncols() + gram.b_hat.ncols());
    both.columns_mut(0, gram.a_hat.ncols()).copy_from(&gram.a_hat);
    both.columns_mut(gram.a_hat.ncols(), gram.b_hat.ncols()).copy_from(&gram.b_hat);
    let intersection = numeric_rank(&gram.a_hat) + numeric_rank(&gram.b_hat) - numeric_rank(&both);
    Ok(LemmaReport::new("one-eigenspace", projection.max(intersection as f64), 1e-9))
}

/// Overlap of the anchor state with the slowest eigenvector pair.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TopPairOverlap {
    /// `⟨e₀|q₂⟩`, or the norm of the projection onto the whole top space.
    pub overlap: f64,
    pub multiplicity: usize,
    pub lambda_l: f64,
    /// `u[1] √λ_K / √(1 + α² d₁)` when the top singular value is simple.
    pub closed_form: Option<f64>,
}

/// Builds `q₂ = (ã − λ_L b̃)/√(1 − λ_L²)` from the top singular pair of `L`
/// with the left vector made nonnegative, and reads off its anchor entry.
pub fn top_pair_overlap(dag: &LayeredDag, gram: &GramData) -> Result<TopPairOverlap> {
    let n = dag.depth() as f64;
    if gram.alpha < (2.0 * n).sqrt() - 1e-12 {
        return Err(parameter(format!("alpha {} is below sqrt(2n) = {}", gram.alpha, (2.0 * n).sqrt())));
    }
    let svd = SVD::new(gram.l.clone(), true, true);
    let (u, v_t) = (svd.u.expect("left vectors"), svd.v_t.expect("right vectors"));
    let s = &svd.singular_values;
    let top = s[0];
    let multiplicity = s.iter().filter(|&&x| (x - top).abs() <= 1e-9).count();
    let anchor = gram.a_hat.nrows() - 1;
    let norm = (1.0 - top * top).sqrt();
    let mut total = 0.0;
    let mut single = 0.0;
    for k in 0..multiplicity {
        let mut uk: DVector<f64> = u.column(k).into_owned();
        let mut vk: DVector<f64> = v_t.row(k).transpose();
        if uk.sum() < 0.0 {
            uk = -uk;
            vk = -vk;
        }
        let q2 = (&gram.a_hat * &uk - top * (&gram.b_hat * &vk)) / norm;
        total += q2[anchor] * q2[anchor];
        single = q2[anchor];
    }
    let (overlap, closed_form) = if multiplicity == 1 {
        let uk = u.column(0);
        let sign = if uk.sum() < 0.0 { -1.0 } else { 1.0 };
        let lambda_k = 1.0 / (1.0 - top * top);
        let d1 = dag.degree(dag.root()) as f64;
        let cf = sign * uk[0] * lambda_k.sqrt() / (1.0 + gram.alpha.powi(2) * d1).sqrt();
        (single, Some(cf))
    } else {
        (total.sqrt(), None)
    };
    Ok(TopPairOverlap { overlap, multiplicity, lambda_l: top, closed_form })
}

/// Entry bounds `α² a_i a_j ≤ K_ij ≤ (α²+n) a_i a_j` with equality in the
/// first row and column, and `α² T ≤ λ_K ≤ (α²+n) T`. Violations are relative.
pub fn verify_k_bounds(dag: &LayeredDag, alpha: f64) -> Result<LemmaReport> {
    let gram = build_gram(dag, alpha)?;
    let k = k_matrix(&gram.l)?;
    let a = &gram.a_vec;
    let a2 = alpha * alpha;
    let n = dag.depth() as f64;
    let mut worst: f64 = 0.0;
    for i in 0..k.nrows() {
        for j in 0..k.ncols() {
            let lo = a2 * a[i] * a[j];
            let hi = (a2 + n) * a[i] * a[j];
            let x = k[(i, j)];
            worst = worst.max((lo - x) / lo).max((x - hi) / hi);
            if i == 0 || j == 0 {
                worst = worst.max((x - lo).abs() / lo);
            }
        }
    }
    let lambda_k = SymmetricEigen::new(k).eigenvalues.max();
    let t = dag.edge_count() as f64;
    worst = worst.max((a2 * t - lambda_k) / (a2 * t)).max((lambda_k - (a2 + n) * t) / ((a2 + n) * t));
    Ok(LemmaReport::new("k-bounds", worst.max(0.0), 1e-9))
}

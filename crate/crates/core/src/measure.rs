//! Spectral measure of a start state under a unitary.
//!
//! Phase estimation only depends on the eigenphases `θ_j` of the unitary and
//! the weights `|⟨ψ_j|start⟩|²`. [`PhaseSpectrum`] stores that measure. It is
//! computed either densely through a complex Schur decomposition or, for walk
//! operators, by Lanczos on `S = (U + Uᵀ)/2` started at a real vector, which
//! yields the same measure folded onto `cos θ`.

use nalgebra::{Complex, DMatrix, DVector, Schur, SymmetricEigen};
use rand::Rng;

use crate::error::{domain, Error, Result};
use crate::walk::WalkOperators;

pub type C64 = Complex<f64>;

/// Discrete measure over eigenphases in `(−π, π]`.
#[derive(Clone, Debug)]
pub struct PhaseSpectrum {
    phases: Vec<f64>,
    weights: Vec<f64>,
    cumulative: Vec<f64>,
}

/// Maps any angle into `(−π, π]`.
pub fn wrap_phase(x: f64) -> f64 {
    use std::f64::consts::{PI, TAU};
    let mut y = x.rem_euclid(TAU);
    if y > PI {
        y -= TAU;
    }
    y
}

impl PhaseSpectrum {
    /// Measure from explicit `(phase, weight)` pairs. Weights are normalized.
    pub fn from_components(components: &[(f64, f64)]) -> Result<Self> {
        let total: f64 = components.iter().map(|c| c.1).sum();
        if components.iter().any(|c| c.1 < 0.0 || !c.1.is_finite()) || total <= 0.0 {
            return Err(domain("component weights must be nonnegative with positive sum"));
        }
        let mut phases = Vec::with_capacity(components.len());
        let mut weights = Vec::with_capacity(components.len());
        for &(p, w) in components {
            if w > 0.0 {
                phases.push(wrap_phase(p));
                weights.push(w / total);
            }
        }
        Ok(Self::from_parts(phases, weights))
    }

    fn from_parts(phases: Vec<f64>, weights: Vec<f64>) -> Self {
        let mut acc = 0.0;
        let cumulative = weights
            .iter()
            .map(|w| {
                acc += w;
                acc
            })
            .collect();
        Self { phases, weights, cumulative }
    }

    /// Dense route: Schur decomposition of a unitary matrix.
    pub fn from_unitary(u: &DMatrix<C64>, start: &DVector<C64>) -> Result<Self> {
        let n = u.nrows();
        if u.ncols() != n || start.len() != n {
            return Err(domain("unitary and start state dimensions disagree"));
        }
        let norm = start.norm();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(domain(format!("start state has norm {norm}, expected 1")));
        }
        let defect = (u.adjoint() * u - DMatrix::<C64>::identity(n, n)).camax();
        if defect > 1e-10 {
            return Err(domain(format!("matrix is not unitary (defect {defect:.3e})")));
        }
        let (q, t) = Schur::try_new(u.clone(), 1e-15, 10_000)
            .ok_or_else(|| Error::Numeric("Schur decomposition did not converge".into()))?
            .unpack();
        let coeffs = q.adjoint() * start;
        let phases = (0..n).map(|k| wrap_phase(t[(k, k)].arg())).collect();
        let weights = coeffs.iter().map(|c| c.norm_sqr()).collect();
        Ok(Self::from_parts(phases, weights))
    }

    /// Dense route for a real orthogonal matrix.
    pub fn from_orthogonal(u: &DMatrix<f64>, start: &DVector<f64>) -> Result<Self> {
        Self::from_unitary(&u.map(C64::from), &start.map(C64::from))
    }

    /// Lanczos route for `U = R_B R_A` and a real unit start vector.
    pub fn of_walk(ops: &WalkOperators, start: &DVector<f64>) -> Result<Self> {
        let norm = start.norm();
        if (norm - 1.0).abs() > 1e-9 {
            return Err(domain(format!("start state has norm {norm}, expected 1")));
        }
        let (nodes, weights) = lanczos_measure(ops, start)?;
        let mut phases = Vec::with_capacity(2 * nodes.len());
        let mut ws = Vec::with_capacity(2 * nodes.len());
        for (c, w) in nodes.into_iter().zip(weights) {
            let theta = c.clamp(-1.0, 1.0).acos();
            if !(1e-12..=std::f64::consts::PI - 1e-12).contains(&theta) {
                phases.push(if theta < 1e-12 { 0.0 } else { std::f64::consts::PI });
                ws.push(w);
            } else {
                phases.extend([theta, -theta]);
                ws.extend([w / 2.0, w / 2.0]);
            }
        }
        let total: f64 = ws.iter().sum();
        ws.iter_mut().for_each(|w| *w /= total);
        Ok(Self::from_parts(phases, ws))
    }

    /// Measure of the anchor state `|e₀⟩` under the walk.
    pub fn of_walk_anchor(ops: &WalkOperators) -> Result<Self> {
        Self::of_walk(ops, &ops.basis().anchor_vector())
    }

    pub fn phases(&self) -> &[f64] {
        &self.phases
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.phases.len()
    }

    pub fn is_empty(&self) -> bool {
        self.phases.is_empty()
    }

    /// Total weight on phases with `|θ| ≤ tol`.
    pub fn weight_near_zero(&self, tol: f64) -> f64 {
        self.phases.iter().zip(&self.weights).filter(|(p, _)| p.abs() <= tol).map(|(_, w)| w).sum()
    }

    /// Smallest `|θ|` above `tol` carrying weight above `min_weight`.
    pub fn min_abs_phase(&self, tol: f64, min_weight: f64) -> Option<f64> {
        self.phases
            .iter()
            .zip(&self.weights)
            .filter(|(p, w)| p.abs() > tol && **w > min_weight)
            .map(|(p, _)| p.abs())
            .min_by(f64::total_cmp)
    }

    /// Total weight on phases with `|θ|` within `tol` of `target`.
    pub fn weight_at_abs(&self, target: f64, tol: f64) -> f64 {
        self.phases.iter().zip(&self.weights).filter(|(p, _)| (p.abs() - target).abs() <= tol).map(|(_, w)| w).sum()
    }

    /// Draws the index of an eigencomponent with probability equal to its weight.
    pub fn sample_component(&self, rng: &mut impl Rng) -> usize {
        let total = *self.cumulative.last().expect("nonempty spectrum");
        let u = rng.random::<f64>() * total;
        self.cumulative.partition_point(|&c| c <= u).min(self.len() - 1)
    }
}

/// Walks up to this many basis vectors get the complete Lanczos measure.
const EXACT_LANCZOS_DIM: usize = 257;

/// Lanczos with full reorthogonalization on `S = (U + Uᵀ)/2`. Returns the
/// Gauss quadrature nodes (eigenvalues of `S`) and weights for `start`.
///
/// Small spaces are run to exhaustion, which reproduces the measure exactly.
/// Larger ones stop once the largest Ritz value has converged: the estimators
/// only resolve the slow end of the spectrum, and quadrature nodes never fall
/// outside the true spectral range.
fn lanczos_measure(ops: &WalkOperators, start: &DVector<f64>) -> Result<(Vec<f64>, Vec<f64>)> {
    let dim = ops.dim();
    let apply_s = |x: &[f64], out: &mut [f64]| {
        let mut a = x.to_vec();
        ops.apply_u(&mut a);
        let mut b = x.to_vec();
        ops.apply_u_inv(&mut b);
        for i in 0..dim {
            out[i] = 0.5 * (a[i] + b[i]);
        }
    };
    let mut basis: Vec<Vec<f64>> = vec![start.as_slice().to_vec()];
    let (mut alphas, mut betas) = (Vec::new(), Vec::new());
    let mut w = vec![0.0; dim];
    // Convergence checks cost a dense eigensolve, so they are spaced out.
    let mut next_check = 32;
    loop {
        let q = basis.last().expect("basis is nonempty");
        apply_s(q, &mut w);
        let a: f64 = q.iter().zip(&w).map(|(x, y)| x * y).sum();
        alphas.push(a);
        // Two passes of classical Gram-Schmidt against the whole basis.
        for _ in 0..2 {
            for b in &basis {
                let c: f64 = b.iter().zip(&w).map(|(x, y)| x * y).sum();
                w.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
            }
        }
        let beta = w.iter().map(|x| x * x).sum::<f64>().sqrt();
        if beta < 1e-10 || basis.len() == dim {
            break;
        }
        let k = alphas.len();
        if dim > EXACT_LANCZOS_DIM && k >= next_check {
            if top_converged(&alphas, &betas, beta)? {
                break;
            }
            next_check = k + (k / 4).max(8);
        }
        betas.push(beta);
        basis.push(w.iter().map(|x| x / beta).collect());
    }
    let eig = SymmetricEigen::try_new(tridiagonal(&alphas, &betas), 1e-15, 100_000)
        .ok_or_else(|| Error::Numeric("tridiagonal eigensolver did not converge".into()))?;
    let nodes = eig.eigenvalues.iter().copied().collect();
    let weights = (0..alphas.len()).map(|j| eig.eigenvectors[(0, j)].powi(2)).collect();
    Ok((nodes, weights))
}

fn tridiagonal(alphas: &[f64], betas: &[f64]) -> DMatrix<f64> {
    let k = alphas.len();
    let mut t = DMatrix::zeros(k, k);
    for i in 0..k {
        t[(i, i)] = alphas[i];
        if i + 1 < k {
            t[(i, i + 1)] = betas[i];
            t[(i + 1, i)] = betas[i];
        }
    }
    t
}

/// Residual `β_k |y_k|` of the largest Ritz pair, which bounds the error of
/// its Ritz value, is below `1e-9`.
fn top_converged(alphas: &[f64], betas: &[f64], beta: f64) -> Result<bool> {
    let eig = SymmetricEigen::try_new(tridiagonal(alphas, betas), 1e-15, 100_000)
        .ok_or_else(|| Error::Numeric("tridiagonal eigensolver did not converge".into()))?;
    let top = eig.eigenvalues.imax();
    Ok(beta * eig.eigenvectors[(alphas.len() - 1, top)].abs() < 1e-9)
}

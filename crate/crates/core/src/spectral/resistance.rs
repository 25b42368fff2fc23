//! Harmonic potentials and effective resistance on the undirected graph with
//! unit conductances.

use nalgebra::{DMatrix, DVector};
use serde::{Deserialize, Serialize};

use super::LemmaReport;
use crate::error::{domain, parameter, Error, Result};
use crate::graph::{LayeredDag, VertexId};

fn neighbours(dag: &LayeredDag, v: VertexId) -> impl Iterator<Item = VertexId> + '_ {
    dag.children(v).iter().chain(dag.parents(v)).copied()
}

/// Potential `φ` with `φ(s) = 1`, `φ(t) = 0`, harmonic at every other vertex.
/// Indexed by vertex id; entry 0 is unused.
pub fn harmonic_potential(dag: &LayeredDag, s: VertexId, t: VertexId) -> Result<Vec<f64>> {
    if !dag.contains(s) || !dag.contains(t) {
        return Err(domain("unknown boundary vertex"));
    }
    if s == t {
        return Err(parameter("boundary vertices must differ"));
    }
    let v = dag.vertex_count();
    let mut lap = DMatrix::zeros(v, v);
    let mut rhs = DVector::zeros(v);
    for u in dag.vertices() {
        let i = u - 1;
        if u == s || u == t {
            lap[(i, i)] = 1.0;
            rhs[i] = if u == s { 1.0 } else { 0.0 };
            continue;
        }
        lap[(i, i)] = dag.degree(u) as f64;
        for w in neighbours(dag, u) {
            lap[(i, w - 1)] -= 1.0;
        }
    }
    let phi = lap.lu().solve(&rhs).ok_or_else(|| Error::Numeric("harmonic system is singular".into()))?;
    Ok(std::iter::once(0.0).chain(phi.iter().copied()).collect())
}

/// Effective resistance between `v_i` and the root.
pub fn effective_resistance(dag: &LayeredDag, i: VertexId) -> Result<f64> {
    let phi = harmonic_potential(dag, dag.root(), i)?;
    let current: f64 = neighbours(dag, i).map(|u| phi[u]).sum();
    Ok(1.0 / current)
}

/// Resistances of every vertex to the root.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ResistanceData {
    /// `resistance[i]` for vertex `i`; entries 0 and 1 are zero.
    pub resistance: Vec<f64>,
}

impl ResistanceData {
    pub fn compute(dag: &LayeredDag) -> Result<Self> {
        let mut resistance = vec![0.0; dag.vertex_count() + 1];
        for i in dag.vertices().skip(1) {
            resistance[i] = effective_resistance(dag, i)?;
        }
        Ok(Self { resistance })
    }
}

/// Every potential lies in `[0, 1]`, and each interior value lies between the
/// smallest and largest neighbouring value.
pub fn verify_max_principle(dag: &LayeredDag, s: VertexId, t: VertexId) -> Result<LemmaReport> {
    let phi = harmonic_potential(dag, s, t)?;
    let mut worst: f64 = 0.0;
    for u in dag.vertices() {
        worst = worst.max(-phi[u]).max(phi[u] - 1.0);
        if u != s && u != t {
            let (lo, hi) = neighbours(dag, u)
                .map(|w| phi[w])
                .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), x| (a.min(x), b.max(x)));
            worst = worst.max(lo - phi[u]).max(phi[u] - hi);
        }
    }
    Ok(LemmaReport::new("maximum-principle", worst.max(0.0), 1e-9))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::generate;

    #[test]
    fn path_resistance_is_depth() {
        let dag = generate::path(3).unwrap();
        assert!((effective_resistance(&dag, 3).unwrap() - 2.0).abs() < 1e-12);
        assert!(harmonic_potential(&dag, 1, 1).is_err());
    }

    #[test]
    fn chord_lowers_resistance() {
        let tree = generate::random_tree(25, 5, generate::Branching::UpTo(3), 4).unwrap();
        let chorded = generate::tree_with_chord(25, 5, generate::Branching::UpTo(3), 4).unwrap();
        for i in 2..=25 {
            let rt = effective_resistance(&tree, i).unwrap();
            assert!((rt - tree.layer(i) as f64).abs() < 1e-9);
            assert!(effective_resistance(&chorded, i).unwrap() <= rt + 1e-9);
        }
        assert!(verify_max_principle(&chorded, 1, 25).unwrap().pass);
    }
}

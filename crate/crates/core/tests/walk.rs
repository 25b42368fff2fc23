use std::collections::{BTreeSet, HashMap};

use nalgebra::DMatrix;
use proptest::prelude::*;
use qwalk::graph::generate::{self, Branching};
use qwalk::graph::{LayeredDag, PathSpec};
use qwalk::oracles::dfs_sequence;
use qwalk::walk::{build_gram, build_reflections, build_s_vector, path_restricted_reflections, EdgeSpaceBasis};
use qwalk::Error;

fn none() -> BTreeSet<usize> {
    BTreeSet::new()
}

fn max_abs(m: &DMatrix<f64>) -> f64 {
    m.amax()
}

/// `T_m` as its own tree, with the map from its edge indices to the edges
/// of the full tree. The anchor maps to the anchor.
fn materialize(tree: &LayeredDag, path: &PathSpec) -> (LayeredDag, Vec<usize>) {
    let shown = path.restricted_vertices(tree).unwrap();
    let local: HashMap<usize, usize> = shown.iter().enumerate().map(|(i, &v)| (v, i + 1)).collect();
    let mut edges = Vec::new();
    let mut map = Vec::new();
    for (k, &(u, v)) in tree.edges().iter().enumerate() {
        if let (Some(&a), Some(&b)) = (local.get(&u), local.get(&v)) {
            edges.push((a, b));
            map.push(k);
        }
    }
    map.push(tree.edge_count());
    (LayeredDag::new(shown.len(), edges).unwrap(), map)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn reflections_are_orthogonal_involutions(v in 2usize..40, p in 0.0f64..0.3, seed in 0u64..1000, alpha in 0.3f64..4.0) {
        let dag = generate::random_layered_dag(v, 6, Branching::UpTo(3), p, seed).unwrap();
        let ops = build_reflections(&dag, alpha, &none()).unwrap();
        let d = ops.dim();
        for r in [ops.r_a(), ops.r_b()] {
            prop_assert!(max_abs(&(&r * &r - DMatrix::identity(d, d))) < 1e-10);
            prop_assert!(max_abs(&(&r - r.transpose())) < 1e-12);
        }
        let u = ops.u();
        prop_assert!(max_abs(&(u.transpose() * &u - DMatrix::identity(d, d))) < 1e-10);
    }

    #[test]
    fn same_parity_s_vectors_are_orthogonal(v in 2usize..40, p in 0.0f64..0.3, seed in 0u64..1000) {
        let dag = generate::random_layered_dag(v, 6, Branching::UpTo(3), p, seed).unwrap();
        let part = dag.even_odd_partition();
        for set in [&part.set_a, &part.set_b] {
            for (i, &x) in set.iter().enumerate() {
                for &y in &set[i + 1..] {
                    let dot = build_s_vector(&dag, 1.3, x).unwrap().dot(&build_s_vector(&dag, 1.3, y).unwrap());
                    prop_assert!(dot.abs() < 1e-14);
                }
            }
        }
    }

    #[test]
    fn reflection_negates_its_own_s_vector(v in 2usize..40, seed in 0u64..1000) {
        let dag = generate::random_tree(v, 7, Branching::UpTo(3), seed).unwrap();
        let ops = build_reflections(&dag, 1.7, &none()).unwrap();
        let (ra, rb) = (ops.r_a(), ops.r_b());
        let part = dag.even_odd_partition();
        for (set, r) in [(&part.set_a, &ra), (&part.set_b, &rb)] {
            for &x in set.iter() {
                let s = build_s_vector(&dag, 1.7, x).unwrap();
                prop_assert!((r * &s + &s).amax() < 1e-12);
            }
        }
    }

    #[test]
    fn normalized_columns_are_orthonormal(v in 2usize..40, p in 0.0f64..0.3, seed in 0u64..1000) {
        let dag = generate::random_layered_dag(v, 6, Branching::UpTo(3), p, seed).unwrap();
        let g = build_gram(&dag, 2.0).unwrap();
        let ia = DMatrix::identity(g.a_hat.ncols(), g.a_hat.ncols());
        let ib = DMatrix::identity(g.b_hat.ncols(), g.b_hat.ncols());
        prop_assert!(max_abs(&(g.a_hat.transpose() * &g.a_hat - ia)) <= 1e-12);
        prop_assert!(max_abs(&(g.b_hat.transpose() * &g.b_hat - ib)) <= 1e-12);
    }

    #[test]
    fn sparse_application_matches_dense(v in 2usize..30, seed in 0u64..1000) {
        let dag = generate::random_layered_dag(v, 5, Branching::UpTo(3), 0.2, seed).unwrap();
        let marked: BTreeSet<usize> = [1 + (seed as usize % v)].into();
        let ops = build_reflections(&dag, 0.9, &marked).unwrap();
        let x: Vec<f64> = (0..ops.dim()).map(|i| ((i * 37 + 11) % 17) as f64 - 8.0).collect();
        let mut y = x.clone();
        ops.apply_u(&mut y);
        let dense = ops.u() * nalgebra::DVector::from_vec(x.clone());
        prop_assert!(dense.iter().zip(&y).all(|(a, b)| (a - b).abs() < 1e-12));
        ops.apply_u_inv(&mut y);
        prop_assert!(x.iter().zip(&y).all(|(a, b)| (a - b).abs() < 1e-12));
    }

    #[test]
    fn path_restriction_equals_materialized_prefix(v in 2usize..40, seed in 0u64..1000, pick in 0usize..1000) {
        let tree = generate::random_tree(v, 7, Branching::Binary, seed).unwrap();
        let order = dfs_sequence(&tree);
        let target = order[pick % order.len()];
        let path = PathSpec::to_vertex(&tree, target).unwrap();
        let (sub, map) = materialize(&tree, &path);
        prop_assume!(sub.edge_count() > 0);
        let alpha = 1.4;
        let full = path_restricted_reflections(&tree, &path, alpha, &none()).unwrap();
        let small = build_reflections(&sub, alpha, &none()).unwrap();
        let (fu, su) = (full.u(), small.u());
        let mut embedded = DMatrix::identity(full.dim(), full.dim());
        for (i, &fi) in map.iter().enumerate() {
            for (j, &fj) in map.iter().enumerate() {
                embedded[(fi, fj)] = su[(i, j)];
            }
        }
        prop_assert!(max_abs(&(fu - embedded)) < 1e-12);
    }
}

#[test]
fn three_vertex_path_gram() {
    let dag = generate::path(3).unwrap();
    let g = build_gram(&dag, 1.0).unwrap();
    let s2 = 2f64.sqrt();
    assert!((g.a_vec[0] - s2).abs() < 1e-12 && (g.a_vec[1] - 1.0).abs() < 1e-12);
    assert!((g.b_vec[0] - s2).abs() < 1e-12);
    assert_eq!((g.l.nrows(), g.l.ncols()), (2, 1));
    assert!((g.l[(0, 0)] - 0.5).abs() < 1e-12);
    assert!((g.l[(1, 0)] - 1.0 / s2).abs() < 1e-12);
}

#[test]
fn anchor_is_last() {
    let dag = generate::star(3).unwrap();
    let b = EdgeSpaceBasis::new(&dag);
    assert_eq!((b.dim(), b.anchor()), (4, 3));
    assert_eq!(b.anchor_vector()[3], 1.0);
}

#[test]
fn star_restricted_to_first_child() {
    let tree = generate::star(2).unwrap();
    let mut path = PathSpec::empty();
    path.push(2, 0);
    let ops = path_restricted_reflections(&tree, &path, 1.0, &none()).unwrap();
    let ra = ops.r_a();
    // Edge to the second child is invisible and stays fixed.
    assert_eq!(ra[(1, 1)], 1.0);
    assert!(ra.row(1).iter().enumerate().all(|(j, &x)| j == 1 || x == 0.0));
    let d = ops.dim();
    assert!(max_abs(&(&ra * &ra - DMatrix::identity(d, d))) < 1e-10);
}

#[test]
fn marked_vertex_block_is_identity() {
    let dag = generate::path(3).unwrap();
    let ops = build_reflections(&dag, 1.0, &[2].into()).unwrap();
    assert_eq!(ops.r_b(), DMatrix::identity(3, 3));
}

#[test]
fn single_vertex_walk_is_rejected() {
    let dag = LayeredDag::new(1, vec![]).unwrap();
    assert!(matches!(build_reflections(&dag, 1.0, &none()), Err(Error::Domain(_))));
}

#[test]
fn bad_alpha_is_a_parameter_error() {
    let dag = generate::path(2).unwrap();
    assert!(matches!(build_reflections(&dag, 0.0, &none()), Err(Error::Parameter(_))));
    let ops = build_reflections(&dag, 1.0, &none()).unwrap();
    assert!(ops.ensure_same_alpha(2.0).is_err());
}

#[test]
fn dump_writes_matrices() {
    let dag = generate::path(3).unwrap();
    let ops = build_reflections(&dag, 1.0, &none()).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let prefix = dir.path().join("w");
    ops.dump(&prefix).unwrap();
    let meta = std::fs::read_to_string(dir.path().join("w.json")).unwrap();
    assert!(meta.contains("alpha"));
    let ra = std::fs::read_to_string(dir.path().join("w.ra.txt")).unwrap();
    assert_eq!(ra.lines().count(), 3);
}

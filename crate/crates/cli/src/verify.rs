//! Spectral identity checks over generated instance families.

use std::collections::BTreeSet;

use clap::{Args, ValueEnum};
use qwalk::graph::generate::{self, Branching};
use qwalk::spectral::{
    eigendecompose_walk, top_pair_overlap, verify_dag_bound, verify_fundamental_corners, verify_harmonic_property,
    verify_k_bounds, verify_k_identity, verify_one_eigenspace, verify_szegedy, verify_tree_formula, LemmaReport,
};
use qwalk::walk::{build_gram, build_reflections};
use qwalk::LayeredDag;
use serde::Serialize;

use crate::report::{emit, CliResult, Failure, Report};
use crate::run::run_trials;
use crate::Global;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    /// Walk phases against singular values of the discriminant.
    Szegedy,
    /// No overlap of the anchor with the 1-eigenspace.
    OneEigenspace,
    /// Entry and eigenvalue bounds on K.
    KBounds,
    /// Closed forms of the fundamental-matrix corners.
    Corners,
    /// K recovered from the absorbing walk.
    KIdentity,
    /// Depth formula for the scaled fundamental matrix on trees.
    TreeFormula,
    /// Depth bound for the scaled fundamental matrix on DAGs.
    DagBound,
    /// Harmonic property of the absorbing walk.
    Harmonic,
    /// Anchor overlap with the slowest eigenvectors.
    TopPair,
    /// Every suite above.
    All,
}

const SUITES: [Suite; 9] = [
    Suite::Szegedy,
    Suite::OneEigenspace,
    Suite::KBounds,
    Suite::Corners,
    Suite::KIdentity,
    Suite::TreeFormula,
    Suite::DagBound,
    Suite::Harmonic,
    Suite::TopPair,
];

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Family {
    Trees,
    Dags,
    Paths,
    TreeChord,
}

#[derive(Args, Debug)]
pub struct VerifyArgs {
    #[arg(long, value_enum)]
    pub suite: Suite,
    #[arg(long, value_enum, default_value_t = Family::Trees)]
    pub family: Family,
    #[arg(long, default_value_t = 100)]
    pub count: usize,
}

/// Instance `i` of a family. DAGs are redrawn until they have at most 80 edges.
fn member(family: Family, i: usize, seed: u64) -> CliResult<LayeredDag> {
    let s = seed.wrapping_add(i as u64);
    let tree_size = 4 + (i * 7) % 57;
    let tree_depth = 4 + i % 5;
    Ok(match family {
        Family::Trees => generate::random_tree(tree_size, tree_depth, Branching::UpTo(3), s)?,
        Family::TreeChord => generate::tree_with_chord(tree_size, tree_depth, Branching::UpTo(3), s)?,
        Family::Paths => generate::path(2 + i % 30)?,
        Family::Dags => {
            let (v, depth) = (4 + (i * 5) % 32, 3 + i % 4);
            let mut k = 0u64;
            loop {
                let seed = s.wrapping_add(k.wrapping_mul(1 << 32));
                let dag = generate::random_layered_dag(v, depth, Branching::UpTo(3), 0.2, seed)?;
                if dag.edge_count() <= 80 {
                    break dag;
                }
                k += 1;
            }
        }
    })
}

/// `{√(2n), 2√(2n), √(2n/0.3)}`.
fn alpha_grid(dag: &LayeredDag) -> [f64; 3] {
    let n = dag.depth().max(1) as f64;
    [(2.0 * n).sqrt(), 2.0 * (2.0 * n).sqrt(), (2.0 * n / 0.3).sqrt()]
}

fn name(s: Suite) -> String {
    serde_json::to_value(s).ok().and_then(|v| v.as_str().map(String::from)).unwrap_or_default()
}

fn check(suite: Suite, dag: &LayeredDag) -> qwalk::Result<LemmaReport> {
    let label = name(suite);
    let mut reports = Vec::new();
    for alpha in alpha_grid(dag) {
        let r = match suite {
            Suite::Szegedy => {
                let ops = build_reflections(dag, alpha, &BTreeSet::new())?;
                let gram = build_gram(dag, alpha)?;
                verify_szegedy(&eigendecompose_walk(&ops, &gram)?, &gram)
            }
            Suite::OneEigenspace => {
                let ops = build_reflections(dag, alpha, &BTreeSet::new())?;
                verify_one_eigenspace(&ops, &build_gram(dag, alpha)?)?
            }
            Suite::KBounds => verify_k_bounds(dag, alpha)?,
            Suite::Corners => verify_fundamental_corners(dag, alpha)?,
            Suite::KIdentity => verify_k_identity(dag, alpha)?,
            Suite::TreeFormula => verify_tree_formula(dag, alpha)?,
            Suite::DagBound => verify_dag_bound(dag, alpha)?,
            Suite::Harmonic => verify_harmonic_property(dag, alpha)?,
            Suite::TopPair => {
                let t = top_pair_overlap(dag, &build_gram(dag, alpha)?)?;
                LemmaReport::new(&label, (2.0 / 3.0 - t.overlap).max(0.0), 0.0)
            }
            Suite::All => unreachable!("expanded by the caller"),
        };
        reports.push(r);
    }
    Ok(LemmaReport::combine(&label, reports))
}

#[derive(Serialize)]
struct VerifySummary {
    pass: bool,
    reports: Vec<LemmaReport>,
}

pub fn verify(g: &Global, a: &VerifyArgs) -> CliResult<()> {
    if a.count == 0 {
        return Err(Failure::Parameter("--count must be at least 1".into()));
    }
    if a.suite == Suite::TreeFormula && matches!(a.family, Family::Dags | Family::TreeChord) {
        return Err(Failure::Parameter("the tree formula only applies to trees".into()));
    }
    let suites: Vec<Suite> = match a.suite {
        Suite::All => SUITES
            .into_iter()
            .filter(|&s| s != Suite::TreeFormula || matches!(a.family, Family::Trees | Family::Paths))
            .collect(),
        s => vec![s],
    };
    let per_instance = run_trials(g.parallel, a.count as u64, |i| {
        let dag = member(a.family, i as usize, g.seed)?;
        suites.iter().map(|&s| check(s, &dag).map_err(Failure::from)).collect::<CliResult<Vec<_>>>()
    })?;
    let reports: Vec<LemmaReport> = suites
        .iter()
        .enumerate()
        .map(|(k, &s)| LemmaReport::combine(&name(s), per_instance.iter().map(|r| r[k].clone())))
        .collect();
    let pass = reports.iter().all(|r| r.pass);
    let params = serde_json::json!({ "suite": a.suite, "family": a.family, "count": a.count });
    let report = Report::new("verify", g.seed, None, params, VerifySummary { pass, reports });
    emit(g.out.as_deref(), &report.to_json())?;
    if pass {
        Ok(())
    } else {
        let failed: Vec<_> = report.result.reports.iter().filter(|r| !r.pass).map(|r| r.lemma.as_str()).collect();
        Err(Failure::Property(format!("failed: {}", failed.join(", "))))
    }
}

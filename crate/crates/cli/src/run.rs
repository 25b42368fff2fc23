//! Instance generation and the seeded estimator subcommands.

use std::path::PathBuf;

use clap::{Args, ValueEnum};
use qwalk::andor::{random_formula, unknown_evaluate, EvalParams, KnownEvaluatorModel};
use qwalk::backtrack::{search, SearchConfig, SearchResult};
use qwalk::graph::generate::{self, Branching};
use qwalk::oracles::{dfs_sequence, exact_edge_count, marked_exists, minimax_value};
use qwalk::rng::stream;
use qwalk::size::{
    delta_correct, estimate_dag_size, ExactSizeOracle, QuantumSizeOracle, SizeOutcome, SizeParams, SpectrumCache,
    VertexSizeOracle,
};
use qwalk::stats::lower_bound_95;
use qwalk::{Instance, LayeredDag};
use rayon::prelude::*;
use serde::Serialize;

use crate::report::{emit, load_instance, CliResult, Failure, Report};
use crate::Global;

/// Runs `f(trial)` for every trial, on `parallel` threads when asked. Trial
/// `k` always draws from stream `k` of the seed, so the result does not
/// depend on the thread count.
pub fn run_trials<T, F>(parallel: usize, trials: u64, f: F) -> CliResult<Vec<T>>
where
    T: Send,
    F: Fn(u64) -> CliResult<T> + Sync + Send,
{
    if trials == 0 {
        return Err(Failure::Parameter("--trials must be at least 1".into()));
    }
    if parallel <= 1 {
        return (0..trials).map(&f).collect();
    }
    let pool =
        rayon::ThreadPoolBuilder::new().num_threads(parallel).build().map_err(|e| Failure::Other(e.to_string()))?;
    pool.install(|| (0..trials).into_par_iter().map(&f).collect())
}

fn rate(successes: u64, trials: u64) -> f64 {
    successes as f64 / trials as f64
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Kind {
    /// Random tree.
    Tree,
    /// Random tree plus extra edges between consecutive layers.
    Dag,
    /// Random tree plus one chord.
    Chord,
    Path,
    /// Root with `vertices − 1` leaf children.
    Star,
    /// Complete binary tree of depth `--depth`.
    Complete,
    /// Random AND-OR formula with `--leaves` leaves.
    Formula,
}

#[derive(Args, Debug)]
pub struct GenArgs {
    #[arg(long, value_enum)]
    pub kind: Kind,
    #[arg(long, default_value_t = 16)]
    pub vertices: usize,
    /// Depth bound; defaults to one that always fits.
    #[arg(long)]
    pub depth: Option<usize>,
    /// Maximum number of children per vertex.
    #[arg(long, default_value_t = 3)]
    pub branching: usize,
    /// Probability of each extra edge in a DAG.
    #[arg(long, default_value_t = 0.2)]
    pub p: f64,
    #[arg(long, default_value_t = 8)]
    pub leaves: usize,
    /// Mark this vertex; repeatable.
    #[arg(long)]
    pub mark: Vec<usize>,
    /// Mark the vertex at this 1-based position of the depth-first order.
    #[arg(long)]
    pub mark_dfs: Option<usize>,
}

fn branching(b: usize) -> Branching {
    if b == 2 {
        Branching::Binary
    } else {
        Branching::UpTo(b)
    }
}

fn generate_instance(a: &GenArgs, seed: u64) -> CliResult<Instance> {
    let depth = a.depth.unwrap_or(a.vertices.saturating_sub(1));
    let b = branching(a.branching);
    let dag = |d: qwalk::Result<LayeredDag>| -> CliResult<Instance> { Ok(Instance::plain(d?)) };
    let mut inst = match a.kind {
        Kind::Tree => dag(generate::random_tree(a.vertices, depth, b, seed))?,
        Kind::Dag => {
            if !(0.0..=1.0).contains(&a.p) {
                return Err(Failure::Parameter(format!("--p must lie in [0,1], got {}", a.p)));
            }
            dag(generate::random_layered_dag(a.vertices, depth, b, a.p, seed))?
        }
        Kind::Chord => dag(generate::tree_with_chord(a.vertices, depth, b, seed))?,
        Kind::Path => dag(generate::path(a.vertices))?,
        Kind::Star => dag(generate::star(a.vertices.saturating_sub(1)))?,
        Kind::Complete => dag(generate::complete_binary(a.depth.unwrap_or(3)))?,
        Kind::Formula => random_formula(a.leaves, a.depth.unwrap_or(a.leaves), seed)?,
    };
    for &v in &a.mark {
        if !inst.dag.contains(v) {
            return Err(Failure::Parameter(format!("--mark {v} is not a vertex")));
        }
        inst.annotations.marked.insert(v);
    }
    if let Some(k) = a.mark_dfs {
        if !inst.dag.is_tree() {
            return Err(Failure::Parameter("--mark-dfs needs a tree".into()));
        }
        let order = dfs_sequence(&inst.dag);
        let v = *order
            .get(k.wrapping_sub(1))
            .ok_or_else(|| Failure::Parameter(format!("--mark-dfs {k} outside 1..={}", order.len())))?;
        inst.annotations.marked.insert(v);
    }
    Ok(inst)
}

pub fn gen(g: &Global, a: &GenArgs) -> CliResult<()> {
    let inst = generate_instance(a, g.seed)?;
    emit(g.out.as_deref(), &(inst.to_json() + "\n"))
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Sizes {
    /// Subtree sizes from the walk-based estimator.
    Quantum,
    /// Subtree sizes by classical exploration.
    Exact,
}

fn size_oracle(s: Sizes) -> Box<dyn VertexSizeOracle> {
    match s {
        Sizes::Quantum => Box::new(QuantumSizeOracle::default()),
        Sizes::Exact => Box::new(ExactSizeOracle),
    }
}

#[derive(Args, Debug)]
pub struct EstimateArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Upper bound on the edge count.
    #[arg(long, default_value_t = 1024)]
    pub t0: u64,
    /// Depth bound; the depth of the input when absent.
    #[arg(long)]
    pub n: Option<u64>,
    #[arg(long, default_value_t = 0.3)]
    pub delta: f64,
    #[arg(long, default_value_t = 0.1)]
    pub eps: f64,
    #[arg(long, default_value_t = 1)]
    pub trials: u64,
}

#[derive(Serialize)]
struct SizeTrial {
    trial: u64,
    outcome: SizeOutcome,
    theta_hat: f64,
    raw_estimate: f64,
    controlled_u_count: u64,
    delta_correct: bool,
}

#[derive(Serialize)]
struct SizeSummary {
    edges: usize,
    delta_correct: u64,
    exceeds: u64,
    rate: f64,
    lower_bound_95: f64,
    trials: Vec<SizeTrial>,
}

fn depth_bound(given: Option<u64>, dag: &LayeredDag) -> u64 {
    given.unwrap_or(dag.depth() as u64).max(1)
}

pub fn estimate_size(g: &Global, a: &EstimateArgs) -> CliResult<()> {
    let (inst, input) = load_instance(&a.input)?;
    let params = SizeParams::new(a.t0, depth_bound(a.n, &inst.dag), a.delta, a.eps)?;
    let edges = exact_edge_count(&inst.dag);
    let trials = run_trials(g.parallel, a.trials, |k| {
        let est = estimate_dag_size(&inst.handle(), &params, &SpectrumCache::new(), &mut stream(g.seed, k))?;
        Ok(SizeTrial {
            trial: k,
            outcome: est.outcome,
            theta_hat: est.theta_hat,
            raw_estimate: est.raw_estimate,
            controlled_u_count: est.controlled_u_count,
            delta_correct: delta_correct(est.outcome, a.delta, edges as u64),
        })
    })?;
    let ok = trials.iter().filter(|t| t.delta_correct).count() as u64;
    let exceeds = trials.iter().filter(|t| matches!(t.outcome, SizeOutcome::Exceeds(_))).count() as u64;
    let result = SizeSummary {
        edges,
        delta_correct: ok,
        exceeds,
        rate: rate(ok, a.trials),
        lower_bound_95: lower_bound_95(ok, a.trials),
        trials,
    };
    let params = serde_json::json!({
        "t0": params.t0, "n": params.n, "delta": params.delta, "epsilon": params.epsilon, "trials": a.trials,
    });
    emit(g.out.as_deref(), &Report::new("estimate-size", g.seed, Some(input), params, result).to_json())
}

#[derive(Args, Debug)]
pub struct BacktrackArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Upper bound on the vertex count; the input's count when absent.
    #[arg(long)]
    pub t1: Option<u64>,
    #[arg(long)]
    pub n: Option<u64>,
    #[arg(long, default_value_t = 0.1)]
    pub eps: f64,
    #[arg(long, default_value_t = 1)]
    pub trials: u64,
    /// Keep doubling instead of switching to whole-tree detection.
    #[arg(long)]
    pub no_cutover: bool,
    #[arg(long, value_enum, default_value_t = Sizes::Quantum)]
    pub sizes: Sizes,
}

#[derive(Serialize)]
struct SearchSummary {
    marked_exists: bool,
    found: u64,
    agreement: u64,
    rate: f64,
    trials: Vec<SearchResult>,
}

pub fn backtrack(g: &Global, a: &BacktrackArgs) -> CliResult<()> {
    let (inst, input) = load_instance(&a.input)?;
    if !inst.dag.is_tree() {
        return Err(Failure::Parameter("backtracking needs a tree".into()));
    }
    let t1 = a.t1.unwrap_or(inst.dag.vertex_count() as u64);
    let n = depth_bound(a.n, &inst.dag);
    let config = SearchConfig { cutover: !a.no_cutover };
    let truth = marked_exists(&inst);
    let trials = run_trials(g.parallel, a.trials, |k| {
        let oracle = size_oracle(a.sizes);
        Ok(search(&inst.handle(), t1, n, a.eps, config, oracle.as_ref(), &mut stream(g.seed, k))?)
    })?;
    let found = trials.iter().filter(|r| r.found).count() as u64;
    let agreement = trials.iter().filter(|r| r.found == truth).count() as u64;
    let result = SearchSummary { marked_exists: truth, found, agreement, rate: rate(agreement, a.trials), trials };
    let params = serde_json::json!({
        "t1": t1, "n": n, "epsilon": a.eps, "trials": a.trials, "cutover": config.cutover, "sizes": a.sizes,
    });
    emit(g.out.as_deref(), &Report::new("backtrack", g.seed, Some(input), params, result).to_json())
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Evaluator {
    Exact,
    /// Flips its answer with the requested failure probability.
    Noisy,
}

#[derive(Args, Debug)]
pub struct EvaluateArgs {
    #[arg(long)]
    pub input: PathBuf,
    /// Recursion levels.
    #[arg(long, default_value_t = 2)]
    pub c: u32,
    #[arg(long, default_value_t = 0.1)]
    pub eps: f64,
    /// Upper bound on the vertex count; the input's count when absent.
    #[arg(long)]
    pub t: Option<f64>,
    #[arg(long)]
    pub n: Option<u64>,
    #[arg(long, default_value_t = 1)]
    pub trials: u64,
    #[arg(long, value_enum, default_value_t = Evaluator::Exact)]
    pub evaluator: Evaluator,
    #[arg(long, value_enum, default_value_t = Sizes::Quantum)]
    pub sizes: Sizes,
}

#[derive(Serialize)]
struct EvalTrial {
    trial: u64,
    value: bool,
    measured_queries: f64,
}

#[derive(Serialize)]
struct EvalSummary {
    minimax: bool,
    agreement: u64,
    rate: f64,
    lower_bound_95: f64,
    trials: Vec<EvalTrial>,
}

pub fn evaluate(g: &Global, a: &EvaluateArgs) -> CliResult<()> {
    let (inst, input) = load_instance(&a.input)?;
    let truth = minimax_value(&inst)?;
    let params = EvalParams {
        c: a.c,
        epsilon: a.eps,
        t: a.t.unwrap_or(inst.dag.vertex_count() as f64),
        n: depth_bound(a.n, &inst.dag),
    };
    let model = match a.evaluator {
        Evaluator::Exact => KnownEvaluatorModel::exact(),
        Evaluator::Noisy => KnownEvaluatorModel::noisy(),
    };
    let trials = run_trials(g.parallel, a.trials, |k| {
        let oracle = size_oracle(a.sizes);
        let out = unknown_evaluate(&inst.handle(), params, &model, oracle.as_ref(), &mut stream(g.seed, k))?;
        Ok(EvalTrial { trial: k, value: out.value, measured_queries: out.measured_queries })
    })?;
    let agreement = trials.iter().filter(|t| t.value == truth).count() as u64;
    let result = EvalSummary {
        minimax: truth,
        agreement,
        rate: rate(agreement, a.trials),
        lower_bound_95: lower_bound_95(agreement, a.trials),
        trials,
    };
    let params = serde_json::json!({
        "c": params.c, "epsilon": params.epsilon, "t": params.t, "n": params.n, "trials": a.trials,
        "evaluator": a.evaluator, "sizes": a.sizes,
    });
    emit(g.out.as_deref(), &Report::new("evaluate", g.seed, Some(input), params, result).to_json())
}

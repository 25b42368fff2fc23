//! Cost of the edge-count estimator along one parameter axis.

use std::path::PathBuf;

use clap::{Args, ValueEnum};
use qwalk::graph::generate;
use qwalk::rng::stream;
use qwalk::size::{estimate_dag_size, SizeParams, SpectrumCache};
use qwalk::stats::log_log_slope;
use qwalk::Instance;
use serde::Serialize;

use crate::report::{emit, load_instance, CliResult, Failure, Report};
use crate::run::run_trials;
use crate::{Format, Global};

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    T0,
    Delta,
    N,
}

#[derive(Args, Debug)]
pub struct BenchArgs {
    #[arg(long, value_enum)]
    pub axis: Axis,
    /// Instance to estimate; a three-leaf star when absent.
    #[arg(long)]
    pub input: Option<PathBuf>,
    /// Fixed values of the parameters not on the axis.
    #[arg(long, default_value_t = 256)]
    pub t0: u64,
    #[arg(long, default_value_t = 4)]
    pub n: u64,
    #[arg(long, default_value_t = 0.3)]
    pub delta: f64,
    #[arg(long, default_value_t = 0.1)]
    pub eps: f64,
    /// Runs averaged per grid point.
    #[arg(long, default_value_t = 1)]
    pub trials: u64,
}

#[derive(Serialize)]
struct Point {
    value: f64,
    cost: f64,
}

#[derive(Serialize)]
struct BenchSummary {
    slope: f64,
    points: Vec<Point>,
}

/// Geometric grid for the axis: `T₀ = 16·2^{k/3}`, `1/δ = 1.25·2^{k/4}`, `n = 2^{k/2}`.
fn grid(axis: Axis) -> Vec<f64> {
    match axis {
        Axis::T0 => (0..=18).map(|k| (16.0 * 2f64.powf(k as f64 / 3.0)).round()).collect(),
        Axis::Delta => (0..=16).map(|k| 1.0 / (1.25 * 2f64.powf(k as f64 / 4.0))).collect(),
        Axis::N => {
            let mut ns: Vec<f64> = (0..=12).map(|k| 2f64.powf(k as f64 / 2.0).round()).collect();
            ns.dedup();
            ns
        }
    }
}

pub fn bench(g: &Global, a: &BenchArgs) -> CliResult<()> {
    let (inst, input) = match &a.input {
        Some(p) => {
            let (i, info) = load_instance(p)?;
            (i, Some(info))
        }
        None => (Instance::plain(generate::star(3)?), None),
    };
    // Reject bad fixed parameters before the sweep.
    SizeParams::new(a.t0, a.n, a.delta, a.eps)?;
    if a.trials == 0 {
        return Err(Failure::Parameter("--trials must be at least 1".into()));
    }
    let values = grid(a.axis);
    let points = run_trials(g.parallel, values.len() as u64, |k| {
        let x = values[k as usize];
        let p = match a.axis {
            Axis::T0 => SizeParams::new(x as u64, a.n, a.delta, a.eps)?,
            Axis::Delta => SizeParams::new(a.t0, a.n, x, a.eps)?,
            Axis::N => SizeParams::new(a.t0, x as u64, a.delta, a.eps)?,
        };
        let cache = SpectrumCache::new();
        let mut total = 0.0;
        for t in 0..a.trials {
            let est = estimate_dag_size(&inst.handle(), &p, &cache, &mut stream(g.seed, k * a.trials + t))?;
            total += est.controlled_u_count as f64;
        }
        Ok(Point { value: x, cost: total / a.trials as f64 })
    })?;
    let xs: Vec<f64> = points.iter().map(|p| p.value).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.cost).collect();
    let slope = log_log_slope(&xs, &ys);
    match g.format {
        Format::Csv => {
            let mut csv = format!("{},controlled_u\n", axis_name(a.axis));
            for p in &points {
                csv += &format!("{},{}\n", p.value, p.cost);
            }
            eprintln!("log-log slope: {slope:.4}");
            emit(g.out.as_deref(), &csv)
        }
        Format::Json => {
            let params = serde_json::json!({
                "axis": a.axis, "t0": a.t0, "n": a.n, "delta": a.delta, "epsilon": a.eps, "trials": a.trials,
            });
            let report = Report::new("bench", g.seed, input, params, BenchSummary { slope, points });
            emit(g.out.as_deref(), &report.to_json())
        }
    }
}

fn axis_name(a: Axis) -> &'static str {
    match a {
        Axis::T0 => "t0",
        Axis::Delta => "delta",
        Axis::N => "n",
    }
}

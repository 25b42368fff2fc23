//! Size estimation of layered DAGs and trees from the smallest walk phase.
//!
//! With `α = √(2n/δ)` the smallest nonzero phase of the walk satisfies
//! `T ≤ 1/(α² sin²(θ_min/2)) ≤ (1 + δ/2) T`, so a sufficiently precise
//! estimate of `θ_min` from the anchor state gives a `δ`-accurate edge count.
//!
//! The simulator explores the sub-DAG through counted queries to build the
//! operator. The cost of the quantum procedure is the controlled-U count
//! charged to the ledger; the exploration queries are recorded separately.

use std::cell::RefCell;
use std::collections::hash_map::DefaultHasher;
use std::collections::{BTreeSet, HashMap};
use std::hash::{Hash, Hasher};
use std::rc::Rc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{domain, parameter, Result};
use crate::graph::{explore_from, Explorer, LayeredDag, QueryLedger, VertexId};
use crate::measure::PhaseSpectrum;
use crate::qpe::{estimate_min_phase, MinPhaseConfig};
use crate::walk::build_reflections;

/// Overlap bound used for the minimum-phase estimation.
pub const OVERLAP_C: f64 = 4.0 / 9.0;

/// Either a count in `[1, T₀]` or the claim that the count exceeds `T₀`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "value", rename_all = "snake_case")]
pub enum SizeOutcome {
    Value(u64),
    Exceeds(u64),
}

/// Parameters of one size estimation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SizeParams {
    pub t0: u64,
    pub n: u64,
    pub delta: f64,
    pub epsilon: f64,
}

impl SizeParams {
    pub fn new(t0: u64, n: u64, delta: f64, epsilon: f64) -> Result<Self> {
        if t0 < 1 {
            return Err(parameter("T0 must be at least 1"));
        }
        if n < 1 {
            return Err(parameter("depth bound n must be at least 1"));
        }
        if !(delta > 0.0 && delta < 1.0) {
            return Err(parameter(format!("delta must lie in (0,1), got {delta}")));
        }
        if !(epsilon > 0.0 && epsilon < 1.0) {
            return Err(parameter(format!("epsilon must lie in (0,1), got {epsilon}")));
        }
        Ok(Self { t0, n, delta, epsilon })
    }

    /// `α = √(2n/δ)`.
    pub fn alpha(&self) -> f64 {
        (2.0 * self.n as f64 / self.delta).sqrt()
    }

    /// `δ_min = δ^1.5 / (4√(3nT₀))`.
    pub fn delta_min(&self) -> f64 {
        self.delta.powf(1.5) / (4.0 * (3.0 * self.n as f64 * self.t0 as f64).sqrt())
    }

    pub fn min_phase_config(&self) -> Result<MinPhaseConfig> {
        MinPhaseConfig::new(OVERLAP_C, self.delta_min(), self.epsilon)
    }
}

/// Result of one run of the edge-count estimator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SizeEstimate {
    pub outcome: SizeOutcome,
    pub t0: u64,
    pub n: u64,
    pub delta: f64,
    pub epsilon: f64,
    pub alpha_used: f64,
    pub theta_hat: f64,
    /// `1/(α² sin²(θ̂/2))` before rounding; infinite when `θ̂ = 0`.
    pub raw_estimate: f64,
    pub controlled_u_count: u64,
    pub ledger: QueryLedger,
}

/// `1/(α² sin²(θ/2))` for `0 < θ ≤ π`.
pub fn theta_to_size(theta: f64, alpha: f64) -> Result<f64> {
    if !(theta > 0.0 && theta <= std::f64::consts::PI) {
        return Err(domain(format!("phase {theta} outside (0, pi]")));
    }
    if !(alpha > 0.0) {
        return Err(parameter("alpha must be positive"));
    }
    Ok(1.0 / (alpha * alpha * (theta / 2.0).sin().powi(2)))
}

/// Rounds half-up and clamps into `[1, T₀]`; values above `T₀` exceed.
pub fn round_outcome(raw: f64, t0: u64) -> SizeOutcome {
    if !(raw <= t0 as f64) {
        SizeOutcome::Exceeds(t0)
    } else {
        SizeOutcome::Value(((raw + 0.5).floor() as u64).clamp(1, t0))
    }
}

/// `|T − T̂| ≤ δT` for a value, or `(1+δ)T > T₀` for an exceeds claim.
pub fn delta_correct(outcome: SizeOutcome, delta: f64, true_t: u64) -> bool {
    let t = true_t as f64;
    match outcome {
        SizeOutcome::Value(v) => (t - v as f64).abs() <= delta * t,
        SizeOutcome::Exceeds(t0) => (1.0 + delta) * t > t0 as f64,
    }
}

/// Memo of anchor-state spectra keyed by explored graph and α. Repeated
/// estimates of the same subtree then only pay for sampling.
#[derive(Debug, Default)]
pub struct SpectrumCache {
    map: RefCell<HashMap<(u64, u64), Rc<PhaseSpectrum>>>,
}

impl SpectrumCache {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn anchor_spectrum(&self, dag: &LayeredDag, alpha: f64) -> Result<Rc<PhaseSpectrum>> {
        let mut h = DefaultHasher::new();
        dag.vertex_count().hash(&mut h);
        dag.edges().hash(&mut h);
        let key = (h.finish(), alpha.to_bits());
        if let Some(s) = self.map.borrow().get(&key) {
            return Ok(Rc::clone(s));
        }
        let ops = build_reflections(dag, alpha, &BTreeSet::new())?;
        let s = Rc::new(PhaseSpectrum::of_walk_anchor(&ops)?);
        self.map.borrow_mut().insert(key, Rc::clone(&s));
        Ok(s)
    }
}

/// Estimates the number of edges of the sub-DAG below `v`.
pub fn estimate_subdag_size(
    ex: &dyn Explorer,
    v: VertexId,
    params: &SizeParams,
    cache: &SpectrumCache,
    rng: &mut impl Rng,
) -> Result<SizeEstimate> {
    let before = ex.ledger();
    let explored = explore_from(ex, v)?;
    if explored.dag.edge_count() == 0 {
        return Err(domain("cannot estimate the size of a graph with no edges"));
    }
    let alpha = params.alpha();
    let spectrum = cache.anchor_spectrum(&explored.dag, alpha)?;
    let est = estimate_min_phase(&spectrum, &params.min_phase_config()?, rng)?;
    ex.charge_controlled_u(est.controlled_u);
    let raw = if est.theta_hat > 0.0 { theta_to_size(est.theta_hat, alpha)? } else { f64::INFINITY };
    Ok(SizeEstimate {
        outcome: round_outcome(raw, params.t0),
        t0: params.t0,
        n: params.n,
        delta: params.delta,
        epsilon: params.epsilon,
        alpha_used: alpha,
        theta_hat: est.theta_hat,
        raw_estimate: raw,
        controlled_u_count: est.controlled_u,
        ledger: ex.ledger().since(&before),
    })
}

/// Estimates the number of edges of the whole graph behind `ex`.
pub fn estimate_dag_size(
    ex: &dyn Explorer,
    params: &SizeParams,
    cache: &SpectrumCache,
    rng: &mut impl Rng,
) -> Result<SizeEstimate> {
    estimate_subdag_size(ex, ex.root(), params, cache, rng)
}

/// Source of subtree vertex counts used by the search and evaluation
/// algorithms. The bound `t0` and the result count vertices.
pub trait VertexSizeOracle {
    #[allow(clippy::too_many_arguments)]
    fn subtree_vertices(
        &self,
        ex: &dyn Explorer,
        v: VertexId,
        t0: u64,
        n: u64,
        delta: f64,
        epsilon: f64,
        rng: &mut crate::rng::StreamRng,
    ) -> Result<SizeOutcome>;
}

/// Vertex counts of trees from the edge estimator: a subtree with `T` edges
/// has `T + 1` vertices, and a leaf is recognized with one query.
#[derive(Debug, Default)]
pub struct QuantumSizeOracle {
    pub cache: SpectrumCache,
}

impl VertexSizeOracle for QuantumSizeOracle {
    fn subtree_vertices(
        &self,
        ex: &dyn Explorer,
        v: VertexId,
        t0: u64,
        n: u64,
        delta: f64,
        epsilon: f64,
        rng: &mut crate::rng::StreamRng,
    ) -> Result<SizeOutcome> {
        if ex.child_count(v)? == 0 {
            return Ok(if t0 >= 1 { SizeOutcome::Value(1) } else { SizeOutcome::Exceeds(t0) });
        }
        if t0 < 2 {
            return Ok(SizeOutcome::Exceeds(t0));
        }
        let params = SizeParams::new(t0 - 1, n, delta, epsilon)?;
        let est = estimate_subdag_size(ex, v, &params, &self.cache, rng)?;
        Ok(match est.outcome {
            SizeOutcome::Value(t) => SizeOutcome::Value(t + 1),
            SizeOutcome::Exceeds(_) => SizeOutcome::Exceeds(t0),
        })
    }
}

/// Exact counts by exploration; used to isolate the other parts of an
/// algorithm from estimation error.
#[derive(Debug, Default, Clone, Copy)]
pub struct ExactSizeOracle;

impl VertexSizeOracle for ExactSizeOracle {
    fn subtree_vertices(
        &self,
        ex: &dyn Explorer,
        v: VertexId,
        t0: u64,
        _n: u64,
        _delta: f64,
        _epsilon: f64,
        _rng: &mut crate::rng::StreamRng,
    ) -> Result<SizeOutcome> {
        let count = explore_from(ex, v)?.dag.vertex_count() as u64;
        Ok(if count <= t0 { SizeOutcome::Value(count) } else { SizeOutcome::Exceeds(t0) })
    }
}

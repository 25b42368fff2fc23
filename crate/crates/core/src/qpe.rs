//! Phase estimation simulated at the level of its outcome law.
//!
//! With an `M = 2^b` point window, an eigencomponent of phase `θ` yields
//! outcome `k` with probability `F_M(θ − 2πk/M)`, where
//! `F_M(x) = sin²(Mx/2) / (M² sin²(x/2))`. Repeating the estimation on the
//! same register draws one eigencomponent and then independent outcomes for
//! it, which is how the median amplification is sampled here.

use std::f64::consts::{PI, TAU};

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{parameter, Result};
use crate::measure::{wrap_phase, PhaseSpectrum, C64};

/// The phase-estimation kernel `F_M(x)`.
pub fn kernel(m: u64, x: f64) -> f64 {
    let mf = m as f64;
    let s = (x / 2.0).sin();
    if s.abs() < 1e-12 {
        // Near a multiple of 2π the kernel tends to 1.
        return 1.0;
    }
    let num = (mf * x / 2.0).sin();
    (num * num) / (mf * mf * s * s)
}

/// Parameters of a single amplified phase estimation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QpeConfig {
    pub precision_bits: u32,
    pub delta_est: f64,
    pub epsilon_est: f64,
}

impl QpeConfig {
    /// Window `b = ⌈log₂(2π/δ)⌉ + 2` and median over `2⌈ln(1/ε)⌉ + 1` runs.
    pub fn for_contract(delta_est: f64, epsilon_est: f64) -> Result<Self> {
        if !(delta_est > 0.0 && delta_est.is_finite()) {
            return Err(parameter(format!("delta_est must be positive, got {delta_est}")));
        }
        if !(epsilon_est > 0.0 && epsilon_est < 1.0) {
            return Err(parameter(format!("epsilon_est must lie in (0,1), got {epsilon_est}")));
        }
        let bits = ((TAU / delta_est).log2().ceil().max(0.0) as u32) + 2;
        if bits > 62 {
            return Err(parameter(format!("delta_est {delta_est} needs more than 62 bits")));
        }
        Ok(Self { precision_bits: bits, delta_est, epsilon_est })
    }

    /// `M = 2^b`.
    pub fn window(&self) -> u64 {
        1u64 << self.precision_bits
    }

    pub fn median_runs(&self) -> u64 {
        2 * (1.0 / self.epsilon_est).ln().ceil().max(0.0) as u64 + 1
    }

    /// Controlled-U applications charged for one amplified estimate.
    pub fn cost(&self) -> u64 {
        self.window() * self.median_runs()
    }
}

/// Signed phase `2πk/M` folded into `(−π, π]`.
pub fn bin_phase(k: u64, m: u64) -> f64 {
    if 2 * k <= m {
        TAU * k as f64 / m as f64
    } else {
        -TAU * (m - k) as f64 / m as f64
    }
}

/// Exact outcome distribution over the `M` bins.
pub fn qpe_pmf(spectrum: &PhaseSpectrum, bits: u32) -> Vec<f64> {
    let m = 1u64 << bits;
    (0..m)
        .map(|k| {
            let grid = TAU * k as f64 / m as f64;
            spectrum.phases().iter().zip(spectrum.weights()).map(|(&p, &w)| w * kernel(m, p - grid)).sum()
        })
        .collect()
}

/// Outcome distribution for an explicit unitary and start state.
pub fn qpe_distribution(u: &DMatrix<C64>, start: &DVector<C64>, bits: u32) -> Result<Vec<f64>> {
    Ok(qpe_pmf(&PhaseSpectrum::from_unitary(u, start)?, bits))
}

/// Draws an outcome bin for an eigencomponent of phase `theta`.
///
/// Bins are visited outward from the one nearest `θ`, so the expected work is
/// logarithmic in `M`.
pub fn sample_bin(theta: f64, m: u64, rng: &mut impl Rng) -> u64 {
    let x = wrap_phase(theta).rem_euclid(TAU) * m as f64 / TAU;
    let base = x.floor() as i64;
    let u: f64 = rng.random();
    let mut acc = 0.0;
    let mi = m as i64;
    let bin = |off: i64| (base + off).rem_euclid(mi) as u64;
    let mass = |k: u64| kernel(m, theta - TAU * k as f64 / m as f64);
    let mut last = bin(0);
    for step in 0..mi {
        // Offsets 0, 1, −1, 2, −2, …
        let off = if step % 2 == 0 { -(step / 2) } else { step / 2 + 1 };
        let k = bin(off);
        acc += mass(k);
        last = k;
        if acc >= u {
            return k;
        }
    }
    last
}

/// Circular median of phases: unwrap around the first sample, take the
/// ordinary median, and wrap back.
pub fn circular_median(samples: &[f64]) -> f64 {
    let r = samples[0];
    let mut d: Vec<f64> = samples.iter().map(|&s| wrap_phase(s - r)).collect();
    d.sort_by(f64::total_cmp);
    wrap_phase(r + d[d.len() / 2])
}

/// One amplified estimate: picks an eigencomponent, samples the median runs
/// for it, and returns the signed estimate with its controlled-U cost.
pub fn estimate_phase_once(spectrum: &PhaseSpectrum, config: &QpeConfig, rng: &mut impl Rng) -> (f64, u64) {
    let j = spectrum.sample_component(rng);
    let theta = spectrum.phases()[j];
    let m = config.window();
    let samples: Vec<f64> = (0..config.median_runs()).map(|_| bin_phase(sample_bin(theta, m, rng), m)).collect();
    (circular_median(&samples), config.cost())
}

/// Parameters of the minimum-phase estimation.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinPhaseConfig {
    pub c: f64,
    pub delta_min: f64,
    pub epsilon_min: f64,
}

impl MinPhaseConfig {
    pub fn new(c: f64, delta_min: f64, epsilon_min: f64) -> Result<Self> {
        if !(c > 0.0 && c <= 1.0) {
            return Err(parameter(format!("C must lie in (0,1], got {c}")));
        }
        if !(epsilon_min > 0.0 && epsilon_min < 1.0) {
            return Err(parameter(format!("epsilon_min must lie in (0,1), got {epsilon_min}")));
        }
        if !(delta_min > 0.0 && delta_min.is_finite()) {
            return Err(parameter(format!("delta_min must be positive, got {delta_min}")));
        }
        Ok(Self { c, delta_min, epsilon_min })
    }

    /// `t = ⌈(1/C) ln(2/ε_min)⌉`.
    pub fn repetitions(&self) -> u64 {
        ((2.0 / self.epsilon_min).ln() / self.c).ceil().max(1.0) as u64
    }

    /// Per-run contract `(δ_min, ε_min / 2t)`.
    pub fn per_run(&self) -> Result<QpeConfig> {
        QpeConfig::for_contract(self.delta_min, self.epsilon_min / (2.0 * self.repetitions() as f64))
    }

    /// Total controlled-U applications of one minimum-phase estimation.
    pub fn cost(&self) -> Result<u64> {
        Ok(self.repetitions() * self.per_run()?.cost())
    }
}

/// Output of [`estimate_min_phase`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MinPhaseEstimate {
    pub theta_hat: f64,
    pub controlled_u: u64,
    pub runs: Vec<f64>,
}

/// `θ̂ = min_j |θ̂_j|` over `t` independent amplified estimates.
pub fn estimate_min_phase(
    spectrum: &PhaseSpectrum,
    config: &MinPhaseConfig,
    rng: &mut impl Rng,
) -> Result<MinPhaseEstimate> {
    let per_run = config.per_run()?;
    let mut runs = Vec::new();
    let mut cost = 0;
    for _ in 0..config.repetitions() {
        let (theta, c) = estimate_phase_once(spectrum, &per_run, rng);
        runs.push(theta);
        cost += c;
    }
    let theta_hat = runs.iter().map(|t| t.abs()).fold(PI, f64::min);
    Ok(MinPhaseEstimate { theta_hat, controlled_u: cost, runs })
}

use std::collections::BTreeSet;
use std::f64::consts::{PI, TAU};

use nalgebra::{DMatrix, DVector};
use proptest::prelude::*;
use qwalk::graph::generate::{self, Branching};
use qwalk::graph::{Explorer, Instance};
use qwalk::measure::{PhaseSpectrum, C64};
use qwalk::oracles::{exact_edge_count, OracleCache};
use qwalk::qpe::{
    bin_phase, estimate_min_phase, estimate_phase_once, kernel, qpe_distribution, qpe_pmf, sample_bin, MinPhaseConfig,
    QpeConfig,
};
use qwalk::rng::stream;
use qwalk::size::{
    delta_correct, estimate_dag_size, round_outcome, theta_to_size, SizeOutcome, SizeParams, SpectrumCache, OVERLAP_C,
};
use qwalk::stats::log_log_slope;
use qwalk::walk::build_reflections;
use qwalk::Error;
use rand::Rng;

fn random_unitary(n: usize, seed: u64) -> DMatrix<C64> {
    let mut rng = stream(seed, 0);
    let g = DMatrix::from_fn(n, n, |_, _| C64::new(rng.random::<f64>() - 0.5, rng.random::<f64>() - 0.5));
    g.qr().q()
}

#[test]
fn sampled_histogram_matches_pmf() {
    let u = random_unitary(6, 42);
    let mut rng = stream(43, 0);
    let start = DVector::from_fn(6, |_, _| C64::new(rng.random::<f64>(), rng.random::<f64>())).normalize();
    let bits = 4;
    let pmf = qpe_distribution(&u, &start, bits).unwrap();
    assert!((pmf.iter().sum::<f64>() - 1.0).abs() < 1e-9);
    let spectrum = PhaseSpectrum::from_unitary(&u, &start).unwrap();
    let m = 1u64 << bits;
    let trials = 100_000;
    let mut hist = vec![0u64; m as usize];
    for _ in 0..trials {
        let j = spectrum.sample_component(&mut rng);
        hist[sample_bin(spectrum.phases()[j], m, &mut rng) as usize] += 1;
    }
    for (k, (&h, &p)) in hist.iter().zip(&pmf).enumerate() {
        let expect = p * trials as f64;
        let sigma = (trials as f64 * p * (1.0 - p)).sqrt();
        assert!((h as f64 - expect).abs() <= 3.0 * sigma + 1.0, "bin {k}: {h} vs {expect:.1}");
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn pmf_is_normalized(theta in -PI..PI, other in -PI..PI, w in 0.01f64..1.0, bits in 1u32..11) {
        let s = PhaseSpectrum::from_components(&[(theta, w), (other, 1.0 - w + 0.01)]).unwrap();
        prop_assert!((qpe_pmf(&s, bits).iter().sum::<f64>() - 1.0).abs() < 1e-9);
    }

    #[test]
    fn kernel_concentrates_near_the_phase(theta in -PI..PI, bits in 2u32..12) {
        let m = 1u64 << bits;
        let near: f64 = (0..m)
            .filter(|&k| qwalk::measure::wrap_phase(bin_phase(k, m) - theta).abs() <= TAU / m as f64)
            .map(|k| kernel(m, theta - bin_phase(k, m)))
            .sum();
        prop_assert!(near >= 4.0 / (PI * PI));
    }
}

#[test]
fn single_phase_failure_rate_is_within_budget() {
    let cfg = QpeConfig::for_contract(0.05, 0.05).unwrap();
    let mut rng = stream(7, 0);
    let trials = 10_000;
    let mut misses = 0;
    for _ in 0..trials {
        let theta = rng.random_range(-PI..PI);
        let s = PhaseSpectrum::from_components(&[(theta, 1.0)]).unwrap();
        let (est, _) = estimate_phase_once(&s, &cfg, &mut rng);
        misses += usize::from(qwalk::measure::wrap_phase(est - theta).abs() > 0.05);
    }
    assert!((misses as f64 / trials as f64) <= 0.05, "{misses} misses");
}

#[test]
fn single_edge_phase_estimation() {
    let dag = generate::path(2).unwrap();
    let ops = build_reflections(&dag, 1.0, &BTreeSet::new()).unwrap();
    let theta_min = qwalk::oracles::exact_min_phase(&ops).unwrap();
    let s = PhaseSpectrum::of_walk_anchor(&ops).unwrap();
    let cfg = QpeConfig::for_contract(0.01, 0.01).unwrap();
    let mut rng = stream(8, 0);
    let hits =
        (0..1000).filter(|_| (estimate_phase_once(&s, &cfg, &mut rng).0.abs() - theta_min).abs() <= 0.01).count();
    assert!(hits >= 990, "{hits}");
}

#[test]
fn min_phase_on_single_edge() {
    let dag = generate::path(2).unwrap();
    let p = SizeParams::new(4, 1, 0.3, 0.1).unwrap();
    let ops = build_reflections(&dag, p.alpha(), &BTreeSet::new()).unwrap();
    let theta_min = qwalk::oracles::exact_min_phase(&ops).unwrap();
    let s = PhaseSpectrum::of_walk_anchor(&ops).unwrap();
    let cfg = p.min_phase_config().unwrap();
    let mut rng = stream(9, 0);
    let hits = (0..1000)
        .filter(|_| (estimate_min_phase(&s, &cfg, &mut rng).unwrap().theta_hat - theta_min).abs() <= cfg.delta_min)
        .count();
    assert!(hits as f64 >= 1000.0 * (1.0 - cfg.epsilon_min), "{hits}");
}

#[test]
fn min_phase_survives_heavier_large_phase() {
    let theta_min = 0.05;
    let s = PhaseSpectrum::from_components(&[
        (theta_min, OVERLAP_C / 2.0),
        (-theta_min, OVERLAP_C / 2.0),
        (1.3, (1.0 - OVERLAP_C) / 2.0),
        (-1.3, (1.0 - OVERLAP_C) / 2.0),
    ])
    .unwrap();
    let cfg = MinPhaseConfig::new(OVERLAP_C, 0.005, 0.05).unwrap();
    let mut rng = stream(10, 0);
    let hits = (0..1000)
        .filter(|_| (estimate_min_phase(&s, &cfg, &mut rng).unwrap().theta_hat - theta_min).abs() <= 0.005)
        .count();
    assert!(hits >= 950, "{hits}");
}

#[test]
fn min_phase_cost_scales_inversely_with_precision() {
    let deltas: Vec<f64> = (0..=24).map(|k| 0.1 * 2f64.powf(-k as f64 / 4.0)).collect();
    let costs: Vec<f64> =
        deltas.iter().map(|&d| MinPhaseConfig::new(OVERLAP_C, d, 0.05).unwrap().cost().unwrap() as f64).collect();
    let slope = log_log_slope(&deltas, &costs);
    assert!((slope + 1.0).abs() <= 0.05, "slope {slope}");
    let cfg = MinPhaseConfig::new(OVERLAP_C, 0.01, 0.05).unwrap();
    let s = PhaseSpectrum::from_components(&[(0.2, 1.0)]).unwrap();
    let est = estimate_min_phase(&s, &cfg, &mut stream(0, 0)).unwrap();
    assert_eq!(est.controlled_u, cfg.repetitions() * cfg.per_run().unwrap().cost());
    assert_eq!(est.runs.len() as u64, cfg.repetitions());
}

#[test]
fn invalid_contracts_are_rejected() {
    assert!(matches!(QpeConfig::for_contract(0.0, 0.1), Err(Error::Parameter(_))));
    assert!(matches!(QpeConfig::for_contract(0.1, 1.0), Err(Error::Parameter(_))));
    assert!(MinPhaseConfig::new(0.0, 0.1, 0.1).is_err());
    assert!(SizeParams::new(0, 3, 0.3, 0.1).is_err());
    assert!(SizeParams::new(10, 3, 1.5, 0.1).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn exact_phase_sandwiches_the_edge_count(v in 2usize..40, p in 0.0f64..0.3, seed in 0u64..5000, delta in 0.05f64..0.9) {
        let dag = generate::random_layered_dag(v, 6, Branching::UpTo(3), p, seed).unwrap();
        let t = exact_edge_count(&dag) as f64;
        let params = SizeParams::new(1000, dag.depth() as u64, delta, 0.1).unwrap();
        let theta = OracleCache::new().theta_min(&dag, params.alpha()).unwrap();
        let raw = theta_to_size(theta, params.alpha()).unwrap();
        prop_assert!(raw >= t * (1.0 - 1e-9) && raw <= (1.0 + delta / 2.0) * t * (1.0 + 1e-9));
    }

    #[test]
    fn allowed_phase_error_keeps_the_estimate_correct(v in 2usize..40, seed in 0u64..5000, delta in 0.05f64..0.9) {
        let dag = generate::random_tree(v, 6, Branching::UpTo(3), seed).unwrap();
        let t = exact_edge_count(&dag) as u64;
        let params = SizeParams::new(t.max(1) * 4, dag.depth() as u64, delta, 0.1).unwrap();
        let theta = OracleCache::new().theta_min(&dag, params.alpha()).unwrap();
        let tf = t as f64;
        for k in -10..=10 {
            let th = theta + params.delta_min() * k as f64 / 10.0;
            let raw = theta_to_size(th, params.alpha()).unwrap();
            prop_assert!(raw >= (1.0 - delta) * tf && raw <= (1.0 + delta) * tf, "raw {raw} for T={t}");
            // Rounding to an integer can only cost accuracy once δT < 1.
            if delta * tf >= 1.0 {
                let out = round_outcome(raw, params.t0);
                prop_assert!(delta_correct(out, delta, t), "{out:?} for T={t}");
            }
        }
    }
}

#[test]
fn rounding_table() {
    assert_eq!(round_outcome(0.2, 10), SizeOutcome::Value(1));
    assert_eq!(round_outcome(4.5, 10), SizeOutcome::Value(5));
    assert_eq!(round_outcome(4.49, 10), SizeOutcome::Value(4));
    assert_eq!(round_outcome(10.0, 10), SizeOutcome::Value(10));
    assert_eq!(round_outcome(10.01, 10), SizeOutcome::Exceeds(10));
    assert_eq!(round_outcome(f64::INFINITY, 10), SizeOutcome::Exceeds(10));
    assert!(delta_correct(SizeOutcome::Exceeds(10), 0.3, 8));
    assert!(!delta_correct(SizeOutcome::Exceeds(10), 0.3, 7));
    assert!(delta_correct(SizeOutcome::Value(13), 0.3, 10));
    assert!(!delta_correct(SizeOutcome::Value(14), 0.3, 10));
}

#[test]
fn forty_edge_tree_is_estimated() {
    let dag = generate::random_tree(41, 5, Branching::UpTo(3), 77).unwrap();
    let inst = Instance::plain(dag);
    let cache = SpectrumCache::new();
    let p = SizeParams::new(128, 5, 0.3, 0.1).unwrap();
    let mut ok = 0;
    for s in 0..300 {
        let est = estimate_dag_size(&inst.handle(), &p, &cache, &mut stream(100, s)).unwrap();
        ok += usize::from(delta_correct(est.outcome, 0.3, 40));
    }
    assert!(ok >= 270, "{ok}/300");
}

#[test]
fn tree_twice_the_bound_exceeds() {
    let dag = generate::random_tree(41, 5, Branching::UpTo(3), 78).unwrap();
    let inst = Instance::plain(dag);
    let p = SizeParams::new(20, 5, 0.3, 0.1).unwrap();
    let est = estimate_dag_size(&inst.handle(), &p, &SpectrumCache::new(), &mut stream(1, 1)).unwrap();
    assert_eq!(est.outcome, SizeOutcome::Exceeds(20));
    assert!(delta_correct(est.outcome, 0.3, 40));
}

#[test]
fn estimate_records_costs_and_queries() {
    let inst = Instance::plain(generate::complete_binary(3).unwrap());
    let p = SizeParams::new(64, 3, 0.3, 0.1).unwrap();
    let h = inst.handle();
    let est = estimate_dag_size(&h, &p, &SpectrumCache::new(), &mut stream(2, 2)).unwrap();
    assert_eq!(est.controlled_u_count, p.min_phase_config().unwrap().cost().unwrap());
    assert_eq!(est.ledger.controlled_u, est.controlled_u_count);
    assert!(est.ledger.classical_queries() > 0);
    assert_eq!(h.ledger(), est.ledger);
    let json = serde_json::to_value(&est).unwrap();
    assert_eq!(json["outcome"]["kind"], "value");
}

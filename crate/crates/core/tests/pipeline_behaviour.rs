use fusetrack::filter::{predict, FilterState};
use fusetrack::metrics::{
    cdf_quantile, coverage, empirical_cdf, position_errors, ScoredEstimate, ScoringMode,
};
use fusetrack::model::{Modality, NoiseConfig};
use fusetrack::pipeline::{
    run_fusion, run_fusion_mode, EntryKind, FusionConfig, FusionMode, Measurement,
};
use fusetrack::sim::default_scenario;
use nalgebra::Vector3;
use proptest::prelude::*;

fn straight_line(t: f64) -> Vector3<f64> {
    Vector3::new(50.0 + 4.0 * t, 100.0 + 3.0 * t, 40.0)
}

#[test]
fn injected_outlier_becomes_a_single_pure_prediction() {
    let radar: Vec<Measurement> = (0..400)
        .map(|k| k as f64 * 0.25)
        .map(|t| Measurement::radar(t, straight_line(t), Some(1)))
        .collect();
    let mut rf: Vec<Measurement> = (0..25)
        .map(|k| 0.1 + k as f64 * 3.88)
        .map(|t| {
            let p = straight_line(t);
            Measurement::rf(t, p.x, p.y)
        })
        .collect();
    let t_out = rf[12].timestamp;
    let p = straight_line(t_out);
    rf[12] = Measurement::rf(t_out, p.x + 3000.0, p.y - 4000.0);

    let cfg = FusionConfig {
        coast_interval_s: None,
        ..FusionConfig::default()
    };
    let out = run_fusion(&radar, &rf, &cfg).unwrap();
    let coasted: Vec<usize> = (0..out.track.len())
        .filter(|&i| out.track.entries[i].kind == EntryKind::Coasted)
        .collect();
    assert_eq!(coasted.len(), 1);
    let i = coasted[0];
    let entry = &out.track.entries[i];
    assert_eq!(entry.timestamp, t_out);
    assert_eq!(entry.source, Some(Modality::Rf));

    let prev = &out.track.entries[i - 1];
    let prior = FilterState {
        estimate: prev.state,
        covariance: prev.covariance,
        timestamp: prev.timestamp,
    };
    let predicted = predict(&prior, t_out - prev.timestamp, &cfg.noise).unwrap();
    assert!((predicted.estimate.0 - entry.state.0).norm() < 1e-9);
    assert!((predicted.covariance - entry.covariance).abs().max() < 1e-9);
    assert_eq!(out.report.rf.nis_rejected, 1);
}

#[test]
fn simulation_and_fusion_are_deterministic() {
    let sc = default_scenario();
    let (a, b) = (sc.simulate().unwrap(), sc.simulate().unwrap());
    assert_eq!(a, b);
    let cfg = FusionConfig::default();
    assert_eq!(
        run_fusion(&a.radar, &a.rf.fixes, &cfg).unwrap(),
        run_fusion(&b.radar, &b.rf.fixes, &cfg).unwrap()
    );
}

#[test]
fn fused_coverage_is_at_least_radar_only() {
    let mut sc = default_scenario();
    sc.radar.max_range_m = 800.0;
    let sim = sc.simulate().unwrap();
    let span = (
        sim.ground_truth[0].timestamp,
        sim.ground_truth.last().unwrap().timestamp,
    );
    let cfg = FusionConfig {
        coast_interval_s: None,
        ..FusionConfig::default()
    };
    let cov = |mode| {
        let out = run_fusion_mode(&sim.radar, &sim.rf.fixes, &cfg, mode).unwrap();
        let ts: Vec<f64> = out.track.entries.iter().map(|e| e.timestamp).collect();
        coverage(&ts, span, 4.0).unwrap()
    };
    let (fused, radar_only) = (cov(FusionMode::Fused), cov(FusionMode::RadarOnly));
    assert!(
        fused >= radar_only,
        "fused {fused}% radar-only {radar_only}%"
    );
    assert!(radar_only < 100.0);
}

#[test]
fn gated_rf_errors_dominate_raw_above_the_median() {
    let mut sc = default_scenario();
    sc.rf.outlier_prob = 0.1;
    sc.rng_seed = 12;
    let sim = sc.simulate().unwrap();
    let out = run_fusion(&sim.radar, &sim.rf.fixes, &FusionConfig::default()).unwrap();
    let cdf = |ms: Vec<&Measurement>| {
        let est: Vec<ScoredEstimate> = ms.into_iter().map(ScoredEstimate::from).collect();
        let (errs, _) = position_errors(&est, &sim.ground_truth, ScoringMode::Full3D).unwrap();
        empirical_cdf(&errs.iter().map(|e| e.error_m).collect::<Vec<_>>()).unwrap()
    };
    let raw = cdf(sim.rf.fixes.iter().collect());
    let gated = cdf(out.accepted(Modality::Rf).collect());
    for k in 0..=9 {
        let p = 0.5 + 0.05 * k as f64;
        let (g, r) = (
            cdf_quantile(&gated, p).unwrap(),
            cdf_quantile(&raw, p).unwrap(),
        );
        assert!(g <= r, "quantile {p}: gated {g} m, raw {r} m");
    }
    assert!(cdf_quantile(&gated, 1.0).unwrap() < 1000.0);
    assert!(cdf_quantile(&raw, 1.0).unwrap() >= 1000.0);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn accounting_reconciles(
        seed in 0u64..10_000,
        outlier_prob in 0.0f64..0.3,
        dropout_prob in 0.0f64..0.5,
        max_range in 300.0f64..1200.0,
        gap_coasts in any::<bool>(),
        nis_gating in any::<bool>(),
        reinit in prop::option::of(1u32..20),
    ) {
        let mut sc = default_scenario();
        sc.rng_seed = seed;
        sc.rf.outlier_prob = outlier_prob;
        sc.rf.dropout_prob = dropout_prob;
        let sim = sc.simulate().unwrap();
        let cfg = FusionConfig {
            radar_max_range_m: max_range,
            coast_interval_s: gap_coasts.then_some(1.0),
            nis_gating,
            reinit_after_rejections: reinit,
            noise: NoiseConfig::default(),
            ..FusionConfig::default()
        };
        let out = run_fusion(&sim.radar, &sim.rf.fixes, &cfg).unwrap();
        let r = &out.report;
        prop_assert_eq!(r.updated + r.coasted_rejected, r.survivors);
        prop_assert_eq!(out.track.count(EntryKind::Updated), r.updated);
        prop_assert_eq!(out.track.count(EntryKind::Coasted), r.coasted_rejected + r.coasted_gap);
        for c in [&r.radar, &r.rf] {
            prop_assert_eq!(c.raw, c.track_rejected + c.range_rejected + c.nis_rejected + c.updated);
        }
        prop_assert!(out.track.entries.windows(2).all(|w| w[0].timestamp <= w[1].timestamp));
        if !nis_gating {
            prop_assert_eq!(r.coasted_rejected, 0);
        }
    }
}

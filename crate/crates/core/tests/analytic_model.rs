use nbiot_ppt::analytic::{
    calibrate_threshold, calibrated_metrics, collision_prob, false_alarm_prob, j_law, misdetection_prob,
    occupancy_pmf, success_prob,
};
use nbiot_ppt::optimizer::{optimize, Constraints};
use nbiot_ppt::{SystemConfig, ValidConfig};

fn config(n_devices: u32, snr_db: f64, m_partial: u32) -> ValidConfig {
    SystemConfig { n_devices, snr_db, m_partial, ..SystemConfig::default() }
        .validate()
        .unwrap()
}

#[test]
fn thresholds_for_constant_false_alarm() {
    assert!((calibrate_threshold(1e-4, 64).unwrap() - 1.86).abs() < 0.01);
    assert!((calibrate_threshold(1e-4, 16).unwrap() - 3.44).abs() < 0.01);
    assert!((false_alarm_prob(1.86, 64).unwrap() / 1e-4 - 1.0).abs() < 0.1);
    assert!((false_alarm_prob(3.44, 16).unwrap() / 1e-4 - 1.0).abs() < 0.1);
}

#[test]
fn baseline_misdetection_matches_table() {
    // (N_M, reference p_md) at -10 dB, M_p = M_b = 64.
    for (n, expected) in [(1, 8.41e-7), (2, 8.04e-7), (5, 7.01e-7), (10, 5.51e-7)] {
        let c = config(n, -10.0, 64);
        let t = calibrate_threshold(1e-4, 64).unwrap();
        let p = misdetection_prob(t, &c).unwrap();
        assert!((p / expected - 1.0).abs() < 0.01, "N_M={n}: {p:e}");
    }
    let p = misdetection_prob(calibrate_threshold(1e-4, 64).unwrap(), &config(5, -5.0, 64)).unwrap();
    assert!(p < 1e-12);
}

#[test]
fn partial_metrics_match_table() {
    let m = calibrated_metrics(&config(5, -5.0, 8), 1e-4).unwrap();
    assert!((m.p_md / 1.48e-2 - 1.0).abs() < 0.01, "{:e}", m.p_md);
    assert!((m.p_c - 0.0410).abs() < 5e-5, "{}", m.p_c);
    assert!((m.p_s - 0.945).abs() < 5e-4, "{}", m.p_s);
    let m = calibrated_metrics(&config(10, -10.0, 16), 1e-4).unwrap();
    assert!((m.p_s - 0.723).abs() < 5e-4, "{}", m.p_s);
    assert!((m.p_md / 1.26e-1 - 1.0).abs() < 0.01, "{:e}", m.p_md);
}

#[test]
fn collision_matches_table() {
    for (n, m_p, expected) in [(1, 64, 0.0), (2, 64, 0.083), (5, 64, 0.294), (10, 64, 0.543), (5, 8, 0.0410)] {
        let p = collision_prob(&config(n, -5.0, m_p)).unwrap();
        assert!((p - expected).abs() < 5e-4, "N_M={n} M_p={m_p}: {p}");
    }
}

#[test]
fn law_mean_matches_monte_carlo_free_formula() {
    let c = config(1, -5.0, 64);
    let p = 10f64.powf(-0.5);
    assert!((j_law(1, &c).mean() - (p * 20.0 + 1.0) * 20.0).abs() < 1e-9);
}

#[test]
fn occupancy_sums_to_one_for_many_loads() {
    for n in [0, 1, 7, 50, 300] {
        let c = config(n, -5.0, 4);
        let total: f64 = (0..=n).map(|k| occupancy_pmf(k, &c).unwrap()).sum();
        assert!((total - 1.0).abs() < 1e-12, "N_M={n}: {total}");
    }
}

#[test]
fn threshold_monotonicity() {
    for (snr, m_p) in [(-10.0, 16), (-10.0, 64), (-5.0, 16), (-5.0, 64), (-5.0, 1)] {
        let c = config(1, snr, m_p);
        let mut prev_fa = f64::INFINITY;
        let mut prev_md = -f64::INFINITY;
        for i in 0..=40 {
            let t = -5.0 + 0.5 * i as f64;
            let fa = false_alarm_prob(t, m_p).unwrap();
            let md = misdetection_prob(t, &c).unwrap();
            // Strict until the value saturates in f64.
            assert!(fa < prev_fa || fa == 0.0, "p_fa not decreasing at {t} dB");
            assert!(md > prev_md || md == 1.0, "p_md not increasing at {t} dB");
            prev_fa = fa;
            prev_md = md;
        }
    }
}

#[test]
fn more_repetitions_detect_better_but_collide_more() {
    for n in [2, 5, 10] {
        for snr in [-5.0, -10.0] {
            let report = optimize(&config(n, snr, 64), 1e-4, Constraints::default()).unwrap();
            for w in report.rows.windows(2) {
                assert!(w[1].p_md <= w[0].p_md, "N_M={n} P={snr}: p_md up at M_p={}", w[1].m_p);
                assert!(w[1].p_c >= w[0].p_c, "N_M={n} P={snr}: p_c down at M_p={}", w[1].m_p);
            }
        }
    }
}

#[test]
fn unpartitioned_candidate_is_the_baseline() {
    let base = calibrated_metrics(&config(5, -10.0, 64), 1e-4).unwrap();
    let report = optimize(&config(5, -10.0, 8), 1e-4, Constraints::default()).unwrap();
    let row = report.baseline();
    assert_eq!((row.m_p, row.groups), (64, 1));
    assert_eq!(row.p_md, base.p_md);
    assert_eq!(row.p_c, base.p_c);
    assert_eq!(row.p_s, base.p_s);
}

#[test]
fn heavier_load_partitions_more() {
    for snr in [-5.0, -10.0] {
        let best: Vec<u32> = [1, 2, 5, 10]
            .iter()
            .map(|&n| optimize(&config(n, snr, 64), 1e-4, Constraints::default()).unwrap().best_m_p)
            .collect();
        assert!(best.windows(2).all(|w| w[1] <= w[0]), "P={snr}: {best:?}");
    }
}

#[test]
fn everything_in_unit_interval() {
    for n in [1, 3, 20] {
        for m_p in [1, 4, 64] {
            for t in [-20.0, 0.0, 3.0, 30.0] {
                let m = success_prob(&config(n, -7.0, m_p), t).unwrap();
                for v in [m.p_fa, m.p_md, m.p_c, m.p_s] {
                    assert!((0.0..=1.0).contains(&v));
                }
                assert_eq!(m.p_s, (1.0 - m.p_c) * (1.0 - m.p_md));
            }
        }
    }
}

//! Closed-form performance model of partial preamble detection and contention.
//!
//! Powers are normalized so that the per-symbol noise variance is one and
//! the SNR `P` is the linear per-symbol received power. The detection
//! statistic `J` of a resource occupied by `k` devices, accumulated over
//! `M_p` basic units of `nu * xi` symbols, is gamma distributed with shape
//! `M_p` and mean `(k P nu xi + 1) nu xi`.
//!
//! Thresholds are expressed in dB relative to the noise-only mean `nu xi`:
//! with `tau = 10^(threshold_db / 10)` a resource is declared active when
//! `J / (nu xi) > tau`. Under this convention
//!
//! ```text
//! p_fa = Q(M_p, M_p tau)
//! p_md = (1 / (1 - p_0)) sum_{k >= 1} p_k P(M_p, M_p tau / (1 + k P nu xi))
//! p_c  = 1 - (1 - 1 / (N_P G))^(N_M - 1)
//! p_s  = (1 - p_c) (1 - p_md)
//! ```
//!
//! where `p_k` is the binomial probability that exactly `k` of the `N_M`
//! devices pick a given one of the `N_P G` resources.

use serde::{Deserialize, Serialize};

use crate::config::{db_to_linear, linear_to_db, ValidConfig};
use crate::error::{Error, Result};
use crate::specfun::{inv_reg_upper_gamma, reg_lower_gamma, reg_upper_gamma, GammaLaw};

/// Binomial tail mass below which the mis-detection sum is truncated.
pub const TAIL_MASS_TOLERANCE: f64 = 1e-12;

/// All closed-form metrics at one operating point.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AnalyticMetrics {
    pub threshold_db: f64,
    pub threshold_linear: f64,
    pub p_fa: f64,
    pub p_md: f64,
    pub p_c: f64,
    pub p_s: f64,
}

/// Law of the (unnormalized) detection statistic of a resource used by `k`
/// devices: shape `M_p`, rate `M_p / (k P (nu xi)^2 + nu xi)`.
pub fn j_law(k: u32, config: &ValidConfig) -> GammaLaw {
    let m_p = config.m_partial() as f64;
    let n = config.symbols_per_unit() as f64;
    let mean = k as f64 * config.snr_linear() * n * n + n;
    GammaLaw::new(m_p, m_p / mean).expect("shape and rate are positive for validated configs")
}

/// Law of `J / (nu xi)`, the statistic compared against the linear threshold.
pub fn normalized_j_law(k: u32, config: &ValidConfig) -> GammaLaw {
    let m_p = config.m_partial() as f64;
    let mean = 1.0 + k as f64 * config.snr_linear() * config.symbols_per_unit() as f64;
    GammaLaw::new(m_p, m_p / mean).expect("shape and rate are positive for validated configs")
}

/// Probability that an unused resource is declared active.
pub fn false_alarm_prob(threshold_db: f64, m_p: u32) -> Result<f64> {
    if m_p == 0 {
        return Err(Error::Domain("m_p must be at least 1".into()));
    }
    let a = m_p as f64;
    reg_upper_gamma(a, a * db_to_linear(threshold_db))
}

/// Threshold (dB) whose false-alarm probability equals `target_pfa`.
pub fn calibrate_threshold(target_pfa: f64, m_p: u32) -> Result<f64> {
    if !(target_pfa > 0.0 && target_pfa < 1.0) {
        return Err(Error::Domain(format!(
            "target false-alarm probability must lie in (0, 1), got {target_pfa}"
        )));
    }
    if m_p == 0 {
        return Err(Error::Domain("m_p must be at least 1".into()));
    }
    let a = m_p as f64;
    Ok(linear_to_db(inv_reg_upper_gamma(a, target_pfa)? / a))
}

fn resource_probability(config: &ValidConfig) -> f64 {
    1.0 / config.n_resources() as f64
}

/// Probability that exactly `k` devices select one given resource.
pub fn occupancy_pmf(k: u32, config: &ValidConfig) -> Result<f64> {
    let n = config.n_devices();
    if k > n {
        return Err(Error::Domain(format!("k = {k} exceeds the {n} contending devices")));
    }
    let r = resource_probability(config);
    if r == 1.0 {
        return Ok(if k == n { 1.0 } else { 0.0 });
    }
    let (n, k) = (n as f64, k as f64);
    let log_choose = if k == 0.0 || k == n {
        0.0
    } else {
        crate::specfun::log_gamma(n + 1.0)?
            - crate::specfun::log_gamma(k + 1.0)?
            - crate::specfun::log_gamma(n - k + 1.0)?
    };
    Ok((log_choose + k * r.ln() + (n - k) * (-r).ln_1p()).exp())
}

/// Probability that a given resource is used by at least one device.
fn activity_prob(config: &ValidConfig) -> f64 {
    let r = resource_probability(config);
    -(config.n_devices() as f64 * (-r).ln_1p()).exp_m1()
}

/// Miss probability of a resource used by `k` devices.
fn miss_given_k(k: u32, tau: f64, config: &ValidConfig) -> Result<f64> {
    let a = config.m_partial() as f64;
    let spread = 1.0 + k as f64 * config.snr_linear() * config.symbols_per_unit() as f64;
    reg_lower_gamma(a, a * tau / spread)
}

/// Probability that a resource used by at least one device goes undetected.
///
/// The binomial sum stops once the remaining occupancy mass is provably
/// below [`TAIL_MASS_TOLERANCE`], so large device counts stay cheap.
pub fn misdetection_prob(threshold_db: f64, config: &ValidConfig) -> Result<f64> {
    let n = config.n_devices();
    if n == 0 {
        return Err(Error::Domain(
            "mis-detection is undefined without contending devices".into(),
        ));
    }
    let tau = db_to_linear(threshold_db);
    let r = resource_probability(config);
    let delta = activity_prob(config);
    if r == 1.0 {
        return miss_given_k(n, tau, config);
    }
    let odds = r / (1.0 - r);
    let log_odds = odds.ln();
    let mut log_pk = n as f64 * (-r).ln_1p();
    let mut sum = 0.0;
    for k in 1..=n {
        log_pk += ((n - k + 1) as f64).ln() - (k as f64).ln() + log_odds;
        let pk = log_pk.exp();
        sum += pk * miss_given_k(k, tau, config)?;
        if k < n {
            // Past the mode the pmf decays at least geometrically with this ratio.
            let ratio = (n - k) as f64 / (k + 1) as f64 * odds;
            if ratio < 1.0 && pk * ratio / (1.0 - ratio) < TAIL_MASS_TOLERANCE {
                break;
            }
        }
    }
    Ok((sum / delta).clamp(0.0, 1.0))
}

/// Untruncated reference for [`misdetection_prob`].
#[doc(hidden)]
pub fn misdetection_prob_exhaustive(threshold_db: f64, config: &ValidConfig) -> Result<f64> {
    let n = config.n_devices();
    if n == 0 {
        return Err(Error::Domain("mis-detection is undefined without contending devices".into()));
    }
    let tau = db_to_linear(threshold_db);
    let delta = 1.0 - occupancy_pmf(0, config)?;
    let mut sum = 0.0;
    for k in 1..=n {
        sum += occupancy_pmf(k, config)? * miss_given_k(k, tau, config)?;
    }
    Ok(sum / delta)
}

/// Probability that a tagged device shares its resource with another device.
pub fn collision_prob(config: &ValidConfig) -> Result<f64> {
    let n = config.n_devices();
    if n == 0 {
        return Err(Error::Domain("collision probability needs a tagged device".into()));
    }
    let r = resource_probability(config);
    Ok(-((n - 1) as f64 * (-r).ln_1p()).exp_m1())
}

/// Evaluates every metric at `threshold_db`.
pub fn success_prob(config: &ValidConfig, threshold_db: f64) -> Result<AnalyticMetrics> {
    let p_fa = false_alarm_prob(threshold_db, config.m_partial())?;
    let p_md = misdetection_prob(threshold_db, config)?;
    let p_c = collision_prob(config)?;
    Ok(AnalyticMetrics {
        threshold_db,
        threshold_linear: db_to_linear(threshold_db),
        p_fa,
        p_md,
        p_c,
        p_s: (1.0 - p_c) * (1.0 - p_md),
    })
}

/// Evaluates every metric at the threshold calibrated to `target_pfa`.
pub fn calibrated_metrics(config: &ValidConfig, target_pfa: f64) -> Result<AnalyticMetrics> {
    let threshold = calibrate_threshold(target_pfa, config.m_partial())?;
    success_prob(config, threshold)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::config::SystemConfig;

    fn config(n_devices: u32, snr_db: f64, m_partial: u32) -> ValidConfig {
        SystemConfig { n_devices, snr_db, m_partial, ..SystemConfig::default() }
            .validate()
            .unwrap()
    }

    #[test]
    fn noise_only_law() {
        let law = j_law(0, &config(1, -5.0, 64));
        assert_eq!(law.shape(), 64.0);
        assert!((law.mean() - 20.0).abs() < 1e-12);
        assert!((normalized_j_law(0, &config(1, -5.0, 64)).mean() - 1.0).abs() < 1e-15);
    }

    #[test]
    fn occupied_law_mean() {
        let c = config(1, -5.0, 64);
        let p = 10f64.powf(-0.5);
        let expected = (p * 20.0 + 1.0) * 20.0;
        assert!((j_law(1, &c).mean() - expected).abs() < 1e-10);
        assert!((j_law(1, &c).mean() - 146.491_106_4).abs() < 1e-6);
        let step = j_law(2, &c).mean() - j_law(1, &c).mean();
        assert!((step - p * 400.0).abs() < 1e-10);
    }

    #[test]
    fn false_alarm_limits() {
        assert_eq!(false_alarm_prob(f64::NEG_INFINITY, 16).unwrap(), 1.0);
        assert_eq!(false_alarm_prob(f64::INFINITY, 16).unwrap(), 0.0);
    }

    #[test]
    fn exponential_median_threshold() {
        let t = calibrate_threshold(0.5, 1).unwrap();
        assert!((t - 10.0 * std::f64::consts::LN_2.log10()).abs() < 1e-9);
        assert!((t + 1.592).abs() < 1e-3);
    }

    #[test]
    fn calibration_round_trips() {
        for m_p in [1, 2, 4, 8, 16, 32, 64, 128] {
            for target in [1e-1, 1e-2, 1e-4, 1e-6] {
                let t = calibrate_threshold(target, m_p).unwrap();
                assert!((false_alarm_prob(t, m_p).unwrap() - target).abs() <= 1e-9);
            }
        }
        assert!(calibrate_threshold(0.0, 8).is_err());
        assert!(calibrate_threshold(1.0, 8).is_err());
    }

    #[test]
    fn occupancy_pmf_values() {
        let c = config(5, -5.0, 8);
        let p0 = occupancy_pmf(0, &c).unwrap();
        assert!((p0 - (95.0f64 / 96.0).powi(5)).abs() < 1e-14);
        assert!((p0 - 0.948_99).abs() < 1e-5);
        let total: f64 = (0..=5).map(|k| occupancy_pmf(k, &c).unwrap()).sum();
        assert!((total - 1.0).abs() < 1e-14);
        assert!(occupancy_pmf(6, &c).is_err());
        let single = config(1, -5.0, 8);
        assert!((occupancy_pmf(1, &single).unwrap() - 1.0 / 96.0).abs() < 1e-16);
    }

    #[test]
    fn collision_values() {
        assert_eq!(collision_prob(&config(1, -5.0, 64)).unwrap(), 0.0);
        assert!((collision_prob(&config(2, -5.0, 64)).unwrap() - 1.0 / 12.0).abs() < 1e-15);
        let pc = collision_prob(&config(5, -5.0, 8)).unwrap();
        assert!((pc - (1.0 - (95.0f64 / 96.0).powi(4))).abs() < 1e-15);
        assert!(collision_prob(&config(0, -5.0, 8)).is_err());
    }

    #[test]
    fn misdetection_requires_devices() {
        assert!(misdetection_prob(0.0, &config(0, -5.0, 8)).is_err());
        assert_eq!(misdetection_prob(f64::NEG_INFINITY, &config(3, -5.0, 8)).unwrap(), 0.0);
    }

    #[test]
    fn truncation_matches_full_sum() {
        for (n, snr, m_p) in [(10, -10.0, 16), (200, -5.0, 1), (2000, -10.0, 4), (50, -15.0, 64)] {
            let c = config(n, snr, m_p);
            let t = calibrate_threshold(1e-4, m_p).unwrap();
            let fast = misdetection_prob(t, &c).unwrap();
            let full = misdetection_prob_exhaustive(t, &c).unwrap();
            assert!((fast - full).abs() < 1e-10, "n={n}: {fast} vs {full}");
        }
    }

    #[test]
    fn large_device_counts_are_finite() {
        let c = config(1_000_000, -5.0, 8);
        let p = misdetection_prob(calibrate_threshold(1e-4, 8).unwrap(), &c).unwrap();
        assert!((0.0..=1.0).contains(&p));
    }

    #[test]
    fn success_identity() {
        let m = calibrated_metrics(&config(5, -5.0, 8), 1e-4).unwrap();
        assert_eq!(m.p_s, (1.0 - m.p_c) * (1.0 - m.p_md));
        let m = success_prob(&config(1, 0.0, 64), f64::NEG_INFINITY).unwrap();
        assert_eq!((m.p_md, m.p_c, m.p_s), (0.0, 0.0, 1.0));
    }
}

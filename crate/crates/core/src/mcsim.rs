//! Monte Carlo simulation of random access sessions.
//!
//! One session: every device picks a preamble and a partial unit uniformly
//! at random; the receiver forms the detection statistic of every resource
//! (occupied ones from the superposed device signals plus noise, empty ones
//! from noise alone) and compares it with the threshold. A device succeeds
//! when it is alone on its resource and that resource is detected.
//!
//! The channel of each device is Rayleigh, constant over a basic unit of
//! `nu` symbol groups and independent across basic units and devices.
//!
//! Every trial draws from its own ChaCha stream derived from the master seed
//! and the trial index, and the counters are integer sums, so estimates are
//! bit-identical for any number of worker threads.

use num_complex::Complex64;
use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::ops::Add;

use crate::config::{ContentionResource, ValidConfig};
use crate::error::{Error, Result};

/// Two-sided 95% normal quantile.
pub const Z_95: f64 = 1.959_963_984_540_054;

/// RNG stream of trial `trial` under master seed `seed`.
pub fn trial_rng(seed: u64, trial: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(trial);
    rng
}

/// Circularly-symmetric complex normal with the given variance.
fn complex_normal<R: Rng + ?Sized>(rng: &mut R, variance: f64) -> Complex64 {
    let s = (0.5 * variance).sqrt();
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(s * re, s * im)
}

/// Resource choice of each of the `n_devices` devices.
pub fn draw_assignments<R: Rng + ?Sized>(config: &ValidConfig, rng: &mut R) -> Vec<ContentionResource> {
    (0..config.n_devices())
        .map(|_| ContentionResource {
            preamble_index: rng.random_range(0..config.n_preambles()),
            partial_unit_index: rng.random_range(0..config.groups()),
        })
        .collect()
}

/// Normalized detection statistic `J / (nu xi)` of a resource shared by `k`
/// devices, drawn per basic unit.
///
/// Within a basic unit the `nu xi` unit-variance noise correlations add to a
/// single complex normal of variance `nu xi`, and the channel is constant, so
/// each repetition contributes one complex sample.
pub fn simulate_statistic_block<R: Rng + ?Sized>(k: u32, config: &ValidConfig, rng: &mut R) -> f64 {
    let n = config.symbols_per_unit() as f64;
    let amplitude = n * config.snr_linear().sqrt();
    let m_p = config.m_partial();
    let mut power = 0.0;
    for _ in 0..m_p {
        let mut r = Complex64::new(0.0, 0.0);
        for _ in 0..k {
            r += complex_normal(rng, 1.0) * amplitude;
        }
        r += complex_normal(rng, n);
        power += r.norm_sqr();
    }
    power / (m_p as f64 * n)
}

/// Same statistic as [`simulate_statistic_block`], built from every received
/// symbol: `y = sqrt(P) sum h x + w`, correlated with `x = 1` and summed over
/// the `nu xi` symbols of each repetition.
pub fn simulate_statistic_symbolwise<R: Rng + ?Sized>(k: u32, config: &ValidConfig, rng: &mut R) -> f64 {
    symbolwise_with_noise(k, config, 1.0, rng)
}

/// Symbol-level statistic with the noise amplitude scaled by `noise_scale`.
///
/// Draw order per repetition: the `k` channel coefficients, then one noise
/// sample per symbol (drawn even when `noise_scale` is zero).
pub fn symbolwise_with_noise<R: Rng + ?Sized>(
    k: u32,
    config: &ValidConfig,
    noise_scale: f64,
    rng: &mut R,
) -> f64 {
    let amplitude = config.snr_linear().sqrt();
    let symbols = config.symbols_per_unit();
    let m_p = config.m_partial();
    let x = Complex64::new(1.0, 0.0);
    let mut power = 0.0;
    for _ in 0..m_p {
        let mut channel_sum = Complex64::new(0.0, 0.0);
        for _ in 0..k {
            channel_sum += complex_normal(rng, 1.0);
        }
        let mut correlation = Complex64::new(0.0, 0.0);
        for _ in 0..symbols {
            let y = channel_sum * amplitude * x + complex_normal(rng, 1.0) * noise_scale;
            correlation += y * x.conj();
        }
        power += correlation.norm_sqr();
    }
    power / (m_p as f64 * symbols as f64)
}

/// Which empty resources get a noise-only statistic each session.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum EmptySampling {
    /// Every empty resource.
    #[default]
    All,
    /// At most this many, chosen uniformly without replacement.
    Fixed(usize),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub enum StatisticGenerator {
    #[default]
    Block,
    Symbolwise,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct SimOptions {
    pub empty_sampling: EmptySampling,
    pub generator: StatisticGenerator,
}

/// Fate of one device in a session.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DeviceResult {
    pub resource: ContentionResource,
    pub collided: bool,
    pub detected: bool,
    pub success: bool,
}

/// Event counts of one or more sessions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct Tally {
    pub sessions: u64,
    /// Empty resources tested.
    pub noise_tests: u64,
    pub false_alarms: u64,
    /// Resources used by at least one device.
    pub active_resources: u64,
    pub misdetections: u64,
    pub devices: u64,
    pub collided_devices: u64,
    pub successes: u64,
    /// Devices alone on a resource that was not detected.
    pub solo_missed: u64,
    /// Sessions with at least one device; the first device is the tagged one.
    pub tagged: u64,
    pub tagged_collisions: u64,
    pub tagged_successes: u64,
}

impl Add for Tally {
    type Output = Tally;

    fn add(self, o: Tally) -> Tally {
        Tally {
            sessions: self.sessions + o.sessions,
            noise_tests: self.noise_tests + o.noise_tests,
            false_alarms: self.false_alarms + o.false_alarms,
            active_resources: self.active_resources + o.active_resources,
            misdetections: self.misdetections + o.misdetections,
            devices: self.devices + o.devices,
            collided_devices: self.collided_devices + o.collided_devices,
            successes: self.successes + o.successes,
            solo_missed: self.solo_missed + o.solo_missed,
            tagged: self.tagged + o.tagged,
            tagged_collisions: self.tagged_collisions + o.tagged_collisions,
            tagged_successes: self.tagged_successes + o.tagged_successes,
        }
    }
}

/// Everything observed in one session.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionOutcome {
    /// Device count per resource, indexed by resource id.
    pub occupancy: Vec<u32>,
    /// Detection decision per resource id; `None` for empty resources that
    /// were not sampled.
    pub detected: Vec<Option<bool>>,
    pub per_device: Vec<DeviceResult>,
    pub tally: Tally,
}

/// A probability estimated from Bernoulli trials.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricEstimate {
    pub value: f64,
    pub trials: u64,
    /// Normal-approximation 95% half-width, `1.96 sqrt(v (1 - v) / n)`.
    pub half_width_95: f64,
}

impl MetricEstimate {
    pub fn from_counts(events: u64, trials: u64) -> Option<Self> {
        if trials == 0 {
            return None;
        }
        let value = events as f64 / trials as f64;
        Some(Self {
            value,
            trials,
            half_width_95: Z_95 * (value * (1.0 - value) / trials as f64).sqrt(),
        })
    }

    pub fn events(&self) -> u64 {
        (self.value * self.trials as f64).round() as u64
    }

    /// Wilson score 95% interval. Unlike the normal approximation it stays
    /// informative when no (or only) events were observed.
    pub fn wilson_interval(&self) -> (f64, f64) {
        let n = self.trials as f64;
        let z2 = Z_95 * Z_95;
        let denom = 1.0 + z2 / n;
        let center = (self.value + z2 / (2.0 * n)) / denom;
        let half = Z_95 / denom * (self.value * (1.0 - self.value) / n + z2 / (4.0 * n * n)).sqrt();
        ((center - half).max(0.0), (center + half).min(1.0))
    }

    /// Whether `p` lies in the Wilson 95% interval.
    pub fn covers(&self, p: f64) -> bool {
        let (lo, hi) = self.wilson_interval();
        lo <= p && p <= hi
    }
}

/// Estimates aggregated over many sessions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimulatedMetrics {
    pub tally: Tally,
    /// Per tested empty resource.
    pub p_fa: Option<MetricEstimate>,
    /// Per active resource.
    pub p_md: Option<MetricEstimate>,
    /// Per tagged device.
    pub p_c: Option<MetricEstimate>,
    /// Per tagged device.
    pub p_s: Option<MetricEstimate>,
}

impl SimulatedMetrics {
    pub fn from_tally(tally: Tally) -> Self {
        Self {
            tally,
            p_fa: MetricEstimate::from_counts(tally.false_alarms, tally.noise_tests),
            p_md: MetricEstimate::from_counts(tally.misdetections, tally.active_resources),
            p_c: MetricEstimate::from_counts(tally.tagged_collisions, tally.tagged),
            p_s: MetricEstimate::from_counts(tally.tagged_successes, tally.tagged),
        }
    }
}

/// Session simulator for one configuration and threshold.
#[derive(Debug, Clone)]
pub struct Simulator {
    config: ValidConfig,
    threshold_linear: f64,
    options: SimOptions,
}

impl Simulator {
    /// Uses the threshold carried by `config`.
    pub fn new(config: &ValidConfig) -> Result<Self> {
        let threshold_linear = config.threshold_linear().ok_or_else(|| {
            Error::Domain("simulation needs a detection threshold".into())
        })?;
        Ok(Self::with_threshold(config, threshold_linear))
    }

    pub fn with_threshold(config: &ValidConfig, threshold_linear: f64) -> Self {
        Self {
            config: config.clone(),
            threshold_linear,
            options: SimOptions::default(),
        }
    }

    pub fn options(mut self, options: SimOptions) -> Self {
        self.options = options;
        self
    }

    pub fn config(&self) -> &ValidConfig {
        &self.config
    }

    fn statistic<R: Rng + ?Sized>(&self, k: u32, rng: &mut R) -> f64 {
        match self.options.generator {
            StatisticGenerator::Block => simulate_statistic_block(k, &self.config, rng),
            StatisticGenerator::Symbolwise => simulate_statistic_symbolwise(k, &self.config, rng),
        }
    }

    /// Simulates one session from `rng`.
    pub fn run_session<R: Rng + ?Sized>(&self, rng: &mut R) -> SessionOutcome {
        let space = self.config.contention_space();
        let assignments = draw_assignments(&self.config, rng);
        let mut occupancy = vec![0u32; space.len()];
        for r in &assignments {
            occupancy[space.id(*r)] += 1;
        }

        let mut tally = Tally { sessions: 1, ..Tally::default() };
        let mut detected = vec![None; space.len()];
        for (id, &k) in occupancy.iter().enumerate() {
            if k > 0 {
                let hit = self.statistic(k, rng) > self.threshold_linear;
                detected[id] = Some(hit);
                tally.active_resources += 1;
                tally.misdetections += u64::from(!hit);
            }
        }

        let empty: Vec<usize> = (0..space.len()).filter(|&id| occupancy[id] == 0).collect();
        let tested: Vec<usize> = match self.options.empty_sampling {
            EmptySampling::All => empty,
            EmptySampling::Fixed(n) => {
                let mut picks = index::sample(rng, empty.len(), n.min(empty.len())).into_vec();
                picks.sort_unstable();
                picks.into_iter().map(|i| empty[i]).collect()
            }
        };
        for id in tested {
            let hit = self.statistic(0, rng) > self.threshold_linear;
            detected[id] = Some(hit);
            tally.noise_tests += 1;
            tally.false_alarms += u64::from(hit);
        }

        let per_device: Vec<DeviceResult> = assignments
            .iter()
            .map(|&resource| {
                let id = space.id(resource);
                let collided = occupancy[id] > 1;
                let detected = detected[id] == Some(true);
                DeviceResult { resource, collided, detected, success: !collided && detected }
            })
            .collect();
        for d in &per_device {
            tally.devices += 1;
            tally.collided_devices += u64::from(d.collided);
            tally.successes += u64::from(d.success);
            tally.solo_missed += u64::from(!d.collided && !d.detected);
        }
        if let Some(tagged) = per_device.first() {
            tally.tagged = 1;
            tally.tagged_collisions = u64::from(tagged.collided);
            tally.tagged_successes = u64::from(tagged.success);
        }

        SessionOutcome { occupancy, detected, per_device, tally }
    }

    /// Session number `trial` of the stream seeded by the config's seed.
    pub fn session(&self, trial: u64) -> SessionOutcome {
        self.run_session(&mut trial_rng(self.config.seed(), trial))
    }

    /// Runs `n_trials` sessions in parallel and aggregates their counts.
    pub fn estimate(&self, n_trials: u64) -> SimulatedMetrics {
        let tally = (0..n_trials)
            .into_par_iter()
            .map(|t| self.session(t).tally)
            .reduce(Tally::default, Add::add);
        SimulatedMetrics::from_tally(tally)
    }
}

/// Convenience wrapper: simulate `n_trials` sessions of `config` (which must
/// carry a threshold) with the given master seed.
pub fn estimate_metrics(config: &ValidConfig, n_trials: u64, seed: u64) -> Result<SimulatedMetrics> {
    if n_trials == 0 {
        return Err(Error::Domain("at least one trial is required".into()));
    }
    let mut raw = config.raw().clone();
    raw.seed = seed;
    let config = raw.validate()?;
    Ok(Simulator::new(&config)?.estimate(n_trials))
}

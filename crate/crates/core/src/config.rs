//! Protocol and channel parameters, and the contention space they induce.
//!
//! A [`SystemConfig`] is a plain bag of parameters as a user writes them
//! (dB quantities, counts). [`SystemConfig::validate`] checks the structural
//! constraints and produces a [`ValidConfig`], which carries the derived
//! quantities (number of partial units, linear SNR, linear threshold) and is
//! what every other module consumes. dB to linear conversion happens here and
//! nowhere else.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::ConfigError;
use crate::hopping::{CyclicShiftHopping, HoppingPattern};

/// Sub-carriers available to the random access channel in a 180 kHz carrier.
pub const NPRACH_SUBCARRIERS: usize = 48;

/// Converts a power ratio in dB to linear scale.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Converts a linear power ratio to dB.
pub fn linear_to_db(linear: f64) -> f64 {
    10.0 * linear.log10()
}

/// User-facing protocol and channel parameters.
///
/// Field names match the keys accepted in configuration files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemConfig {
    /// Symbols per symbol group.
    pub xi: u32,
    /// Symbol groups per basic unit.
    pub nu: u32,
    /// Orthogonal preambles per random access channel.
    pub n_preambles: u32,
    /// Repetitions of the basic unit in a full (baseline) preamble.
    pub m_base: u32,
    /// Repetitions of the basic unit in a partial preamble.
    pub m_partial: u32,
    /// Received per-symbol SNR in dB.
    pub snr_db: f64,
    /// Devices contending in one access session.
    pub n_devices: u32,
    /// Detection threshold in dB relative to the noise-only mean of the
    /// detection statistic. `None` means "calibrate from a false-alarm target".
    pub threshold_db: Option<f64>,
    /// Master seed for simulations.
    pub seed: u64,
}

impl Default for SystemConfig {
    fn default() -> Self {
        Self {
            xi: 5,
            nu: 4,
            n_preambles: 12,
            m_base: 64,
            m_partial: 64,
            snr_db: -5.0,
            n_devices: 1,
            threshold_db: None,
            seed: 0,
        }
    }
}

impl SystemConfig {
    /// Checks structural constraints and derives the linear quantities.
    pub fn validate(&self) -> Result<ValidConfig, ConfigError> {
        for (name, value) in [
            ("xi", self.xi),
            ("nu", self.nu),
            ("n_preambles", self.n_preambles),
            ("m_base", self.m_base),
            ("m_partial", self.m_partial),
        ] {
            if value == 0 {
                return Err(ConfigError::ZeroCount(name));
            }
        }
        if !self.m_partial.is_power_of_two() {
            return Err(ConfigError::NotPowerOfTwo(self.m_partial));
        }
        if !self.m_base.is_multiple_of(self.m_partial) {
            return Err(ConfigError::NotDivisor {
                m_partial: self.m_partial,
                m_base: self.m_base,
            });
        }
        if self.snr_db.is_nan() {
            return Err(ConfigError::NotANumber("snr_db"));
        }
        if self.snr_db == f64::INFINITY {
            return Err(ConfigError::InfiniteSnr);
        }
        if self.threshold_db.is_some_and(f64::is_nan) {
            return Err(ConfigError::NotANumber("threshold_db"));
        }
        Ok(ValidConfig {
            raw: self.clone(),
            groups: self.m_base / self.m_partial,
            snr_linear: db_to_linear(self.snr_db),
            threshold_linear: self.threshold_db.map(db_to_linear),
        })
    }
}

/// A validated configuration with its derived quantities.
///
/// Immutable; share it freely across threads.
#[derive(Debug, Clone, PartialEq)]
pub struct ValidConfig {
    raw: SystemConfig,
    groups: u32,
    snr_linear: f64,
    threshold_linear: Option<f64>,
}

impl ValidConfig {
    pub fn raw(&self) -> &SystemConfig {
        &self.raw
    }

    pub fn xi(&self) -> u32 {
        self.raw.xi
    }

    pub fn nu(&self) -> u32 {
        self.raw.nu
    }

    pub fn n_preambles(&self) -> u32 {
        self.raw.n_preambles
    }

    pub fn m_base(&self) -> u32 {
        self.raw.m_base
    }

    pub fn m_partial(&self) -> u32 {
        self.raw.m_partial
    }

    pub fn n_devices(&self) -> u32 {
        self.raw.n_devices
    }

    pub fn seed(&self) -> u64 {
        self.raw.seed
    }

    /// Number of partial units `G = m_base / m_partial`.
    pub fn groups(&self) -> u32 {
        self.groups
    }

    /// Linear per-symbol SNR.
    pub fn snr_linear(&self) -> f64 {
        self.snr_linear
    }

    pub fn threshold_db(&self) -> Option<f64> {
        self.raw.threshold_db
    }

    /// Linear threshold relative to the noise-only mean, if one is set.
    pub fn threshold_linear(&self) -> Option<f64> {
        self.threshold_linear
    }

    /// Symbols accumulated coherently within one basic unit, `nu * xi`.
    pub fn symbols_per_unit(&self) -> u32 {
        self.raw.nu * self.raw.xi
    }

    /// Length of the baseline preamble in symbol groups.
    pub fn base_length(&self) -> u32 {
        self.raw.nu * self.raw.m_base
    }

    /// Length of a partial preamble in symbol groups.
    pub fn partial_length(&self) -> u32 {
        self.raw.nu * self.raw.m_partial
    }

    /// Number of distinct (preamble, partial unit) resources.
    pub fn n_resources(&self) -> usize {
        self.raw.n_preambles as usize * self.groups as usize
    }

    /// Same configuration with a different partial repetition count.
    pub fn with_partial(&self, m_partial: u32) -> Result<ValidConfig, ConfigError> {
        SystemConfig {
            m_partial,
            ..self.raw.clone()
        }
        .validate()
    }

    /// Same configuration with a different threshold.
    pub fn with_threshold_db(&self, threshold_db: f64) -> Result<ValidConfig, ConfigError> {
        SystemConfig {
            threshold_db: Some(threshold_db),
            ..self.raw.clone()
        }
        .validate()
    }

    /// Same configuration with a different device count.
    pub fn with_devices(&self, n_devices: u32) -> ValidConfig {
        ValidConfig {
            raw: SystemConfig {
                n_devices,
                ..self.raw.clone()
            },
            ..self.clone()
        }
    }

    pub fn contention_space(&self) -> ContentionSpace {
        ContentionSpace {
            n_preambles: self.raw.n_preambles,
            groups: self.groups,
        }
    }
}

/// One contention resource: a preamble on a partial unit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub struct ContentionResource {
    pub preamble_index: u32,
    pub partial_unit_index: u32,
}

impl fmt::Display for ContentionResource {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "(preamble {}, unit {})", self.preamble_index, self.partial_unit_index)
    }
}

/// The `n_preambles x groups` grid of resources devices contend for.
///
/// Resources are numbered densely, partial unit major: resource `id` is
/// preamble `id % n_preambles` on unit `id / n_preambles`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ContentionSpace {
    n_preambles: u32,
    groups: u32,
}

impl ContentionSpace {
    pub fn len(&self) -> usize {
        self.n_preambles as usize * self.groups as usize
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn resource(&self, id: usize) -> ContentionResource {
        let np = self.n_preambles as usize;
        ContentionResource {
            preamble_index: (id % np) as u32,
            partial_unit_index: (id / np) as u32,
        }
    }

    pub fn id(&self, resource: ContentionResource) -> usize {
        resource.partial_unit_index as usize * self.n_preambles as usize
            + resource.preamble_index as usize
    }

    pub fn iter(&self) -> impl Iterator<Item = ContentionResource> + '_ {
        (0..self.len()).map(|id| self.resource(id))
    }

    /// Time/frequency cells occupied by a resource: pairs of
    /// (symbol group position within the channel, sub-carrier).
    ///
    /// The partial unit selects a contiguous slice of `partial_length` symbol
    /// group positions; the preamble's hopping pattern selects the
    /// sub-carrier at each position.
    pub fn footprint(
        &self,
        resource: ContentionResource,
        partial_length: usize,
    ) -> Result<Vec<(usize, usize)>, ConfigError> {
        self.footprint_with(&CyclicShiftHopping, resource, partial_length)
    }

    pub fn footprint_with(
        &self,
        pattern: &impl HoppingPattern,
        resource: ContentionResource,
        partial_length: usize,
    ) -> Result<Vec<(usize, usize)>, ConfigError> {
        let n_sc = NPRACH_SUBCARRIERS.max(self.n_preambles as usize);
        let total = partial_length * self.groups as usize;
        let carriers = pattern.subcarriers(resource.preamble_index as usize, total, n_sc)?;
        let start = resource.partial_unit_index as usize * partial_length;
        Ok((start..start + partial_length)
            .map(|pos| (pos, carriers[pos]))
            .collect())
    }
}

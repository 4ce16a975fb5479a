//! Partial preamble transmission for NB-IoT random access.
//!
//! A baseline preamble repeats a basic unit of symbol groups `M_b` times.
//! Splitting the same channel into `G = M_b / M_p` partial units, each
//! carrying a preamble repeated only `M_p` times, multiplies the number of
//! contention resources by `G` at the cost of weaker detection. This crate
//! models that trade-off:
//!
//! - [`config`]: parameters, validation and the contention space,
//! - [`hopping`]: sub-carrier hopping patterns,
//! - [`specfun`]: incomplete gamma functions and their inverse,
//! - [`analytic`]: closed-form false-alarm, mis-detection, collision and
//!   success probabilities, and threshold calibration,
//! - [`mcsim`]: a Monte Carlo simulator of access sessions,
//! - [`optimizer`]: the repetition count maximizing success probability,
//! - [`cli`]: the `nbiot-ppt` command-line front end.
//!
//! ```
//! use nbiot_ppt::{optimizer, SystemConfig};
//!
//! let template = SystemConfig { n_devices: 5, snr_db: -5.0, ..SystemConfig::default() }
//!     .validate()?;
//! let report = optimizer::optimize(&template, 1e-4, Default::default())?;
//! assert_eq!(report.best_m_p, 8);
//! assert!((report.best().p_s - 0.945).abs() < 1e-3);
//! # Ok::<(), Box<dyn std::error::Error>>(())
//! ```

pub mod analytic;
pub mod cli;
pub mod config;
pub mod error;
pub mod hopping;
pub mod mcsim;
pub mod optimizer;
pub mod specfun;

pub use config::{ContentionResource, ContentionSpace, SystemConfig, ValidConfig};
pub use error::{ConfigError, Error, Result};
pub use specfun::GammaLaw;

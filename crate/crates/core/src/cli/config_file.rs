//! Flat `key = value` configuration files.
//!
//! ```text
//! # heaviest load, weakest coverage
//! n_devices = 10
//! snr_db = -10
//! m_base = 64
//! ```
//!
//! Keys are the [`SystemConfig`] field names. Unset keys keep their defaults.

use crate::config::SystemConfig;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
#[error("line {line}: {message}")]
pub struct ParseError {
    pub line: usize,
    pub message: String,
}

fn parse_value<T: std::str::FromStr>(line: usize, key: &str, value: &str) -> Result<T, ParseError> {
    value.parse().map_err(|_| ParseError {
        line,
        message: format!("invalid value `{value}` for `{key}`"),
    })
}

/// Applies the assignments in `text` on top of `base`.
pub fn apply(text: &str, mut base: SystemConfig) -> Result<SystemConfig, ParseError> {
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(ParseError { line, message: format!("expected `key = value`, got `{content}`") });
        };
        let (key, value) = (key.trim(), value.trim());
        match key {
            "xi" => base.xi = parse_value(line, key, value)?,
            "nu" => base.nu = parse_value(line, key, value)?,
            "n_preambles" => base.n_preambles = parse_value(line, key, value)?,
            "m_base" => base.m_base = parse_value(line, key, value)?,
            "m_partial" => base.m_partial = parse_value(line, key, value)?,
            "snr_db" => base.snr_db = parse_value(line, key, value)?,
            "n_devices" => base.n_devices = parse_value(line, key, value)?,
            "threshold_db" => {
                base.threshold_db = match value {
                    "" | "none" => None,
                    v => Some(parse_value(line, key, v)?),
                }
            }
            "seed" => base.seed = parse_value(line, key, value)?,
            other => return Err(ParseError { line, message: format!("unknown key `{other}`") }),
        }
    }
    Ok(base)
}

pub fn parse(text: &str) -> Result<SystemConfig, ParseError> {
    apply(text, SystemConfig::default())
}

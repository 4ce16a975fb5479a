//! Output records and their CSV/JSON encodings.
//!
//! Probabilities are quantized to six significant digits and dB values to
//! three decimals when a record is built, so the CSV text (scientific
//! notation) parses back to exactly the stored values.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::config::SystemConfig;
use crate::mcsim::{MetricEstimate, SimulatedMetrics};

pub fn quantize_prob(p: f64) -> f64 {
    fmt_prob(p).parse().expect("formatted float parses")
}

pub fn quantize_db(db: f64) -> f64 {
    fmt_db(db).parse().expect("formatted float parses")
}

fn fmt_prob(p: f64) -> String {
    format!("{p:.5e}")
}

fn fmt_db(db: f64) -> String {
    format!("{db:.3}")
}

fn opt<T>(v: Option<T>, f: impl Fn(T) -> String) -> String {
    v.map(f).unwrap_or_default()
}

/// Simulated estimate columns shared by all record kinds.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct SimColumns {
    pub sim_trials: Option<u64>,
    pub sim_p_fa: Option<f64>,
    pub sim_p_fa_hw: Option<f64>,
    pub sim_p_md: Option<f64>,
    pub sim_p_md_hw: Option<f64>,
    pub sim_p_c: Option<f64>,
    pub sim_p_c_hw: Option<f64>,
    pub sim_p_s: Option<f64>,
    pub sim_p_s_hw: Option<f64>,
}

const SIM_HEADER: [&str; 9] = [
    "sim_trials",
    "sim_p_fa",
    "sim_p_fa_hw",
    "sim_p_md",
    "sim_p_md_hw",
    "sim_p_c",
    "sim_p_c_hw",
    "sim_p_s",
    "sim_p_s_hw",
];

impl SimColumns {
    pub fn from_metrics(sessions: u64, m: &SimulatedMetrics) -> Self {
        let split = |e: Option<MetricEstimate>| {
            (e.map(|e| quantize_prob(e.value)), e.map(|e| quantize_prob(e.half_width_95)))
        };
        let (sim_p_fa, sim_p_fa_hw) = split(m.p_fa);
        let (sim_p_md, sim_p_md_hw) = split(m.p_md);
        let (sim_p_c, sim_p_c_hw) = split(m.p_c);
        let (sim_p_s, sim_p_s_hw) = split(m.p_s);
        Self {
            sim_trials: Some(sessions),
            sim_p_fa,
            sim_p_fa_hw,
            sim_p_md,
            sim_p_md_hw,
            sim_p_c,
            sim_p_c_hw,
            sim_p_s,
            sim_p_s_hw,
        }
    }

    fn from_fields(c: &mut FieldCursor<'_>) -> Result<Self, String> {
        Ok(Self {
            sim_trials: c.optional()?,
            sim_p_fa: c.optional()?,
            sim_p_fa_hw: c.optional()?,
            sim_p_md: c.optional()?,
            sim_p_md_hw: c.optional()?,
            sim_p_c: c.optional()?,
            sim_p_c_hw: c.optional()?,
            sim_p_s: c.optional()?,
            sim_p_s_hw: c.optional()?,
        })
    }

    fn fields(&self) -> Vec<String> {
        let mut out = vec![opt(self.sim_trials, |t| t.to_string())];
        for v in [
            self.sim_p_fa,
            self.sim_p_fa_hw,
            self.sim_p_md,
            self.sim_p_md_hw,
            self.sim_p_c,
            self.sim_p_c_hw,
            self.sim_p_s,
            self.sim_p_s_hw,
        ] {
            out.push(opt(v, fmt_prob));
        }
        out
    }
}

/// Positional reader over the fields of one CSV row.
pub struct FieldCursor<'a> {
    fields: csv::StringRecordIter<'a>,
    column: usize,
}

impl<'a> FieldCursor<'a> {
    pub fn new(record: &'a csv::StringRecord) -> Self {
        Self { fields: record.iter(), column: 0 }
    }

    fn next_raw(&mut self) -> Result<&'a str, String> {
        self.column += 1;
        self.fields
            .next()
            .ok_or_else(|| format!("missing column {}", self.column))
    }

    fn parse<T: std::str::FromStr>(&mut self) -> Result<T, String> {
        let raw = self.next_raw()?;
        raw.parse()
            .map_err(|_| format!("column {}: cannot parse `{raw}`", self.column))
    }

    fn optional<T: std::str::FromStr>(&mut self) -> Result<Option<T>, String> {
        let raw = self.next_raw()?;
        if raw.is_empty() {
            return Ok(None);
        }
        raw.parse()
            .map(Some)
            .map_err(|_| format!("column {}: cannot parse `{raw}`", self.column))
    }
}

/// A record with a fixed CSV column layout.
pub trait CsvRecord: Sized {
    fn header() -> Vec<&'static str>;
    fn fields(&self) -> Vec<String>;
    fn from_fields(cursor: &mut FieldCursor<'_>) -> Result<Self, String>;
}

/// One operating point of a threshold or repetition sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRecord {
    pub n_m: u32,
    pub snr_db: f64,
    pub m_p: u32,
    pub g: u32,
    pub threshold_db: f64,
    pub p_fa: f64,
    pub p_md: Option<f64>,
    pub p_c: Option<f64>,
    pub p_s: Option<f64>,
    /// Argmax flag in optimizer output.
    pub best: Option<bool>,
    pub sim: SimColumns,
}

impl SweepRecord {
    #[allow(clippy::too_many_arguments)]
    pub fn new(
        n_m: u32,
        snr_db: f64,
        m_p: u32,
        g: u32,
        threshold_db: f64,
        p_fa: f64,
        p_md: Option<f64>,
        p_c: Option<f64>,
        p_s: Option<f64>,
    ) -> Self {
        Self {
            n_m,
            snr_db: quantize_db(snr_db),
            m_p,
            g,
            threshold_db: quantize_db(threshold_db),
            p_fa: quantize_prob(p_fa),
            p_md: p_md.map(quantize_prob),
            p_c: p_c.map(quantize_prob),
            p_s: p_s.map(quantize_prob),
            best: None,
            sim: SimColumns::default(),
        }
    }
}

impl CsvRecord for SweepRecord {
    fn header() -> Vec<&'static str> {
        let mut h = vec![
            "n_m", "snr_db", "m_p", "g", "threshold_db", "p_fa", "p_md", "p_c", "p_s", "best",
        ];
        h.extend(SIM_HEADER);
        h
    }

    fn fields(&self) -> Vec<String> {
        let mut f = vec![
            self.n_m.to_string(),
            fmt_db(self.snr_db),
            self.m_p.to_string(),
            self.g.to_string(),
            fmt_db(self.threshold_db),
            fmt_prob(self.p_fa),
            opt(self.p_md, fmt_prob),
            opt(self.p_c, fmt_prob),
            opt(self.p_s, fmt_prob),
            opt(self.best, |b| b.to_string()),
        ];
        f.extend(self.sim.fields());
        f
    }

    fn from_fields(c: &mut FieldCursor<'_>) -> Result<Self, String> {
        Ok(Self {
            n_m: c.parse()?,
            snr_db: c.parse()?,
            m_p: c.parse()?,
            g: c.parse()?,
            threshold_db: c.parse()?,
            p_fa: c.parse()?,
            p_md: c.optional()?,
            p_c: c.optional()?,
            p_s: c.optional()?,
            best: c.optional()?,
            sim: SimColumns::from_fields(c)?,
        })
    }
}

/// One row of the baseline-versus-partial comparison table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Table2Record {
    pub n_m: u32,
    pub snr_db: f64,
    pub m_b: u32,
    pub base_threshold_db: f64,
    pub base_p_c: f64,
    pub base_p_md: f64,
    pub base_p_s: f64,
    pub m_p_star: u32,
    pub g: u32,
    pub threshold_db: f64,
    pub p_fa: f64,
    pub p_c: f64,
    pub p_md: f64,
    pub p_s: f64,
    pub sim: SimColumns,
}

impl CsvRecord for Table2Record {
    fn header() -> Vec<&'static str> {
        let mut h = vec![
            "n_m",
            "snr_db",
            "m_b",
            "base_threshold_db",
            "base_p_c",
            "base_p_md",
            "base_p_s",
            "m_p_star",
            "g",
            "threshold_db",
            "p_fa",
            "p_c",
            "p_md",
            "p_s",
        ];
        h.extend(SIM_HEADER);
        h
    }

    fn fields(&self) -> Vec<String> {
        let mut f = vec![
            self.n_m.to_string(),
            fmt_db(self.snr_db),
            self.m_b.to_string(),
            fmt_db(self.base_threshold_db),
            fmt_prob(self.base_p_c),
            fmt_prob(self.base_p_md),
            fmt_prob(self.base_p_s),
            self.m_p_star.to_string(),
            self.g.to_string(),
            fmt_db(self.threshold_db),
            fmt_prob(self.p_fa),
            fmt_prob(self.p_c),
            fmt_prob(self.p_md),
            fmt_prob(self.p_s),
        ];
        f.extend(self.sim.fields());
        f
    }

    fn from_fields(c: &mut FieldCursor<'_>) -> Result<Self, String> {
        Ok(Self {
            n_m: c.parse()?,
            snr_db: c.parse()?,
            m_b: c.parse()?,
            base_threshold_db: c.parse()?,
            base_p_c: c.parse()?,
            base_p_md: c.parse()?,
            base_p_s: c.parse()?,
            m_p_star: c.parse()?,
            g: c.parse()?,
            threshold_db: c.parse()?,
            p_fa: c.parse()?,
            p_c: c.parse()?,
            p_md: c.parse()?,
            p_s: c.parse()?,
            sim: SimColumns::from_fields(c)?,
        })
    }
}

pub fn write_csv<R: CsvRecord, W: Write>(records: &[R], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(R::header())?;
    for r in records {
        w.write_record(r.fields())?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, thiserror::Error)]
pub enum ReadError {
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error("unexpected header {0:?}")]
    Header(Vec<String>),
    #[error("row {row}: {message}")]
    Row { row: usize, message: String },
}

/// Reads records written by [`write_csv`].
pub fn read_csv<R: CsvRecord, Rd: std::io::Read>(input: Rd) -> Result<Vec<R>, ReadError> {
    let mut reader = csv::Reader::from_reader(input);
    let header: Vec<String> = reader.headers()?.iter().map(str::to_owned).collect();
    if header != R::header() {
        return Err(ReadError::Header(header));
    }
    reader
        .records()
        .enumerate()
        .map(|(i, rec)| {
            let rec = rec?;
            R::from_fields(&mut FieldCursor::new(&rec))
                .map_err(|message| ReadError::Row { row: i + 1, message })
        })
        .collect()
}

/// JSON document: provenance plus records.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct JsonReport<R> {
    pub tool: String,
    pub version: String,
    pub mode: String,
    pub seed: u64,
    pub trials: u64,
    pub target_pfa: Option<f64>,
    pub config: SystemConfig,
    pub records: R,
}

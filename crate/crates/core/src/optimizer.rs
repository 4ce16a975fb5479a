//! Choice of the partial repetition count.
//!
//! Each candidate `M_p = 2^q` (capped at `M_b` and at `q = 7`) gets a
//! threshold calibrated to the same false-alarm target; the candidate with
//! the highest analytic success probability wins. Ties go to the larger
//! `M_p`, which detects better at equal success.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::analytic::calibrated_metrics;
use crate::config::ValidConfig;
use crate::error::{Error, Result};
use crate::mcsim::{MetricEstimate, Simulator};

/// Largest repetition exponent considered.
pub const MAX_REPETITION_EXPONENT: u32 = 7;

/// Repetition counts `2^q <= m_base`, `q <= 7`, in increasing order.
pub fn candidate_repetitions(m_base: u32) -> Result<Vec<u32>> {
    if !m_base.is_power_of_two() {
        return Err(Error::Domain(format!("m_base = {m_base} is not a power of two")));
    }
    Ok((0..=MAX_REPETITION_EXPONENT)
        .map(|q| 1u32 << q)
        .take_while(|&m| m <= m_base)
        .collect())
}

/// Optional upper bounds a candidate must meet to be eligible.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Constraints {
    pub max_p_c: Option<f64>,
    pub max_p_md: Option<f64>,
}

impl Constraints {
    fn admits(&self, row: &CandidateRow) -> bool {
        self.max_p_c.is_none_or(|m| row.p_c <= m) && self.max_p_md.is_none_or(|m| row.p_md <= m)
    }
}

/// Metrics of one candidate repetition count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CandidateRow {
    pub m_p: u32,
    pub groups: u32,
    pub threshold_db: f64,
    pub p_fa: f64,
    pub p_md: f64,
    pub p_c: f64,
    pub p_s: f64,
    pub feasible: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OptimizationReport {
    pub target_pfa: f64,
    /// Sorted by `m_p`.
    pub rows: Vec<CandidateRow>,
    pub best_m_p: u32,
}

impl OptimizationReport {
    pub fn row(&self, m_p: u32) -> Option<&CandidateRow> {
        self.rows.iter().find(|r| r.m_p == m_p)
    }

    pub fn best(&self) -> &CandidateRow {
        self.row(self.best_m_p).expect("best_m_p is one of the rows")
    }

    /// The `m_p = m_base` row: the unpartitioned preamble.
    pub fn baseline(&self) -> &CandidateRow {
        self.rows.last().expect("reports are never empty")
    }
}

/// Evaluates every candidate and picks the argmax of the success probability.
///
/// `template` supplies everything but `m_partial`.
pub fn optimize(template: &ValidConfig, target_pfa: f64, constraints: Constraints) -> Result<OptimizationReport> {
    let candidates = candidate_repetitions(template.m_base())?;
    let rows = candidates
        .par_iter()
        .map(|&m_p| {
            let config = template.with_partial(m_p)?;
            let m = calibrated_metrics(&config, target_pfa)?;
            let mut row = CandidateRow {
                m_p,
                groups: config.groups(),
                threshold_db: m.threshold_db,
                p_fa: m.p_fa,
                p_md: m.p_md,
                p_c: m.p_c,
                p_s: m.p_s,
                feasible: true,
            };
            row.feasible = constraints.admits(&row);
            Ok(row)
        })
        .collect::<Result<Vec<_>>>()?;

    let best = rows
        .iter()
        .filter(|r| r.feasible)
        .fold(None::<&CandidateRow>, |best, r| match best {
            Some(b) if b.p_s > r.p_s => Some(b),
            _ => Some(r),
        })
        .ok_or_else(|| Error::Domain("no candidate satisfies the constraints".into()))?;

    Ok(OptimizationReport { target_pfa, best_m_p: best.m_p, rows })
}

/// A candidate's analytic success probability next to its simulated one.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SimulatedCandidate {
    pub m_p: u32,
    pub analytic_p_s: f64,
    pub simulated_p_s: MetricEstimate,
}

/// Re-ranks the `top_n` best feasible candidates of `report` by simulated
/// success probability, best first (ties toward larger `m_p`).
pub fn rerank_by_simulation(
    report: &OptimizationReport,
    template: &ValidConfig,
    top_n: usize,
    trials: u64,
) -> Result<Vec<SimulatedCandidate>> {
    if trials == 0 {
        return Err(Error::Domain("re-ranking needs at least one trial".into()));
    }
    let mut ranked: Vec<&CandidateRow> = report.rows.iter().filter(|r| r.feasible).collect();
    ranked.sort_by(|a, b| b.p_s.total_cmp(&a.p_s).then(b.m_p.cmp(&a.m_p)));
    let mut out = ranked
        .into_iter()
        .take(top_n)
        .map(|row| {
            let config = template.with_partial(row.m_p)?.with_threshold_db(row.threshold_db)?;
            let sim = Simulator::new(&config)?.estimate(trials);
            let simulated_p_s = sim
                .p_s
                .ok_or_else(|| Error::Domain("re-ranking needs at least one device".into()))?;
            Ok(SimulatedCandidate { m_p: row.m_p, analytic_p_s: row.p_s, simulated_p_s })
        })
        .collect::<Result<Vec<_>>>()?;
    out.sort_by(|a, b| {
        b.simulated_p_s
            .value
            .total_cmp(&a.simulated_p_s.value)
            .then(b.m_p.cmp(&a.m_p))
    });
    Ok(out)
}

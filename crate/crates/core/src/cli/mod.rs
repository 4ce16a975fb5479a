//! The `nbiot-ppt` command-line front end.
//!
//! Every subcommand accepts the system parameters as flags or through a
//! `--config` file (flags win), and writes CSV (default) or JSON to `--out`
//! or standard output.
//!
//! Exit codes: 0 success, 1 usage error, 2 invalid configuration,
//! 3 runtime or numeric failure.

pub mod config_file;
pub mod records;

use std::ffi::OsString;
use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

use crate::analytic;
use crate::config::{SystemConfig, ValidConfig};
use crate::mcsim::{EmptySampling, SimOptions, SimulatedMetrics, Simulator};
use crate::optimizer::{self, Constraints, OptimizationReport};
use records::{CsvRecord, JsonReport, SimColumns, SweepRecord, Table2Record};

pub const DEFAULT_TARGET_PFA: f64 = 1e-4;
pub const DEFAULT_SIM_TRIALS: u64 = 100_000;

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    /// `--help` or `--version`; not an error, printed to stdout.
    #[error("{0}")]
    Info(String),
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    Validation(String),
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Info(_) => 0,
            CliError::Usage(_) => 1,
            CliError::Validation(_) => 2,
            CliError::Runtime(_) => 3,
        }
    }
}

impl From<crate::ConfigError> for CliError {
    fn from(e: crate::ConfigError) -> Self {
        CliError::Validation(format!("invalid configuration: {e}"))
    }
}

impl From<crate::Error> for CliError {
    fn from(e: crate::Error) -> Self {
        match e {
            crate::Error::Config(c) => c.into(),
            other => CliError::Runtime(other.to_string()),
        }
    }
}

#[derive(Debug, Parser)]
#[command(
    name = "nbiot-ppt",
    version,
    about = "Partial preamble transmission for NB-IoT random access",
    arg_required_else_help = true
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Closed-form metrics at one operating point.
    Analytic(PointArgs),
    /// Simulated and closed-form metrics at one operating point.
    Simulate(PointArgs),
    /// Best repetition count for the given load.
    Optimize(OptimizeArgs),
    /// Metrics against the detection threshold.
    SweepThreshold(ThresholdSweepArgs),
    /// Metrics against the partial repetition count.
    SweepMp(PointArgs),
    /// Baseline versus optimized partial preambles over a grid of loads and SNRs.
    Table2(Table2Args),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

#[derive(Debug, Args)]
struct SystemArgs {
    /// Configuration file of `key = value` lines.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Symbols per symbol group.
    #[arg(long)]
    xi: Option<u32>,
    /// Symbol groups per basic unit.
    #[arg(long)]
    nu: Option<u32>,
    /// Number of preambles.
    #[arg(long = "np")]
    n_preambles: Option<u32>,
    /// Baseline repetition count.
    #[arg(long = "mb")]
    m_base: Option<u32>,
    /// Partial repetition count.
    #[arg(long = "mp")]
    m_partial: Option<u32>,
    /// Per-symbol SNR in dB.
    #[arg(long, allow_hyphen_values = true)]
    snr_db: Option<f64>,
    /// Contending devices per session.
    #[arg(long = "nm")]
    n_devices: Option<u32>,
    /// Detection threshold in dB over the noise floor; calibrated from
    /// --target-pfa when absent.
    #[arg(long, allow_hyphen_values = true)]
    threshold_db: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    /// Simulated sessions per operating point (0 = closed form only).
    #[arg(long)]
    trials: Option<u64>,
    /// False-alarm probability used to calibrate thresholds.
    #[arg(long)]
    target_pfa: Option<f64>,
    /// Output file (standard output when absent).
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum, default_value_t)]
    format: Format,
    /// Worker threads for simulation (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Simulate only this many empty resources per session.
    #[arg(long)]
    empty_samples: Option<usize>,
}

#[derive(Debug, Args)]
struct PointArgs {
    #[command(flatten)]
    system: SystemArgs,
}

#[derive(Debug, Args)]
struct OptimizeArgs {
    #[command(flatten)]
    system: SystemArgs,
    /// Only consider candidates with collision probability at most this.
    #[arg(long)]
    max_pc: Option<f64>,
    /// Only consider candidates with mis-detection probability at most this.
    #[arg(long)]
    max_pmd: Option<f64>,
    /// Re-rank this many top candidates by simulation.
    #[arg(long)]
    rerank_top: Option<usize>,
}

#[derive(Debug, Args)]
struct ThresholdSweepArgs {
    #[command(flatten)]
    system: SystemArgs,
    #[arg(long, allow_hyphen_values = true, default_value_t = -5.0)]
    start: f64,
    #[arg(long, allow_hyphen_values = true, default_value_t = 15.0)]
    stop: f64,
    #[arg(long, default_value_t = 0.5)]
    step: f64,
    /// Partial repetition counts to sweep (default: --mp, else 16,64).
    #[arg(long, value_delimiter = ',')]
    mp_list: Vec<u32>,
    /// SNRs to sweep in dB (default: --snr-db, else -10,-5).
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
    snr_list: Vec<f64>,
}

#[derive(Debug, Args)]
struct Table2Args {
    #[command(flatten)]
    system: SystemArgs,
    #[arg(long, value_delimiter = ',', default_values_t = [1u32, 2, 5, 10])]
    nm_list: Vec<u32>,
    #[arg(long, value_delimiter = ',', allow_hyphen_values = true, default_values_t = [-5.0, -10.0])]
    snr_list: Vec<f64>,
}

/// What to run.
#[derive(Debug, Clone, PartialEq)]
pub enum Mode {
    Analytic,
    Simulate,
    Optimize {
        constraints: Constraints,
        rerank_top: Option<usize>,
    },
    SweepThreshold {
        thresholds_db: Vec<f64>,
        m_p: Vec<u32>,
        snr_db: Vec<f64>,
    },
    SweepMp,
    Table2 {
        n_devices: Vec<u32>,
        snr_db: Vec<f64>,
    },
}

impl Mode {
    pub fn name(&self) -> &'static str {
        match self {
            Mode::Analytic => "analytic",
            Mode::Simulate => "simulate",
            Mode::Optimize { .. } => "optimize",
            Mode::SweepThreshold { .. } => "sweep-threshold",
            Mode::SweepMp => "sweep-mp",
            Mode::Table2 { .. } => "table2",
        }
    }
}

/// A fully parsed and validated command.
#[derive(Debug, Clone)]
pub struct ExperimentSpec {
    pub mode: Mode,
    pub config: ValidConfig,
    pub trials: u64,
    pub target_pfa: f64,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub threads: Option<usize>,
    pub sim_options: SimOptions,
}

fn merge_system(args: &SystemArgs) -> Result<SystemConfig, CliError> {
    let mut config = SystemConfig::default();
    if let Some(path) = &args.config {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Usage(format!("cannot read config file {}: {e}", path.display())))?;
        config = config_file::apply(&text, config)
            .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
    }
    macro_rules! set {
        ($($field:ident),*) => {$(
            if let Some(v) = args.$field { config.$field = v; }
        )*};
    }
    set!(xi, nu, n_preambles, m_base, m_partial, snr_db, n_devices, seed);
    if args.threshold_db.is_some() {
        config.threshold_db = args.threshold_db;
    }
    Ok(config)
}

/// Evenly spaced points from `start` to `stop` inclusive.
#[allow(clippy::neg_cmp_op_on_partial_ord)]
pub fn threshold_grid(start: f64, stop: f64, step: f64) -> Result<Vec<f64>, CliError> {
    if !(step > 0.0) || !start.is_finite() || !stop.is_finite() {
        return Err(CliError::Validation(format!("invalid sweep range {start}:{step}:{stop}")));
    }
    if stop < start {
        return Err(CliError::Validation(format!("empty sweep range: stop {stop} < start {start}")));
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize + 1;
    Ok((0..n).map(|i| start + i as f64 * step).collect())
}

/// Parses command-line arguments (including the program name).
pub fn parse_args<I, T>(argv: I) -> Result<ExperimentSpec, CliError>
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = Cli::try_parse_from(argv).map_err(|e| {
        use clap::error::ErrorKind;
        match e.kind() {
            ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => CliError::Info(e.to_string()),
            _ => CliError::Usage(e.render().to_string()),
        }
    })?;

    let (system, mode) = match cli.command {
        Command::Analytic(a) => (a.system, Mode::Analytic),
        Command::Simulate(a) => (a.system, Mode::Simulate),
        Command::SweepMp(a) => (a.system, Mode::SweepMp),
        Command::Optimize(a) => {
            let constraints = Constraints { max_p_c: a.max_pc, max_p_md: a.max_pmd };
            (a.system, Mode::Optimize { constraints, rerank_top: a.rerank_top })
        }
        Command::SweepThreshold(a) => {
            let thresholds_db = threshold_grid(a.start, a.stop, a.step)?;
            let m_p = match (a.mp_list.is_empty(), a.system.m_partial) {
                (false, _) => a.mp_list,
                (true, Some(m)) => vec![m],
                (true, None) => vec![16, 64],
            };
            let snr_db = match (a.snr_list.is_empty(), a.system.snr_db) {
                (false, _) => a.snr_list,
                (true, Some(s)) => vec![s],
                (true, None) => vec![-10.0, -5.0],
            };
            (a.system, Mode::SweepThreshold { thresholds_db, m_p, snr_db })
        }
        Command::Table2(a) => {
            if a.nm_list.is_empty() || a.snr_list.is_empty() {
                return Err(CliError::Validation("table2 needs nonempty --nm-list and --snr-list".into()));
            }
            (a.system, Mode::Table2 { n_devices: a.nm_list, snr_db: a.snr_list })
        }
    };

    let config = merge_system(&system)?
        .validate()
        .map_err(|e| CliError::Validation(format!("invalid configuration: {e}")))?;
    if let Mode::SweepThreshold { m_p, snr_db, .. } = &mode {
        for &m in m_p {
            config.with_partial(m).map_err(|e| CliError::Validation(format!("invalid configuration: {e}")))?;
        }
        if snr_db.iter().any(|s| s.is_nan()) {
            return Err(CliError::Validation("SNR list contains NaN".into()));
        }
    }

    let target_pfa = system.target_pfa.unwrap_or(DEFAULT_TARGET_PFA);
    if !(target_pfa > 0.0 && target_pfa < 1.0) {
        return Err(CliError::Validation(format!("--target-pfa must lie in (0, 1), got {target_pfa}")));
    }
    let trials = match (&mode, system.trials) {
        (Mode::Simulate, Some(0)) => {
            return Err(CliError::Validation("simulate needs --trials >= 1".into()));
        }
        (Mode::Simulate, None) => DEFAULT_SIM_TRIALS,
        (Mode::Optimize { rerank_top: Some(_), .. }, None) => DEFAULT_SIM_TRIALS,
        (_, t) => t.unwrap_or(0),
    };
    if matches!(mode, Mode::Optimize { rerank_top: Some(_), .. }) && trials == 0 {
        return Err(CliError::Validation("--rerank-top needs --trials >= 1".into()));
    }
    if system.threads == Some(0) {
        return Err(CliError::Validation("--threads must be at least 1".into()));
    }
    let sim_options = SimOptions {
        empty_sampling: system.empty_samples.map_or(EmptySampling::All, EmptySampling::Fixed),
        ..SimOptions::default()
    };

    Ok(ExperimentSpec {
        mode,
        config,
        trials,
        target_pfa,
        out: system.out,
        format: system.format,
        threads: system.threads,
        sim_options,
    })
}

/// Seed of sweep point `index`: distinct streams for distinct points.
fn point_seed(master: u64, index: usize) -> u64 {
    master.wrapping_add((index as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15))
}

struct Runner<'a> {
    spec: &'a ExperimentSpec,
}

impl Runner<'_> {
    fn threshold_for(&self, config: &ValidConfig) -> crate::Result<f64> {
        match config.threshold_db() {
            Some(t) => Ok(t),
            None => analytic::calibrate_threshold(self.spec.target_pfa, config.m_partial()),
        }
    }

    fn simulate(&self, config: &ValidConfig, threshold_db: f64, index: usize) -> crate::Result<SimColumns> {
        let config = SystemConfig {
            seed: point_seed(self.spec.config.seed(), index),
            threshold_db: Some(threshold_db),
            ..config.raw().clone()
        }
        .validate()?;
        warn_if_sparse(&config, threshold_db, self.spec.trials);
        let sim = Simulator::new(&config)?.options(self.spec.sim_options);
        let metrics: SimulatedMetrics = sim.estimate(self.spec.trials);
        Ok(SimColumns::from_metrics(self.spec.trials, &metrics))
    }

    fn point(&self, config: &ValidConfig, threshold_db: f64, index: usize) -> crate::Result<SweepRecord> {
        let p_fa = analytic::false_alarm_prob(threshold_db, config.m_partial())?;
        let (p_md, p_c, p_s) = if config.n_devices() > 0 {
            let m = analytic::success_prob(config, threshold_db)?;
            (Some(m.p_md), Some(m.p_c), Some(m.p_s))
        } else {
            (None, None, None)
        };
        let mut record = SweepRecord::new(
            config.n_devices(),
            config.raw().snr_db,
            config.m_partial(),
            config.groups(),
            threshold_db,
            p_fa,
            p_md,
            p_c,
            p_s,
        );
        if self.spec.trials > 0 {
            record.sim = self.simulate(config, threshold_db, index)?;
        }
        Ok(record)
    }

    fn report_records(&self, report: &OptimizationReport, simulate_all: bool) -> crate::Result<Vec<SweepRecord>> {
        let config = &self.spec.config;
        report
            .rows
            .iter()
            .enumerate()
            .map(|(i, row)| {
                let mut r = SweepRecord::new(
                    config.n_devices(),
                    config.raw().snr_db,
                    row.m_p,
                    row.groups,
                    row.threshold_db,
                    row.p_fa,
                    Some(row.p_md),
                    Some(row.p_c),
                    Some(row.p_s),
                );
                r.best = Some(row.m_p == report.best_m_p);
                if simulate_all && self.spec.trials > 0 {
                    r.sim = self.simulate(&config.with_partial(row.m_p)?, row.threshold_db, i)?;
                }
                Ok(r)
            })
            .collect()
    }

    fn run(&self) -> Result<Output, CliError> {
        let spec = self.spec;
        let config = &spec.config;
        let output = match &spec.mode {
            Mode::Analytic | Mode::Simulate => {
                let threshold = self.threshold_for(config)?;
                Output::Sweep(vec![self.point(config, threshold, 0)?])
            }
            Mode::SweepMp => {
                let report = optimizer::optimize(config, spec.target_pfa, Constraints::default())?;
                Output::Sweep(self.report_records(&report, true)?)
            }
            Mode::Optimize { constraints, rerank_top } => {
                let report = optimizer::optimize(config, spec.target_pfa, *constraints)?;
                let mut records = self.report_records(&report, false)?;
                if let Some(top) = rerank_top {
                    let seeded = SystemConfig { seed: point_seed(config.seed(), 0), ..config.raw().clone() }
                        .validate()?;
                    let ranked = optimizer::rerank_by_simulation(&report, &seeded, *top, spec.trials)?;
                    for cand in &ranked {
                        let rec = records.iter_mut().find(|r| r.m_p == cand.m_p).expect("ranked rows exist");
                        rec.sim = SimColumns {
                            sim_trials: Some(spec.trials),
                            sim_p_s: Some(records::quantize_prob(cand.simulated_p_s.value)),
                            sim_p_s_hw: Some(records::quantize_prob(cand.simulated_p_s.half_width_95)),
                            ..SimColumns::default()
                        };
                    }
                    if let Some(first) = ranked.first() {
                        if first.m_p != report.best_m_p {
                            eprintln!(
                                "note: simulation ranks m_p = {} first (analytic optimum m_p = {})",
                                first.m_p, report.best_m_p
                            );
                        }
                    }
                }
                Output::Sweep(records)
            }
            Mode::SweepThreshold { thresholds_db, m_p, snr_db } => {
                let mut records = Vec::new();
                for &snr in snr_db {
                    for &m in m_p {
                        let point_config = SystemConfig { snr_db: snr, m_partial: m, ..config.raw().clone() }
                            .validate()?;
                        for &t in thresholds_db {
                            let index = records.len();
                            records.push(self.point(&point_config, t, index)?);
                        }
                    }
                }
                Output::Sweep(records)
            }
            Mode::Table2 { n_devices, snr_db } => {
                let mut records = Vec::new();
                for &n in n_devices {
                    for &snr in snr_db {
                        let template = SystemConfig { n_devices: n, snr_db: snr, ..config.raw().clone() }
                            .validate()?;
                        let report = optimizer::optimize(&template, spec.target_pfa, Constraints::default())?;
                        let best = *report.best();
                        let base = *report.baseline();
                        let mut rec = Table2Record {
                            n_m: n,
                            snr_db: records::quantize_db(snr),
                            m_b: template.m_base(),
                            base_threshold_db: records::quantize_db(base.threshold_db),
                            base_p_c: records::quantize_prob(base.p_c),
                            base_p_md: records::quantize_prob(base.p_md),
                            base_p_s: records::quantize_prob(base.p_s),
                            m_p_star: best.m_p,
                            g: best.groups,
                            threshold_db: records::quantize_db(best.threshold_db),
                            p_fa: records::quantize_prob(best.p_fa),
                            p_c: records::quantize_prob(best.p_c),
                            p_md: records::quantize_prob(best.p_md),
                            p_s: records::quantize_prob(best.p_s),
                            sim: SimColumns::default(),
                        };
                        if spec.trials > 0 {
                            let index = records.len();
                            rec.sim = self.simulate(&template.with_partial(best.m_p)?, best.threshold_db, index)?;
                        }
                        records.push(rec);
                    }
                }
                Output::Table2(records)
            }
        };
        Ok(output)
    }
}

fn warn_if_sparse(config: &ValidConfig, threshold_db: f64, trials: u64) {
    let Ok(p_fa) = analytic::false_alarm_prob(threshold_db, config.m_partial()) else {
        return;
    };
    let resources = config.n_resources() as f64;
    let n = config.n_devices();
    let active = resources * -(n as f64 * (-1.0 / resources).ln_1p()).exp_m1();
    let mut expected = vec![("false alarm", trials as f64 * (resources - active) * p_fa)];
    if n > 0 {
        if let Ok(m) = analytic::success_prob(config, threshold_db) {
            expected.push(("mis-detection", trials as f64 * active * m.p_md));
            expected.push(("collision", trials as f64 * m.p_c));
        }
    }
    for (name, count) in expected {
        if count < 100.0 {
            eprintln!(
                "warning: m_p = {}: about {count:.1} expected {name} events in {trials} sessions; the estimate will be coarse",
                config.m_partial()
            );
        }
    }
}

enum Output {
    Sweep(Vec<SweepRecord>),
    Table2(Vec<Table2Record>),
}

fn write_records<R: CsvRecord + Serialize, W: Write>(
    spec: &ExperimentSpec,
    records: &[R],
    mut out: W,
) -> Result<(), CliError> {
    let io_err = |e: io::Error| CliError::Runtime(format!("cannot write output: {e}"));
    match spec.format {
        Format::Csv => records::write_csv(records, &mut out).map_err(|e| CliError::Runtime(format!("cannot write output: {e}")))?,
        Format::Json => {
            let report = JsonReport {
                tool: env!("CARGO_PKG_NAME").to_string(),
                version: env!("CARGO_PKG_VERSION").to_string(),
                mode: spec.mode.name().to_string(),
                seed: spec.config.seed(),
                trials: spec.trials,
                target_pfa: Some(spec.target_pfa),
                config: spec.config.raw().clone(),
                records,
            };
            serde_json::to_writer_pretty(&mut out, &report).map_err(|e| CliError::Runtime(e.to_string()))?;
            out.write_all(b"\n").map_err(io_err)?;
        }
    }
    out.flush().map_err(io_err)
}

/// Runs a parsed command and writes its output.
pub fn run_experiment(spec: &ExperimentSpec) -> Result<(), CliError> {
    let output = match spec.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Runtime(e.to_string()))?
            .install(|| Runner { spec }.run())?,
        None => Runner { spec }.run()?,
    };
    let sink: Box<dyn Write> = match &spec.out {
        Some(path) => Box::new(BufWriter::new(File::create(path).map_err(|e| {
            CliError::Runtime(format!("cannot create {}: {e}", path.display()))
        })?)),
        None => Box::new(BufWriter::new(io::stdout().lock())),
    };
    match output {
        Output::Sweep(r) => write_records(spec, &r, sink),
        Output::Table2(r) => write_records(spec, &r, sink),
    }
}

/// Entry point used by the binary; returns the process exit code.
pub fn main_with_args<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    match parse_args(argv).and_then(|spec| run_experiment(&spec)) {
        Ok(()) => 0,
        Err(CliError::Info(text)) => {
            print!("{text}");
            0
        }
        Err(CliError::Usage(text)) => {
            eprint!("{text}");
            if !text.ends_with('\n') {
                eprintln!();
            }
            1
        }
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

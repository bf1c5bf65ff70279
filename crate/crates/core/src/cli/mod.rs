//! Command-line front end.

mod config;
mod output;

use std::ffi::OsString;
use std::path::PathBuf;
use std::time::Instant;

use clap::{Parser, ValueEnum};
use serde::{Deserialize, Serialize};

use crate::diagrams::{saw_correction_bound, saw_loop_sum, CorrectionBound, LoopEnumeration};
use crate::error::{Error, Result};
use crate::kernels::{make_uniform, parse_kernel_file, KernelSpec};
use crate::returns::{
    fmt_real, return_series, return_series_truncated, ContinuumReturns, ReturnSeries, Truncation,
    DEFAULT_N_MAX, DEFAULT_TOL,
};
use crate::simulate::{
    double_connection_reference, mc_return, op_double_connection_sum, op_pc_estimate, op_survival,
    DoubleConnectionConfig, PcSearch, SimConfig, SimEstimate, DEFAULT_MAX_ACTIVE,
};
use crate::sums::{
    compare_discrete_continuum, cp_epsilon_sum, loop_sums, predict_pc, predict_pc_continuum,
    triangle_sum, CompareReport, CompareVariant, CpLimit, LoopSums, Model, Prediction, SumTerm,
};
use crate::verify::{verify, Suite, VerifyOptions, VerifyReport};

pub use config::{parse_config, KEYS as CONFIG_KEYS};
pub use output::{Envelope, Meta, SCHEMA_VERSION};

pub const EXIT_OK: i32 = 0;
pub const EXIT_VALIDATION: i32 = 2;
pub const EXIT_FLAGGED: i32 = 3;
pub const EXIT_IO: i32 = 4;

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Command {
    Predict,
    Series,
    Sums,
    Continuum,
    Compare,
    SawEnum,
    Triangle,
    CpLimit,
    SimulateOp,
    Verify,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
    Text,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, ValueEnum)]
pub enum SimMode {
    /// Critical point by bisection over p
    Pc,
    /// Survival fraction at a fixed p
    Survival,
    /// Double-connection sum at p
    Double,
    /// Random-walk return frequency after n steps
    Return,
}

/// Critical-point expansions for spread-out lattice models.
#[derive(Debug, Parser)]
#[command(name = "spreadpc", version, args_override_self = true)]
pub struct RunConfig {
    #[arg(value_enum)]
    pub command: Command,
    /// saw, cp, op or perc
    #[arg(long)]
    pub model: Option<Model>,
    /// Dimension
    #[arg(long = "d")]
    pub d: Option<usize>,
    /// Range in lattice units
    #[arg(long = "L")]
    pub range: Option<u32>,
    /// `uniform` or the path of a kernel definition file
    #[arg(long, default_value = "uniform")]
    pub kernel: String,
    #[arg(long)]
    pub nmax: Option<usize>,
    #[arg(long, default_value_t = DEFAULT_TOL)]
    pub tol: f64,
    /// Comma-separated values in (0, 1]
    #[arg(long, value_delimiter = ',')]
    pub epsilon: Vec<f64>,
    /// Comma-separated ranges for sweeps
    #[arg(long = "Ls", value_delimiter = ',')]
    pub ranges: Vec<u32>,
    /// 0, 1 or `even`
    #[arg(long, default_value = "0")]
    pub alpha: String,
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
    #[arg(long)]
    pub trials: Option<u64>,
    #[arg(long)]
    pub horizon: Option<usize>,
    /// Worker threads (default from SPREADPC_WORKERS, else all cores)
    #[arg(long, env = "SPREADPC_WORKERS")]
    pub workers: Option<usize>,
    #[arg(long, value_enum)]
    pub format: Option<Format>,
    #[arg(long)]
    pub output: Option<PathBuf>,
    /// Exit with status 3 when a result carries an invalid flag
    #[arg(long)]
    pub strict: bool,
    /// Omit timing metadata so output is reproducible byte for byte
    #[arg(long)]
    pub no_meta: bool,
    /// Run below the model's upper critical dimension
    #[arg(long)]
    pub override_gate: bool,
    /// Run file with `key = value` lines; flags take precedence
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, default_value = "fast")]
    pub suite: String,
    #[arg(long, value_enum, default_value = "pc")]
    pub mode: SimMode,
    /// Bond intensity for survival and double-connection runs
    #[arg(long)]
    pub p: Option<f64>,
    /// Walk length for `--mode return`
    #[arg(long)]
    pub n: Option<usize>,
    /// Bisection bracket `lo,hi`
    #[arg(long, value_delimiter = ',')]
    pub bracket: Vec<f64>,
    /// Survival fraction defining the crossing (default 2/T)
    #[arg(long)]
    pub threshold: Option<f64>,
    /// Ignore site collisions (branching-process mode)
    #[arg(long)]
    pub ghost: bool,
    #[arg(long, default_value_t = DEFAULT_MAX_ACTIVE)]
    pub max_active: usize,
    /// Add the exact `rational` column to series CSV
    #[arg(long)]
    pub rational: bool,
}

/// Runs the CLI on raw arguments and returns the exit status.
pub fn main_with_args(args: Vec<OsString>) -> i32 {
    let args = match config::config_path(&args) {
        None => args,
        Some(path) => {
            let text = match std::fs::read_to_string(&path) {
                Ok(t) => t,
                Err(e) => {
                    eprintln!("error: cannot read config {}: {e}", path.to_string_lossy());
                    return EXIT_IO;
                }
            };
            match parse_config(&text).and_then(|entries| config::merge(&args, &entries)) {
                Ok(a) => a,
                Err(e) => {
                    eprintln!("error: config {}: {e}", path.to_string_lossy());
                    return EXIT_VALIDATION;
                }
            }
        }
    };
    let cfg = match RunConfig::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_VALIDATION } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    let default_level = if cfg.command == Command::SimulateOp { "info" } else { "warn" };
    let _ = env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(default_level))
        .format_timestamp(None)
        .try_init();
    if let Some(w) = cfg.workers {
        if w == 0 {
            eprintln!("error: invalid argument `workers`: must be positive");
            return EXIT_VALIDATION;
        }
        let _ = rayon::ThreadPoolBuilder::new().num_threads(w).build_global();
    }
    match run(&cfg) {
        Ok(flagged) => {
            if flagged && cfg.strict {
                eprintln!("error: result flagged invalid (--strict)");
                EXIT_FLAGGED
            } else {
                EXIT_OK
            }
        }
        Err(e) => {
            eprintln!("error: {e}");
            match e {
                Error::Io(_) => EXIT_IO,
                _ => EXIT_VALIDATION,
            }
        }
    }
}

fn require<T: Copy>(v: Option<T>, name: &str, command: Command) -> Result<T> {
    v.ok_or_else(|| {
        Error::invalid_argument(
            name,
            format!("required by `{}`", command.to_possible_value().map(|v| v.get_name().to_string()).unwrap_or_default()),
        )
    })
}

impl RunConfig {
    fn kernel(&self) -> Result<KernelSpec> {
        if self.kernel == "uniform" {
            let d = require(self.d, "d", self.command)?;
            let l = require(self.range, "L", self.command)?;
            return make_uniform(d, l);
        }
        let text = std::fs::read_to_string(&self.kernel)?;
        let k = parse_kernel_file(&text)?;
        if self.d.is_some_and(|d| d != k.dim()) || self.range.is_some_and(|l| l != k.range()) {
            return Err(Error::invalid_argument(
                "kernel",
                format!("file has d={} L={}, which disagrees with --d/--L", k.dim(), k.range()),
            ));
        }
        Ok(k)
    }

    fn truncation(&self) -> Result<Truncation> {
        let t = Truncation {
            n_max: self.nmax.unwrap_or(DEFAULT_N_MAX),
            tol: self.tol,
        };
        t.validate()?;
        Ok(t)
    }

    fn variant(&self) -> Result<CompareVariant> {
        match self.alpha.as_str() {
            "0" => Ok(CompareVariant::Weighted { alpha: 0 }),
            "1" => Ok(CompareVariant::Weighted { alpha: 1 }),
            "even" => Ok(CompareVariant::Even),
            other => Err(Error::invalid_argument("alpha", format!("expected 0, 1 or even, got `{other}`"))),
        }
    }

    pub fn command_name(&self) -> &'static str {
        match self.command {
            Command::Predict => "predict",
            Command::Series => "series",
            Command::Sums => "sums",
            Command::Continuum => "continuum",
            Command::Compare => "compare",
            Command::SawEnum => "saw-enum",
            Command::Triangle => "triangle",
            Command::CpLimit => "cp-limit",
            Command::SimulateOp => "simulate-op",
            Command::Verify => "verify",
        }
    }

    fn trials(&self, default: u64) -> u64 {
        self.trials.unwrap_or(default)
    }

    fn format(&self) -> Format {
        self.format.unwrap_or(if self.command == Command::Verify {
            Format::Text
        } else {
            Format::Json
        })
    }
}

/// Series plus the headline quantities for the `series` command.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SeriesReport {
    pub series: ReturnSeries,
    pub invariants: crate::returns::InvariantReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PredictionSweep {
    pub predictions: Vec<Prediction>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ContinuumReport {
    pub d: usize,
    /// `(n, v_n, v_n^d)`
    pub densities: Vec<(usize, f64, f64)>,
    pub oracle_checks: Vec<crate::returns::continuum::OracleCheck>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SawReport {
    pub enumeration: LoopEnumeration,
    pub correction_bound: CorrectionBound,
    /// `sum_{n=2}^{nmax} r_n - pi1_truncated`
    pub defect: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TriangleReport {
    pub d: usize,
    #[serde(rename = "L")]
    pub range: u32,
    pub truncation_n: usize,
    pub triangle: SumTerm,
    /// `triangle * L^d`
    pub scaled: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CpReport {
    pub d: usize,
    #[serde(rename = "L")]
    pub range: u32,
    pub s_all: f64,
    pub rows: Vec<CpLimit>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DoubleReport {
    pub estimate: SimEstimate,
    /// `1/2 sum_{t=2}^{T} r_{2t}`
    pub reference: f64,
    pub error_scale: f64,
}

/// Output of one command.
pub enum Outcome {
    Prediction(Prediction),
    Sweep(PredictionSweep),
    Series(SeriesReport),
    Sums(LoopSums),
    Continuum(ContinuumReport),
    Compare(CompareReport),
    Saw(SawReport),
    Triangle(TriangleReport),
    Cp(CpReport),
    Sim(SimEstimate),
    Double(DoubleReport),
    Verify(VerifyReport),
}

impl Outcome {
    /// Whether the result carries an invalid-tail, gate or failure flag.
    pub fn flagged(&self) -> bool {
        match self {
            Outcome::Prediction(p) => !p.tail_valid || p.gate_overridden,
            Outcome::Sweep(s) => s.predictions.iter().any(|p| !p.tail_valid || p.gate_overridden),
            Outcome::Series(s) => !s.series.tail.is_some_and(|t| t.valid) || !s.invariants.all_hold(),
            Outcome::Sums(s) => {
                !(s.s_all.valid && s.s_even.valid && s.s_weighted.valid)
                    || s.triangle.is_some_and(|t| !t.valid)
            }
            Outcome::Continuum(c) => c.oracle_checks.iter().any(|k| k.used_oracle),
            Outcome::Compare(c) => c.rows.iter().any(|r| !r.tail_valid),
            Outcome::Saw(s) => !s.correction_bound.valid,
            Outcome::Triangle(t) => !t.triangle.valid,
            Outcome::Cp(c) => c.rows.iter().any(|r| !r.tail_valid),
            Outcome::Sim(e) => e.flagged_trials > 0 || e.dropped_trials > 0,
            Outcome::Double(d) => d.estimate.dropped_trials > 0,
            Outcome::Verify(v) => !v.passed(),
        }
    }
}

/// Dispatches one command, writes its output, and reports whether the
/// result was flagged.
pub fn run(cfg: &RunConfig) -> Result<bool> {
    let start = Instant::now();
    let outcome = execute(cfg)?;
    let text = output::render(cfg, &outcome, start.elapsed().as_secs_f64())?;
    match &cfg.output {
        Some(path) => std::fs::write(path, text)?,
        None => print!("{text}"),
    }
    if let Outcome::Verify(v) = &outcome {
        if !v.passed() {
            return Err(Error::invalid_argument("suite", "acceptance checks failed"));
        }
    }
    Ok(outcome.flagged())
}

pub fn execute(cfg: &RunConfig) -> Result<Outcome> {
    let cmd = cfg.command;
    match cmd {
        Command::Predict => {
            let model = require(cfg.model, "model", cmd)?;
            let truncation = cfg.truncation()?;
            if cfg.ranges.is_empty() {
                let k = cfg.kernel()?;
                Ok(Outcome::Prediction(predict_pc(model, &k, truncation, cfg.override_gate)?))
            } else {
                let d = require(cfg.d, "d", cmd)?;
                let predictions = cfg
                    .ranges
                    .iter()
                    .map(|&l| predict_pc(model, &make_uniform(d, l)?, truncation, cfg.override_gate))
                    .collect::<Result<Vec<_>>>()?;
                Ok(Outcome::Sweep(PredictionSweep { predictions }))
            }
        }
        Command::Series => {
            let k = cfg.kernel()?;
            let series = return_series(&k, cfg.nmax.unwrap_or(DEFAULT_N_MAX))?;
            let invariants = series.check_invariants();
            Ok(Outcome::Series(SeriesReport { series, invariants }))
        }
        Command::Sums => {
            let k = cfg.kernel()?;
            let series = return_series_truncated(&k, cfg.truncation()?)?;
            Ok(Outcome::Sums(loop_sums(&series, cfg.tol)))
        }
        Command::Continuum => {
            let d = require(cfg.d, "d", cmd)?;
            let n_max = cfg.nmax.unwrap_or(DEFAULT_N_MAX);
            match cfg.model {
                Some(model) => {
                    let l = require(cfg.range, "L", cmd)?;
                    Ok(Outcome::Prediction(predict_pc_continuum(model, d, l, n_max, cfg.override_gate)?))
                }
                None => {
                    let c = ContinuumReturns::compute(d, n_max)?;
                    let densities = (1..=c.n_max()).map(|n| (n, c.v(n), c.center_return(n))).collect();
                    Ok(Outcome::Continuum(ContinuumReport {
                        d,
                        densities,
                        oracle_checks: c.checks,
                    }))
                }
            }
        }
        Command::Compare => {
            let d = require(cfg.d, "d", cmd)?;
            let ranges = if cfg.ranges.is_empty() {
                vec![require(cfg.range, "L", cmd)?]
            } else {
                cfg.ranges.clone()
            };
            Ok(Outcome::Compare(compare_discrete_continuum(
                d,
                &ranges,
                cfg.variant()?,
                cfg.truncation()?,
                cfg.override_gate,
            )?))
        }
        Command::SawEnum => {
            let k = cfg.kernel()?;
            let enumeration = saw_loop_sum(&k, cfg.nmax.unwrap_or(8))?;
            let series = return_series_truncated(&k, Truncation::default())?;
            let correction_bound = saw_correction_bound(&series)?;
            Ok(Outcome::Saw(SawReport {
                defect: enumeration.defect(),
                enumeration,
                correction_bound,
            }))
        }
        Command::Triangle => {
            let k = cfg.kernel()?;
            if k.dim() <= 6 && !cfg.override_gate {
                return Err(Error::DimensionGate {
                    quantity: "triangle diagram".into(),
                    d: k.dim(),
                    required: 6,
                });
            }
            let series = return_series_truncated(&k, cfg.truncation()?)?;
            let triangle = triangle_sum(&series);
            Ok(Outcome::Triangle(TriangleReport {
                d: k.dim(),
                range: k.range(),
                truncation_n: series.last_even(),
                scaled: triangle.value * (k.range() as f64).powi(k.dim() as i32),
                triangle,
            }))
        }
        Command::CpLimit => {
            let k = cfg.kernel()?;
            let eps = if cfg.epsilon.is_empty() {
                vec![0.2, 0.1, 0.05]
            } else {
                cfg.epsilon.clone()
            };
            let series = return_series(&k, cfg.nmax.unwrap_or(DEFAULT_N_MAX))?;
            let rows = eps.iter().map(|&e| cp_epsilon_sum(&series, e)).collect::<Result<Vec<_>>>()?;
            Ok(Outcome::Cp(CpReport {
                d: k.dim(),
                range: k.range(),
                s_all: rows[0].s_all,
                rows,
            }))
        }
        Command::SimulateOp => simulate(cfg),
        Command::Verify => {
            let suite: Suite = cfg.suite.parse()?;
            Ok(Outcome::Verify(verify(suite, &VerifyOptions { seed: cfg.seed })?))
        }
    }
}

fn simulate(cfg: &RunConfig) -> Result<Outcome> {
    let cmd = cfg.command;
    let k = cfg.kernel()?;
    let horizon = cfg.horizon.unwrap_or(100);
    let mut base = SimConfig::new(cfg.p.unwrap_or(0.0), horizon, cfg.trials(1000), cfg.seed);
    base.survival_threshold = cfg.threshold;
    base.ignore_collisions = cfg.ghost;
    base.max_active = cfg.max_active;
    match cfg.mode {
        SimMode::Survival => {
            base.p = require(cfg.p, "p", cmd)?;
            Ok(Outcome::Sim(op_survival(&k, &base)?))
        }
        SimMode::Pc => {
            let bracket = match cfg.bracket.as_slice() {
                [] => (0.9, 1.2),
                [lo, hi] => (*lo, *hi),
                _ => return Err(Error::invalid_argument("bracket", "expected `lo,hi`")),
            };
            let search = PcSearch {
                base,
                bracket,
                tol: if cfg.tol == DEFAULT_TOL { 1e-3 } else { cfg.tol },
            };
            Ok(Outcome::Sim(op_pc_estimate(&k, &search)?))
        }
        SimMode::Double => {
            let horizon = cfg.horizon.unwrap_or(10);
            let mut dc = DoubleConnectionConfig::new(horizon, cfg.trials(1000), cfg.seed);
            dc.p = cfg.p.unwrap_or(1.0);
            let estimate = op_double_connection_sum(&k, &dc)?;
            let series = return_series(&k, 2 * horizon.max(2))?;
            Ok(Outcome::Double(DoubleReport {
                estimate,
                reference: double_connection_reference(&series, horizon)?,
                error_scale: series.beta * series.beta,
            }))
        }
        SimMode::Return => {
            let n = require(cfg.n, "n", cmd)?;
            Ok(Outcome::Sim(mc_return(&k, n, cfg.trials(100_000), cfg.seed)?))
        }
    }
}

/// Formats a float for CSV and text output.
pub(crate) fn num(x: f64) -> String {
    fmt_real(x)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(args: &[&str]) -> RunConfig {
        RunConfig::try_parse_from(std::iter::once("spreadpc").chain(args.iter().copied())).unwrap()
    }

    #[test]
    fn parses_flags() {
        let c = parse(&["predict", "--model", "saw", "--d", "5", "--L", "4"]);
        assert_eq!(c.command, Command::Predict);
        assert_eq!(c.model, Some(Model::Saw));
        assert_eq!((c.d, c.range), (Some(5), Some(4)));
        let c = parse(&["cp-limit", "--d", "5", "--L", "4", "--epsilon", "0.2,0.1"]);
        assert_eq!(c.epsilon, vec![0.2, 0.1]);
        assert!(RunConfig::try_parse_from(["spreadpc", "predict", "--bogus"]).is_err());
    }

    #[test]
    fn gate_is_a_validation_error() {
        let c = parse(&["predict", "--model", "perc", "--d", "3", "--L", "4"]);
        assert!(matches!(execute(&c), Err(Error::DimensionGate { .. })));
    }
}

use std::path::{Path, PathBuf};

use hankelx_core::io::{pattern_from_csv, read_signal};
use hankelx_core::recovery::{Problem, RecoveryReport};
use serde::{Deserialize, Serialize};

use super::gen::{GenMeta, META_FILE, OBSERVED_FILE, PATTERN_FILE, TRUTH_FILE};
use super::{trace_csv, Radius, Solver, SolverKnobs, TrialOutcome};
use crate::output::{ensure_dir, write_json};
use crate::{CliError, CliResult};

pub const SUMMARY_FILE: &str = "summary.json";
pub const TRACE_FILE: &str = "trace.csv";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RecoverConfig {
    /// Directory written by `gen`; supplies file paths, `r` and `alpha`.
    pub input: Option<PathBuf>,
    pub observed: Option<PathBuf>,
    pub pattern: Option<PathBuf>,
    /// Optional ground truth for error tracking.
    pub truth: Option<PathBuf>,
    pub r: Option<usize>,
    pub alpha: Option<f64>,
    pub solver: Solver,
    pub eta: f64,
    pub max_iters: usize,
    pub tol_residual: f64,
    pub tol_error: Option<f64>,
    pub incoherence: Radius,
    pub incoherence_factor: f64,
    pub seed: u64,
    pub threads: Option<usize>,
    pub out: PathBuf,
}

impl Default for RecoverConfig {
    fn default() -> Self {
        Self {
            input: None,
            observed: None,
            pattern: None,
            truth: None,
            r: None,
            alpha: None,
            solver: Solver::Hsnld,
            eta: 0.5,
            max_iters: 1000,
            tol_residual: 1e-5,
            tol_error: None,
            incoherence: Radius::default(),
            incoherence_factor: 1.5,
            seed: 0,
            threads: None,
            out: crate::default_out(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RecoverSummary {
    pub solver: Solver,
    pub n: usize,
    pub m: usize,
    pub r: usize,
    pub alpha: f64,
    #[serde(flatten)]
    pub outcome: TrialOutcome,
}

impl std::ops::Deref for RecoverSummary {
    type Target = TrialOutcome;
    fn deref(&self) -> &TrialOutcome {
        &self.outcome
    }
}

impl RecoverSummary {
    pub fn describe(&self) -> String {
        format!(
            "recover {}: success {}, err {}, residual {:.3e}, {} iterations, {:.3} s, {}",
            self.solver.name(),
            self.success,
            self.err.map(|e| format!("{e:.3e}")).unwrap_or_else(|| "n/a".into()),
            self.residual,
            self.iters,
            self.seconds,
            self.termination
        )
    }
}

#[derive(Debug, Clone)]
pub struct RecoverOutput {
    pub summary: RecoverSummary,
    pub report: RecoveryReport,
}

fn input_err(path: &Path, e: impl std::fmt::Display) -> CliError {
    CliError::Input(format!("{}: {e}", path.display()))
}

/// Runs one recovery from files and writes `summary.json` and `trace.csv`.
///
/// Without a ground truth, success means a tolerance was met.
pub fn run(cfg: &RecoverConfig) -> CliResult<RecoverOutput> {
    if let Some(dir) = &cfg.input {
        if !dir.is_dir() {
            return Err(input_err(dir, "not a directory"));
        }
    }
    let dir_file = |name: &str| cfg.input.as_ref().map(|d| d.join(name));
    let observed_path = cfg
        .observed
        .clone()
        .or_else(|| dir_file(OBSERVED_FILE))
        .ok_or_else(|| CliError::Config("set `input` or `observed`".into()))?;
    let pattern_path = cfg
        .pattern
        .clone()
        .or_else(|| dir_file(PATTERN_FILE))
        .ok_or_else(|| CliError::Config("set `input` or `pattern`".into()))?;
    let truth_path = cfg.truth.clone().or_else(|| dir_file(TRUTH_FILE).filter(|p| p.exists()));
    let meta: Option<GenMeta> = match dir_file(META_FILE).filter(|p| p.exists()) {
        Some(p) => {
            let text = std::fs::read_to_string(&p).map_err(|e| input_err(&p, e))?;
            Some(serde_json::from_str(&text).map_err(|e| input_err(&p, e))?)
        }
        None => None,
    };
    let r = cfg
        .r
        .or(meta.as_ref().map(|m| m.r))
        .ok_or_else(|| CliError::Config("rank `r` is required".into()))?;
    let alpha = cfg.alpha.or(meta.as_ref().map(|m| m.alpha)).unwrap_or(0.0);

    let knobs = SolverKnobs {
        eta: cfg.eta,
        max_iters: cfg.max_iters,
        tol_residual: cfg.tol_residual,
        tol_error: cfg.tol_error,
        incoherence: cfg.incoherence,
        incoherence_factor: cfg.incoherence_factor,
    };
    let config = knobs.config(r, alpha, cfg.seed)?;

    let observed = read_signal(&observed_path).map_err(|e| input_err(&observed_path, e))?;
    let text = std::fs::read_to_string(&pattern_path).map_err(|e| input_err(&pattern_path, e))?;
    let pattern = pattern_from_csv(&text).map_err(|e| input_err(&pattern_path, e))?;
    let truth = match &truth_path {
        Some(p) => Some(read_signal(p).map_err(|e| input_err(p, e))?),
        None => None,
    };
    let shape = observed.shape;
    if 2 * r > shape.n() {
        return Err(CliError::Config(format!("rank r = {r} exceeds n/2 for n = {}", shape.n())));
    }
    let m = pattern.m();
    let problem = Problem::new(observed.z, pattern, shape)
        .map_err(|e| CliError::Input(format!("{}: {e}", pattern_path.display())))?;
    if truth.as_ref().is_some_and(|t| t.shape != shape) {
        return Err(CliError::Input("ground truth and observations differ in shape".into()));
    }

    let report = cfg
        .solver
        .run(&problem, &config, truth.as_ref())
        .map_err(|e| CliError::Solver(e.to_string()))?;
    let mut outcome = TrialOutcome::from_report(&report);
    if truth.is_none() {
        outcome.success = report.termination.converged();
    }
    let summary = RecoverSummary { solver: cfg.solver, n: shape.n(), m, r, alpha, outcome };

    ensure_dir(&cfg.out)?;
    write_json(&cfg.out.join(SUMMARY_FILE), &summary)?;
    trace_csv(&report).write(&cfg.out.join(TRACE_FILE))?;
    Ok(RecoverOutput { summary, report })
}

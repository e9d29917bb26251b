//! Subcommands and the pieces they share.

pub mod converge;
pub mod doa;
pub mod gen;
pub mod phase;
pub mod recover;

use hankelx_core::hankel::{HankelShape, WeightedSignal};
use hankelx_core::recovery::{run_hsnld, run_plain_gd, Problem, RecoveryConfig, RecoveryReport};
use hankelx_core::sampling::{sample_pattern, Mode, ObservationPattern};
use hankelx_core::synth::{inject_outliers, spectral_signal, Corrupted, OutlierDomain, OutlierSpec};
use hankelx_core::seed;
use serde::{Deserialize, Serialize};

use crate::output::{Cell, Csv};
use crate::{CliError, CliResult};

/// Largest recovery error counted as a success.
pub const SUCCESS_ERROR: f64 = 1e-3;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Solver {
    Hsnld,
    Plaingd,
}

impl Solver {
    pub fn name(self) -> &'static str {
        match self {
            Solver::Hsnld => "hsnld",
            Solver::Plaingd => "plaingd",
        }
    }

    pub fn run(
        self,
        problem: &Problem,
        config: &RecoveryConfig,
        truth: Option<&WeightedSignal>,
    ) -> hankelx_core::Result<RecoveryReport> {
        match self {
            Solver::Hsnld => run_hsnld(problem, config, truth),
            Solver::Plaingd => run_plain_gd(problem, config, truth),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SampleMode {
    WithReplacement,
    WithoutReplacement,
}

impl From<SampleMode> for Mode {
    fn from(m: SampleMode) -> Mode {
        match m {
            SampleMode::WithReplacement => Mode::WithReplacement,
            SampleMode::WithoutReplacement => Mode::WithoutReplacement,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    Weighted,
    Raw,
}

impl From<Domain> for OutlierDomain {
    fn from(d: Domain) -> OutlierDomain {
        match d {
            Domain::Weighted => OutlierDomain::Weighted,
            Domain::Raw => OutlierDomain::Raw,
        }
    }
}

/// Incoherence radius: `"auto"` or an explicit number.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Radius {
    Fixed(f64),
    Named(RadiusName),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RadiusName {
    Auto,
    None,
}

impl Default for Radius {
    fn default() -> Self {
        Radius::Named(RadiusName::Auto)
    }
}

/// Solver knobs shared by every command that runs a recovery.
#[derive(Debug, Clone, PartialEq)]
pub struct SolverKnobs {
    pub eta: f64,
    pub max_iters: usize,
    pub tol_residual: f64,
    pub tol_error: Option<f64>,
    pub incoherence: Radius,
    pub incoherence_factor: f64,
}

impl SolverKnobs {
    pub fn config(&self, rank: usize, alpha: f64, seed: u64) -> CliResult<RecoveryConfig> {
        use hankelx_core::recovery::Incoherence;
        let mut cfg = RecoveryConfig::new(rank, alpha);
        cfg.eta = self.eta;
        cfg.max_iters = self.max_iters;
        cfg.tol_residual = self.tol_residual;
        cfg.tol_error = self.tol_error;
        cfg.seed = seed;
        cfg.incoherence = match self.incoherence {
            Radius::Named(RadiusName::Auto) => Incoherence::Auto { factor: self.incoherence_factor },
            Radius::Named(RadiusName::None) => Incoherence::Fixed(f64::INFINITY),
            Radius::Fixed(c) => Incoherence::Fixed(c),
        };
        cfg.validate().map_err(|e| CliError::Config(e.to_string()))?;
        Ok(cfg)
    }
}

/// Observation count for a sampling rate, at least one and at most `n`.
pub fn count_from_rate(p: f64, n: usize) -> CliResult<usize> {
    if !(p > 0.0 && p <= 1.0) {
        return Err(CliError::Config(format!("sampling rate p = {p} outside (0, 1]")));
    }
    Ok(((p * n as f64).round() as usize).clamp(1, n))
}

/// Draws the observed set, the full set when `m == n` without replacement.
pub fn draw_pattern(n: usize, m: usize, mode: Mode, seed: u64) -> hankelx_core::Result<ObservationPattern> {
    if m == n && mode == Mode::WithoutReplacement {
        Ok(ObservationPattern::full(n))
    } else {
        sample_pattern(n, m, mode, seed)
    }
}

/// A synthetic spectrally sparse instance.
#[derive(Debug, Clone)]
pub struct Instance {
    pub truth: WeightedSignal,
    pub pattern: ObservationPattern,
    pub corrupted: Corrupted,
}

impl Instance {
    pub fn problem(&self) -> hankelx_core::Result<Problem> {
        Problem::new(self.corrupted.f.clone(), self.pattern.clone(), self.truth.shape)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SpectralSetup {
    pub n: usize,
    pub r: usize,
    pub kappa: f64,
    pub m: usize,
    pub alpha: f64,
    pub mode: Mode,
    pub outlier_scale: f64,
    pub domain: OutlierDomain,
}

/// Builds an instance with signal, pattern and outliers on separate seed
/// streams of `instance_seed`.
pub fn spectral_instance(setup: &SpectralSetup, instance_seed: u64) -> hankelx_core::Result<Instance> {
    let (truth, _) = spectral_signal(setup.n, setup.r, setup.kappa, seed::stream(instance_seed, "signal"))?;
    let pattern = draw_pattern(setup.n, setup.m, setup.mode, seed::stream(instance_seed, "pattern"))?;
    let spec = OutlierSpec {
        alpha: setup.alpha,
        magnitude_scale: setup.outlier_scale,
        domain: setup.domain,
        seed: seed::stream(instance_seed, "outliers"),
    };
    let corrupted = inject_outliers(&truth, &pattern, spec)?;
    Ok(Instance { truth, pattern, corrupted })
}

/// Result of one recovery, with timing kept apart from the deterministic
/// fields.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TrialOutcome {
    pub success: bool,
    pub err: Option<f64>,
    pub iters: usize,
    pub seconds: f64,
    pub termination: String,
    pub residual: f64,
}

impl TrialOutcome {
    pub fn from_report(report: &RecoveryReport) -> Self {
        let err = report.final_error();
        Self {
            success: is_success(report),
            err,
            iters: report.iterations(),
            seconds: report.seconds(),
            termination: report.termination.label().to_string(),
            residual: report.final_residual(),
        }
    }

    pub fn failed() -> Self {
        Self {
            success: false,
            err: None,
            iters: 0,
            seconds: 0.0,
            termination: "failed".into(),
            residual: f64::NAN,
        }
    }
}

/// Stopped at a tolerance with recovery error at most [`SUCCESS_ERROR`].
pub fn is_success(report: &RecoveryReport) -> bool {
    report.termination.converged() && report.final_error().is_some_and(|e| e <= SUCCESS_ERROR)
}

/// `iter,residual,err,ms`, one row per trace entry.
pub fn trace_csv(report: &RecoveryReport) -> Csv {
    let mut csv = Csv::new(&["iter", "residual", "err", "ms"]);
    for t in &report.trace {
        csv.row(&[
            Cell::Int(t.iter as u64),
            Cell::Float(t.residual),
            Cell::OptFloat(t.error),
            Cell::Float(t.elapsed_ms),
        ]);
    }
    csv
}

pub(crate) fn shape_for(n: usize) -> CliResult<HankelShape> {
    HankelShape::square(n).map_err(|e| CliError::Config(e.to_string()))
}

pub(crate) fn check_rank(r: usize, n: usize) -> CliResult<()> {
    if r == 0 || 2 * r > n {
        return Err(CliError::Config(format!("rank r = {r} must lie in [1, n/2] for n = {n}")));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rate_to_count() {
        assert_eq!(count_from_rate(0.015, 4096).unwrap(), 61);
        assert_eq!(count_from_rate(1.0, 125).unwrap(), 125);
        assert_eq!(count_from_rate(1e-9, 10).unwrap(), 1);
        assert!(count_from_rate(0.0, 10).is_err());
        assert!(count_from_rate(1.5, 10).is_err());
    }

    #[test]
    fn rank_bounds() {
        assert!(check_rank(127, 255).is_ok());
        assert!(check_rank(128, 255).is_err());
        assert!(check_rank(0, 255).is_err());
    }

    #[test]
    fn radius_parses_names_and_numbers() {
        let r: Radius = serde_json::from_str("\"auto\"").unwrap();
        assert_eq!(r, Radius::Named(RadiusName::Auto));
        let r: Radius = serde_json::from_str("2.5").unwrap();
        assert_eq!(r, Radius::Fixed(2.5));
        assert!(serde_json::from_str::<Radius>("\"big\"").is_err());
    }
}

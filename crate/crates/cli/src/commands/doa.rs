use std::path::PathBuf;

use hankelx_core::recovery::RecoveryReport;
use hankelx_core::sampling::Mode;
use hankelx_core::seed;
use hankelx_core::synth::{doa_signal, inject_outliers, OutlierDomain, OutlierSpec};
use hankelx_core::C64;
use serde::{Deserialize, Serialize};

use super::{
    count_from_rate, draw_pattern, shape_for, trace_csv, Domain, Instance, Radius, SampleMode,
    SolverKnobs, TrialOutcome,
};
use crate::config::one_or_many;
use crate::output::{ensure_dir, write_json, Cell, Csv};
use crate::pool::map_ordered;
use crate::{CliError, CliResult};

pub const SUMMARY_FILE: &str = "summary.json";
pub const TRACE_FILE: &str = "trace.csv";
pub const TRIALS_FILE: &str = "trials.csv";

/// A uniform linear array snapshot with half-wavelength spacing.
#[derive(Debug, Clone, PartialEq)]
pub struct DoaSetup {
    pub n: usize,
    pub thetas: Vec<f64>,
    pub m: usize,
    pub alpha: f64,
    pub mode: Mode,
    pub outlier_scale: f64,
    pub domain: OutlierDomain,
}

/// Unit-gain array snapshot with pattern and outliers drawn from the
/// `pattern` and `outliers` streams of `instance_seed`.
pub fn doa_instance(setup: &DoaSetup, instance_seed: u64) -> hankelx_core::Result<Instance> {
    let shape = hankelx_core::hankel::HankelShape::square(setup.n)?;
    let gains = vec![C64::new(1.0, 0.0); setup.thetas.len()];
    let truth = doa_signal(setup.n, &setup.thetas, &gains, shape)?;
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

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DoaConfig {
    pub n: usize,
    /// Source angles in degrees.
    #[serde(deserialize_with = "one_or_many")]
    pub thetas: Vec<f64>,
    /// Fraction of active sensors; ignored when `m` is set.
    pub p: f64,
    pub m: Option<usize>,
    pub alpha: f64,
    /// Solver rank, defaults to the number of sources.
    pub r: Option<usize>,
    pub outlier_scale: f64,
    pub outlier_domain: Domain,
    pub mode: SampleMode,
    pub eta: f64,
    pub max_iters: usize,
    pub tol_residual: f64,
    pub tol_error: Option<f64>,
    pub incoherence: Radius,
    pub incoherence_factor: f64,
    /// Independent instances; trial `t` uses seed `seed + t`.
    pub trials: usize,
    pub seed: u64,
    pub threads: Option<usize>,
    pub out: PathBuf,
}

impl Default for DoaConfig {
    fn default() -> Self {
        Self {
            n: 4096,
            thetas: vec![87.0, 87.1, 87.3],
            p: 0.015,
            m: None,
            alpha: 0.1,
            r: None,
            outlier_scale: 1.0,
            outlier_domain: Domain::Raw,
            mode: SampleMode::WithoutReplacement,
            eta: 0.5,
            max_iters: 1000,
            tol_residual: 0.0,
            tol_error: Some(1e-5),
            incoherence: Radius::default(),
            incoherence_factor: 1.5,
            trials: 1,
            seed: 0,
            threads: None,
            out: crate::default_out(),
        }
    }
}

impl DoaConfig {
    fn knobs(&self) -> SolverKnobs {
        SolverKnobs {
            eta: self.eta,
            max_iters: self.max_iters,
            tol_residual: self.tol_residual,
            tol_error: self.tol_error,
            incoherence: self.incoherence,
            incoherence_factor: self.incoherence_factor,
        }
    }

    pub fn setup(&self) -> CliResult<DoaSetup> {
        if self.thetas.is_empty() {
            return Err(CliError::Config("thetas must name at least one source".into()));
        }
        shape_for(self.n)?;
        let m = match self.m {
            Some(m) if m == 0 || m > self.n => {
                return Err(CliError::Config(format!("m = {m} outside [1, {}]", self.n)))
            }
            Some(m) => m,
            None => count_from_rate(self.p, self.n)?,
        };
        Ok(DoaSetup {
            n: self.n,
            thetas: self.thetas.clone(),
            m,
            alpha: self.alpha,
            mode: self.mode.into(),
            outlier_scale: self.outlier_scale,
            domain: self.outlier_domain.into(),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DoaTrial {
    pub trial: usize,
    pub seed: u64,
    #[serde(flatten)]
    pub outcome: TrialOutcome,
}

#[derive(Debug, Clone, Serialize)]
pub struct DoaSummary {
    pub config: DoaConfig,
    pub m: usize,
    pub r: usize,
    #[serde(flatten)]
    pub outcome: TrialOutcome,
    pub successes: usize,
    pub trials: Vec<DoaTrial>,
}

#[derive(Debug, Clone)]
pub struct DoaOutput {
    pub summary: DoaSummary,
    /// Report of the first trial, absent if it failed before iterating.
    pub report: Option<RecoveryReport>,
}

impl DoaOutput {
    pub fn first(&self) -> &TrialOutcome {
        &self.summary.outcome
    }

    pub fn describe(&self) -> String {
        let o = self.first();
        let mut s = format!(
            "doa: success {}, err {}, {} iterations, {:.3} s, {}",
            o.success,
            o.err.map(|e| format!("{e:.3e}")).unwrap_or_else(|| "n/a".into()),
            o.iters,
            o.seconds,
            o.termination
        );
        if self.summary.trials.len() > 1 {
            s.push_str(&format!("; {}/{} trials succeeded", self.summary.successes, self.summary.trials.len()));
        }
        s
    }
}

/// Runs the array scenario and writes `summary.json`, `trace.csv` for the
/// first trial and `trials.csv` when more than one trial is requested.
pub fn run(cfg: &DoaConfig, threads: usize) -> CliResult<DoaOutput> {
    let setup = cfg.setup()?;
    let r = cfg.r.unwrap_or(cfg.thetas.len());
    let knobs = cfg.knobs();
    knobs.config(r, cfg.alpha, cfg.seed)?;
    if cfg.trials == 0 {
        return Err(CliError::Config("trials must be positive".into()));
    }

    let trials: Vec<usize> = (0..cfg.trials).collect();
    let runs = map_ordered(threads, &trials, |&t| {
        let instance_seed = cfg.seed.wrapping_add(t as u64);
        let report = (|| {
            let instance = doa_instance(&setup, instance_seed)?;
            let problem = instance.problem()?;
            let config = knobs.config(r, cfg.alpha, instance_seed).expect("validated above");
            hankelx_core::recovery::run_hsnld(&problem, &config, Some(&instance.truth))
        })();
        let outcome = match &report {
            Ok(rep) => TrialOutcome::from_report(rep),
            Err(_) => TrialOutcome::failed(),
        };
        (DoaTrial { trial: t, seed: instance_seed, outcome }, report.ok())
    })?;

    let mut trials = Vec::with_capacity(runs.len());
    let mut first = None;
    for (i, (trial, report)) in runs.into_iter().enumerate() {
        if i == 0 {
            first = report;
        }
        trials.push(trial);
    }
    let summary = DoaSummary {
        config: cfg.clone(),
        m: setup.m,
        r,
        outcome: trials[0].outcome.clone(),
        successes: trials.iter().filter(|t| t.outcome.success).count(),
        trials,
    };

    ensure_dir(&cfg.out)?;
    write_json(&cfg.out.join(SUMMARY_FILE), &summary)?;
    if let Some(rep) = &first {
        trace_csv(rep).write(&cfg.out.join(TRACE_FILE))?;
    }
    if cfg.trials > 1 {
        let mut csv = Csv::new(&["trial", "seed", "success", "err", "iters", "seconds", "termination"]);
        for t in &summary.trials {
            let o = &t.outcome;
            csv.row(&[
                Cell::Int(t.trial as u64),
                Cell::Int(t.seed),
                Cell::Text(if o.success { "true" } else { "false" }),
                Cell::OptFloat(o.err),
                Cell::Int(o.iters as u64),
                Cell::Float(o.seconds),
                Cell::Text(&o.termination),
            ]);
        }
        csv.write(&cfg.out.join(TRIALS_FILE))?;
    }
    Ok(DoaOutput { summary, report: first })
}

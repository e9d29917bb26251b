use std::path::PathBuf;

use hankelx_core::recovery::TraceEntry;
use hankelx_core::seed;
use serde::{Deserialize, Serialize};

use super::{
    check_rank, count_from_rate, spectral_instance, Domain, Radius, SampleMode, Solver, SolverKnobs,
    SpectralSetup, TrialOutcome,
};
use crate::config::one_or_many;
use crate::output::{ensure_dir, Cell, Csv};
use crate::pool::map_ordered;
use crate::{CliError, CliResult};

pub const CURVES_FILE: &str = "converge.csv";
pub const TRIALS_FILE: &str = "converge_trials.csv";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ConvergeConfig {
    pub n: usize,
    pub r: usize,
    /// Sampling rate; ignored when `m` is set.
    pub p: f64,
    pub m: Option<usize>,
    pub alpha: f64,
    #[serde(deserialize_with = "one_or_many")]
    pub kappas: Vec<f64>,
    #[serde(deserialize_with = "one_or_many")]
    pub solvers: Vec<Solver>,
    pub trials: usize,
    pub mode: SampleMode,
    pub outlier_scale: f64,
    pub outlier_domain: Domain,
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

impl Default for ConvergeConfig {
    fn default() -> Self {
        Self {
            n: 16383,
            r: 5,
            p: 0.8,
            m: None,
            alpha: 0.05,
            kappas: vec![1.0, 20.0, 2000.0],
            solvers: vec![Solver::Hsnld, Solver::Plaingd],
            trials: 3,
            mode: SampleMode::WithoutReplacement,
            outlier_scale: 10.0,
            outlier_domain: Domain::Weighted,
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

/// One solver run on one instance.
#[derive(Debug, Clone, PartialEq)]
pub struct ConvergeRun {
    pub solver: Solver,
    pub kappa: f64,
    pub trial: usize,
    pub seed: u64,
    pub outcome: TrialOutcome,
    /// Empty when the run failed before iterating.
    pub trace: Vec<TraceEntry>,
}

#[derive(Debug, Clone)]
pub struct ConvergeOutput {
    pub runs: Vec<ConvergeRun>,
    pub curves: Csv,
    pub dir: PathBuf,
}

impl ConvergeOutput {
    /// Runs for one (solver, kappa) cell in trial order.
    pub fn cell(&self, solver: Solver, kappa: f64) -> Vec<&ConvergeRun> {
        self.runs.iter().filter(|r| r.solver == solver && r.kappa == kappa).collect()
    }

    pub fn describe(&self) -> String {
        let mut lines = vec![format!("converge: {} runs written to {}", self.runs.len(), self.dir.display())];
        let mut seen: Vec<(Solver, f64)> = Vec::new();
        for r in &self.runs {
            if !seen.contains(&(r.solver, r.kappa)) {
                seen.push((r.solver, r.kappa));
            }
        }
        for (solver, kappa) in seen {
            let cell = self.cell(solver, kappa);
            let ok = cell.iter().filter(|r| r.outcome.success).count();
            let mean_iters = cell.iter().map(|r| r.outcome.iters as f64).sum::<f64>() / cell.len() as f64;
            lines.push(format!(
                "  {:<8} kappa {:<8} {}/{} succeeded, mean iterations {:.1}",
                solver.name(),
                kappa,
                ok,
                cell.len(),
                mean_iters
            ));
        }
        lines.join("\n")
    }
}

/// Instance seed for trial `t` at condition number `kappa`; shared by all
/// solvers so they see the same data.
pub fn instance_seed(global: u64, kappa: f64, t: usize) -> u64 {
    seed::derive(global, &[kappa.to_bits(), t as u64])
}

/// Runs every (solver, kappa, trial) and writes the averaged curves and the
/// per-run outcomes.
///
/// `converge.csv` averages each iteration over the trials still running at
/// that iteration; `trials` counts them.
pub fn run(cfg: &ConvergeConfig, threads: usize) -> CliResult<ConvergeOutput> {
    if cfg.kappas.is_empty() {
        return Err(CliError::Config("kappas must list at least one condition number".into()));
    }
    if cfg.solvers.is_empty() {
        return Err(CliError::Config("solvers must list at least one solver".into()));
    }
    if cfg.trials == 0 {
        return Err(CliError::Config("trials must be positive".into()));
    }
    if let Some(k) = cfg.kappas.iter().find(|k| !(**k >= 1.0 && k.is_finite())) {
        return Err(CliError::Config(format!("kappa = {k} must be at least 1")));
    }
    check_rank(cfg.r, cfg.n)?;
    let m = match cfg.m {
        Some(m) if m == 0 || m > cfg.n => return Err(CliError::Config(format!("m = {m} outside [1, {}]", cfg.n))),
        Some(m) => m,
        None => count_from_rate(cfg.p, cfg.n)?,
    };
    let knobs = SolverKnobs {
        eta: cfg.eta,
        max_iters: cfg.max_iters,
        tol_residual: cfg.tol_residual,
        tol_error: cfg.tol_error,
        incoherence: cfg.incoherence,
        incoherence_factor: cfg.incoherence_factor,
    };
    knobs.config(cfg.r, cfg.alpha, cfg.seed)?;

    let mut tasks = Vec::new();
    for &solver in &cfg.solvers {
        for &kappa in &cfg.kappas {
            for t in 0..cfg.trials {
                tasks.push((solver, kappa, t));
            }
        }
    }
    let runs = map_ordered(threads, &tasks, |&(solver, kappa, t)| {
        let seed = instance_seed(cfg.seed, kappa, t);
        let setup = SpectralSetup {
            n: cfg.n,
            r: cfg.r,
            kappa,
            m,
            alpha: cfg.alpha,
            mode: cfg.mode.into(),
            outlier_scale: cfg.outlier_scale,
            domain: cfg.outlier_domain.into(),
        };
        let report = (|| {
            let instance = spectral_instance(&setup, seed)?;
            let config = knobs.config(cfg.r, cfg.alpha, seed).expect("validated above");
            solver.run(&instance.problem()?, &config, Some(&instance.truth))
        })();
        match report {
            Ok(rep) => ConvergeRun {
                solver,
                kappa,
                trial: t,
                seed,
                outcome: TrialOutcome::from_report(&rep),
                trace: rep.trace,
            },
            Err(_) => ConvergeRun { solver, kappa, trial: t, seed, outcome: TrialOutcome::failed(), trace: Vec::new() },
        }
    })?;

    let curves = curves_csv(&runs, cfg);
    let mut per_run =
        Csv::new(&["solver", "kappa", "trial", "seed", "success", "err", "iters", "seconds", "termination"]);
    for r in &runs {
        per_run.row(&[
            Cell::Text(r.solver.name()),
            Cell::Float(r.kappa),
            Cell::Int(r.trial as u64),
            Cell::Int(r.seed),
            Cell::Text(if r.outcome.success { "true" } else { "false" }),
            Cell::OptFloat(r.outcome.err),
            Cell::Int(r.outcome.iters as u64),
            Cell::Float(r.outcome.seconds),
            Cell::Text(&r.outcome.termination),
        ]);
    }
    ensure_dir(&cfg.out)?;
    curves.write(&cfg.out.join(CURVES_FILE))?;
    per_run.write(&cfg.out.join(TRIALS_FILE))?;
    Ok(ConvergeOutput { runs, curves, dir: cfg.out.clone() })
}

fn curves_csv(runs: &[ConvergeRun], cfg: &ConvergeConfig) -> Csv {
    let mut csv = Csv::new(&["solver", "kappa", "iter", "trials", "err", "residual", "ms"]);
    for &solver in &cfg.solvers {
        for &kappa in &cfg.kappas {
            let cell: Vec<&ConvergeRun> =
                runs.iter().filter(|r| r.solver == solver && r.kappa == kappa).collect();
            let longest = cell.iter().map(|r| r.trace.len()).max().unwrap_or(0);
            for k in 0..longest {
                let entries: Vec<&TraceEntry> = cell.iter().filter_map(|r| r.trace.get(k)).collect();
                let count = entries.len() as f64;
                let errs: Vec<f64> = entries.iter().filter_map(|e| e.error).collect();
                let err = (!errs.is_empty()).then(|| errs.iter().sum::<f64>() / errs.len() as f64);
                csv.row(&[
                    Cell::Text(solver.name()),
                    Cell::Float(kappa),
                    Cell::Int(k as u64),
                    Cell::Int(entries.len() as u64),
                    Cell::OptFloat(err),
                    Cell::Float(entries.iter().map(|e| e.residual).sum::<f64>() / count),
                    Cell::Float(entries.iter().map(|e| e.elapsed_ms).sum::<f64>() / count),
                ]);
            }
        }
    }
    csv
}

use std::path::PathBuf;

use hankelx_core::seed;
use serde::{Deserialize, Serialize};

use super::{
    is_success, spectral_instance, Domain, Radius, SampleMode, Solver, SolverKnobs, SpectralSetup,
};
use crate::config::one_or_many;
use crate::output::{ensure_dir, write_json, Cell, Csv};
use crate::pool::map_ordered;
use crate::{CliError, CliResult};

pub const GRID_FILE: &str = "phase.csv";
pub const AXES_FILE: &str = "phase.json";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    M,
    Alpha,
    R,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PhaseConfig {
    pub n: usize,
    pub kappa: f64,
    /// Fixed values for whichever parameter is not on an axis.
    pub m: usize,
    pub alpha: f64,
    pub r: usize,
    pub x: Axis,
    pub y: Axis,
    #[serde(deserialize_with = "one_or_many")]
    pub ms: Vec<usize>,
    #[serde(deserialize_with = "one_or_many")]
    pub alphas: Vec<f64>,
    #[serde(deserialize_with = "one_or_many")]
    pub ranks: Vec<usize>,
    pub trials: usize,
    pub solver: Solver,
    pub mode: SampleMode,
    pub outlier_scale: f64,
    pub outlier_domain: Domain,
    pub eta: f64,
    pub max_iters: usize,
    pub tol_residual: f64,
    pub incoherence: Radius,
    pub incoherence_factor: f64,
    pub seed: u64,
    #[serde(skip_serializing)]
    pub threads: Option<usize>,
    #[serde(skip_serializing)]
    pub out: PathBuf,
}

impl Default for PhaseConfig {
    fn default() -> Self {
        let mut ms: Vec<usize> = (30..=120).step_by(10).collect();
        ms.push(125);
        Self {
            n: 125,
            kappa: 10.0,
            m: 125,
            alpha: 0.1,
            r: 10,
            x: Axis::M,
            y: Axis::Alpha,
            ms,
            alphas: vec![0.0, 0.05, 0.1, 0.15, 0.2, 0.25, 0.3],
            ranks: (1..=8).map(|i| 2 * i).collect(),
            trials: 20,
            solver: Solver::Hsnld,
            mode: SampleMode::WithoutReplacement,
            outlier_scale: 10.0,
            outlier_domain: Domain::Weighted,
            eta: 0.5,
            max_iters: 1000,
            tol_residual: 1e-5,
            incoherence: Radius::default(),
            incoherence_factor: 1.5,
            seed: 0,
            threads: None,
            out: crate::default_out(),
        }
    }
}

impl PhaseConfig {
    fn axis_values(&self, axis: Axis) -> Vec<f64> {
        match axis {
            Axis::M => self.ms.iter().map(|&m| m as f64).collect(),
            Axis::Alpha => self.alphas.clone(),
            Axis::R => self.ranks.iter().map(|&r| r as f64).collect(),
        }
    }

    /// `(m, alpha, r)` at grid point `(x, y)`.
    fn params(&self, x: f64, y: f64) -> (usize, f64, usize) {
        let (mut m, mut alpha, mut r) = (self.m, self.alpha, self.r);
        for (axis, v) in [(self.x, x), (self.y, y)] {
            match axis {
                Axis::M => m = v as usize,
                Axis::Alpha => alpha = v,
                Axis::R => r = v as usize,
            }
        }
        (m, alpha, r)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhaseCell {
    pub x: f64,
    pub y: f64,
    pub successes: usize,
    pub trials: usize,
}

#[derive(Debug, Clone)]
pub struct PhaseOutput {
    pub x_values: Vec<f64>,
    pub y_values: Vec<f64>,
    /// Row-major in `x`, then `y`.
    pub cells: Vec<PhaseCell>,
    pub csv: Csv,
    pub dir: PathBuf,
}

impl PhaseOutput {
    pub fn cell(&self, xi: usize, yi: usize) -> &PhaseCell {
        &self.cells[xi * self.y_values.len() + yi]
    }

    pub fn describe(&self) -> String {
        let total: usize = self.cells.iter().map(|c| c.successes).sum();
        let trials: usize = self.cells.iter().map(|c| c.trials).sum();
        format!(
            "phase: {} x {} cells, {total}/{trials} successful trials, written to {}",
            self.x_values.len(),
            self.y_values.len(),
            self.dir.join(GRID_FILE).display()
        )
    }
}

/// Seed of trial `t` at grid point `(x, y)`.
pub fn trial_seed(global: u64, x: f64, y: f64, t: usize) -> u64 {
    seed::derive(global, &[x.to_bits(), y.to_bits(), t as u64])
}

/// Runs `trials` recoveries per grid cell and writes `x,y,successes,trials`.
///
/// Trials that cannot be set up or fail numerically count as failures.
pub fn run(cfg: &PhaseConfig, threads: usize) -> CliResult<PhaseOutput> {
    if cfg.x == cfg.y {
        return Err(CliError::Config("x and y must be different axes".into()));
    }
    if cfg.trials == 0 {
        return Err(CliError::Config("trials must be positive".into()));
    }
    let x_values = cfg.axis_values(cfg.x);
    let y_values = cfg.axis_values(cfg.y);
    if x_values.is_empty() || y_values.is_empty() {
        return Err(CliError::Config("grid axes must be nonempty".into()));
    }
    if !(cfg.kappa >= 1.0 && cfg.kappa.is_finite()) {
        return Err(CliError::Config(format!("kappa = {} must be at least 1", cfg.kappa)));
    }
    let knobs = SolverKnobs {
        eta: cfg.eta,
        max_iters: cfg.max_iters,
        tol_residual: cfg.tol_residual,
        tol_error: None,
        incoherence: cfg.incoherence,
        incoherence_factor: cfg.incoherence_factor,
    };
    knobs.config(1, 0.0, cfg.seed)?;

    let mut tasks = Vec::with_capacity(x_values.len() * y_values.len() * cfg.trials);
    for &x in &x_values {
        for &y in &y_values {
            for t in 0..cfg.trials {
                tasks.push((x, y, t));
            }
        }
    }
    let successes = map_ordered(threads, &tasks, |&(x, y, t)| {
        let seed = trial_seed(cfg.seed, x, y, t);
        let (m, alpha, r) = cfg.params(x, y);
        let setup = SpectralSetup {
            n: cfg.n,
            r,
            kappa: cfg.kappa,
            m,
            alpha,
            mode: cfg.mode.into(),
            outlier_scale: cfg.outlier_scale,
            domain: cfg.outlier_domain.into(),
        };
        let report = (|| {
            let instance = spectral_instance(&setup, seed)?;
            let config = knobs
                .config(r, alpha, seed)
                .map_err(|e| hankelx_core::Error::InvalidArgument(e.to_string()))?;
            cfg.solver.run(&instance.problem()?, &config, Some(&instance.truth))
        })();
        report.is_ok_and(|rep| is_success(&rep))
    })?;

    let mut cells = Vec::with_capacity(x_values.len() * y_values.len());
    let mut csv = Csv::new(&["x", "y", "successes", "trials"]);
    for (c, chunk) in successes.chunks(cfg.trials).enumerate() {
        let (x, y) = (x_values[c / y_values.len()], y_values[c % y_values.len()]);
        let cell = PhaseCell { x, y, successes: chunk.iter().filter(|&&s| s).count(), trials: cfg.trials };
        csv.row(&[
            Cell::Float(x),
            Cell::Float(y),
            Cell::Int(cell.successes as u64),
            Cell::Int(cell.trials as u64),
        ]);
        cells.push(cell);
    }
    ensure_dir(&cfg.out)?;
    csv.write(&cfg.out.join(GRID_FILE))?;
    write_json(&cfg.out.join(AXES_FILE), cfg)?;
    Ok(PhaseOutput { x_values, y_values, cells, csv, dir: cfg.out.clone() })
}

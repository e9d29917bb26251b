use crate::error::{Error, Result};

/// Outlier-count inflation `gamma_k` used by the thresholding step.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum GammaSchedule {
    /// `base + amplitude * ratio^k`.
    Geometric { base: f64, amplitude: f64, ratio: f64 },
    Constant(f64),
}

impl Default for GammaSchedule {
    fn default() -> Self {
        GammaSchedule::Geometric { base: 1.05, amplitude: 0.45, ratio: 0.95 }
    }
}

impl GammaSchedule {
    pub fn gamma(&self, k: usize) -> f64 {
        match *self {
            GammaSchedule::Geometric { base, amplitude, ratio } => {
                base + amplitude * ratio.powi(k.min(i32::MAX as usize) as i32)
            }
            GammaSchedule::Constant(g) => g,
        }
    }

    fn validate(&self) -> Result<()> {
        let ok = match *self {
            GammaSchedule::Geometric { base, amplitude, ratio } => {
                base > 1.0 && amplitude >= 0.0 && (0.0..=1.0).contains(&ratio)
            }
            GammaSchedule::Constant(g) => g > 1.0,
        };
        if !ok {
            return Err(Error::InvalidArgument(format!("gamma schedule {self:?} must stay above 1")));
        }
        Ok(())
    }
}

/// Radius `C` of the row-norm projection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Incoherence {
    /// `C = factor * sigma_1 * max(||U_0||_{2,inf}, ||V_0||_{2,inf})`, from
    /// the spectral initialization.
    Auto { factor: f64 },
    /// Explicit radius; `f64::INFINITY` disables the projection.
    Fixed(f64),
}

impl Default for Incoherence {
    fn default() -> Self {
        Incoherence::Auto { factor: 1.5 }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RecoveryConfig {
    pub rank: usize,
    /// Upper bound on the fraction of corrupted observations.
    pub alpha: f64,
    pub eta: f64,
    pub gamma: GammaSchedule,
    pub incoherence: Incoherence,
    pub max_iters: usize,
    /// Stop once `||Pi(z + s - f)|| / ||Pi f||` falls to this level.
    pub tol_residual: f64,
    /// Stop once `||z_k - z_{k-1}|| / ||z_k||` falls to this level.
    pub tol_stagnation: f64,
    /// Stop once the error against a supplied ground truth reaches this level.
    pub tol_error: Option<f64>,
    pub seed: u64,
    pub svd_oversample: Option<usize>,
    pub svd_power_iters: usize,
    /// Draw a fresh bootstrap of the observed set every iteration.
    pub resample: bool,
}

impl RecoveryConfig {
    pub fn new(rank: usize, alpha: f64) -> Self {
        Self {
            rank,
            alpha,
            eta: 0.5,
            gamma: GammaSchedule::default(),
            incoherence: Incoherence::default(),
            max_iters: 1000,
            tol_residual: 1e-5,
            tol_stagnation: 1e-10,
            tol_error: None,
            seed: 0,
            svd_oversample: None,
            svd_power_iters: 3,
            resample: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if self.rank == 0 {
            return bad("rank must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.alpha) {
            return bad(format!("alpha = {} outside [0, 1]", self.alpha));
        }
        if !(self.eta >= 0.0 && self.eta <= 1.0) {
            return bad(format!("eta = {} outside [0, 1]", self.eta));
        }
        self.gamma.validate()?;
        match self.incoherence {
            Incoherence::Auto { factor } if !(factor > 0.0) => {
                return bad(format!("incoherence factor {factor} must be positive"))
            }
            Incoherence::Fixed(c) if !(c > 0.0) => {
                return bad(format!("incoherence radius {c} must be positive"))
            }
            _ => {}
        }
        for (name, v) in [("tol_residual", self.tol_residual), ("tol_stagnation", self.tol_stagnation)] {
            if !(v >= 0.0) {
                return bad(format!("{name} = {v} must be nonnegative"));
            }
        }
        if let Some(t) = self.tol_error {
            if !(t >= 0.0) {
                return bad(format!("tol_error = {t} must be nonnegative"));
            }
        }
        Ok(())
    }
}

use std::time::Instant;

use num_complex::Complex64 as C64;
use rand::Rng;

use super::config::{Incoherence, RecoveryConfig};
use crate::error::{Error, Result};
use crate::hankel::{norm2, HankelOps, HankelShape, WeightedSignal};
use crate::linalg::{inverse_gram, psd_sqrt, truncated_svd, ComplexMatrix, SvdOptions};
use crate::sampling::{
    project_obs, sparsify_residual, sparsify_residual_weighted, sparsity_level, Mode,
    ObservationPattern, SparseEstimate,
};
use crate::seed;

/// Low-rank factors of `G z = L R*`.
#[derive(Debug, Clone, PartialEq)]
pub struct Factors {
    pub l: ComplexMatrix,
    pub r: ComplexMatrix,
}

impl Factors {
    pub fn rank(&self) -> usize {
        self.l.cols()
    }
}

/// Observed data together with the operators needed to fit it.
#[derive(Debug, Clone)]
pub struct Problem {
    f: Vec<C64>,
    pattern: ObservationPattern,
    ops: HankelOps,
    observed_norm: f64,
}

impl Problem {
    /// `f` holds weighted observations; entries off the pattern are ignored.
    pub fn new(f: Vec<C64>, pattern: ObservationPattern, shape: HankelShape) -> Result<Self> {
        if f.len() != shape.n() || pattern.n() != shape.n() {
            return Err(Error::DimensionMismatch(format!(
                "observations of length {} and pattern over {} for n = {}",
                f.len(),
                pattern.n(),
                shape.n()
            )));
        }
        let observed_norm = norm2(&project_obs(&f, &pattern)?);
        Ok(Self { f, pattern, ops: HankelOps::new(shape), observed_norm })
    }

    pub fn shape(&self) -> HankelShape {
        self.ops.shape()
    }

    pub fn pattern(&self) -> &ObservationPattern {
        &self.pattern
    }

    pub fn observations(&self) -> &[C64] {
        &self.f
    }

    pub fn ops(&self) -> &HankelOps {
        &self.ops
    }

    /// `||Pi(z + s - f)|| / ||Pi f||`.
    pub fn relative_residual(&self, z: &[C64], s: &[C64]) -> f64 {
        let mut acc = 0.0;
        for (&i, &c) in self.pattern.distinct().iter().zip(self.pattern.multiplicity()) {
            acc += ((z[i] + s[i] - self.f[i]) * c as f64).norm_sqr();
        }
        if self.observed_norm == 0.0 {
            if acc == 0.0 {
                0.0
            } else {
                f64::INFINITY
            }
        } else {
            acc.sqrt() / self.observed_norm
        }
    }
}

/// `||z_est - z_true|| / ||z_true||`, equal to the Frobenius error of the
/// Hankel matrices.
pub fn recovery_error(z_est: &[C64], z_true: &[C64]) -> Result<f64> {
    if z_est.len() != z_true.len() {
        return Err(Error::DimensionMismatch(format!(
            "estimate of length {} against truth of length {}",
            z_est.len(),
            z_true.len()
        )));
    }
    let denom = norm2(z_true);
    if denom == 0.0 {
        return Err(Error::ZeroGroundTruth);
    }
    let num: f64 = z_est.iter().zip(z_true).map(|(a, b)| (a - b).norm_sqr()).sum();
    Ok(num.sqrt() / denom)
}

/// `P_C`: shrinks row `i` of `L` so that `||L_i (R*R)^{1/2}|| <= C`, and
/// likewise for `R`. Both scalings use the Grams of the inputs.
pub fn project_incoherence(l: &ComplexMatrix, r: &ComplexMatrix, c: f64) -> Result<Factors> {
    if l.cols() != r.cols() {
        return Err(Error::DimensionMismatch(format!(
            "factors of rank {} and {}",
            l.cols(),
            r.cols()
        )));
    }
    if c.is_infinite() {
        return Ok(Factors { l: l.clone(), r: r.clone() });
    }
    let shrink = |norms: Vec<f64>| -> Vec<f64> {
        norms.into_iter().map(|x| if x > c { c / x } else { 1.0 }).collect()
    };
    let l_scale = shrink(l.matmul(&psd_sqrt(&r.gram())?)?.row_norms());
    let r_scale = shrink(r.matmul(&psd_sqrt(&l.gram())?)?.row_norms());
    let mut l = l.clone();
    let mut r = r.clone();
    l.scale_rows(&l_scale);
    r.scale_rows(&r_scale);
    Ok(Factors { l, r })
}

/// `max(||L R*||_{2,inf}, ||R L*||_{2,inf})`.
pub fn incoherence_level(factors: &Factors) -> Result<f64> {
    let l = factors.l.matmul(&psd_sqrt(&factors.r.gram())?)?.max_row_norm();
    let r = factors.r.matmul(&psd_sqrt(&factors.l.gram())?)?.max_row_norm();
    Ok(l.max(r))
}

#[derive(Debug, Clone)]
pub struct Initialization {
    pub factors: Factors,
    pub s0: SparseEstimate,
    /// Leading singular value of the initialization matrix.
    pub sigma_1: f64,
    /// Resolved projection radius `C`.
    pub radius: f64,
}

/// Rank-`r` truncated SVD of `(1/p) G(Pi f - s_0)` with
/// `s_0 = W^-1 Gamma(W Pi f)`, followed by `P_C`.
pub fn spectral_init(problem: &Problem, config: &RecoveryConfig) -> Result<Initialization> {
    let shape = problem.shape();
    let r = config.rank;
    if r > shape.n1().min(shape.n2()) {
        return Err(Error::InvalidArgument(format!(
            "rank {r} exceeds the {}x{} Hankel matrix",
            shape.n1(),
            shape.n2()
        )));
    }
    let pattern = &problem.pattern;
    let n = shape.n();
    let zeros = vec![C64::new(0.0, 0.0); n];
    let k0 = sparsity_level(1.0, config.alpha, pattern.m(), n);
    let s0 = sparsify_residual_weighted(
        &problem.f,
        &zeros,
        pattern,
        k0,
        problem.ops.sqrt_weights(),
    )?;
    let inv_p = 1.0 / pattern.p();
    let w: Vec<C64> = project_obs(&problem.f, pattern)?
        .iter()
        .zip(&s0.s)
        .map(|(f, s)| (f - s) * inv_p)
        .collect();

    let mut opts = SvdOptions::for_rank(r, seed::stream(config.seed, "svd"));
    if let Some(o) = config.svd_oversample {
        opts.oversample = o;
    }
    opts.power_iters = config.svd_power_iters;
    let svd = truncated_svd(&problem.ops.operator(&w)?, r, opts)?;

    let root: Vec<f64> = svd.s.iter().map(|s| s.sqrt()).collect();
    let mut l = svd.u.clone();
    let mut rr = svd.v.clone();
    l.scale_columns(&root);
    rr.scale_columns(&root);
    let sigma_1 = svd.s[0];
    let radius = match config.incoherence {
        Incoherence::Auto { factor } => {
            factor * sigma_1 * svd.u.max_row_norm().max(svd.v.max_row_norm())
        }
        Incoherence::Fixed(c) => c,
    };
    let factors = project_incoherence(&l, &rr, radius)?;
    Ok(Initialization { factors, s0, sigma_1, radius })
}

/// One iterate together with the quantities derived from it.
#[derive(Debug, Clone)]
pub struct IterateState {
    pub factors: Factors,
    /// `G*(L R*)` of the current factors.
    pub z: Vec<C64>,
    /// `Gamma_k(Pi(f - z))` with `k = ceil(gamma_iter alpha m)`.
    pub s: SparseEstimate,
    pub iter: usize,
}

impl IterateState {
    pub fn new(
        problem: &Problem,
        factors: Factors,
        iter: usize,
        config: &RecoveryConfig,
    ) -> Result<Self> {
        let z = problem.ops.gadjoint_outer(&factors.l, &factors.r)?;
        let s = sparsify(problem, &problem.pattern, &z, iter, config)?;
        Ok(Self { factors, z, s, iter })
    }
}

fn sparsify(
    problem: &Problem,
    pattern: &ObservationPattern,
    z: &[C64],
    iter: usize,
    config: &RecoveryConfig,
) -> Result<SparseEstimate> {
    let k = sparsity_level(config.gamma.gamma(iter), config.alpha, pattern.m(), z.len());
    sparsify_residual(&problem.f, z, pattern, k)
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Update {
    /// Gradients right-multiplied by the inverse factor Grams.
    Newton,
    /// Raw gradients with a fixed step.
    Plain { step: f64 },
}

/// Bootstrap of the observed indices for one iteration.
fn resampled_pattern(pattern: &ObservationPattern, seed: u64) -> Result<ObservationPattern> {
    let distinct = pattern.distinct();
    let mut rng = seed::rng(seed);
    let indices = (0..pattern.m()).map(|_| distinct[rng.random_range(0..distinct.len())]).collect();
    ObservationPattern::new(pattern.n(), indices, Mode::WithReplacement)
}

fn descent(
    state: &IterateState,
    problem: &Problem,
    config: &RecoveryConfig,
    radius: f64,
    update: Update,
) -> Result<IterateState> {
    let Factors { l, r } = &state.factors;
    let resampled;
    let (pattern, s) = if config.resample {
        let seed = seed::derive(seed::stream(config.seed, "resample"), &[state.iter as u64]);
        resampled = resampled_pattern(&problem.pattern, seed)?;
        let s = sparsify(problem, &resampled, &state.z, state.iter, config)?;
        (&resampled, s)
    } else {
        (&problem.pattern, state.s.clone())
    };

    // d = (1/p) Pi(z + s - f) - z
    let inv_p = 1.0 / pattern.p();
    let mut d: Vec<C64> = state.z.iter().map(|z| -z).collect();
    for (&i, &c) in pattern.distinct().iter().zip(pattern.multiplicity()) {
        d[i] += (state.z[i] + s.s[i] - problem.f[i]) * (c as f64 * inv_p);
    }
    let spec = problem.ops.spectrum(&d)?;
    let gd_r = problem.ops.gmul_right(&spec, r)?;
    let gd_l = problem.ops.gmul_right_adjoint(&spec, l)?;

    let eta = config.eta;
    let (l_new, r_new) = match update {
        Update::Newton => {
            let degenerate = |_| Error::DegenerateIterate { iter: state.iter };
            let r_inv = inverse_gram(&r.gram()).map_err(degenerate)?;
            let l_inv = inverse_gram(&l.gram()).map_err(degenerate)?;
            // L - eta (G(d) R (R*R)^-1 + L)
            let l_new = l.scale_real(1.0 - eta).sub(&gd_r.matmul(&r_inv)?.scale_real(eta))?;
            let r_new = r.scale_real(1.0 - eta).sub(&gd_l.matmul(&l_inv)?.scale_real(eta))?;
            (l_new, r_new)
        }
        Update::Plain { step } => {
            let grad_l = gd_r.add(&l.matmul(&r.gram())?)?;
            let grad_r = gd_l.add(&r.matmul(&l.gram())?)?;
            (l.sub(&grad_l.scale_real(step))?, r.sub(&grad_r.scale_real(step))?)
        }
    };
    let factors = project_incoherence(&l_new, &r_new, radius)?;
    if cfg!(debug_assertions) && radius.is_finite() {
        let level = incoherence_level(&factors)?;
        debug_assert!(level <= radius * (1.0 + 1e-8), "incoherence {level} above {radius}");
    }
    IterateState::new(problem, factors, state.iter + 1, config)
}

/// One preconditioned update. Both factors are updated from the same
/// current pair, then projected with radius `radius`.
pub fn hsnld_step(
    state: &IterateState,
    problem: &Problem,
    config: &RecoveryConfig,
    radius: f64,
) -> Result<IterateState> {
    descent(state, problem, config, radius, Update::Newton)
}

/// One unpreconditioned gradient update with step `step`.
pub fn plain_gd_step(
    state: &IterateState,
    problem: &Problem,
    config: &RecoveryConfig,
    radius: f64,
    step: f64,
) -> Result<IterateState> {
    descent(state, problem, config, radius, Update::Plain { step })
}

#[derive(Debug, Clone, PartialEq)]
pub enum Termination {
    ResidualTolerance,
    ErrorTolerance,
    Stagnation,
    MaxIterations,
    Failed { reason: String },
}

impl Termination {
    /// Stopped because a tolerance was met.
    pub fn converged(&self) -> bool {
        matches!(self, Termination::ResidualTolerance | Termination::ErrorTolerance)
    }

    pub fn label(&self) -> &'static str {
        match self {
            Termination::ResidualTolerance => "residual_tolerance",
            Termination::ErrorTolerance => "error_tolerance",
            Termination::Stagnation => "stagnation",
            Termination::MaxIterations => "max_iterations",
            Termination::Failed { .. } => "failed",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceEntry {
    pub iter: usize,
    pub residual: f64,
    pub error: Option<f64>,
    /// Wall time since the start of the run, initialization included.
    pub elapsed_ms: f64,
}

#[derive(Debug, Clone)]
pub struct RecoveryReport {
    /// One entry for the initialization and one per executed iteration.
    pub trace: Vec<TraceEntry>,
    pub z: WeightedSignal,
    pub s: SparseEstimate,
    pub factors: Factors,
    pub termination: Termination,
    pub sigma_1: f64,
    pub radius: f64,
}

impl RecoveryReport {
    pub fn iterations(&self) -> usize {
        self.trace.len() - 1
    }

    pub fn final_residual(&self) -> f64 {
        self.trace.last().map(|t| t.residual).unwrap_or(f64::INFINITY)
    }

    pub fn final_error(&self) -> Option<f64> {
        self.trace.last().and_then(|t| t.error)
    }

    pub fn seconds(&self) -> f64 {
        self.trace.last().map(|t| t.elapsed_ms / 1e3).unwrap_or(0.0)
    }
}

/// Spectral initialization followed by preconditioned iterations until a
/// tolerance, stagnation, or the iteration cap.
///
/// Numerical failures after initialization end the run with
/// [`Termination::Failed`] and keep the trace so far.
pub fn run_hsnld(
    problem: &Problem,
    config: &RecoveryConfig,
    truth: Option<&WeightedSignal>,
) -> Result<RecoveryReport> {
    run(problem, config, truth, false)
}

/// Baseline: the same gradients without preconditioning, step
/// `eta / sigma_1` with `sigma_1` from the initialization.
pub fn run_plain_gd(
    problem: &Problem,
    config: &RecoveryConfig,
    truth: Option<&WeightedSignal>,
) -> Result<RecoveryReport> {
    run(problem, config, truth, true)
}

fn run(
    problem: &Problem,
    config: &RecoveryConfig,
    truth: Option<&WeightedSignal>,
    plain: bool,
) -> Result<RecoveryReport> {
    config.validate()?;
    let shape = problem.shape();
    if let Some(t) = truth {
        if t.shape != shape {
            return Err(Error::DimensionMismatch("ground truth has a different shape".into()));
        }
        if t.norm() == 0.0 {
            return Err(Error::ZeroGroundTruth);
        }
    }
    let start = Instant::now();
    let init = spectral_init(problem, config)?;
    let update = if plain {
        Update::Plain { step: if init.sigma_1 > 0.0 { config.eta / init.sigma_1 } else { 0.0 } }
    } else {
        Update::Newton
    };

    let mut state = IterateState::new(problem, init.factors, 0, config)?;
    let mut trace = Vec::new();
    let mut previous_z: Option<Vec<C64>> = None;
    let termination = loop {
        let residual = problem.relative_residual(&state.z, &state.s.s);
        let error = match truth {
            Some(t) => Some(recovery_error(&state.z, &t.z)?),
            None => None,
        };
        trace.push(TraceEntry {
            iter: state.iter,
            residual,
            error,
            elapsed_ms: start.elapsed().as_secs_f64() * 1e3,
        });

        if !residual.is_finite() || state.z.iter().any(|v| !v.re.is_finite() || !v.im.is_finite()) {
            break Termination::Failed { reason: format!("non-finite iterate at {}", state.iter) };
        }
        if residual <= config.tol_residual {
            break Termination::ResidualTolerance;
        }
        if let (Some(tol), Some(err)) = (config.tol_error, error) {
            if err <= tol {
                break Termination::ErrorTolerance;
            }
        }
        if let Some(prev) = &previous_z {
            let norm = norm2(&state.z);
            let change: f64 =
                prev.iter().zip(&state.z).map(|(a, b)| (a - b).norm_sqr()).sum::<f64>().sqrt();
            if change <= config.tol_stagnation * norm {
                break Termination::Stagnation;
            }
        }
        if state.iter >= config.max_iters {
            break Termination::MaxIterations;
        }
        let next = match update {
            Update::Newton => hsnld_step(&state, problem, config, init.radius),
            Update::Plain { step } => plain_gd_step(&state, problem, config, init.radius, step),
        };
        match next {
            Ok(next) => previous_z = Some(std::mem::replace(&mut state, next).z),
            Err(e) => break Termination::Failed { reason: e.to_string() },
        }
    };

    Ok(RecoveryReport {
        trace,
        z: WeightedSignal::new(shape, state.z)?,
        s: state.s,
        factors: state.factors,
        termination,
        sigma_1: init.sigma_1,
        radius: init.radius,
    })
}

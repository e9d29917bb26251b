//! Synthetic spectrally sparse signals, uniform-linear-array snapshots, and
//! outlier injection.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;
use rand::seq::index;
use rand::Rng;

use crate::error::{Error, Result};
use crate::hankel::{winv, HankelOps, HankelShape, WeightedSignal};
use crate::linalg::{truncated_svd, SvdOptions};
use crate::sampling::{ceil_count, project_obs, ObservationPattern, SparseEstimate};
use crate::seed;

/// Frequency draws allowed before giving up on the separation constraint.
pub const MAX_FREQUENCY_DRAWS: usize = 10_000;

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralModel {
    pub n: usize,
    pub r: usize,
    pub frequencies: Vec<f64>,
    pub amplitudes: Vec<f64>,
    pub kappa: f64,
}

/// Distance between two frequencies on the unit circle.
fn wrap_distance(a: f64, b: f64) -> f64 {
    let d = (a - b).abs();
    d.min(1.0 - d)
}

/// `r` amplitudes evenly spaced over `[1/kappa, 1]`.
pub fn amplitudes(r: usize, kappa: f64) -> Vec<f64> {
    if r == 1 {
        return vec![1.0];
    }
    let lo = 1.0 / kappa;
    (0..r).map(|j| lo + j as f64 * (1.0 - lo) / (r - 1) as f64).collect()
}

/// `x_t = sum_j a_j exp(2 pi i f_j t)` for `t = 0..n`.
pub fn exponential_sum(n: usize, frequencies: &[f64], amplitudes: &[f64]) -> Vec<C64> {
    (0..n)
        .map(|t| {
            frequencies
                .iter()
                .zip(amplitudes)
                .map(|(&f, &a)| C64::from_polar(a, 2.0 * PI * ((f * t as f64) % 1.0)))
                .sum()
        })
        .collect()
}

/// Random rank-`r` spectrally sparse signal on the square Hankel shape.
///
/// Frequencies are drawn uniformly on `[0, 1)` with wrap-around separation
/// at least `1 / n`.
pub fn spectral_signal(
    n: usize,
    r: usize,
    kappa: f64,
    seed: u64,
) -> Result<(WeightedSignal, SpectralModel)> {
    let shape = HankelShape::square(n)?;
    if r == 0 || r > shape.n1().min(shape.n2()) {
        return Err(Error::InvalidArgument(format!(
            "rank {r} outside 1..={} for n = {n}",
            shape.n1().min(shape.n2())
        )));
    }
    if !(kappa >= 1.0) || !kappa.is_finite() {
        return Err(Error::InvalidArgument(format!("kappa = {kappa} must be finite and >= 1")));
    }
    let mut rng = seed::rng(seed);
    let sep = 1.0 / n as f64;
    let mut frequencies: Vec<f64> = Vec::with_capacity(r);
    let mut draws = 0;
    while frequencies.len() < r {
        if draws == MAX_FREQUENCY_DRAWS {
            return Err(Error::RejectionCap { attempts: draws });
        }
        draws += 1;
        let f: f64 = rng.random();
        if frequencies.iter().all(|&g| wrap_distance(f, g) >= sep) {
            frequencies.push(f);
        }
    }
    let amplitudes = amplitudes(r, kappa);
    let x = exponential_sum(n, &frequencies, &amplitudes);
    let z = winv(&x, shape)?;
    Ok((z, SpectralModel { n, r, frequencies, amplitudes, kappa }))
}

/// Snapshot of a uniform linear array with half-wavelength spacing:
/// `x_j = sum_i g_i exp(-i pi j sin(theta_i))` for sensors `j = 0..n`.
/// Angles are in degrees.
pub fn doa_signal(
    n: usize,
    thetas_deg: &[f64],
    gains: &[C64],
    shape: HankelShape,
) -> Result<WeightedSignal> {
    if thetas_deg.is_empty() || thetas_deg.len() != gains.len() {
        return Err(Error::InvalidArgument(format!(
            "{} angles and {} gains",
            thetas_deg.len(),
            gains.len()
        )));
    }
    if shape.n() != n {
        return Err(Error::DimensionMismatch(format!("shape for n = {} given n = {n}", shape.n())));
    }
    let sines: Vec<f64> = thetas_deg.iter().map(|t| t.to_radians().sin()).collect();
    let x: Vec<C64> = (0..n)
        .map(|j| {
            sines
                .iter()
                .zip(gains)
                .map(|(&s, &g)| {
                    // reduce the phase modulo 2 pi before evaluating
                    let half_turns = (j as f64 * s) % 2.0;
                    g * C64::from_polar(1.0, -PI * half_turns)
                })
                .sum()
        })
        .collect();
    winv(&x, shape)
}

/// Which representation the outliers are drawn and added in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum OutlierDomain {
    /// Added to `z`, bounds from `mean |Re z|` and `mean |Im z|`.
    Weighted,
    /// Added to the raw values `x = W z`, bounds from `mean |Re x|` and
    /// `mean |Im x|`.
    Raw,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OutlierSpec {
    /// Fraction of the `m` observations to corrupt.
    pub alpha: f64,
    /// Half-width of the uniform draw, in units of the mean absolute part.
    pub magnitude_scale: f64,
    pub domain: OutlierDomain,
    pub seed: u64,
}

impl OutlierSpec {
    pub fn new(alpha: f64, seed: u64) -> Self {
        Self { alpha, magnitude_scale: 10.0, domain: OutlierDomain::Weighted, seed }
    }
}

/// Corrupted observations of a ground truth.
#[derive(Debug, Clone, PartialEq)]
pub struct Corrupted {
    /// `z* + s*` on observed indices, zero elsewhere.
    pub f: Vec<C64>,
    /// Outliers in the weighted domain.
    pub s_star: SparseEstimate,
}

/// Corrupts `ceil(alpha m)` distinct observed entries.
pub fn inject_outliers(
    z_star: &WeightedSignal,
    pattern: &ObservationPattern,
    spec: OutlierSpec,
) -> Result<Corrupted> {
    let n = z_star.shape.n();
    if pattern.n() != n {
        return Err(Error::DimensionMismatch(format!(
            "pattern over n = {} for a signal of length {n}",
            pattern.n()
        )));
    }
    if !(0.0..1.0).contains(&spec.alpha) && spec.alpha != 1.0 {
        return Err(Error::InvalidArgument(format!("alpha = {} outside [0, 1]", spec.alpha)));
    }
    let count = ceil_count(spec.alpha * pattern.m() as f64);
    let observed = pattern.distinct();
    if count > observed.len() {
        return Err(Error::InvalidArgument(format!(
            "{count} outliers requested but only {} distinct observed entries",
            observed.len()
        )));
    }

    let sqrt_w = crate::hankel::weights(z_star.shape).sqrt();
    let reference: Vec<C64> = match spec.domain {
        OutlierDomain::Weighted => z_star.z.clone(),
        OutlierDomain::Raw => z_star.z.iter().zip(&sqrt_w).map(|(z, s)| z / s).collect(),
    };
    let mean_re = reference.iter().map(|v| v.re.abs()).sum::<f64>() / n as f64;
    let mean_im = reference.iter().map(|v| v.im.abs()).sum::<f64>() / n as f64;
    let (half_re, half_im) = (spec.magnitude_scale * mean_re, spec.magnitude_scale * mean_im);

    let mut rng = seed::rng(spec.seed);
    let mut support: Vec<usize> =
        index::sample(&mut rng, observed.len(), count).into_iter().map(|k| observed[k]).collect();
    support.sort_unstable();
    let mut s = vec![C64::new(0.0, 0.0); n];
    for &i in &support {
        let re = if half_re > 0.0 { rng.random_range(-half_re..=half_re) } else { 0.0 };
        let im = if half_im > 0.0 { rng.random_range(-half_im..=half_im) } else { 0.0 };
        let o = C64::new(re, im);
        s[i] = match spec.domain {
            OutlierDomain::Weighted => o,
            OutlierDomain::Raw => o * sqrt_w[i],
        };
    }
    let mut f = vec![C64::new(0.0, 0.0); n];
    for &i in observed {
        f[i] = z_star.z[i] + s[i];
    }
    Ok(Corrupted { f, s_star: SparseEstimate { s, support } })
}

/// Observations without outliers, `Pi_Omega z*` with multiplicities dropped.
pub fn observe(z_star: &WeightedSignal, pattern: &ObservationPattern) -> Result<Vec<C64>> {
    let mut f = project_obs(&z_star.z, pattern)?;
    for (&i, &c) in pattern.distinct().iter().zip(pattern.multiplicity()) {
        f[i] /= c as f64;
    }
    Ok(f)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionNumber {
    /// `sigma_1 / sigma_r`.
    pub kappa: f64,
    /// `sigma_{r+1} / sigma_1`, or zero when `r` already equals the smaller
    /// matrix dimension.
    pub rank_gap: f64,
    pub sigma_1: f64,
}

/// `sigma_1 / sigma_r` of `G z`, computed matrix-free.
pub fn condition_number(z: &WeightedSignal, r: usize) -> Result<ConditionNumber> {
    let shape = z.shape;
    let min_dim = shape.n1().min(shape.n2());
    if r == 0 || r > min_dim {
        return Err(Error::InvalidArgument(format!("rank {r} outside 1..={min_dim}")));
    }
    let ops = HankelOps::new(shape);
    let op = ops.operator(&z.z)?;
    let k = (r + 1).min(min_dim);
    let svd = truncated_svd(&op, k, SvdOptions::for_rank(k, 0))?;
    let s1 = svd.s[0];
    if s1 == 0.0 {
        return Err(Error::ZeroGroundTruth);
    }
    let sr = svd.s[r - 1];
    if sr < 1e-14 * s1 {
        return Err(Error::RankDeficient { ratio: sr / s1 });
    }
    let rank_gap = if k > r { svd.s[r] / s1 } else { 0.0 };
    Ok(ConditionNumber { kappa: s1 / sr, rank_gap, sigma_1: s1 })
}

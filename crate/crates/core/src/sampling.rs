//! Observation patterns, the sampling operator `Pi_Omega`, and hard
//! thresholding `Gamma_k`.

use std::cmp::Ordering;

use num_complex::Complex64 as C64;
use rand::seq::index;
use rand::Rng;

use crate::error::{Error, Result};
use crate::seed;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Mode {
    WithReplacement,
    WithoutReplacement,
}

/// Sampled index multiset over `0..n`, kept sorted.
#[derive(Debug, Clone, PartialEq)]
pub struct ObservationPattern {
    n: usize,
    indices: Vec<usize>,
    mode: Mode,
    distinct: Vec<usize>,
    multiplicity: Vec<u32>,
}

impl ObservationPattern {
    pub fn new(n: usize, mut indices: Vec<usize>, mode: Mode) -> Result<Self> {
        if let Some(&bad) = indices.iter().find(|&&i| i >= n) {
            return Err(Error::InvalidArgument(format!("index {bad} outside 0..{n}")));
        }
        indices.sort_unstable();
        let mut distinct = Vec::new();
        let mut multiplicity: Vec<u32> = Vec::new();
        for &i in &indices {
            if distinct.last() == Some(&i) {
                *multiplicity.last_mut().expect("parallel to distinct") += 1;
            } else {
                distinct.push(i);
                multiplicity.push(1);
            }
        }
        if mode == Mode::WithoutReplacement && distinct.len() != indices.len() {
            return Err(Error::InvalidArgument(
                "repeated index in a pattern sampled without replacement".into(),
            ));
        }
        Ok(Self { n, indices, mode, distinct, multiplicity })
    }

    /// Every index observed exactly once.
    pub fn full(n: usize) -> Self {
        Self::new(n, (0..n).collect(), Mode::WithoutReplacement).expect("valid full pattern")
    }

    pub fn n(&self) -> usize {
        self.n
    }

    /// Number of samples `m`, counting repeats.
    pub fn m(&self) -> usize {
        self.indices.len()
    }

    /// Sampling rate `m / n`.
    pub fn p(&self) -> f64 {
        self.indices.len() as f64 / self.n as f64
    }

    pub fn mode(&self) -> Mode {
        self.mode
    }

    pub fn indices(&self) -> &[usize] {
        &self.indices
    }

    /// Sorted distinct observed indices.
    pub fn distinct(&self) -> &[usize] {
        &self.distinct
    }

    /// Multiplicity of each entry of [`Self::distinct`].
    pub fn multiplicity(&self) -> &[u32] {
        &self.multiplicity
    }

    pub fn contains(&self, i: usize) -> bool {
        self.distinct.binary_search(&i).is_ok()
    }

    fn check_len(&self, len: usize) -> Result<()> {
        if len != self.n {
            return Err(Error::DimensionMismatch(format!(
                "vector of length {len} for a pattern over n = {}",
                self.n
            )));
        }
        Ok(())
    }
}

/// Draws `m` indices from `0..n` uniformly.
pub fn sample_pattern(n: usize, m: usize, mode: Mode, seed: u64) -> Result<ObservationPattern> {
    if n == 0 || m == 0 {
        return Err(Error::InvalidArgument(format!("cannot sample m = {m} of n = {n}")));
    }
    let mut rng = seed::rng(seed);
    let indices = match mode {
        Mode::WithoutReplacement => {
            if m > n {
                return Err(Error::InvalidArgument(format!(
                    "m = {m} exceeds n = {n} without replacement"
                )));
            }
            index::sample(&mut rng, n, m).into_vec()
        }
        Mode::WithReplacement => (0..m).map(|_| rng.random_range(0..n)).collect(),
    };
    ObservationPattern::new(n, indices, mode)
}

/// `Pi_Omega v`: observed entries scaled by their multiplicity, zero elsewhere.
pub fn project_obs(v: &[C64], pattern: &ObservationPattern) -> Result<Vec<C64>> {
    pattern.check_len(v.len())?;
    let mut out = vec![C64::new(0.0, 0.0); v.len()];
    for (&i, &c) in pattern.distinct.iter().zip(&pattern.multiplicity) {
        out[i] = v[i] * c as f64;
    }
    Ok(out)
}

/// A sparse vector stored densely together with its sorted support.
#[derive(Debug, Clone, PartialEq)]
pub struct SparseEstimate {
    pub s: Vec<C64>,
    pub support: Vec<usize>,
}

impl SparseEstimate {
    pub fn zeros(n: usize) -> Self {
        Self { s: vec![C64::new(0.0, 0.0); n], support: Vec::new() }
    }

    pub fn nnz(&self) -> usize {
        self.support.len()
    }
}

/// Larger magnitude first, then lower index.
fn selection_order(v: &[C64]) -> impl Fn(&usize, &usize) -> Ordering + '_ {
    move |&a, &b| v[b].norm_sqr().total_cmp(&v[a].norm_sqr()).then(a.cmp(&b))
}

/// Keeps the `k` largest of `candidates` (indices into `v`) and zeroes the rest.
fn keep_largest(v: &[C64], mut candidates: Vec<usize>, k: usize) -> SparseEstimate {
    let order = selection_order(v);
    if k < candidates.len() {
        if k == 0 {
            candidates.clear();
        } else {
            candidates.select_nth_unstable_by(k - 1, &order);
            candidates.truncate(k);
        }
    }
    let mut support: Vec<usize> =
        candidates.into_iter().filter(|&i| v[i].norm_sqr() > 0.0).collect();
    support.sort_unstable();
    let mut s = vec![C64::new(0.0, 0.0); v.len()];
    for &i in &support {
        s[i] = v[i];
    }
    SparseEstimate { s, support }
}

/// `Gamma_k v`: the `k` largest-magnitude entries kept verbatim, ties broken
/// toward the lower index.
pub fn top_k_threshold(v: &[C64], k: usize) -> SparseEstimate {
    keep_largest(v, (0..v.len()).collect(), k)
}

/// `Gamma_k(Pi_Omega(f - z))`. Only observed entries can be selected.
pub fn sparsify_residual(
    f: &[C64],
    z: &[C64],
    pattern: &ObservationPattern,
    k: usize,
) -> Result<SparseEstimate> {
    sparsify_impl(f, z, pattern, k, None)
}

/// `W^-1 Gamma_k(W Pi_Omega(f - z))`: entries are ranked by their raw
/// (unweighted) magnitude, i.e. after dividing by `sqrt_weights`.
pub fn sparsify_residual_weighted(
    f: &[C64],
    z: &[C64],
    pattern: &ObservationPattern,
    k: usize,
    sqrt_weights: &[f64],
) -> Result<SparseEstimate> {
    if sqrt_weights.len() != pattern.n {
        return Err(Error::DimensionMismatch(format!(
            "{} weights for a pattern over n = {}",
            sqrt_weights.len(),
            pattern.n
        )));
    }
    sparsify_impl(f, z, pattern, k, Some(sqrt_weights))
}

fn sparsify_impl(
    f: &[C64],
    z: &[C64],
    pattern: &ObservationPattern,
    k: usize,
    sqrt_weights: Option<&[f64]>,
) -> Result<SparseEstimate> {
    pattern.check_len(f.len())?;
    pattern.check_len(z.len())?;
    let mut residual = vec![C64::new(0.0, 0.0); f.len()];
    for (&i, &c) in pattern.distinct.iter().zip(&pattern.multiplicity) {
        residual[i] = (f[i] - z[i]) * c as f64;
    }
    match sqrt_weights {
        None => Ok(keep_largest(&residual, pattern.distinct.clone(), k)),
        Some(w) => {
            let raw: Vec<C64> = residual.iter().zip(w).map(|(v, s)| v / s).collect();
            let mut est = keep_largest(&raw, pattern.distinct.clone(), k);
            for &i in &est.support {
                est.s[i] = residual[i];
            }
            Ok(est)
        }
    }
}

/// `ceil(x)` that ignores rounding noise just above an integer, so that
/// e.g. `0.15 * 100` counts as 15.
pub fn ceil_count(x: f64) -> usize {
    if x <= 0.0 {
        return 0;
    }
    (x - 1e-9 * x.max(1.0)).ceil().max(0.0) as usize
}

/// `ceil(gamma * alpha * m)` clamped to `[0, n]`.
pub fn sparsity_level(gamma: f64, alpha: f64, m: usize, n: usize) -> usize {
    ceil_count(gamma * alpha * m as f64).min(n)
}

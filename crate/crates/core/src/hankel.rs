//! The reweighted Hankel embedding `G`, its adjoint `G*`, the reweighting
//! `W`, and fast structured products that never form the `n1 x n2` matrix.
//!
//! A Hankel matrix with `n = n1 + n2 - 1` distinct values `x` is stored as
//! the weighted vector `z_a = sqrt(w_a) x_a`, where `w_a` counts the entries
//! on antidiagonal `a`. Then `||z||_2 = ||G z||_F` and `G* G = I`.
//! Public indices are 0-based: entry `(i, j)` of `G z` lies on antidiagonal
//! `i + j`.

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};
use crate::fft::Radix2Plan;
use crate::linalg::{ComplexMatrix, LinearOperator};

/// Largest dense Hankel matrix the test-only constructors will build.
pub const DENSE_ENTRY_CAP: usize = 4_000_000;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct HankelShape {
    n1: usize,
    n2: usize,
}

impl HankelShape {
    pub fn new(n1: usize, n2: usize) -> Result<Self> {
        if n1 == 0 || n2 == 0 {
            return Err(Error::InvalidArgument(format!("Hankel shape {n1}x{n2} must be positive")));
        }
        Ok(Self { n1, n2 })
    }

    /// Square-ish shape for a length-`n` signal: `n1 = ceil((n + 1) / 2)`.
    pub fn square(n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::InvalidArgument("signal length must be positive".into()));
        }
        let n1 = (n + 2) / 2;
        Self::new(n1, n - n1 + 1)
    }

    pub fn n1(&self) -> usize {
        self.n1
    }

    pub fn n2(&self) -> usize {
        self.n2
    }

    pub fn n(&self) -> usize {
        self.n1 + self.n2 - 1
    }

    /// `max(n / n1, n / n2)`, how far from square the matrix is.
    pub fn c_s(&self) -> f64 {
        let n = self.n() as f64;
        (n / self.n1 as f64).max(n / self.n2 as f64)
    }
}

/// Number of entries on each antidiagonal.
#[derive(Debug, Clone, PartialEq)]
pub struct AntidiagonalWeights {
    pub shape: HankelShape,
    pub sigma: Vec<usize>,
}

impl AntidiagonalWeights {
    pub fn sqrt(&self) -> Vec<f64> {
        self.sigma.iter().map(|&s| (s as f64).sqrt()).collect()
    }
}

pub fn weights(shape: HankelShape) -> AntidiagonalWeights {
    let (n1, n2, n) = (shape.n1, shape.n2, shape.n());
    // 1-indexed antidiagonal a holds min(a, n1, n2, n - a + 1) entries
    let sigma = (1..=n).map(|a| a.min(n1).min(n2).min(n - a + 1)).collect();
    AntidiagonalWeights { shape, sigma }
}

/// Reweighted vector `z` together with its Hankel shape.
#[derive(Debug, Clone, PartialEq)]
pub struct WeightedSignal {
    pub shape: HankelShape,
    pub z: Vec<C64>,
}

impl WeightedSignal {
    pub fn new(shape: HankelShape, z: Vec<C64>) -> Result<Self> {
        if z.len() != shape.n() {
            return Err(Error::DimensionMismatch(format!(
                "weighted signal of length {} for n = {}",
                z.len(),
                shape.n()
            )));
        }
        Ok(Self { shape, z })
    }

    pub fn zeros(shape: HankelShape) -> Self {
        Self { shape, z: vec![C64::new(0.0, 0.0); shape.n()] }
    }

    pub fn norm(&self) -> f64 {
        norm2(&self.z)
    }
}

pub(crate) fn norm2(v: &[C64]) -> f64 {
    v.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt()
}

/// `W z = x`, the raw Hankel values.
pub fn wmap(signal: &WeightedSignal) -> Vec<C64> {
    let sq = weights(signal.shape).sqrt();
    signal.z.iter().zip(&sq).map(|(z, s)| z / s).collect()
}

/// `W^-1 x = z`.
pub fn winv(x: &[C64], shape: HankelShape) -> Result<WeightedSignal> {
    if x.len() != shape.n() {
        return Err(Error::DimensionMismatch(format!(
            "raw signal of length {} for n = {}",
            x.len(),
            shape.n()
        )));
    }
    let sq = weights(shape).sqrt();
    Ok(WeightedSignal { shape, z: x.iter().zip(&sq).map(|(x, s)| x * s).collect() })
}

fn dense_guard(shape: HankelShape) -> Result<()> {
    if shape.n1.saturating_mul(shape.n2) > DENSE_ENTRY_CAP {
        return Err(Error::TooLarge { rows: shape.n1, cols: shape.n2, cap: DENSE_ENTRY_CAP });
    }
    Ok(())
}

/// Explicit `G z`. For tests and diagnostics only.
pub fn gmap_dense(signal: &WeightedSignal) -> Result<ComplexMatrix> {
    dense_guard(signal.shape)?;
    let x = wmap(signal);
    Ok(ComplexMatrix::from_fn(signal.shape.n1, signal.shape.n2, |i, j| x[i + j]))
}

/// Explicit `G* M`: antidiagonal sums scaled by `1 / sqrt(w_a)`.
pub fn gadjoint_dense(m: &ComplexMatrix, shape: HankelShape) -> Result<WeightedSignal> {
    dense_guard(shape)?;
    if m.shape() != (shape.n1, shape.n2) {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} matrix for Hankel shape {}x{}",
            m.rows(),
            m.cols(),
            shape.n1,
            shape.n2
        )));
    }
    let mut z = vec![C64::new(0.0, 0.0); shape.n()];
    for i in 0..shape.n1 {
        for (j, v) in m.row(i).iter().enumerate() {
            z[i + j] += v;
        }
    }
    let sq = weights(shape).sqrt();
    for (v, s) in z.iter_mut().zip(&sq) {
        *v /= s;
    }
    Ok(WeightedSignal { shape, z })
}

/// Cached FFT plan and weights for one Hankel shape.
///
/// Every structured product is a length-`n` linear convolution or valid-lag
/// correlation, so a single power-of-two plan of size `>= n` serves them
/// all. Columns are processed sequentially, which keeps results
/// bitwise reproducible.
#[derive(Debug, Clone)]
pub struct HankelOps {
    shape: HankelShape,
    sqrt_weights: Vec<f64>,
    plan: Radix2Plan,
}

/// Spectrum of the raw values `x = W z` of one signal, reusable across
/// products with `G z` and `(G z)*`.
#[derive(Debug, Clone)]
pub struct HankelSpectrum {
    x_hat: Vec<C64>,
}

impl HankelOps {
    pub fn new(shape: HankelShape) -> Self {
        let sqrt_weights = weights(shape).sqrt();
        let plan = Radix2Plan::for_len(shape.n());
        Self { shape, sqrt_weights, plan }
    }

    pub fn shape(&self) -> HankelShape {
        self.shape
    }

    pub fn sqrt_weights(&self) -> &[f64] {
        &self.sqrt_weights
    }

    /// `G*(L R*)` via `r` convolutions, accumulated in the frequency domain.
    pub fn gadjoint_outer(&self, l: &ComplexMatrix, r: &ComplexMatrix) -> Result<Vec<C64>> {
        let (n1, n2) = (self.shape.n1, self.shape.n2);
        if l.rows() != n1 || r.rows() != n2 || l.cols() != r.cols() {
            return Err(Error::DimensionMismatch(format!(
                "outer product of {}x{} and {}x{} for Hankel shape {n1}x{n2}",
                l.rows(),
                l.cols(),
                r.rows(),
                r.cols()
            )));
        }
        let size = self.plan.size();
        let mut acc = vec![C64::new(0.0, 0.0); size];
        for j in 0..l.cols() {
            let lj = self.plan.forward_padded(&l.column(j));
            let rj: Vec<C64> = (0..n2).map(|i| r[(i, j)].conj()).collect();
            let rj = self.plan.forward_padded(&rj);
            for ((a, x), y) in acc.iter_mut().zip(&lj).zip(&rj) {
                *a += x * y;
            }
        }
        self.plan.inverse(&mut acc);
        acc.truncate(self.shape.n());
        for (v, s) in acc.iter_mut().zip(&self.sqrt_weights) {
            *v /= s;
        }
        Ok(acc)
    }

    pub fn spectrum(&self, z: &[C64]) -> Result<HankelSpectrum> {
        if z.len() != self.shape.n() {
            return Err(Error::DimensionMismatch(format!(
                "signal of length {} for n = {}",
                z.len(),
                self.shape.n()
            )));
        }
        let x: Vec<C64> = z.iter().zip(&self.sqrt_weights).map(|(z, s)| z / s).collect();
        Ok(HankelSpectrum { x_hat: self.plan.forward_padded(&x) })
    }

    /// `c_t = sum_j x_{t+j} conj(k_j)` for `t < out_len`.
    fn correlate_with(&self, spec: &HankelSpectrum, kernel: &[C64], out_len: usize) -> Vec<C64> {
        let mut buf = self.plan.forward_padded(kernel);
        for (b, x) in buf.iter_mut().zip(&spec.x_hat) {
            *b = x * b.conj();
        }
        self.plan.inverse(&mut buf);
        buf.truncate(out_len);
        buf
    }

    /// `(G z) v` for one vector `v` of length `n2`.
    pub fn matvec(&self, spec: &HankelSpectrum, v: &[C64]) -> Result<Vec<C64>> {
        if v.len() != self.shape.n2 {
            return Err(Error::DimensionMismatch(format!(
                "vector of length {} for {} columns",
                v.len(),
                self.shape.n2
            )));
        }
        let conj: Vec<C64> = v.iter().map(|x| x.conj()).collect();
        Ok(self.correlate_with(spec, &conj, self.shape.n1))
    }

    /// `(G z)* u` for one vector `u` of length `n1`.
    pub fn rmatvec(&self, spec: &HankelSpectrum, u: &[C64]) -> Result<Vec<C64>> {
        if u.len() != self.shape.n1 {
            return Err(Error::DimensionMismatch(format!(
                "vector of length {} for {} rows",
                u.len(),
                self.shape.n1
            )));
        }
        let mut out = self.correlate_with(spec, u, self.shape.n2);
        for v in out.iter_mut() {
            *v = v.conj();
        }
        Ok(out)
    }

    /// `G(d) R`, column by column.
    pub fn gmul_right(&self, spec: &HankelSpectrum, r: &ComplexMatrix) -> Result<ComplexMatrix> {
        if r.rows() != self.shape.n2 {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} right factor for {} columns",
                r.rows(),
                r.cols(),
                self.shape.n2
            )));
        }
        let cols = (0..r.cols())
            .map(|j| self.matvec(spec, &r.column(j)))
            .collect::<Result<Vec<_>>>()?;
        ComplexMatrix::from_columns(self.shape.n1, &cols)
    }

    /// `G(d)* L`, column by column.
    pub fn gmul_right_adjoint(
        &self,
        spec: &HankelSpectrum,
        l: &ComplexMatrix,
    ) -> Result<ComplexMatrix> {
        if l.rows() != self.shape.n1 {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} left factor for {} rows",
                l.rows(),
                l.cols(),
                self.shape.n1
            )));
        }
        let cols = (0..l.cols())
            .map(|j| self.rmatvec(spec, &l.column(j)))
            .collect::<Result<Vec<_>>>()?;
        ComplexMatrix::from_columns(self.shape.n2, &cols)
    }

    /// `G z` as a [`LinearOperator`] for the randomized SVD.
    pub fn operator(&self, z: &[C64]) -> Result<HankelOperator<'_>> {
        Ok(HankelOperator { ops: self, spec: self.spectrum(z)? })
    }
}

/// Matrix-free view of `G z`.
pub struct HankelOperator<'a> {
    ops: &'a HankelOps,
    spec: HankelSpectrum,
}

impl LinearOperator for HankelOperator<'_> {
    fn rows(&self) -> usize {
        self.ops.shape.n1
    }

    fn cols(&self) -> usize {
        self.ops.shape.n2
    }

    fn apply(&self, x: &ComplexMatrix) -> Result<ComplexMatrix> {
        self.ops.gmul_right(&self.spec, x)
    }

    fn apply_adjoint(&self, y: &ComplexMatrix) -> Result<ComplexMatrix> {
        self.ops.gmul_right_adjoint(&self.spec, y)
    }
}

fn check_signal(signal: &WeightedSignal) -> Result<()> {
    if signal.z.len() != signal.shape.n() {
        return Err(Error::DimensionMismatch(format!(
            "weighted signal of length {} for n = {}",
            signal.z.len(),
            signal.shape.n()
        )));
    }
    Ok(())
}

/// `G*(L R*)` in `O(r n log n)`.
pub fn gadjoint_outer(
    l: &ComplexMatrix,
    r: &ComplexMatrix,
    shape: HankelShape,
) -> Result<WeightedSignal> {
    let z = HankelOps::new(shape).gadjoint_outer(l, r)?;
    Ok(WeightedSignal { shape, z })
}

/// `(G z) v`.
pub fn hankel_matvec(signal: &WeightedSignal, v: &[C64]) -> Result<Vec<C64>> {
    check_signal(signal)?;
    let ops = HankelOps::new(signal.shape);
    ops.matvec(&ops.spectrum(&signal.z)?, v)
}

/// `(G z)* u`.
pub fn hankel_rmatvec(signal: &WeightedSignal, u: &[C64]) -> Result<Vec<C64>> {
    check_signal(signal)?;
    let ops = HankelOps::new(signal.shape);
    ops.rmatvec(&ops.spectrum(&signal.z)?, u)
}

/// `G(d) R`.
pub fn gmul_right(d: &WeightedSignal, r: &ComplexMatrix) -> Result<ComplexMatrix> {
    check_signal(d)?;
    let ops = HankelOps::new(d.shape);
    ops.gmul_right(&ops.spectrum(&d.z)?, r)
}

/// `G(d)* L`.
pub fn gmul_right_adjoint(d: &WeightedSignal, l: &ComplexMatrix) -> Result<ComplexMatrix> {
    check_signal(d)?;
    let ops = HankelOps::new(d.shape);
    ops.gmul_right_adjoint(&ops.spectrum(&d.z)?, l)
}

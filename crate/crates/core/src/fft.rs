//! Complex FFT and length-exact linear convolution / correlation.
//!
//! Forward transforms are unnormalized, `X_k = sum_t v_t exp(-2 pi i k t / N)`;
//! the inverse carries the `1/N`. Power-of-two sizes use an iterative radix-2
//! kernel, other sizes go through Bluestein's chirp-z reduction onto a
//! power-of-two convolution.

use std::f64::consts::PI;

use num_complex::Complex64 as C64;

use crate::error::{Error, Result};

/// Precomputed radix-2 transform of a fixed power-of-two size.
///
/// Immutable after construction, so a single plan can be shared between
/// threads.
#[derive(Debug, Clone)]
pub struct Radix2Plan {
    size: usize,
    twiddles: Vec<C64>,
}

impl Radix2Plan {
    pub fn new(size: usize) -> Self {
        assert!(size.is_power_of_two(), "radix-2 plan needs a power of two, got {size}");
        let twiddles = (0..size / 2)
            .map(|k| C64::from_polar(1.0, -2.0 * PI * k as f64 / size as f64))
            .collect();
        Self { size, twiddles }
    }

    /// Plan large enough to hold a linear convolution of output length `len`.
    pub fn for_len(len: usize) -> Self {
        Self::new(len.max(1).next_power_of_two())
    }

    pub fn size(&self) -> usize {
        self.size
    }

    pub fn forward(&self, buf: &mut [C64]) {
        self.transform(buf, false);
    }

    /// Inverse transform including the `1/N` normalization.
    pub fn inverse(&self, buf: &mut [C64]) {
        self.transform(buf, true);
        let scale = 1.0 / self.size as f64;
        for v in buf.iter_mut() {
            *v *= scale;
        }
    }

    /// Zero-pads `values` to the plan size and transforms.
    pub fn forward_padded(&self, values: &[C64]) -> Vec<C64> {
        debug_assert!(values.len() <= self.size);
        let mut buf = vec![C64::new(0.0, 0.0); self.size];
        buf[..values.len()].copy_from_slice(values);
        self.forward(&mut buf);
        buf
    }

    fn transform(&self, buf: &mut [C64], inverse: bool) {
        let n = self.size;
        assert_eq!(buf.len(), n, "buffer length must equal the plan size");
        if n <= 1 {
            return;
        }
        let bits = n.trailing_zeros();
        for i in 0..n {
            let j = i.reverse_bits() >> (usize::BITS - bits);
            if j > i {
                buf.swap(i, j);
            }
        }
        let mut len = 2;
        while len <= n {
            let half = len / 2;
            let stride = n / len;
            for start in (0..n).step_by(len) {
                for k in 0..half {
                    let mut w = self.twiddles[k * stride];
                    if inverse {
                        w = w.conj();
                    }
                    let a = buf[start + k];
                    let b = buf[start + k + half] * w;
                    buf[start + k] = a + b;
                    buf[start + k + half] = a - b;
                }
            }
            len <<= 1;
        }
    }
}

/// Discrete Fourier transform of any length `N >= 1`.
pub fn fft(v: &[C64]) -> Vec<C64> {
    let n = v.len();
    if n == 0 {
        return Vec::new();
    }
    if n.is_power_of_two() {
        let plan = Radix2Plan::new(n);
        let mut buf = v.to_vec();
        plan.forward(&mut buf);
        return buf;
    }
    bluestein(v)
}

/// Inverse DFT with `1/N` normalization.
pub fn ifft(v: &[C64]) -> Vec<C64> {
    let n = v.len();
    let conj: Vec<C64> = v.iter().map(|x| x.conj()).collect();
    let scale = 1.0 / n.max(1) as f64;
    fft(&conj).into_iter().map(|x| x.conj() * scale).collect()
}

fn bluestein(v: &[C64]) -> Vec<C64> {
    let n = v.len();
    // chirp w_m = exp(i pi m^2 / n); m^2 is reduced mod 2n to keep the angle exact
    let modulus = 2 * n as u128;
    let chirp: Vec<C64> = (0..n)
        .map(|m| {
            let sq = (m as u128 * m as u128) % modulus;
            C64::from_polar(1.0, PI * sq as f64 / n as f64)
        })
        .collect();

    let plan = Radix2Plan::for_len(2 * n - 1);
    let size = plan.size();
    let mut a = vec![C64::new(0.0, 0.0); size];
    for t in 0..n {
        a[t] = v[t] * chirp[t].conj();
    }
    let mut b = vec![C64::new(0.0, 0.0); size];
    b[0] = chirp[0];
    for m in 1..n {
        b[m] = chirp[m];
        b[size - m] = chirp[m];
    }
    plan.forward(&mut a);
    plan.forward(&mut b);
    for (x, y) in a.iter_mut().zip(&b) {
        *x *= y;
    }
    plan.inverse(&mut a);
    (0..n).map(|k| a[k] * chirp[k].conj()).collect()
}

/// Full linear convolution, `c_t = sum_{i+j=t} a_i b_j`, of length
/// `len(a) + len(b) - 1`.
pub fn convolve(a: &[C64], b: &[C64]) -> Result<Vec<C64>> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::InvalidArgument("convolve needs non-empty inputs".into()));
    }
    let out_len = a.len() + b.len() - 1;
    let plan = Radix2Plan::for_len(out_len);
    let mut fa = plan.forward_padded(a);
    let fb = plan.forward_padded(b);
    for (x, y) in fa.iter_mut().zip(&fb) {
        *x *= y;
    }
    plan.inverse(&mut fa);
    fa.truncate(out_len);
    Ok(fa)
}

/// Valid-lag correlation, `c_t = sum_j a_{t+j} conj(b_j)` for
/// `t = 0..len(a)-len(b)`. This is the adjoint of [`convolve`] in its first
/// argument.
pub fn correlate(a: &[C64], b: &[C64]) -> Result<Vec<C64>> {
    if b.is_empty() {
        return Err(Error::InvalidArgument("correlate needs a non-empty kernel".into()));
    }
    if b.len() > a.len() {
        return Err(Error::DimensionMismatch(format!(
            "correlate kernel length {} exceeds signal length {}",
            b.len(),
            a.len()
        )));
    }
    let out_len = a.len() - b.len() + 1;
    let plan = Radix2Plan::for_len(a.len());
    let mut fa = plan.forward_padded(a);
    let fb = plan.forward_padded(b);
    for (x, y) in fa.iter_mut().zip(&fb) {
        *x *= y.conj();
    }
    plan.inverse(&mut fa);
    fa.truncate(out_len);
    Ok(fa)
}

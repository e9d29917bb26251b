use num_complex::Complex64 as C64;

use super::ComplexMatrix;
use crate::error::{Error, Result};

/// `A = Q R` with `Q` (`n x r`) having orthonormal columns and `R` (`r x r`)
/// upper triangular.
#[derive(Debug, Clone)]
pub struct ThinQr {
    pub q: ComplexMatrix,
    pub r: ComplexMatrix,
}

/// Householder thin QR. Rank-deficient inputs are allowed: `R` then has zero
/// diagonal entries while `Q` stays orthonormal.
pub fn thin_qr(a: &ComplexMatrix) -> Result<ThinQr> {
    let (n, r) = a.shape();
    if n < r {
        return Err(Error::DimensionMismatch(format!("thin QR of a wide {n}x{r} matrix")));
    }
    let mut work = a.clone();
    let mut reflectors: Vec<Option<Vec<C64>>> = Vec::with_capacity(r);
    for k in 0..r {
        let x: Vec<C64> = (k..n).map(|i| work[(i, k)]).collect();
        let norm = x.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt();
        if norm == 0.0 {
            reflectors.push(None);
            continue;
        }
        let phase = if x[0].norm() > 0.0 { x[0] / x[0].norm() } else { C64::new(1.0, 0.0) };
        let alpha = -phase * norm;
        let mut v = x;
        v[0] -= alpha;
        let vnorm = v.iter().map(|c| c.norm_sqr()).sum::<f64>().sqrt();
        if vnorm == 0.0 {
            reflectors.push(None);
            continue;
        }
        for c in v.iter_mut() {
            *c /= vnorm;
        }
        apply_reflector(&mut work, &v, k, k);
        reflectors.push(Some(v));
    }

    let rmat = ComplexMatrix::from_fn(r, r, |i, j| if j >= i { work[(i, j)] } else { C64::new(0.0, 0.0) });
    let mut q = ComplexMatrix::from_fn(n, r, |i, j| {
        if i == j {
            C64::new(1.0, 0.0)
        } else {
            C64::new(0.0, 0.0)
        }
    });
    for (k, v) in reflectors.iter().enumerate().rev() {
        if let Some(v) = v {
            apply_reflector(&mut q, v, k, 0);
        }
    }
    Ok(ThinQr { q, r: rmat })
}

/// Applies `I - 2 v v*` to rows `row0..` and columns `col0..` of `m`.
fn apply_reflector(m: &mut ComplexMatrix, v: &[C64], row0: usize, col0: usize) {
    let cols = m.cols();
    let mut w = vec![C64::new(0.0, 0.0); cols - col0];
    for (t, vi) in v.iter().enumerate() {
        let row = m.row(row0 + t);
        let vc = vi.conj();
        for (wj, x) in w.iter_mut().zip(&row[col0..]) {
            *wj += vc * x;
        }
    }
    for (t, vi) in v.iter().enumerate() {
        let s = vi * 2.0;
        let row = m.row_mut(row0 + t);
        for (x, wj) in row[col0..].iter_mut().zip(&w) {
            *x -= s * wj;
        }
    }
}

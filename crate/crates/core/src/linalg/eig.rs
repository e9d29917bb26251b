use num_complex::Complex64 as C64;

use super::ComplexMatrix;
use crate::error::{Error, Result};

const MAX_SWEEPS: usize = 100;

/// Eigendecomposition `H = Q diag(values) Q*` of a Hermitian matrix.
#[derive(Debug, Clone)]
pub struct HermitianEig {
    /// Ascending.
    pub values: Vec<f64>,
    /// Unitary; column `k` pairs with `values[k]`.
    pub vectors: ComplexMatrix,
}

/// Rotation `U` acting on the `(p, q)` plane that zeroes `a_pq` under
/// `U* A U`: first a phase on column `q` makes `a_pq` real, then a real
/// Jacobi rotation finishes the job. Returns `(u_pp, u_pq, u_qp, u_qq)`.
pub(super) fn jacobi_rotation(app: f64, aqq: f64, apq: C64) -> (C64, C64, C64, C64) {
    let g = apq.norm();
    let phase = apq / g;
    let theta = (aqq - app) / (2.0 * g);
    let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
    let c = 1.0 / (t * t + 1.0).sqrt();
    let s = t * c;
    (C64::new(c, 0.0), C64::new(s, 0.0), -phase.conj() * s, phase.conj() * c)
}

/// Cyclic Jacobi eigensolver for small Hermitian matrices.
pub fn hermitian_eig(h: &ComplexMatrix) -> Result<HermitianEig> {
    let n = h.rows();
    if h.cols() != n {
        return Err(Error::DimensionMismatch(format!("eig of a {}x{} matrix", n, h.cols())));
    }
    let norm = h.frobenius_norm();
    let asym = h.sub(&h.adjoint())?.frobenius_norm();
    if asym > 1e-10 * norm.max(f64::MIN_POSITIVE) {
        return Err(Error::InvalidArgument(format!(
            "matrix is not Hermitian (||H - H*||_F = {asym:e})"
        )));
    }
    let mut a = h.add(&h.adjoint())?.scale_real(0.5);
    for i in 0..n {
        a[(i, i)] = C64::new(a[(i, i)].re, 0.0);
    }
    let mut v = ComplexMatrix::identity(n);
    if norm == 0.0 || n == 1 {
        return Ok(sorted(a, v));
    }

    let tol = f64::EPSILON * norm;
    let mut converged = false;
    for _ in 0..MAX_SWEEPS {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| a[(i, j)].norm_sqr())
            .sum::<f64>()
            .sqrt();
        if off <= tol {
            converged = true;
            break;
        }
        for p in 0..n - 1 {
            for q in p + 1..n {
                let apq = a[(p, q)];
                if apq.norm() <= f64::MIN_POSITIVE {
                    continue;
                }
                let (upp, upq, uqp, uqq) = jacobi_rotation(a[(p, p)].re, a[(q, q)].re, apq);
                // A <- A U
                for k in 0..n {
                    let (akp, akq) = (a[(k, p)], a[(k, q)]);
                    a[(k, p)] = akp * upp + akq * uqp;
                    a[(k, q)] = akp * upq + akq * uqq;
                }
                // A <- U* A
                for k in 0..n {
                    let (apk, aqk) = (a[(p, k)], a[(q, k)]);
                    a[(p, k)] = upp.conj() * apk + uqp.conj() * aqk;
                    a[(q, k)] = upq.conj() * apk + uqq.conj() * aqk;
                }
                a[(p, q)] = C64::new(0.0, 0.0);
                a[(q, p)] = C64::new(0.0, 0.0);
                a[(p, p)] = C64::new(a[(p, p)].re, 0.0);
                a[(q, q)] = C64::new(a[(q, q)].re, 0.0);
                for k in 0..n {
                    let (vkp, vkq) = (v[(k, p)], v[(k, q)]);
                    v[(k, p)] = vkp * upp + vkq * uqp;
                    v[(k, q)] = vkp * upq + vkq * uqq;
                }
            }
        }
    }
    if !converged {
        return Err(Error::NoConvergence { sweeps: MAX_SWEEPS });
    }
    Ok(sorted(a, v))
}

fn sorted(a: ComplexMatrix, v: ComplexMatrix) -> HermitianEig {
    let n = a.rows();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| a[(i, i)].re.total_cmp(&a[(j, j)].re));
    let values = order.iter().map(|&i| a[(i, i)].re).collect();
    let vectors = ComplexMatrix::from_fn(n, n, |i, j| v[(i, order[j])]);
    HermitianEig { values, vectors }
}

fn reconstruct(eig: &HermitianEig, f: impl Fn(f64) -> f64) -> ComplexMatrix {
    let q = &eig.vectors;
    let n = q.rows();
    let weights: Vec<f64> = eig.values.iter().map(|&l| f(l)).collect();
    let mut qd = q.clone();
    qd.scale_columns(&weights);
    let mut out = ComplexMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            out[(i, j)] = (0..n).map(|k| qd[(i, k)] * q[(j, k)].conj()).sum();
        }
    }
    out
}

/// Hermitian PSD square root. Eigenvalues slightly below zero (relative
/// `1e-10`) are clamped; anything more negative is rejected.
pub fn psd_sqrt(h: &ComplexMatrix) -> Result<ComplexMatrix> {
    let eig = hermitian_eig(h)?;
    let scale = eig.values.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
    let min = eig.values.first().copied().unwrap_or(0.0);
    if min < -1e-10 * scale {
        return Err(Error::NotPsd { min_eig: min });
    }
    Ok(reconstruct(&eig, |l| l.max(0.0).sqrt()))
}

/// Inverse of a Hermitian positive definite Gram matrix. Fails with
/// [`Error::DegenerateGram`] when `lambda_min / lambda_max < 1e-12`.
pub fn inverse_gram(h: &ComplexMatrix) -> Result<ComplexMatrix> {
    let eig = hermitian_eig(h)?;
    let max = eig.values.last().copied().unwrap_or(0.0);
    let min = eig.values.first().copied().unwrap_or(0.0);
    let ratio = if max > 0.0 { min / max } else { 0.0 };
    if !(ratio >= 1e-12) {
        return Err(Error::DegenerateGram { ratio });
    }
    Ok(reconstruct(&eig, |l| 1.0 / l))
}

/// General square inverse by Gauss-Jordan elimination with partial pivoting.
pub fn inverse(h: &ComplexMatrix) -> Result<ComplexMatrix> {
    let n = h.rows();
    if h.cols() != n {
        return Err(Error::DimensionMismatch(format!("inverse of a {}x{} matrix", n, h.cols())));
    }
    let scale = h.as_slice().iter().fold(0.0_f64, |m, v| m.max(v.norm()));
    if scale == 0.0 {
        return Err(Error::Singular);
    }
    let mut a = h.clone();
    let mut inv = ComplexMatrix::identity(n);
    for col in 0..n {
        let pivot_row = (col..n)
            .max_by(|&i, &j| a[(i, col)].norm().total_cmp(&a[(j, col)].norm()))
            .expect("non-empty pivot range");
        if a[(pivot_row, col)].norm() <= 1e-12 * scale {
            return Err(Error::Singular);
        }
        if pivot_row != col {
            for k in 0..n {
                let t = a[(col, k)];
                a[(col, k)] = a[(pivot_row, k)];
                a[(pivot_row, k)] = t;
                let t = inv[(col, k)];
                inv[(col, k)] = inv[(pivot_row, k)];
                inv[(pivot_row, k)] = t;
            }
        }
        let p = a[(col, col)].inv();
        for k in 0..n {
            a[(col, k)] *= p;
            inv[(col, k)] *= p;
        }
        for i in 0..n {
            if i == col {
                continue;
            }
            let f = a[(i, col)];
            if f == C64::new(0.0, 0.0) {
                continue;
            }
            for k in 0..n {
                let (ack, ick) = (a[(col, k)], inv[(col, k)]);
                a[(i, k)] -= f * ack;
                inv[(i, k)] -= f * ick;
            }
        }
    }
    Ok(inv)
}

#[cfg(test)]
mod tests {
    use super::super::test_util::*;
    use super::*;

    fn eig_residual(h: &ComplexMatrix, e: &HermitianEig) -> f64 {
        let hq = h.matmul(&e.vectors).unwrap();
        let mut ql = e.vectors.clone();
        ql.scale_columns(&e.values);
        hq.sub(&ql).unwrap().frobenius_norm()
    }

    #[test]
    fn diagonal_and_identity() {
        let e = hermitian_eig(&ComplexMatrix::diag(&[3.0, 1.0])).unwrap();
        assert_eq!(e.values, vec![1.0, 3.0]);
        let e = hermitian_eig(&ComplexMatrix::identity(4)).unwrap();
        assert!(e.values.iter().all(|&v| (v - 1.0).abs() < 1e-15));
    }

    #[test]
    fn random_hermitian_residual() {
        for seed in 0..200 {
            let h = random_hermitian(8, seed);
            let e = hermitian_eig(&h).unwrap();
            let norm = h.frobenius_norm();
            assert!(eig_residual(&h, &e) <= 1e-10 * norm, "seed {seed}");
            let unit = e.vectors.gram().sub(&ComplexMatrix::identity(8)).unwrap();
            assert!(unit.frobenius_norm() < 1e-12);
            assert!(e.values.windows(2).all(|w| w[0] <= w[1]));
        }
    }

    #[test]
    fn rejects_non_hermitian() {
        let a = random_matrix(3, 3, 9);
        assert!(matches!(hermitian_eig(&a), Err(Error::InvalidArgument(_))));
    }

    #[test]
    fn sqrt_cases() {
        let s = psd_sqrt(&ComplexMatrix::diag(&[4.0, 9.0])).unwrap();
        assert!(s.sub(&ComplexMatrix::diag(&[2.0, 3.0])).unwrap().frobenius_norm() < 1e-14);
        let s = psd_sqrt(&ComplexMatrix::identity(3)).unwrap();
        assert!(s.sub(&ComplexMatrix::identity(3)).unwrap().frobenius_norm() < 1e-14);
        for seed in 0..200 {
            let a = random_matrix(9, 5, seed);
            let g = a.gram();
            let s = psd_sqrt(&g).unwrap();
            let err = s.matmul(&s).unwrap().sub(&g).unwrap().frobenius_norm();
            assert!(err <= 1e-9 * g.frobenius_norm(), "seed {seed}");
        }
    }

    #[test]
    fn sqrt_rejects_negative_definite() {
        let h = ComplexMatrix::diag(&[1.0, -0.5]);
        assert!(matches!(psd_sqrt(&h), Err(Error::NotPsd { .. })));
    }

    #[test]
    fn inverse_cases() {
        let i = inverse(&ComplexMatrix::identity(3)).unwrap();
        assert_eq!(i, ComplexMatrix::identity(3));
        let d = inverse(&ComplexMatrix::diag(&[2.0, 4.0])).unwrap();
        assert!(d.sub(&ComplexMatrix::diag(&[0.5, 0.25])).unwrap().frobenius_norm() < 1e-15);
        for seed in 0..200 {
            let a = random_matrix(6, 6, seed).add(&ComplexMatrix::identity(6).scale_real(4.0));
            let a = a.unwrap();
            let inv = inverse(&a).unwrap();
            let err = a.matmul(&inv).unwrap().sub(&ComplexMatrix::identity(6)).unwrap();
            assert!(err.frobenius_norm() <= 1e-10, "seed {seed}");
        }
    }

    #[test]
    fn gram_inverse_detects_rank_collapse() {
        let g = ComplexMatrix::diag(&[1.0, 1e-14]);
        assert!(matches!(inverse_gram(&g), Err(Error::DegenerateGram { .. })));
        let g = random_matrix(20, 4, 3).gram();
        let inv = inverse_gram(&g).unwrap();
        let err = g.matmul(&inv).unwrap().sub(&ComplexMatrix::identity(4)).unwrap();
        assert!(err.frobenius_norm() <= 1e-8);
        let z = ComplexMatrix::zeros(2, 2);
        assert!(matches!(inverse(&z), Err(Error::Singular)));
    }
}

use num_complex::Complex64 as C64;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use super::eig::jacobi_rotation;
use super::{thin_qr, ComplexMatrix};
use crate::error::{Error, Result};

/// A linear map `C^cols -> C^rows` known only through block products.
pub trait LinearOperator {
    fn rows(&self) -> usize;
    fn cols(&self) -> usize;
    /// `A X` for `X` of shape `cols x k`.
    fn apply(&self, x: &ComplexMatrix) -> Result<ComplexMatrix>;
    /// `A* Y` for `Y` of shape `rows x k`.
    fn apply_adjoint(&self, y: &ComplexMatrix) -> Result<ComplexMatrix>;
}

impl LinearOperator for ComplexMatrix {
    fn rows(&self) -> usize {
        ComplexMatrix::rows(self)
    }

    fn cols(&self) -> usize {
        ComplexMatrix::cols(self)
    }

    fn apply(&self, x: &ComplexMatrix) -> Result<ComplexMatrix> {
        self.matmul(x)
    }

    fn apply_adjoint(&self, y: &ComplexMatrix) -> Result<ComplexMatrix> {
        self.adjoint_matmul(y)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SvdOptions {
    pub oversample: usize,
    pub power_iters: usize,
    pub seed: u64,
}

impl SvdOptions {
    /// `oversample = max(10, 2r)`, three power iterations.
    pub fn for_rank(r: usize, seed: u64) -> Self {
        Self { oversample: (2 * r).max(10), power_iters: 3, seed }
    }
}

/// Rank-`r` factorization `A ~ U diag(s) V*`.
#[derive(Debug, Clone)]
pub struct TruncatedSvd {
    pub u: ComplexMatrix,
    /// Nonincreasing, nonnegative.
    pub s: Vec<f64>,
    pub v: ComplexMatrix,
}

impl TruncatedSvd {
    pub fn reconstruct(&self) -> ComplexMatrix {
        let mut us = self.u.clone();
        us.scale_columns(&self.s);
        us.matmul(&self.v.adjoint()).expect("svd factors agree in rank")
    }
}

/// Randomized subspace iteration for the top `r` singular triplets.
///
/// The sketch width `r + oversample` is clamped to `min(rows, cols)`. The
/// final small problem is solved with a one-sided Jacobi SVD of the
/// projected matrix, which keeps singular values accurate to roughly
/// machine precision relative to `sigma_1`.
pub fn truncated_svd<A: LinearOperator + ?Sized>(
    op: &A,
    r: usize,
    opts: SvdOptions,
) -> Result<TruncatedSvd> {
    let (n1, n2) = (op.rows(), op.cols());
    let min_dim = n1.min(n2);
    if r == 0 || r > min_dim {
        return Err(Error::InvalidArgument(format!(
            "rank {r} outside 1..={min_dim} for a {n1}x{n2} operator"
        )));
    }
    let width = (r + opts.oversample).min(min_dim);

    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let omega = ComplexMatrix::from_fn(n2, width, |_, _| {
        let re: f64 = StandardNormal.sample(&mut rng);
        let im: f64 = StandardNormal.sample(&mut rng);
        C64::new(re, im)
    });
    let mut q = thin_qr(&op.apply(&omega)?)?.q;
    for _ in 0..opts.power_iters {
        let z = thin_qr(&op.apply_adjoint(&q)?)?.q;
        q = thin_qr(&op.apply(&z)?)?.q;
    }

    // B = Q* A, handled through B* = A* Q = Q2 R2.
    let bt = op.apply_adjoint(&q)?;
    let qr2 = thin_qr(&bt)?;
    let small = jacobi_svd(&qr2.r)?;

    let u = q.matmul(&small.right.take_columns(r))?;
    let v = qr2.q.matmul(&small.left.take_columns(r))?;
    Ok(TruncatedSvd { u, s: small.values[..r].to_vec(), v })
}

/// `M = left diag(values) right*` for a square `M`, values descending.
struct SmallSvd {
    left: ComplexMatrix,
    values: Vec<f64>,
    right: ComplexMatrix,
}

const JACOBI_SWEEPS: usize = 60;

/// One-sided (Hestenes) Jacobi SVD: right rotations orthogonalize the
/// columns of `M`; their norms are the singular values.
fn jacobi_svd(m: &ComplexMatrix) -> Result<SmallSvd> {
    let n = m.cols();
    let mut w = m.clone();
    let mut v = ComplexMatrix::identity(n);
    let mut converged = n < 2;
    for _ in 0..JACOBI_SWEEPS {
        if converged {
            break;
        }
        let mut rotated = false;
        for p in 0..n - 1 {
            for q in p + 1..n {
                let (mut a, mut b, mut g) = (0.0, 0.0, C64::new(0.0, 0.0));
                for i in 0..w.rows() {
                    let (wp, wq) = (w[(i, p)], w[(i, q)]);
                    a += wp.norm_sqr();
                    b += wq.norm_sqr();
                    g += wp.conj() * wq;
                }
                if g.norm() <= f64::EPSILON * (a * b).sqrt() || g.norm() <= f64::MIN_POSITIVE {
                    continue;
                }
                rotated = true;
                let (upp, upq, uqp, uqq) = jacobi_rotation(a, b, g);
                for mat in [&mut w, &mut v] {
                    for i in 0..mat.rows() {
                        let (xp, xq) = (mat[(i, p)], mat[(i, q)]);
                        mat[(i, p)] = xp * upp + xq * uqp;
                        mat[(i, q)] = xp * upq + xq * uqq;
                    }
                }
            }
        }
        converged = !rotated;
    }
    if !converged {
        return Err(Error::NoConvergence { sweeps: JACOBI_SWEEPS });
    }

    let norms: Vec<f64> = (0..n)
        .map(|j| (0..w.rows()).map(|i| w[(i, j)].norm_sqr()).sum::<f64>().sqrt())
        .collect();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&i, &j| norms[j].total_cmp(&norms[i]).then(i.cmp(&j)));
    let top = norms.iter().fold(0.0_f64, |m, &x| m.max(x));
    let floor = top * f64::EPSILON * n as f64;

    let values: Vec<f64> = order.iter().map(|&j| norms[j]).collect();
    let right = ComplexMatrix::from_fn(n, n, |i, k| v[(i, order[k])]);
    let mut left_cols: Vec<Option<Vec<C64>>> = order
        .iter()
        .map(|&j| {
            (norms[j] > floor && norms[j] > 0.0)
                .then(|| (0..w.rows()).map(|i| w[(i, j)] / norms[j]).collect())
        })
        .collect();
    complete_orthonormal(w.rows(), &mut left_cols);
    let left_cols: Vec<Vec<C64>> = left_cols.into_iter().map(|c| c.expect("completed")).collect();
    let left = ComplexMatrix::from_columns(w.rows(), &left_cols)?;
    Ok(SmallSvd { left, values, right })
}

/// Fills missing columns with unit vectors orthogonal to all others.
fn complete_orthonormal(dim: usize, cols: &mut [Option<Vec<C64>>]) {
    let mut candidate = 0;
    for k in 0..cols.len() {
        if cols[k].is_some() {
            continue;
        }
        while candidate < dim {
            let mut e = vec![C64::new(0.0, 0.0); dim];
            e[candidate] = C64::new(1.0, 0.0);
            candidate += 1;
            for _ in 0..2 {
                for other in cols.iter().flatten() {
                    let proj: C64 = other.iter().zip(&e).map(|(o, x)| o.conj() * x).sum();
                    for (x, o) in e.iter_mut().zip(other) {
                        *x -= proj * o;
                    }
                }
            }
            let norm = e.iter().map(|x| x.norm_sqr()).sum::<f64>().sqrt();
            if norm > 0.5 {
                cols[k] = Some(e.into_iter().map(|x| x / norm).collect());
                break;
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::super::test_util::*;
    use super::super::{hermitian_eig, thin_qr};
    use super::*;

    fn orthonormality(m: &ComplexMatrix) -> f64 {
        m.gram().sub(&ComplexMatrix::identity(m.cols())).unwrap().frobenius_norm()
    }

    /// Reference singular values from the eigenvalues of `A* A`.
    fn dense_singular_values(a: &ComplexMatrix) -> Vec<f64> {
        let mut vals: Vec<f64> =
            hermitian_eig(&a.gram()).unwrap().values.into_iter().map(|l| l.max(0.0).sqrt()).collect();
        vals.reverse();
        vals
    }

    fn low_rank(n1: usize, n2: usize, r: usize, seed: u64) -> ComplexMatrix {
        random_matrix(n1, r, seed).matmul(&random_matrix(r, n2, seed + 1000)).unwrap()
    }

    #[test]
    fn dense_random_top_values() {
        // A Gaussian matrix has no spectral gap, so the default three power
        // iterations leave ~1e-5 error; subspace iteration needs a few more.
        let a = random_matrix(40, 30, 11);
        let opts = SvdOptions { power_iters: 8, ..SvdOptions::for_rank(5, 1) };
        let svd = truncated_svd(&a, 5, opts).unwrap();
        let want = dense_singular_values(&a);
        for k in 0..5 {
            assert!((svd.s[k] - want[k]).abs() <= 1e-6 * want[k], "k = {k}: {} vs {}", svd.s[k], want[k]);
        }
        assert!(orthonormality(&svd.u) <= 1e-10);
        assert!(orthonormality(&svd.v) <= 1e-10);
        assert!(svd.s.windows(2).all(|w| w[0] >= w[1]));
    }

    #[test]
    fn exact_rank_reconstruction() {
        for seed in 0..200 {
            let a = low_rank(30, 25, 3, seed);
            let svd = truncated_svd(&a, 3, SvdOptions::for_rank(3, seed)).unwrap();
            let err = svd.reconstruct().sub(&a).unwrap().frobenius_norm();
            assert!(err <= 1e-8 * a.frobenius_norm(), "seed {seed}");
            assert!(orthonormality(&svd.u) <= 1e-10);
            assert!(orthonormality(&svd.v) <= 1e-10);
        }
    }

    #[test]
    fn rank_gap_is_tiny_for_exact_rank() {
        let a = low_rank(60, 50, 4, 3);
        let svd = truncated_svd(&a, 5, SvdOptions::for_rank(5, 2)).unwrap();
        assert!(svd.s[4] / svd.s[0] <= 1e-12, "{:?}", svd.s);
        assert!(orthonormality(&svd.v) <= 1e-10);
    }

    #[test]
    fn zero_operator() {
        let a = ComplexMatrix::zeros(12, 10);
        let svd = truncated_svd(&a, 3, SvdOptions::for_rank(3, 0)).unwrap();
        assert!(svd.s.iter().all(|&s| s == 0.0));
        assert!(orthonormality(&svd.u) <= 1e-12);
        assert!(orthonormality(&svd.v) <= 1e-12);
    }

    #[test]
    fn rank_out_of_range() {
        let a = random_matrix(4, 3, 0);
        assert!(truncated_svd(&a, 4, SvdOptions::for_rank(4, 0)).is_err());
        assert!(truncated_svd(&a, 0, SvdOptions::for_rank(0, 0)).is_err());
    }

    #[test]
    fn small_jacobi_matches_eig() {
        let a = random_matrix(8, 8, 5);
        let s = jacobi_svd(&a).unwrap();
        let want = dense_singular_values(&a);
        for (x, y) in s.values.iter().zip(&want) {
            assert!((x - y).abs() < 1e-12 * want[0]);
        }
        let mut ls = s.left.clone();
        ls.scale_columns(&s.values);
        let recon = ls.matmul(&s.right.adjoint()).unwrap().sub(&a).unwrap().frobenius_norm();
        assert!(recon < 1e-12 * a.frobenius_norm());
        assert!(orthonormality(&thin_qr(&s.left).unwrap().q) < 1e-12);
    }
}

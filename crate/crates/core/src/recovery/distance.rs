//! Alignment distance between factor pairs, up to the `GL(r)` ambiguity of
//! `L R*`:
//!
//! `dist^2 = inf_Q ||(L Q - L*) S||_F^2 + ||(R Q^{-*} - R*) S||_F^2`,
//! `S = Sigma*^{1/2}`.

use num_complex::Complex64 as C64;

use super::solver::Factors;
use crate::error::{Error, Result};
use crate::hankel::{HankelOps, WeightedSignal};
use crate::linalg::{inverse, inverse_gram, truncated_svd, ComplexMatrix, SvdOptions};

const MAX_ROUNDS: usize = 50;
const REL_CHANGE: f64 = 1e-10;

/// Balanced factors `L* = U Sigma^{1/2}`, `R* = V Sigma^{1/2}` of the rank-`r`
/// truncation of `G z`, and the singular values.
pub fn ground_truth_factors(z: &WeightedSignal, r: usize) -> Result<(Factors, Vec<f64>)> {
    let ops = HankelOps::new(z.shape);
    let svd = truncated_svd(&ops.operator(&z.z)?, r, SvdOptions::for_rank(r, 0))?;
    let root: Vec<f64> = svd.s.iter().map(|s| s.sqrt()).collect();
    let (mut l, mut rr) = (svd.u, svd.v);
    l.scale_columns(&root);
    rr.scale_columns(&root);
    Ok((Factors { l, r: rr }, svd.s))
}

struct Target<'a> {
    l: &'a ComplexMatrix,
    r: &'a ComplexMatrix,
    l_star: &'a ComplexMatrix,
    r_star: &'a ComplexMatrix,
    s: ComplexMatrix,
}

impl Target<'_> {
    /// Residual blocks and `Q^{-*}`, or `None` for a singular `Q`.
    fn residuals(&self, q: &ComplexMatrix) -> Option<(ComplexMatrix, ComplexMatrix, ComplexMatrix)> {
        let p = inverse(q).ok()?.adjoint();
        let e1 = self.l.matmul(q).ok()?.sub(self.l_star).ok()?.matmul(&self.s).ok()?;
        let e2 = self.r.matmul(&p).ok()?.sub(self.r_star).ok()?.matmul(&self.s).ok()?;
        Some((e1, e2, p))
    }

    fn objective(&self, q: &ComplexMatrix) -> Option<f64> {
        let (e1, e2, _) = self.residuals(q)?;
        let v = e1.frobenius_norm().powi(2) + e2.frobenius_norm().powi(2);
        v.is_finite().then_some(v)
    }
}

/// `G[a, b] = sum_j conj(X[a, j]) X[b, j]`.
fn row_gram(x: &ComplexMatrix) -> ComplexMatrix {
    let n = x.rows();
    ComplexMatrix::from_fn(n, n, |a, b| {
        x.row(a).iter().zip(x.row(b)).map(|(u, v)| u.conj() * v).sum()
    })
}

/// Upper bound on `dist(L, R; L*, R*)` with weights `sigma_star`.
///
/// Starts from the better of the two one-sided least-squares alignments and
/// refines `Q` with damped Gauss-Newton steps on the `2 r^2` real unknowns,
/// for at most 50 rounds or until the relative decrease drops to `1e-10`.
/// Any `Q` gives an upper bound, so the result never underestimates.
pub fn approx_dist(
    factors: &Factors,
    l_star: &ComplexMatrix,
    r_star: &ComplexMatrix,
    sigma_star: &[f64],
) -> Result<f64> {
    let r = factors.rank();
    if l_star.shape() != factors.l.shape()
        || r_star.shape() != factors.r.shape()
        || sigma_star.len() != r
    {
        return Err(Error::DimensionMismatch("factor shapes differ from the reference".into()));
    }
    let root: Vec<f64> = sigma_star.iter().map(|s| s.max(0.0).sqrt()).collect();
    let target = Target {
        l: &factors.l,
        r: &factors.r,
        l_star,
        r_star,
        s: ComplexMatrix::diag(&root),
    };

    let mut candidates = vec![ComplexMatrix::identity(r)];
    if let Ok(g) = inverse_gram(&factors.l.gram()) {
        candidates.push(g.matmul(&factors.l.adjoint_matmul(l_star)?)?);
    }
    if let Ok(g) = inverse_gram(&factors.r.gram()) {
        let p = g.matmul(&factors.r.adjoint_matmul(r_star)?)?;
        if let Ok(q) = inverse(&p.adjoint()) {
            candidates.push(q);
        }
    }
    let (mut q, mut phi) = candidates
        .into_iter()
        .filter_map(|q| target.objective(&q).map(|v| (q, v)))
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .ok_or(Error::Singular)?;

    let scale = l_star.matmul(&target.s)?.frobenius_norm().powi(2)
        + r_star.matmul(&target.s)?.frobenius_norm().powi(2);
    let mut damping = 1e-6;
    for _ in 0..MAX_ROUNDS {
        if phi <= 1e-30 * scale {
            break;
        }
        let (h, g) = normal_equations(&target, &q).ok_or(Error::Singular)?;
        let dim = g.len();
        let trace = (0..dim).map(|i| h[i][i]).sum::<f64>() / dim as f64;
        let mut improved = None;
        for _ in 0..30 {
            let delta = match solve_damped(&h, &g, damping * trace.max(f64::MIN_POSITIVE)) {
                Some(d) => d,
                None => {
                    damping *= 4.0;
                    continue;
                }
            };
            let step = ComplexMatrix::from_fn(r, r, |a, b| {
                let k = a * r + b;
                C64::new(delta[2 * k], delta[2 * k + 1])
            });
            let trial = q.add(&step)?;
            match target.objective(&trial) {
                Some(v) if v < phi => {
                    improved = Some((trial, v));
                    damping = (damping / 3.0).max(1e-12);
                    break;
                }
                _ => damping *= 4.0,
            }
        }
        match improved {
            Some((trial, v)) => {
                let rel = (phi - v) / phi;
                q = trial;
                phi = v;
                if rel <= REL_CHANGE {
                    break;
                }
            }
            None => break,
        }
    }
    Ok(phi.sqrt())
}

/// Gauss-Newton system `H delta = -g` for the real parameters
/// `(Re dQ[a, b], Im dQ[a, b])`, built from `r x r` Grams only.
///
/// With `A = L`, `X = S`, `B = R P`, `Y = P S`, and `P = Q^{-*}`, a step `dQ`
/// changes the residual blocks by `sum dQ_ab A_a X_b` and
/// `-sum conj(dQ_ab) B_b Y_a` (columns `A_a`, `B_b`; rows `X_b`, `Y_a`).
fn normal_equations(target: &Target<'_>, q: &ComplexMatrix) -> Option<(Vec<Vec<f64>>, Vec<f64>)> {
    let r = q.rows();
    let (e1, e2, p) = target.residuals(q)?;
    let a = target.l;
    let x = &target.s;
    let b = target.r.matmul(&p).ok()?;
    let y = p.matmul(&target.s).ok()?;

    let ga = a.gram();
    let gb = b.gram();
    let gx = row_gram(x);
    let gy = row_gram(&y);
    // <M_ab, e1> and <K_ab, e2>
    let m_e = a.adjoint_matmul(&e1).ok()?.matmul(&x.adjoint()).ok()?;
    let k_e = b.adjoint_matmul(&e2).ok()?.matmul(&y.adjoint()).ok()?;

    let dim = 2 * r * r;
    let mut h = vec![vec![0.0; dim]; dim];
    let mut g = vec![0.0; dim];
    let i_unit = C64::new(0.0, 1.0);
    for a1 in 0..r {
        for b1 in 0..r {
            let k1 = a1 * r + b1;
            let me = m_e[(a1, b1)];
            let ke = k_e[(b1, a1)];
            g[2 * k1] = (me - ke).re;
            g[2 * k1 + 1] = (-i_unit * (me + ke)).re;
            for a2 in 0..r {
                for b2 in 0..r {
                    let k2 = a2 * r + b2;
                    let mm = ga[(a1, a2)] * gx[(b1, b2)];
                    let kk = gb[(b1, b2)] * gy[(a1, a2)];
                    h[2 * k1][2 * k2] = (mm + kk).re;
                    h[2 * k1][2 * k2 + 1] = (i_unit * (mm - kk)).re;
                    h[2 * k1 + 1][2 * k2] = (-i_unit * (mm - kk)).re;
                    h[2 * k1 + 1][2 * k2 + 1] = (mm + kk).re;
                }
            }
        }
    }
    Some((h, g))
}

/// Solves `(H + mu I) x = -g` by Gaussian elimination with partial pivoting.
fn solve_damped(h: &[Vec<f64>], g: &[f64], mu: f64) -> Option<Vec<f64>> {
    let n = g.len();
    let mut m: Vec<Vec<f64>> = h
        .iter()
        .enumerate()
        .map(|(i, row)| {
            let mut row = row.clone();
            row[i] += mu;
            row.push(-g[i]);
            row
        })
        .collect();
    for col in 0..n {
        let pivot = (col..n).max_by(|&i, &j| m[i][col].abs().total_cmp(&m[j][col].abs()))?;
        if m[pivot][col].abs() <= f64::MIN_POSITIVE {
            return None;
        }
        m.swap(col, pivot);
        for row in col + 1..n {
            let f = m[row][col] / m[col][col];
            if f != 0.0 {
                for k in col..=n {
                    m[row][k] -= f * m[col][k];
                }
            }
        }
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        let tail: f64 = (i + 1..n).map(|k| m[i][k] * x[k]).sum();
        x[i] = (m[i][n] - tail) / m[i][i];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::test_util::random_matrix;

    fn setup(seed: u64) -> (Factors, Vec<f64>) {
        let l = random_matrix(20, 3, seed);
        let r = random_matrix(15, 3, seed + 50);
        (Factors { l, r }, vec![3.0, 2.0, 0.5])
    }

    #[test]
    fn zero_at_reference() {
        let (f, s) = setup(1);
        assert!(approx_dist(&f, &f.l, &f.r, &s).unwrap() <= 1e-12);
    }

    #[test]
    fn gauge_invariance() {
        for seed in 0..10 {
            let (f, s) = setup(seed);
            let a = random_matrix(3, 3, seed + 100);
            let moved = Factors {
                l: f.l.matmul(&a).unwrap(),
                r: f.r.matmul(&inverse(&a).unwrap().adjoint()).unwrap(),
            };
            assert!(approx_dist(&moved, &f.l, &f.r, &s).unwrap() <= 1e-8, "seed {seed}");
        }
    }

    /// Real parts of the Gauss-Newton gradient match finite differences of
    /// the objective (the gradient of `phi` is `2 g`).
    #[test]
    fn gradient_matches_finite_differences() {
        let (f, s) = setup(3);
        let target_l = random_matrix(20, 3, 7);
        let target_r = random_matrix(15, 3, 8);
        let root: Vec<f64> = s.iter().map(|v| v.sqrt()).collect();
        let target = Target {
            l: &f.l,
            r: &f.r,
            l_star: &target_l,
            r_star: &target_r,
            s: ComplexMatrix::diag(&root),
        };
        let q = ComplexMatrix::identity(3).add(&random_matrix(3, 3, 9).scale_real(0.1)).unwrap();
        let (h, g) = normal_equations(&target, &q).unwrap();
        let eps = 1e-6;
        for k in 0..18 {
            let (a, b, imag) = (k / 2 / 3, (k / 2) % 3, k % 2 == 1);
            let bump = |sign: f64| {
                let mut qq = q.clone();
                qq[(a, b)] += if imag { C64::new(0.0, sign * eps) } else { C64::new(sign * eps, 0.0) };
                target.objective(&qq).unwrap()
            };
            let fd = (bump(1.0) - bump(-1.0)) / (2.0 * eps);
            assert!((fd - 2.0 * g[k]).abs() <= 1e-5 * fd.abs().max(1.0), "k {k}: {fd} vs {}", 2.0 * g[k]);
            assert!(h[k][k] >= 0.0);
            for j in 0..18 {
                assert!((h[k][j] - h[j][k]).abs() <= 1e-10 * h[k][k].abs().max(1.0));
            }
        }
    }

    #[test]
    fn bound_is_no_worse_than_least_squares_start() {
        let (f, s) = setup(4);
        let l_star = f.l.add(&random_matrix(20, 3, 11).scale_real(0.05)).unwrap();
        let r_star = f.r.add(&random_matrix(15, 3, 12).scale_real(0.05)).unwrap();
        let d = approx_dist(&f, &l_star, &r_star, &s).unwrap();
        let root: Vec<f64> = s.iter().map(|v| v.sqrt()).collect();
        let sm = ComplexMatrix::diag(&root);
        let at_identity = (f.l.sub(&l_star).unwrap().matmul(&sm).unwrap().frobenius_norm().powi(2)
            + f.r.sub(&r_star).unwrap().matmul(&sm).unwrap().frobenius_norm().powi(2))
        .sqrt();
        assert!(d <= at_identity);
        assert!(d > 0.0);
    }

    #[test]
    fn shape_errors() {
        let (f, s) = setup(5);
        assert!(approx_dist(&f, &f.r, &f.r, &s).is_err());
        assert!(approx_dist(&f, &f.l, &f.r, &s[..2]).is_err());
    }
}

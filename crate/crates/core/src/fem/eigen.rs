use alloc::vec;
use alloc::vec::Vec;

use rand_chacha::rand_core::{RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::solve::pcg;
use super::{CsrMatrix, DEFAULT_CG_TOL};
use crate::num::{axpy, dot, norm};
use crate::{Error, FloatExt, Result};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct EigOptions {
    /// Relative change of the Rayleigh quotient between iterates.
    pub rq_tol: f64,
    /// Relative residual `‖Au − λMu‖ / ‖Mu‖`.
    pub residual_tol: f64,
    pub max_iter: usize,
    pub cg_tol: f64,
    /// Seed of the random start block.
    pub seed: u64,
    /// Block size of the subspace iteration. Two vectors resolve the
    /// near-degenerate pairs of symmetric domains.
    pub block: usize,
}

impl Default for EigOptions {
    fn default() -> Self {
        Self {
            rq_tol: 1e-9,
            residual_tol: 1e-6,
            max_iter: 2000,
            cg_tol: DEFAULT_CG_TOL,
            seed: 0x5eed,
            block: 2,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct EigPair {
    pub value: f64,
    /// M-normalized eigenvector.
    pub vector: Vec<f64>,
    pub iterations: usize,
    pub residual: f64,
}

/// Removes the M-projections onto each (M-orthonormal) `basis` vector.
fn deflate(x: &mut [f64], basis: &[(Vec<f64>, Vec<f64>)]) {
    for (v, mv) in basis {
        let c = dot(x, mv);
        axpy(-c, v, x);
    }
}

/// Eigen-decomposition of a small symmetric matrix by cyclic Jacobi
/// rotations; eigenvalues ascending, eigenvectors as columns.
fn jacobi_eig(mut h: Vec<Vec<f64>>) -> (Vec<f64>, Vec<Vec<f64>>) {
    let p = h.len();
    let mut v: Vec<Vec<f64>> = (0..p).map(|i| (0..p).map(|j| if i == j { 1.0 } else { 0.0 }).collect()).collect();
    for _ in 0..100 {
        let off: f64 = (0..p).flat_map(|i| (0..p).filter(move |&j| j != i).map(move |j| (i, j))).map(|(i, j)| h[i][j] * h[i][j]).sum();
        let scale: f64 = (0..p).map(|i| h[i][i] * h[i][i]).sum();
        if off <= 1e-30 * scale.max(f64::MIN_POSITIVE) {
            break;
        }
        for i in 0..p {
            for j in i + 1..p {
                if h[i][j] == 0.0 {
                    continue;
                }
                let theta = 0.5 * (h[j][j] - h[i][i]) / h[i][j];
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let sn = t * c;
                for k in 0..p {
                    let (a, b) = (h[k][i], h[k][j]);
                    h[k][i] = c * a - sn * b;
                    h[k][j] = sn * a + c * b;
                }
                for k in 0..p {
                    let (a, b) = (h[i][k], h[j][k]);
                    h[i][k] = c * a - sn * b;
                    h[j][k] = sn * a + c * b;
                }
                for row in v.iter_mut() {
                    let (a, b) = (row[i], row[j]);
                    row[i] = c * a - sn * b;
                    row[j] = sn * a + c * b;
                }
            }
        }
    }
    let mut order: Vec<usize> = (0..p).collect();
    order.sort_by(|&a, &b| h[a][a].total_cmp(&h[b][b]));
    let values = order.iter().map(|&k| h[k][k]).collect();
    let vectors = (0..p).map(|i| order.iter().map(|&k| v[i][k]).collect()).collect();
    (values, vectors)
}

/// Smallest eigenpair of `A u = λ M u` (A SPSD, M SPD) by block inverse
/// iteration on `A + σM`, `σ = 1e-8 tr(A)/tr(M)`, with Rayleigh-Ritz on the
/// block. Iterates are kept M-orthogonal to every vector in `deflation`.
pub fn smallest_generalized_eig(
    a: &CsrMatrix,
    m: &CsrMatrix,
    deflation: &[&[f64]],
    opts: &EigOptions,
) -> Result<EigPair> {
    let n = a.dim();
    if m.dim() != n {
        return Err(Error::InvalidArgument("A and M differ in dimension".into()));
    }
    let sigma = 1e-8 * (a.trace() / m.trace()).abs().max(f64::MIN_POSITIVE);
    let shifted = a.add(1.0, m, sigma)?;
    // Gram-Schmidt the deflation space in the M inner product
    let mut basis: Vec<(Vec<f64>, Vec<f64>)> = Vec::with_capacity(deflation.len());
    for d in deflation {
        let mut v = d.to_vec();
        deflate(&mut v, &basis);
        let mv = m.mul_vec(&v);
        let s = dot(&v, &mv).sqrt();
        if !(s > 0.0) {
            return Err(Error::InvalidArgument("deflation vectors are dependent".into()));
        }
        v.iter_mut().for_each(|x| *x /= s);
        basis.push((v, mv.iter().map(|x| x / s).collect()));
    }
    let p = opts.block.max(1).min(n.saturating_sub(basis.len())).max(1);
    let mut rng = ChaCha8Rng::seed_from_u64(opts.seed);
    let random = |rng: &mut ChaCha8Rng, shift: f64| -> Vec<f64> {
        (0..n)
            .map(|_| shift + ((rng.next_u64() >> 11) as f64 / (1u64 << 53) as f64 - 0.5))
            .collect()
    };
    let mut x: Vec<Vec<f64>> = (0..p).map(|j| random(&mut rng, if j == 0 { 1.0 } else { 0.0 })).collect();
    let mut theta = vec![0.0; p];
    let mut lambda = f64::INFINITY;
    let mut residual = f64::INFINITY;
    for it in 0..=opts.max_iter {
        let mut y = if it == 0 {
            core::mem::take(&mut x)
        } else {
            let mut y = Vec::with_capacity(p);
            for (xj, &tj) in x.iter().zip(&theta) {
                let x0: Vec<f64> = xj.iter().map(|v| v / (tj + sigma)).collect();
                let rhs = m.mul_vec(xj);
                // inverse iteration tolerates inexact solves; the shifted operator
                // can be too ill-conditioned for the full CG tolerance near a kernel
                let (yj, stats, converged) = pcg(&shifted, &rhs, Some(&x0), opts.cg_tol)?;
                if !converged && !(stats.residual <= 1e-6) {
                    return Err(Error::NoConvergence {
                        iterations: it,
                        residual: stats.residual,
                    });
                }
                y.push(yj);
            }
            y
        };
        // M-orthonormalize the block against the deflation space and itself
        let mut my: Vec<Vec<f64>> = Vec::with_capacity(p);
        for j in 0..p {
            for _ in 0..2 {
                deflate(&mut y[j], &basis);
                for k in 0..j {
                    let c = dot(&y[j], &my[k]);
                    axpy(-c, &y[k].clone(), &mut y[j]);
                }
            }
            let mut mv = m.mul_vec(&y[j]);
            let mut s = dot(&y[j], &mv).sqrt();
            if !(s > 1e-12 * norm(&y[j]).max(f64::MIN_POSITIVE)) {
                // collapsed column: restart it from noise
                y[j] = random(&mut rng, 0.0);
                deflate(&mut y[j], &basis);
                for k in 0..j {
                    let c = dot(&y[j], &my[k]);
                    axpy(-c, &y[k].clone(), &mut y[j]);
                }
                mv = m.mul_vec(&y[j]);
                s = dot(&y[j], &mv).sqrt();
            }
            y[j].iter_mut().for_each(|v| *v /= s);
            mv.iter_mut().for_each(|v| *v /= s);
            my.push(mv);
        }
        let ay: Vec<Vec<f64>> = y.iter().map(|v| a.mul_vec(v)).collect();
        let h: Vec<Vec<f64>> = (0..p)
            .map(|i| (0..p).map(|j| 0.5 * (dot(&y[i], &ay[j]) + dot(&y[j], &ay[i]))).collect())
            .collect();
        let (vals, vecs) = jacobi_eig(h);
        let combine = |cols: &[Vec<f64>], j: usize| -> Vec<f64> {
            let mut out = vec![0.0; n];
            for (k, col) in cols.iter().enumerate() {
                axpy(vecs[k][j], col, &mut out);
            }
            out
        };
        x = (0..p).map(|j| combine(&y, j)).collect();
        theta = vals;
        let u = &x[0];
        let mu = combine(&my, 0);
        let mut r = combine(&ay, 0);
        let new_lambda = theta[0];
        axpy(-new_lambda, &mu, &mut r);
        residual = norm(&r) / norm(&mu);
        let change = (new_lambda - lambda).abs();
        lambda = new_lambda;
        if it == 0 {
            continue;
        }
        let settled = change <= opts.rq_tol * lambda.abs().max(sigma) && residual <= opts.residual_tol;
        if settled || residual <= 1e-3 * opts.residual_tol {
            return Ok(EigPair {
                value: lambda,
                vector: u.clone(),
                iterations: it,
                residual,
            });
        }
    }
    Err(Error::NoConvergence {
        iterations: opts.max_iter,
        residual,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;

    #[test]
    fn diagonal_pencil() {
        let a = CsrMatrix::from_diagonal(&[3.0, 1.0, 2.0, 5.0]);
        let m = CsrMatrix::identity(4);
        let e = smallest_generalized_eig(&a, &m, &[], &EigOptions::default()).unwrap();
        assert!((e.value - 1.0).abs() < 1e-12);
        assert!((e.vector[1].abs() - 1.0).abs() < 1e-6);
        let d = [0.0, 1.0, 0.0, 0.0];
        let e = smallest_generalized_eig(&a, &m, &[&d], &EigOptions::default()).unwrap();
        assert!((e.value - 2.0).abs() < 1e-12);
    }

    #[test]
    fn singular_a_gives_zero() {
        let a = CsrMatrix::from_triplets(2, vec![(0, 0, 1.0), (0, 1, -1.0), (1, 0, -1.0), (1, 1, 1.0)]);
        let m = CsrMatrix::identity(2);
        let e = smallest_generalized_eig(&a, &m, &[], &EigOptions::default()).unwrap();
        assert!(e.value.abs() < 1e-12);
        assert!((e.vector[0] - e.vector[1]).abs() < 1e-8);
    }
}

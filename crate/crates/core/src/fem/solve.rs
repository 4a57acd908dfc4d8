use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use super::CsrMatrix;
use crate::num::{axpy, dot, norm};
use crate::{Error, FloatExt, Result};

pub const DEFAULT_CG_TOL: f64 = 1e-10;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CgStats {
    pub iterations: usize,
    /// Final `‖b − Ax‖ / ‖b‖`.
    pub residual: f64,
}

/// Solves `A x = b` for SPD `A` to `‖b − Ax‖ ≤ tol ‖b‖`.
pub fn solve_spd(a: &CsrMatrix, b: &[f64], tol: f64) -> Result<Vec<f64>> {
    solve_spd_with(a, b, None, tol).map(|(x, _)| x)
}

/// Preconditioned conjugate gradients from an optional initial guess:
/// incomplete Cholesky, or Jacobi if the factorization breaks down. The
/// iteration cap is `10 n`; the stopping test uses the true residual.
pub fn solve_spd_with(a: &CsrMatrix, b: &[f64], x0: Option<&[f64]>, tol: f64) -> Result<(Vec<f64>, CgStats)> {
    let (x, stats, converged) = pcg(a, b, x0, tol)?;
    if converged {
        Ok((x, stats))
    } else {
        Err(Error::NoConvergence {
            iterations: stats.iterations,
            residual: stats.residual,
        })
    }
}

/// PCG returning the last iterate even when the cap is hit.
pub(crate) fn pcg(a: &CsrMatrix, b: &[f64], x0: Option<&[f64]>, tol: f64) -> Result<(Vec<f64>, CgStats, bool)> {
    let n = a.dim();
    if b.len() != n {
        return Err(Error::InvalidArgument(format!("rhs length {} != {n}", b.len())));
    }
    if !(tol > 0.0 && tol < 1.0) {
        return Err(Error::InvalidArgument(format!("tolerance must lie in (0, 1), got {tol}")));
    }
    let bn = norm(b);
    if bn == 0.0 {
        return Ok((vec![0.0; n], CgStats { iterations: 0, residual: 0.0 }, true));
    }
    let pre = Preconditioner::new(a);
    let mut x = match x0 {
        Some(x0) if x0.len() == n && x0.iter().all(|v| v.is_finite()) => x0.to_vec(),
        _ => vec![0.0; n],
    };
    let cap = 10 * n.max(1);
    let target = tol * bn;
    let mut r = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut q = vec![0.0; n];
    let mut it = 0;
    let mut last_restart = f64::INFINITY;
    loop {
        // (re)start from the true residual
        a.mul_vec_into(&x, &mut r);
        for i in 0..n {
            r[i] = b[i] - r[i];
        }
        let mut rn = norm(&r);
        let stats = CgStats {
            iterations: it,
            residual: rn / bn,
        };
        // a restart that gains nothing means the rounding floor is reached
        if rn <= target || it >= cap || rn > 0.5 * last_restart {
            return Ok((x, stats, rn <= target));
        }
        last_restart = rn;
        pre.apply(&r, &mut z);
        p.copy_from_slice(&z);
        let mut rz = dot(&r, &z);
        while it < cap {
            it += 1;
            a.mul_vec_into(&p, &mut q);
            let pq = dot(&p, &q);
            if !(pq > 0.0) {
                let stats = CgStats {
                    iterations: it,
                    residual: rn / bn,
                };
                return Ok((x, stats, false));
            }
            let alpha = rz / pq;
            axpy(alpha, &p, &mut x);
            axpy(-alpha, &q, &mut r);
            rn = norm(&r);
            if rn <= 0.5 * target {
                break;
            }
            pre.apply(&r, &mut z);
            let rz_new = dot(&r, &z);
            let beta = rz_new / rz;
            rz = rz_new;
            for i in 0..n {
                p[i] = z[i] + beta * p[i];
            }
        }
    }
}

enum Preconditioner {
    Jacobi(Vec<f64>),
    /// Lower factor `L ≈ chol(A)` on the pattern of the lower triangle of
    /// `A`, rows with sorted columns and the diagonal last.
    Ic {
        row_ptr: Vec<usize>,
        col: Vec<usize>,
        val: Vec<f64>,
    },
}

impl Preconditioner {
    fn new(a: &CsrMatrix) -> Self {
        Self::incomplete_cholesky(a).unwrap_or_else(|| {
            Self::Jacobi(a.diagonal().iter().map(|&d| if d > 0.0 { 1.0 / d } else { 1.0 }).collect())
        })
    }

    fn incomplete_cholesky(a: &CsrMatrix) -> Option<Self> {
        let n = a.dim();
        let (arp, acol, aval) = (a.row_ptr(), a.col_indices(), a.values());
        let mut row_ptr = Vec::with_capacity(n + 1);
        let mut col = Vec::new();
        let mut val = Vec::new();
        row_ptr.push(0);
        for i in 0..n {
            let start = col.len();
            let mut diag = None;
            for k in arp[i]..arp[i + 1] {
                match acol[k].cmp(&i) {
                    core::cmp::Ordering::Less => {
                        col.push(acol[k]);
                        val.push(aval[k]);
                    }
                    core::cmp::Ordering::Equal => diag = Some(aval[k]),
                    core::cmp::Ordering::Greater => {}
                }
            }
            let mut d = diag?;
            for p in start..col.len() {
                let k = col[p];
                // L[i,k] = (A[i,k] − Σ_{j<k} L[i,j] L[k,j]) / L[k,k]
                let (ks, ke) = (row_ptr[k], row_ptr[k + 1] - 1);
                let (mut q, mut sum) = (ks, 0.0);
                for pi in start..p {
                    let j = col[pi];
                    while q < ke && col[q] < j {
                        q += 1;
                    }
                    if q < ke && col[q] == j {
                        sum += val[pi] * val[q];
                    }
                }
                let l = (val[p] - sum) / val[ke];
                val[p] = l;
                d -= l * l;
            }
            if !(d > 0.0) || !d.is_finite() {
                return None;
            }
            col.push(i);
            val.push(d.sqrt());
            row_ptr.push(col.len());
        }
        Some(Self::Ic { row_ptr, col, val })
    }

    fn apply(&self, r: &[f64], z: &mut [f64]) {
        match self {
            Self::Jacobi(inv) => {
                for ((z, r), d) in z.iter_mut().zip(r).zip(inv) {
                    *z = d * r;
                }
            }
            Self::Ic { row_ptr, col, val } => {
                let n = r.len();
                // L y = r
                for i in 0..n {
                    let (s, e) = (row_ptr[i], row_ptr[i + 1] - 1);
                    let mut acc = r[i];
                    for p in s..e {
                        acc -= val[p] * z[col[p]];
                    }
                    z[i] = acc / val[e];
                }
                // Lᵀ z = y
                for i in (0..n).rev() {
                    let (s, e) = (row_ptr[i], row_ptr[i + 1] - 1);
                    z[i] /= val[e];
                    let zi = z[i];
                    for p in s..e {
                        z[col[p]] -= val[p] * zi;
                    }
                }
            }
        }
    }
}

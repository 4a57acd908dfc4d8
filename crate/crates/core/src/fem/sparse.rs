use alloc::format;
use alloc::vec;
use alloc::vec::Vec;

use crate::{Error, Result};

/// Square sparse matrix in compressed row form. Column indices are sorted
/// within each row and explicit zeros are kept, so matrices assembled from
/// the same element loop share a pattern.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    n: usize,
    row_ptr: Vec<usize>,
    col: Vec<usize>,
    val: Vec<f64>,
}

pub type SparseMatrix = CsrMatrix;

impl CsrMatrix {
    /// Sums duplicate `(row, col, value)` entries in input order, so pushing
    /// `(i, j, v)` and `(j, i, v)` together yields exact symmetry.
    pub fn from_triplets(n: usize, mut trips: Vec<(usize, usize, f64)>) -> Self {
        trips.sort_by(|a, b| (a.0, a.1).cmp(&(b.0, b.1)));
        let mut row_ptr = vec![0usize; n + 1];
        let mut col = Vec::with_capacity(trips.len());
        let mut val: Vec<f64> = Vec::with_capacity(trips.len());
        let mut last = (usize::MAX, usize::MAX);
        for (i, j, v) in trips {
            assert!(i < n && j < n, "triplet ({i}, {j}) out of range for dimension {n}");
            if (i, j) == last {
                *val.last_mut().unwrap() += v;
            } else {
                col.push(j);
                val.push(v);
                row_ptr[i + 1] += 1;
                last = (i, j);
            }
        }
        for i in 0..n {
            row_ptr[i + 1] += row_ptr[i];
        }
        Self { n, row_ptr, col, val }
    }

    pub fn from_diagonal(d: &[f64]) -> Self {
        let n = d.len();
        Self {
            n,
            row_ptr: (0..=n).collect(),
            col: (0..n).collect(),
            val: d.to_vec(),
        }
    }

    pub fn identity(n: usize) -> Self {
        Self::from_diagonal(&vec![1.0; n])
    }

    pub fn dim(&self) -> usize {
        self.n
    }

    pub fn nnz(&self) -> usize {
        self.val.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_indices(&self) -> &[usize] {
        &self.col
    }

    pub fn values(&self) -> &[f64] {
        &self.val
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        let r = &self.col[self.row_ptr[i]..self.row_ptr[i + 1]];
        match r.binary_search(&j) {
            Ok(k) => self.val[self.row_ptr[i] + k],
            Err(_) => 0.0,
        }
    }

    /// `y = A x`
    pub fn mul_vec_into(&self, x: &[f64], y: &mut [f64]) {
        for i in 0..self.n {
            let mut s = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                s += self.val[k] * x[self.col[k]];
            }
            y[i] = s;
        }
    }

    pub fn mul_vec(&self, x: &[f64]) -> Vec<f64> {
        let mut y = vec![0.0; self.n];
        self.mul_vec_into(x, &mut y);
        y
    }

    /// `xᵀ A x`
    pub fn quad_form(&self, x: &[f64]) -> f64 {
        self.bilinear(x, x)
    }

    /// `xᵀ A y`
    pub fn bilinear(&self, x: &[f64], y: &[f64]) -> f64 {
        let mut s = 0.0;
        for i in 0..self.n {
            let mut r = 0.0;
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                r += self.val[k] * y[self.col[k]];
            }
            s += x[i] * r;
        }
        s
    }

    pub fn diagonal(&self) -> Vec<f64> {
        (0..self.n).map(|i| self.get(i, i)).collect()
    }

    pub fn trace(&self) -> f64 {
        self.diagonal().iter().sum()
    }

    /// Exact (bitwise) symmetry.
    pub fn is_symmetric(&self) -> bool {
        (0..self.n).all(|i| {
            (self.row_ptr[i]..self.row_ptr[i + 1]).all(|k| self.get(self.col[k], i) == self.val[k])
        })
    }

    pub fn same_pattern(&self, other: &CsrMatrix) -> bool {
        self.n == other.n && self.row_ptr == other.row_ptr && self.col == other.col
    }

    pub fn scaled(&self, s: f64) -> CsrMatrix {
        CsrMatrix {
            val: self.val.iter().map(|v| v * s).collect(),
            ..self.clone()
        }
    }

    /// `Σ c_k A_k` over matrices sharing one pattern.
    pub fn combine(terms: &[(f64, &CsrMatrix)]) -> Result<CsrMatrix> {
        let (c0, a0) = *terms
            .first()
            .ok_or_else(|| Error::InvalidArgument("empty linear combination".into()))?;
        let mut out = a0.scaled(c0);
        for &(c, a) in &terms[1..] {
            if !a.same_pattern(a0) {
                return Err(Error::InvalidArgument("matrices do not share a pattern".into()));
            }
            for (o, v) in out.val.iter_mut().zip(&a.val) {
                *o += c * v;
            }
        }
        Ok(out)
    }

    /// `alpha A + beta B` for arbitrary patterns (rows merged).
    pub fn add(&self, alpha: f64, other: &CsrMatrix, beta: f64) -> Result<CsrMatrix> {
        if self.n != other.n {
            return Err(Error::InvalidArgument(format!(
                "dimension mismatch {} vs {}",
                self.n, other.n
            )));
        }
        let mut row_ptr = vec![0usize; self.n + 1];
        let mut col = Vec::with_capacity(self.nnz() + other.nnz());
        let mut val = Vec::with_capacity(self.nnz() + other.nnz());
        for i in 0..self.n {
            let (mut a, ae) = (self.row_ptr[i], self.row_ptr[i + 1]);
            let (mut b, be) = (other.row_ptr[i], other.row_ptr[i + 1]);
            while a < ae || b < be {
                let ca = if a < ae { self.col[a] } else { usize::MAX };
                let cb = if b < be { other.col[b] } else { usize::MAX };
                if ca < cb {
                    col.push(ca);
                    val.push(alpha * self.val[a]);
                    a += 1;
                } else if cb < ca {
                    col.push(cb);
                    val.push(beta * other.val[b]);
                    b += 1;
                } else {
                    col.push(ca);
                    val.push(alpha * self.val[a] + beta * other.val[b]);
                    a += 1;
                    b += 1;
                }
            }
            row_ptr[i + 1] = col.len();
        }
        Ok(CsrMatrix {
            n: self.n,
            row_ptr,
            col,
            val,
        })
    }

    /// Adds `d` to the diagonal; every diagonal entry must be in the pattern.
    pub fn add_diagonal(&mut self, d: &[f64]) -> Result<()> {
        for i in 0..self.n {
            if d[i] == 0.0 {
                continue;
            }
            let r = &self.col[self.row_ptr[i]..self.row_ptr[i + 1]];
            let k = r
                .binary_search(&i)
                .map_err(|_| Error::InvalidArgument(format!("row {i} has no diagonal entry")))?;
            self.val[self.row_ptr[i] + k] += d[i];
        }
        Ok(())
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut a = vec![vec![0.0; self.n]; self.n];
        for i in 0..self.n {
            for k in self.row_ptr[i]..self.row_ptr[i + 1] {
                a[i][self.col[k]] += self.val[k];
            }
        }
        a
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn triplets_sum_duplicates_and_keep_zeros() {
        let a = CsrMatrix::from_triplets(3, vec![(0, 0, 1.0), (2, 1, 0.0), (0, 0, 2.0), (1, 2, 5.0)]);
        assert_eq!(a.nnz(), 3);
        assert_eq!(a.get(0, 0), 3.0);
        assert_eq!(a.get(2, 1), 0.0);
        assert_eq!(a.get(1, 2), 5.0);
        assert_eq!(a.mul_vec(&[1.0, 1.0, 1.0]), vec![3.0, 5.0, 0.0]);
        assert!(!a.is_symmetric());
    }

    #[test]
    fn add_merges_patterns() {
        let a = CsrMatrix::from_triplets(2, vec![(0, 0, 1.0), (1, 1, 1.0)]);
        let b = CsrMatrix::from_triplets(2, vec![(0, 1, 2.0), (1, 0, 2.0), (1, 1, 1.0)]);
        let c = a.add(2.0, &b, 0.5).unwrap();
        assert_eq!(c.to_dense(), vec![vec![2.0, 1.0], vec![1.0, 2.5]]);
        assert!(c.is_symmetric());
        assert!(CsrMatrix::combine(&[(1.0, &a), (1.0, &b)]).is_err());
        let mut d = a.clone();
        d.add_diagonal(&[1.0, -1.0]).unwrap();
        assert_eq!(d.diagonal(), vec![2.0, 0.0]);
    }
}

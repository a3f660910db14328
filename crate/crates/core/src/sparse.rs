//! Compressed sparse column storage for complex matrices.

use std::fmt::Write as _;

use crate::error::{DncError, Result};
use crate::linalg::{CMat, C64};

#[derive(Debug, Clone, PartialEq)]
pub struct CscMatrix {
    nrows: usize,
    ncols: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<C64>,
}

impl CscMatrix {
    pub fn zeros(nrows: usize, ncols: usize) -> Self {
        CscMatrix {
            nrows,
            ncols,
            col_ptr: vec![0; ncols + 1],
            row_idx: Vec::new(),
            values: Vec::new(),
        }
    }

    /// Build from `(row, col, value)` triplets. Duplicates are summed in the
    /// order they appear, so the result is deterministic for a fixed input order.
    pub fn from_triplets(
        nrows: usize,
        ncols: usize,
        mut triplets: Vec<(usize, usize, C64)>,
    ) -> Self {
        triplets.sort_by_key(|&(r, c, _)| (c, r));
        let mut col_ptr = vec![0usize; ncols + 1];
        let mut row_idx = Vec::with_capacity(triplets.len());
        let mut values: Vec<C64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            assert!(r < nrows && c < ncols, "triplet ({r}, {c}) out of bounds");
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
            } else {
                row_idx.push(r);
                values.push(v);
                col_ptr[c + 1] += 1;
                last = Some((r, c));
            }
        }
        for c in 0..ncols {
            col_ptr[c + 1] += col_ptr[c];
        }
        CscMatrix {
            nrows,
            ncols,
            col_ptr,
            row_idx,
            values,
        }
    }

    pub fn from_dense(a: &CMat) -> Self {
        let mut t = Vec::new();
        for c in 0..a.ncols() {
            for r in 0..a.nrows() {
                let v = a[(r, c)];
                if v != C64::new(0.0, 0.0) {
                    t.push((r, c, v));
                }
            }
        }
        Self::from_triplets(a.nrows(), a.ncols(), t)
    }

    pub fn nrows(&self) -> usize {
        self.nrows
    }

    pub fn ncols(&self) -> usize {
        self.ncols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Stored `(row, value)` pairs of column `c`, rows ascending.
    pub fn col(&self, c: usize) -> impl Iterator<Item = (usize, C64)> + '_ {
        let range = self.col_ptr[c]..self.col_ptr[c + 1];
        self.row_idx[range.clone()]
            .iter()
            .copied()
            .zip(self.values[range].iter().copied())
    }

    pub fn col_nnz(&self, c: usize) -> usize {
        self.col_ptr[c + 1] - self.col_ptr[c]
    }

    pub fn get(&self, r: usize, c: usize) -> C64 {
        let range = self.col_ptr[c]..self.col_ptr[c + 1];
        match self.row_idx[range.clone()].binary_search(&r) {
            Ok(i) => self.values[range.start + i],
            Err(_) => C64::new(0.0, 0.0),
        }
    }

    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, C64)> + '_ {
        (0..self.ncols).flat_map(move |c| self.col(c).map(move |(r, v)| (r, c, v)))
    }

    pub fn to_dense(&self) -> CMat {
        let mut a = CMat::zeros(self.nrows, self.ncols);
        for (r, c, v) in self.triplets() {
            a[(r, c)] = v;
        }
        a
    }

    pub fn frobenius(&self) -> f64 {
        self.values.iter().map(|v| v.norm_sqr()).sum::<f64>().sqrt()
    }

    /// `self · x`.
    pub fn mul_vec(&self, x: &[C64]) -> Vec<C64> {
        let mut y = vec![C64::new(0.0, 0.0); self.nrows];
        for c in 0..self.ncols {
            for (r, v) in self.col(c) {
                y[r] += v * x[c];
            }
        }
        y
    }

    /// `selfᴴ · x`; returns the result and the multiply-add count.
    pub fn adjoint_mul_vec(&self, x: &[C64]) -> (Vec<C64>, u64) {
        let mut y = vec![C64::new(0.0, 0.0); self.ncols];
        let mut ops = 0u64;
        for (c, out) in y.iter_mut().enumerate() {
            for (r, v) in self.col(c) {
                *out += v.conj() * x[r];
                ops += 1;
            }
        }
        (y, ops)
    }

    /// Symmetric permutation `P A Pᵀ`: entry `(i, j)` moves to
    /// `(new_of_old[i], new_of_old[j])`.
    pub fn permute_symmetric(&self, new_of_old: &[usize]) -> Result<Self> {
        if self.nrows != self.ncols {
            return Err(DncError::InvalidArgument(
                "symmetric permutation of a non-square matrix".into(),
            ));
        }
        if new_of_old.len() != self.nrows {
            return Err(DncError::SizeMismatch {
                expected: self.nrows,
                got: new_of_old.len(),
            });
        }
        let t = self
            .triplets()
            .map(|(r, c, v)| (new_of_old[r], new_of_old[c], v))
            .collect();
        Ok(Self::from_triplets(self.nrows, self.ncols, t))
    }

    /// Dense copy of the sub-matrix with the given (sorted or unsorted) row
    /// and column index lists.
    pub fn dense_block(&self, rows: &[usize], cols: &[usize]) -> CMat {
        let mut local = vec![usize::MAX; self.nrows];
        for (i, &r) in rows.iter().enumerate() {
            local[r] = i;
        }
        let mut out = CMat::zeros(rows.len(), cols.len());
        for (j, &c) in cols.iter().enumerate() {
            for (r, v) in self.col(c) {
                let i = local[r];
                if i != usize::MAX {
                    out[(i, j)] = v;
                }
            }
        }
        out
    }

    /// Average stored entries per row.
    pub fn mean_row_nnz(&self) -> f64 {
        self.nnz() as f64 / self.nrows.max(1) as f64
    }

    /// Matrix Market coordinate export (complex general, 1-based indices).
    pub fn to_matrix_market(&self) -> String {
        let mut s = String::new();
        s.push_str("%%MatrixMarket matrix coordinate complex general\n");
        let _ = writeln!(s, "{} {} {}", self.nrows, self.ncols, self.nnz());
        for (r, c, v) in self.triplets() {
            let _ = writeln!(s, "{} {} {:.17e} {:.17e}", r + 1, c + 1, v.re, v.im);
        }
        s
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn duplicates_are_summed() {
        let m =
            CscMatrix::from_triplets(2, 2, vec![(0, 1, c(1.0)), (1, 0, c(2.0)), (0, 1, c(3.0))]);
        assert_eq!(m.nnz(), 2);
        assert_eq!(m.get(0, 1), c(4.0));
        assert_eq!(m.get(1, 0), c(2.0));
        assert_eq!(m.get(1, 1), c(0.0));
    }

    #[test]
    fn permutation_round_trip() {
        let m = CscMatrix::from_triplets(
            3,
            3,
            vec![
                (0, 0, c(1.0)),
                (0, 2, C64::new(0.0, 1.0)),
                (2, 0, C64::new(0.0, -1.0)),
                (1, 1, c(5.0)),
            ],
        );
        let p = [2, 0, 1];
        let mut inv = [0; 3];
        for (o, &n) in p.iter().enumerate() {
            inv[n] = o;
        }
        let q = m.permute_symmetric(&p).unwrap();
        assert_eq!(q.get(2, 1), m.get(0, 2));
        assert_eq!(q.permute_symmetric(&inv).unwrap(), m);
        assert!(m.permute_symmetric(&[0, 1]).is_err());
    }

    #[test]
    fn matrix_market_header() {
        let m = CscMatrix::from_triplets(2, 3, vec![(1, 2, C64::new(1.5, -2.0))]);
        let s = m.to_matrix_market();
        let mut lines = s.lines();
        assert_eq!(
            lines.next().unwrap(),
            "%%MatrixMarket matrix coordinate complex general"
        );
        assert_eq!(lines.next().unwrap(), "2 3 1");
        assert!(lines.next().unwrap().starts_with("2 3 1.5"));
    }

    #[test]
    fn dense_block_extracts() {
        let a = CMat::from_fn(4, 4, |i, j| c((i * 4 + j) as f64));
        let s = CscMatrix::from_dense(&a);
        let b = s.dense_block(&[3, 1], &[0, 2]);
        assert_eq!(b[(0, 0)], c(12.0));
        assert_eq!(b[(1, 1)], c(6.0));
    }
}

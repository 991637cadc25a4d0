use rayon::prelude::*;

use super::dense::DenseMatrix;
use crate::error::{Error, Result};

/// Compressed sparse row matrix. Column indices within a row are sorted.
#[derive(Clone, Debug, PartialEq)]
pub struct CsrMatrix {
    rows: usize,
    cols: usize,
    row_ptr: Vec<usize>,
    col_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CsrMatrix {
    pub fn from_parts(
        rows: usize,
        cols: usize,
        row_ptr: Vec<usize>,
        col_idx: Vec<usize>,
        values: Vec<f64>,
    ) -> Result<Self> {
        if row_ptr.len() != rows + 1 || row_ptr[0] != 0 {
            return Err(Error::Shape(
                "row_ptr must have rows + 1 entries starting at 0".into(),
            ));
        }
        if col_idx.len() != values.len() || *row_ptr.last().unwrap() != values.len() {
            return Err(Error::Shape(
                "col_idx/values length disagrees with row_ptr".into(),
            ));
        }
        for r in 0..rows {
            let (lo, hi) = (row_ptr[r], row_ptr[r + 1]);
            if lo > hi {
                return Err(Error::Shape(format!("row_ptr decreases at row {r}")));
            }
            let cols_r = &col_idx[lo..hi];
            if cols_r.iter().any(|&c| c >= cols) || cols_r.windows(2).any(|w| w[0] >= w[1]) {
                return Err(Error::Shape(format!(
                    "row {r} has unsorted or out-of-range columns"
                )));
            }
        }
        Ok(CsrMatrix {
            rows,
            cols,
            row_ptr,
            col_idx,
            values,
        })
    }

    /// Builds from `(row, col, value)` triplets; duplicates are summed.
    pub fn from_triplets(
        rows: usize,
        cols: usize,
        mut triplets: Vec<(usize, usize, f64)>,
    ) -> Result<Self> {
        triplets.sort_by_key(|t| (t.0, t.1));
        let mut row_ptr = vec![0usize; rows + 1];
        let mut col_idx = Vec::with_capacity(triplets.len());
        let mut values: Vec<f64> = Vec::with_capacity(triplets.len());
        let mut last: Option<(usize, usize)> = None;
        for (r, c, v) in triplets {
            if r >= rows || c >= cols {
                return Err(Error::Shape(format!(
                    "entry ({r}, {c}) outside {rows}x{cols}"
                )));
            }
            if last == Some((r, c)) {
                *values.last_mut().unwrap() += v;
                continue;
            }
            row_ptr[r + 1] += 1;
            col_idx.push(c);
            values.push(v);
            last = Some((r, c));
        }
        for r in 0..rows {
            row_ptr[r + 1] += row_ptr[r];
        }
        Self::from_parts(rows, cols, row_ptr, col_idx, values)
    }

    pub fn identity(n: usize) -> Self {
        CsrMatrix {
            rows: n,
            cols: n,
            row_ptr: (0..=n).collect(),
            col_idx: (0..n).collect(),
            values: vec![1.0; n],
        }
    }

    #[inline]
    pub fn rows(&self) -> usize {
        self.rows
    }

    #[inline]
    pub fn cols(&self) -> usize {
        self.cols
    }

    #[inline]
    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    pub fn row_ptr(&self) -> &[usize] {
        &self.row_ptr
    }

    pub fn col_idx(&self) -> &[usize] {
        &self.col_idx
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Columns and values stored in row `r`.
    #[inline]
    pub fn row(&self, r: usize) -> (&[usize], &[f64]) {
        let (lo, hi) = (self.row_ptr[r], self.row_ptr[r + 1]);
        (&self.col_idx[lo..hi], &self.values[lo..hi])
    }

    pub fn get(&self, r: usize, c: usize) -> Option<f64> {
        let (cols, vals) = self.row(r);
        cols.binary_search(&c).ok().map(|k| vals[k])
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut out = DenseMatrix::zeros(self.rows, self.cols);
        for r in 0..self.rows {
            let (cols, vals) = self.row(r);
            for (&c, &v) in cols.iter().zip(vals) {
                out.set(r, c, v);
            }
        }
        out
    }

    pub fn transpose(&self) -> CsrMatrix {
        let mut triplets = Vec::with_capacity(self.nnz());
        for r in 0..self.rows {
            let (cols, vals) = self.row(r);
            triplets.extend(cols.iter().zip(vals).map(|(&c, &v)| (c, r, v)));
        }
        CsrMatrix::from_triplets(self.cols, self.rows, triplets).expect("transpose of valid CSR")
    }

    /// Exact structural and value symmetry.
    pub fn is_symmetric(&self) -> bool {
        self.rows == self.cols && self.transpose() == *self
    }
}

/// Sparse-dense product `adj * x`, accumulated row by row in stored column order.
///
/// Rows are independent, so the parallel split over rows gives bit-identical
/// results regardless of the thread count.
pub fn spmm(adj: &CsrMatrix, x: &DenseMatrix) -> Result<DenseMatrix> {
    if adj.cols() != x.rows() {
        return Err(Error::Shape(format!(
            "spmm: adjacency is {}x{} but input has {} rows",
            adj.rows(),
            adj.cols(),
            x.rows()
        )));
    }
    let d = x.cols();
    let mut out = DenseMatrix::zeros(adj.rows(), d);
    if d == 0 {
        return Ok(out);
    }
    out.data_mut()
        .par_chunks_mut(d)
        .enumerate()
        .for_each(|(r, dst)| {
            let (cols, vals) = adj.row(r);
            for (&c, &w) in cols.iter().zip(vals) {
                for (o, s) in dst.iter_mut().zip(x.row(c)) {
                    *o += w * s;
                }
            }
        });
    Ok(out)
}

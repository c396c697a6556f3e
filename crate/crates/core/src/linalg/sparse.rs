use crate::error::{Error, Result};
use crate::linalg::dense::DenseMatrix;

/// Compressed sparse column matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct CscMatrix {
    rows: usize,
    cols: usize,
    col_ptr: Vec<usize>,
    row_idx: Vec<usize>,
    values: Vec<f64>,
}

impl CscMatrix {
    /// Assembles from `(row, col, value)` triplets. Duplicates are summed and
    /// explicit zeros are dropped.
    pub fn from_triplets(rows: usize, cols: usize, triplets: &[(usize, usize, f64)]) -> Result<Self> {
        for &(i, j, v) in triplets {
            if i >= rows || j >= cols {
                return Err(Error::InvalidArgument(format!(
                    "triplet ({i}, {j}) outside a {rows}x{cols} matrix"
                )));
            }
            if !v.is_finite() {
                return Err(Error::NonFinite {
                    context: "sparse matrix entries",
                });
            }
        }
        let mut sorted: Vec<(usize, usize, f64)> = triplets.to_vec();
        sorted.sort_by(|a, b| (a.1, a.0).cmp(&(b.1, b.0)));

        let mut col_ptr = vec![0usize; cols + 1];
        let mut row_idx = Vec::with_capacity(sorted.len());
        let mut values: Vec<f64> = Vec::with_capacity(sorted.len());
        let mut last: Option<(usize, usize)> = None;
        for (i, j, v) in sorted {
            if last == Some((i, j)) {
                *values.last_mut().unwrap() += v;
            } else {
                row_idx.push(i);
                values.push(v);
                col_ptr[j + 1] += 1;
                last = Some((i, j));
            }
        }
        for j in 0..cols {
            col_ptr[j + 1] += col_ptr[j];
        }
        let mut m = Self {
            rows,
            cols,
            col_ptr,
            row_idx,
            values,
        };
        m.drop_zeros();
        Ok(m)
    }

    fn drop_zeros(&mut self) {
        if self.values.iter().all(|&v| v != 0.0) {
            return;
        }
        let mut col_ptr = vec![0usize; self.cols + 1];
        let mut row_idx = Vec::with_capacity(self.row_idx.len());
        let mut values = Vec::with_capacity(self.values.len());
        for j in 0..self.cols {
            for k in self.col_ptr[j]..self.col_ptr[j + 1] {
                if self.values[k] != 0.0 {
                    row_idx.push(self.row_idx[k]);
                    values.push(self.values[k]);
                }
            }
            col_ptr[j + 1] = row_idx.len();
        }
        self.col_ptr = col_ptr;
        self.row_idx = row_idx;
        self.values = values;
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn nnz(&self) -> usize {
        self.values.len()
    }

    /// Iterates stored entries as `(row, col, value)` in column order.
    pub fn triplets(&self) -> impl Iterator<Item = (usize, usize, f64)> + '_ {
        (0..self.cols).flat_map(move |j| {
            (self.col_ptr[j]..self.col_ptr[j + 1]).map(move |k| (self.row_idx[k], j, self.values[k]))
        })
    }

    /// `(row, value)` pairs of column `j`.
    pub fn column(&self, j: usize) -> impl Iterator<Item = (usize, f64)> + '_ {
        (self.col_ptr[j]..self.col_ptr[j + 1]).map(move |k| (self.row_idx[k], self.values[k]))
    }

    pub fn gemv(&self, x: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        for (j, &xj) in x.iter().enumerate() {
            if xj == 0.0 {
                continue;
            }
            for k in self.col_ptr[j]..self.col_ptr[j + 1] {
                out[self.row_idx[k]] += self.values[k] * xj;
            }
        }
    }

    pub fn gemv_t(&self, y: &[f64], out: &mut [f64]) {
        for (j, o) in out.iter_mut().enumerate() {
            let mut s = 0.0;
            for k in self.col_ptr[j]..self.col_ptr[j + 1] {
                s += self.values[k] * y[self.row_idx[k]];
            }
            *o = s;
        }
    }

    pub fn to_dense(&self) -> DenseMatrix {
        let mut d = DenseMatrix::zeros(self.rows, self.cols);
        for (i, j, v) in self.triplets() {
            d.set(i, j, v);
        }
        d
    }

    pub fn scaled(&self, s: f64) -> Self {
        let mut m = self.clone();
        m.values.iter_mut().for_each(|v| *v *= s);
        m.drop_zeros();
        m
    }

    /// Dense `self^T * self`, assembled row by row so the cost follows the
    /// sparsity of each row.
    pub fn gram_dense(&self) -> DenseMatrix {
        let mut by_row: Vec<Vec<(usize, f64)>> = vec![Vec::new(); self.rows];
        for (i, j, v) in self.triplets() {
            by_row[i].push((j, v));
        }
        let n = self.cols;
        let mut g = DenseMatrix::zeros(n, n);
        for row in &by_row {
            for &(a, va) in row {
                for &(b, vb) in row {
                    g.set(a, b, g.get(a, b) + va * vb);
                }
            }
        }
        g
    }

    /// Sum of entries in each row.
    pub fn row_sums(&self) -> Vec<f64> {
        let mut s = vec![0.0; self.rows];
        for (i, _, v) in self.triplets() {
            s[i] += v;
        }
        s
    }
}

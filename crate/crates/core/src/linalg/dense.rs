use crate::error::{Error, Result};

/// Dense real matrix stored column-major.
#[derive(Clone, Debug, PartialEq)]
pub struct DenseMatrix {
    rows: usize,
    cols: usize,
    data: Vec<f64>,
}

impl DenseMatrix {
    /// Wraps column-major `data`. Every entry must be finite.
    pub fn new(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::DimensionMismatch {
                context: "dense matrix storage",
                expected: rows * cols,
                found: data.len(),
            });
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                context: "dense matrix entries",
            });
        }
        Ok(Self { rows, cols, data })
    }

    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    pub fn identity(n: usize) -> Self {
        let mut m = Self::zeros(n, n);
        for i in 0..n {
            m.data[i * n + i] = 1.0;
        }
        m
    }

    pub fn from_diagonal(diag: &[f64]) -> Self {
        let n = diag.len();
        let mut m = Self::zeros(n, n);
        for (i, &d) in diag.iter().enumerate() {
            m.data[i * n + i] = d;
        }
        m
    }

    /// Builds a matrix from row slices; handy in tests and examples.
    pub fn from_rows(rows: &[&[f64]]) -> Result<Self> {
        let r = rows.len();
        let c = rows.first().map_or(0, |row| row.len());
        let mut m = Self::zeros(r, c);
        for (i, row) in rows.iter().enumerate() {
            if row.len() != c {
                return Err(Error::DimensionMismatch {
                    context: "row length",
                    expected: c,
                    found: row.len(),
                });
            }
            for (j, &v) in row.iter().enumerate() {
                m.data[j * r + i] = v;
            }
        }
        if m.data.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite {
                context: "dense matrix entries",
            });
        }
        Ok(m)
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for j in 0..cols {
            for i in 0..rows {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    /// Stacks equal-length column vectors side by side.
    pub fn from_columns(rows: usize, columns: &[Vec<f64>]) -> Result<Self> {
        let mut data = Vec::with_capacity(rows * columns.len());
        for c in columns {
            if c.len() != rows {
                return Err(Error::DimensionMismatch {
                    context: "column length",
                    expected: rows,
                    found: c.len(),
                });
            }
            data.extend_from_slice(c);
        }
        Self::new(rows, columns.len(), data)
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
    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.data[j * self.rows + i]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: f64) {
        self.data[j * self.rows + i] = v;
    }

    #[inline]
    pub fn col(&self, j: usize) -> &[f64] {
        &self.data[j * self.rows..(j + 1) * self.rows]
    }

    #[inline]
    pub fn col_mut(&mut self, j: usize) -> &mut [f64] {
        &mut self.data[j * self.rows..(j + 1) * self.rows]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    pub fn row(&self, i: usize) -> Vec<f64> {
        (0..self.cols).map(|j| self.get(i, j)).collect()
    }

    pub fn transpose(&self) -> Self {
        Self::from_fn(self.cols, self.rows, |i, j| self.get(j, i))
    }

    /// `out = self * x`.
    pub fn gemv(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.cols);
        debug_assert_eq!(out.len(), self.rows);
        out.iter_mut().for_each(|o| *o = 0.0);
        for (j, &xj) in x.iter().enumerate() {
            if xj != 0.0 {
                axpy(xj, self.col(j), out);
            }
        }
    }

    /// `out = self^T * y`.
    pub fn gemv_t(&self, y: &[f64], out: &mut [f64]) {
        debug_assert_eq!(y.len(), self.rows);
        debug_assert_eq!(out.len(), self.cols);
        for (j, o) in out.iter_mut().enumerate() {
            *o = dot(self.col(j), y);
        }
    }

    pub fn matvec(&self, x: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.rows];
        self.gemv(x, &mut out);
        out
    }

    pub fn matvec_t(&self, y: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.cols];
        self.gemv_t(y, &mut out);
        out
    }

    pub fn matmul(&self, other: &DenseMatrix) -> Result<DenseMatrix> {
        if self.cols != other.rows {
            return Err(Error::DimensionMismatch {
                context: "matrix product inner dimension",
                expected: self.cols,
                found: other.rows,
            });
        }
        let mut out = DenseMatrix::zeros(self.rows, other.cols);
        for j in 0..other.cols {
            let (src, dst) = (other.col(j), &mut out.data[j * self.rows..(j + 1) * self.rows]);
            for (k, &b) in src.iter().enumerate() {
                if b != 0.0 {
                    axpy(b, self.col(k), dst);
                }
            }
        }
        Ok(out)
    }

    /// `self^T * self` (cols × cols), filled symmetrically.
    pub fn gram(&self) -> DenseMatrix {
        let n = self.cols;
        let mut g = DenseMatrix::zeros(n, n);
        for j in 0..n {
            for i in j..n {
                let v = dot(self.col(i), self.col(j));
                g.data[j * n + i] = v;
                g.data[i * n + j] = v;
            }
        }
        g
    }

    /// `self * self^T` (rows × rows), filled symmetrically.
    pub fn outer_gram(&self) -> DenseMatrix {
        let m = self.rows;
        let mut g = DenseMatrix::zeros(m, m);
        for k in 0..self.cols {
            let c = self.col(k);
            for j in 0..m {
                let cj = c[j];
                if cj == 0.0 {
                    continue;
                }
                let dst = &mut g.data[j * m + j..(j + 1) * m];
                axpy(cj, &c[j..], dst);
            }
        }
        for j in 0..m {
            for i in 0..j {
                g.data[j * m + i] = g.data[i * m + j];
            }
        }
        g
    }

    pub fn add_diagonal(&mut self, shift: f64) {
        let n = self.rows.min(self.cols);
        for i in 0..n {
            self.data[i * self.rows + i] += shift;
        }
    }

    pub fn scale(&mut self, s: f64) {
        self.data.iter_mut().for_each(|v| *v *= s);
    }

    pub fn frobenius_norm(&self) -> f64 {
        norm2(&self.data)
    }

    /// Frobenius norm of `self - other`.
    pub fn frobenius_distance(&self, other: &DenseMatrix) -> f64 {
        assert_eq!((self.rows, self.cols), (other.rows, other.cols));
        self.data
            .iter()
            .zip(&other.data)
            .map(|(a, b)| (a - b) * (a - b))
            .sum::<f64>()
            .sqrt()
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()))
    }

    pub(crate) fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }
}

#[inline]
pub fn dot(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    // four accumulators keep the dependency chain short
    let chunks = a.len() / 4;
    let (mut s0, mut s1, mut s2, mut s3) = (0.0, 0.0, 0.0, 0.0);
    for k in 0..chunks {
        let i = 4 * k;
        s0 += a[i] * b[i];
        s1 += a[i + 1] * b[i + 1];
        s2 += a[i + 2] * b[i + 2];
        s3 += a[i + 3] * b[i + 3];
    }
    let mut s = (s0 + s1) + (s2 + s3);
    for i in 4 * chunks..a.len() {
        s += a[i] * b[i];
    }
    s
}

/// `y += alpha * x`
#[inline]
pub fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    debug_assert_eq!(x.len(), y.len());
    for (yi, &xi) in y.iter_mut().zip(x) {
        *yi += alpha * xi;
    }
}

#[inline]
pub fn norm2(x: &[f64]) -> f64 {
    dot(x, x).sqrt()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn column_major_layout() {
        let a = DenseMatrix::from_rows(&[&[1.0, 2.0, 0.0], &[0.0, 1.0, 1.0]]).unwrap();
        assert_eq!(a.as_slice(), &[1.0, 0.0, 2.0, 1.0, 0.0, 1.0]);
        assert_eq!(a.matvec(&[1.0, 1.0, 1.0]), vec![3.0, 2.0]);
        assert_eq!(a.matvec_t(&[1.0, 0.0]), vec![1.0, 2.0, 0.0]);
    }

    #[test]
    fn rejects_bad_storage() {
        assert!(DenseMatrix::new(2, 2, vec![1.0; 3]).is_err());
        assert!(matches!(
            DenseMatrix::new(1, 1, vec![f64::NAN]),
            Err(Error::NonFinite { .. })
        ));
    }

    #[test]
    fn grams_are_symmetric_products() {
        let a = DenseMatrix::from_fn(3, 5, |i, j| (i as f64 + 1.0) * (j as f64 - 2.0) + 0.5);
        let g = a.gram();
        let g2 = a.transpose().matmul(&a).unwrap();
        assert!(g.frobenius_distance(&g2) < 1e-12);
        let o = a.outer_gram();
        let o2 = a.matmul(&a.transpose()).unwrap();
        assert!(o.frobenius_distance(&o2) < 1e-12);
    }
}

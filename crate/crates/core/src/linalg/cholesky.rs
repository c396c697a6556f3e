use crate::error::{Error, Result};
use crate::linalg::dense::{axpy, dot, DenseMatrix};

/// Relative Frobenius tolerance for accepting an input as symmetric.
pub const SYMMETRY_TOL: f64 = 1e-12;

/// Lower-triangular factor `G` with `G G^T = M`.
#[derive(Clone, Debug)]
pub struct CholeskyFactor {
    lower: DenseMatrix,
}

/// Factors a symmetric positive definite matrix.
///
/// The input is symmetrized by averaging with its transpose first; inputs whose
/// asymmetry exceeds [`SYMMETRY_TOL`] relative to `‖M‖_F` are rejected. A
/// non-positive pivot yields [`Error::NotPositiveDefinite`] naming the pivot.
pub fn cholesky_factor(m: &DenseMatrix) -> Result<CholeskyFactor> {
    let n = m.rows();
    if m.cols() != n {
        return Err(Error::DimensionMismatch {
            context: "cholesky input must be square",
            expected: n,
            found: m.cols(),
        });
    }
    let norm = m.frobenius_norm();
    let mut asym = 0.0;
    for j in 0..n {
        for i in (j + 1)..n {
            let d = m.get(i, j) - m.get(j, i);
            asym += 2.0 * d * d;
        }
    }
    let asym = asym.sqrt();
    if asym > SYMMETRY_TOL * norm {
        return Err(Error::NotSymmetric {
            asymmetry: asym / norm.max(f64::MIN_POSITIVE),
        });
    }

    // lower triangle of the symmetrized input, column-major
    let mut g = DenseMatrix::from_fn(n, n, |i, j| {
        if i >= j {
            0.5 * (m.get(i, j) + m.get(j, i))
        } else {
            0.0
        }
    });

    // left-looking column Cholesky: column j minus contributions of columns k < j
    for j in 0..n {
        for k in 0..j {
            let gjk = g.get(j, k);
            if gjk == 0.0 {
                continue;
            }
            let (left, right) = g.data_mut().split_at_mut(j * n);
            let src = &left[k * n + j..k * n + n];
            let dst = &mut right[j..n];
            axpy(-gjk, src, dst);
        }
        let pivot = g.get(j, j);
        if !(pivot > 0.0) || !pivot.is_finite() {
            return Err(Error::NotPositiveDefinite { pivot: j, value: pivot });
        }
        let d = pivot.sqrt();
        let col = g.col_mut(j);
        col[j] = d;
        for v in &mut col[j + 1..] {
            *v /= d;
        }
    }
    Ok(CholeskyFactor { lower: g })
}

impl CholeskyFactor {
    pub fn dim(&self) -> usize {
        self.lower.rows()
    }

    pub fn lower(&self) -> &DenseMatrix {
        &self.lower
    }

    /// `x <- G^{-1} x`
    pub fn solve_lower_in_place(&self, x: &mut [f64]) {
        let n = self.dim();
        for j in 0..n {
            let col = self.lower.col(j);
            x[j] /= col[j];
            let xj = x[j];
            if xj != 0.0 {
                let (_, tail) = x.split_at_mut(j + 1);
                axpy(-xj, &col[j + 1..], tail);
            }
        }
    }

    /// `x <- G^{-T} x`
    pub fn solve_upper_in_place(&self, x: &mut [f64]) {
        let n = self.dim();
        for j in (0..n).rev() {
            let col = self.lower.col(j);
            let s = dot(&col[j + 1..], &x[j + 1..]);
            x[j] = (x[j] - s) / col[j];
        }
    }

    /// `x <- M^{-1} x`
    pub fn solve_in_place(&self, x: &mut [f64]) {
        self.solve_lower_in_place(x);
        self.solve_upper_in_place(x);
    }

    pub fn solve_vec(&self, b: &[f64]) -> Result<Vec<f64>> {
        if b.len() != self.dim() {
            return Err(Error::DimensionMismatch {
                context: "cholesky solve right-hand side",
                expected: self.dim(),
                found: b.len(),
            });
        }
        let mut x = b.to_vec();
        self.solve_in_place(&mut x);
        Ok(x)
    }

    /// Solves `M X = B` for all columns of `B` against the single stored
    /// factorization. Each column goes through the same kernel as
    /// [`solve_vec`](Self::solve_vec), so results agree bit-for-bit.
    pub fn solve(&self, b: &DenseMatrix) -> Result<DenseMatrix> {
        if b.rows() != self.dim() {
            return Err(Error::DimensionMismatch {
                context: "cholesky solve right-hand sides",
                expected: self.dim(),
                found: b.rows(),
            });
        }
        if b.cols() == 0 {
            return Err(Error::InvalidArgument("no right-hand sides".into()));
        }
        let mut x = b.clone();
        for j in 0..x.cols() {
            self.solve_in_place(x.col_mut(j));
        }
        Ok(x)
    }

    /// `G G^T`.
    pub fn reconstruct(&self) -> DenseMatrix {
        self.lower.outer_gram()
    }

    /// Explicit `M^{-1}`.
    pub fn inverse(&self) -> DenseMatrix {
        let n = self.dim();
        let mut inv = DenseMatrix::identity(n);
        for j in 0..n {
            self.solve_in_place(inv.col_mut(j));
        }
        // symmetrize away roundoff
        for j in 0..n {
            for i in 0..j {
                let v = 0.5 * (inv.get(i, j) + inv.get(j, i));
                inv.set(i, j, v);
                inv.set(j, i, v);
            }
        }
        inv
    }

    pub fn log_det(&self) -> f64 {
        (0..self.dim()).map(|i| 2.0 * self.lower.get(i, i).ln()).sum()
    }
}

/// `cholesky_factor(M)` followed by a multi-column solve.
pub fn solve_spd(factor: &CholeskyFactor, b: &DenseMatrix) -> Result<DenseMatrix> {
    factor.solve(b)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_factor() {
        let f = cholesky_factor(&DenseMatrix::identity(3)).unwrap();
        assert_eq!(f.lower(), &DenseMatrix::identity(3));
    }

    #[test]
    fn two_by_two_by_hand() {
        let m = DenseMatrix::from_rows(&[&[4.0, 2.0], &[2.0, 5.0]]).unwrap();
        let f = cholesky_factor(&m).unwrap();
        let expected = DenseMatrix::from_rows(&[&[2.0, 0.0], &[1.0, 2.0]]).unwrap();
        assert_eq!(f.lower(), &expected);
        assert_eq!(f.solve_vec(&[6.0, 7.0]).unwrap(), vec![1.0, 1.0]);
    }

    #[test]
    fn names_failing_pivot() {
        let m = DenseMatrix::from_rows(&[&[1.0, 0.0, 0.0], &[0.0, 2.0, 0.0], &[0.0, 0.0, -1.0]])
            .unwrap();
        match cholesky_factor(&m) {
            Err(Error::NotPositiveDefinite { pivot, .. }) => assert_eq!(pivot, 2),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn rejects_asymmetric_input() {
        let m = DenseMatrix::from_rows(&[&[4.0, 2.0], &[1.0, 5.0]]).unwrap();
        assert!(matches!(cholesky_factor(&m), Err(Error::NotSymmetric { .. })));
    }

    #[test]
    fn identity_solve_returns_rhs() {
        let f = cholesky_factor(&DenseMatrix::identity(3)).unwrap();
        let b = DenseMatrix::from_fn(3, 2, |i, j| (i * 3 + j) as f64 - 1.5);
        assert_eq!(f.solve(&b).unwrap(), b);
    }

    #[test]
    fn solve_dimension_mismatch() {
        let f = cholesky_factor(&DenseMatrix::identity(3)).unwrap();
        assert!(f.solve(&DenseMatrix::zeros(2, 1)).is_err());
        assert!(f.solve_vec(&[1.0]).is_err());
    }
}

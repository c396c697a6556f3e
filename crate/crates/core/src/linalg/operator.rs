//! Matrix-free linear operators.
//!
//! Every forward map in the crate (data operators, prior factors, whitened
//! composites) implements [`LinearOperator`]. Implementors provide unchecked
//! `*_into` kernels; the provided `apply`/`apply_transpose` methods validate
//! dimensions and finiteness before dispatching.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::dense::DenseMatrix;
use crate::linalg::sparse::CscMatrix;

/// Storage/evaluation category of an operator.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum OperatorKind {
    Dense,
    Sparse,
    Kronecker,
    Composite,
    Callback,
}

pub trait LinearOperator: Send + Sync + fmt::Debug {
    fn rows(&self) -> usize;
    fn cols(&self) -> usize;
    fn kind(&self) -> OperatorKind;

    /// `out = A v`. `v.len() == cols`, `out.len() == rows`.
    fn apply_into(&self, v: &[f64], out: &mut [f64]);

    /// `out = A^T w`. `w.len() == rows`, `out.len() == cols`.
    fn apply_transpose_into(&self, w: &[f64], out: &mut [f64]);

    fn apply(&self, v: &[f64]) -> Result<Vec<f64>> {
        check_input(v, self.cols(), "operator apply")?;
        let mut out = vec![0.0; self.rows()];
        self.apply_into(v, &mut out);
        Ok(out)
    }

    fn apply_transpose(&self, w: &[f64]) -> Result<Vec<f64>> {
        check_input(w, self.rows(), "operator transpose apply")?;
        let mut out = vec![0.0; self.cols()];
        self.apply_transpose_into(w, &mut out);
        Ok(out)
    }

    /// Materializes the operator, probing through whichever side is smaller.
    fn to_dense(&self) -> DenseMatrix {
        let (m, n) = (self.rows(), self.cols());
        if n <= m {
            let mut d = DenseMatrix::zeros(m, n);
            let mut e = vec![0.0; n];
            for j in 0..n {
                e[j] = 1.0;
                self.apply_into(&e, d.col_mut(j));
                e[j] = 0.0;
            }
            d
        } else {
            let mut dt = DenseMatrix::zeros(n, m);
            let mut e = vec![0.0; m];
            for i in 0..m {
                e[i] = 1.0;
                self.apply_transpose_into(&e, dt.col_mut(i));
                e[i] = 0.0;
            }
            dt.transpose()
        }
    }

    /// Dense `A^T A`.
    fn gram(&self) -> DenseMatrix {
        self.to_dense().gram()
    }
}

pub type OpRef = Arc<dyn LinearOperator>;

pub(crate) fn check_input(v: &[f64], expected: usize, context: &'static str) -> Result<()> {
    if v.len() != expected {
        return Err(Error::DimensionMismatch {
            context,
            expected,
            found: v.len(),
        });
    }
    if v.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite { context });
    }
    Ok(())
}

impl LinearOperator for DenseMatrix {
    fn rows(&self) -> usize {
        DenseMatrix::rows(self)
    }
    fn cols(&self) -> usize {
        DenseMatrix::cols(self)
    }
    fn kind(&self) -> OperatorKind {
        OperatorKind::Dense
    }
    fn apply_into(&self, v: &[f64], out: &mut [f64]) {
        self.gemv(v, out)
    }
    fn apply_transpose_into(&self, w: &[f64], out: &mut [f64]) {
        self.gemv_t(w, out)
    }
    fn to_dense(&self) -> DenseMatrix {
        self.clone()
    }
    fn gram(&self) -> DenseMatrix {
        DenseMatrix::gram(self)
    }
}

impl LinearOperator for CscMatrix {
    fn rows(&self) -> usize {
        CscMatrix::rows(self)
    }
    fn cols(&self) -> usize {
        CscMatrix::cols(self)
    }
    fn kind(&self) -> OperatorKind {
        OperatorKind::Sparse
    }
    fn apply_into(&self, v: &[f64], out: &mut [f64]) {
        self.gemv(v, out)
    }
    fn apply_transpose_into(&self, w: &[f64], out: &mut [f64]) {
        self.gemv_t(w, out)
    }
    fn to_dense(&self) -> DenseMatrix {
        CscMatrix::to_dense(self)
    }
    fn gram(&self) -> DenseMatrix {
        self.gram_dense()
    }
}

/// `I_n`.
#[derive(Clone, Copy, Debug)]
pub struct IdentityOperator {
    n: usize,
}

impl IdentityOperator {
    pub fn new(n: usize) -> Self {
        Self { n }
    }
}

impl LinearOperator for IdentityOperator {
    fn rows(&self) -> usize {
        self.n
    }
    fn cols(&self) -> usize {
        self.n
    }
    fn kind(&self) -> OperatorKind {
        OperatorKind::Sparse
    }
    fn apply_into(&self, v: &[f64], out: &mut [f64]) {
        out.copy_from_slice(v)
    }
    fn apply_transpose_into(&self, w: &[f64], out: &mut [f64]) {
        out.copy_from_slice(w)
    }
}

/// `diag(d)`.
#[derive(Clone, Debug)]
pub struct DiagonalOperator {
    diag: Vec<f64>,
}

impl DiagonalOperator {
    pub fn new(diag: Vec<f64>) -> Self {
        Self { diag }
    }

    pub fn diagonal(&self) -> &[f64] {
        &self.diag
    }
}

impl LinearOperator for DiagonalOperator {
    fn rows(&self) -> usize {
        self.diag.len()
    }
    fn cols(&self) -> usize {
        self.diag.len()
    }
    fn kind(&self) -> OperatorKind {
        OperatorKind::Sparse
    }
    fn apply_into(&self, v: &[f64], out: &mut [f64]) {
        for ((o, &x), &d) in out.iter_mut().zip(v).zip(&self.diag) {
            *o = d * x;
        }
    }
    fn apply_transpose_into(&self, w: &[f64], out: &mut [f64]) {
        self.apply_into(w, out)
    }
}

/// `s * A`.
#[derive(Clone, Debug)]
pub struct ScaledOperator {
    scale: f64,
    inner: OpRef,
}

impl ScaledOperator {
    pub fn new(scale: f64, inner: OpRef) -> Self {
        Self { scale, inner }
    }
}

impl LinearOperator for ScaledOperator {
    fn rows(&self) -> usize {
        self.inner.rows()
    }
    fn cols(&self) -> usize {
        self.inner.cols()
    }
    fn kind(&self) -> OperatorKind {
        OperatorKind::Composite
    }
    fn apply_into(&self, v: &[f64], out: &mut [f64]) {
        self.inner.apply_into(v, out);
        out.iter_mut().for_each(|o| *o *= self.scale);
    }
    fn apply_transpose_into(&self, w: &[f64], out: &mut [f64]) {
        self.inner.apply_transpose_into(w, out);
        out.iter_mut().for_each(|o| *o *= self.scale);
    }
}

/// `outer ⊗ inner`, applied through the reshape identity
/// `(P ⊗ Q) vec(X) = vec(P X Q^T)` with row-major `X` (inner index fastest).
/// The Kronecker product itself is never formed.
#[derive(Clone, Debug)]
pub struct KroneckerOperator {
    outer: DenseMatrix,
    inner: DenseMatrix,
}

impl KroneckerOperator {
    pub fn new(outer: DenseMatrix, inner: DenseMatrix) -> Self {
        Self { outer, inner }
    }

    pub fn outer(&self) -> &DenseMatrix {
        &self.outer
    }

    pub fn inner(&self) -> &DenseMatrix {
        &self.inner
    }

    /// Explicit Kronecker product. Only meant for small checks.
    pub fn expand(&self) -> DenseMatrix {
        let (p, q) = (self.outer.rows(), self.outer.cols());
        let (r, s) = (self.inner.rows(), self.inner.cols());
        DenseMatrix::from_fn(p * r, q * s, |row, col| {
            self.outer.get(row / r, col / s) * self.inner.get(row % r, col % s)
        })
    }

    fn two_sided(p: &DenseMatrix, q: &DenseMatrix, transpose: bool, v: &[f64], out: &mut [f64]) {
        // v holds X with rows indexed by p's input and columns by q's input.
        let (p_in, p_out) = if transpose { (p.rows(), p.cols()) } else { (p.cols(), p.rows()) };
        let (q_in, q_out) = if transpose { (q.rows(), q.cols()) } else { (q.cols(), q.rows()) };
        // stage 1: apply q (or q^T) to each row of X
        let mut tmp = vec![0.0; p_in * q_out];
        for k in 0..p_in {
            let xrow = &v[k * q_in..(k + 1) * q_in];
            let trow = &mut tmp[k * q_out..(k + 1) * q_out];
            if transpose {
                q.gemv_t(xrow, trow);
            } else {
                q.gemv(xrow, trow);
            }
        }
        // stage 2: combine rows with p (or p^T)
        out.iter_mut().for_each(|o| *o = 0.0);
        for i in 0..p_out {
            let orow = &mut out[i * q_out..(i + 1) * q_out];
            for k in 0..p_in {
                let c = if transpose { p.get(k, i) } else { p.get(i, k) };
                if c != 0.0 {
                    crate::linalg::dense::axpy(c, &tmp[k * q_out..(k + 1) * q_out], orow);
                }
            }
        }
    }
}

impl LinearOperator for KroneckerOperator {
    fn rows(&self) -> usize {
        self.outer.rows() * self.inner.rows()
    }
    fn cols(&self) -> usize {
        self.outer.cols() * self.inner.cols()
    }
    fn kind(&self) -> OperatorKind {
        OperatorKind::Kronecker
    }
    fn apply_into(&self, v: &[f64], out: &mut [f64]) {
        Self::two_sided(&self.outer, &self.inner, false, v, out)
    }
    fn apply_transpose_into(&self, w: &[f64], out: &mut [f64]) {
        Self::two_sided(&self.outer, &self.inner, true, w, out)
    }
}

/// Product `F_1 F_2 ... F_k`, evaluated right to left.
#[derive(Clone, Debug)]
pub struct ProductOperator {
    factors: Vec<OpRef>,
}

impl ProductOperator {
    pub fn new(factors: Vec<OpRef>) -> Result<Self> {
        if factors.is_empty() {
            return Err(Error::InvalidArgument("empty operator product".into()));
        }
        for w in factors.windows(2) {
            if w[0].cols() != w[1].rows() {
                return Err(Error::DimensionMismatch {
                    context: "operator product",
                    expected: w[0].cols(),
                    found: w[1].rows(),
                });
            }
        }
        Ok(Self { factors })
    }
}

impl LinearOperator for ProductOperator {
    fn rows(&self) -> usize {
        self.factors[0].rows()
    }
    fn cols(&self) -> usize {
        self.factors[self.factors.len() - 1].cols()
    }
    fn kind(&self) -> OperatorKind {
        OperatorKind::Composite
    }
    fn apply_into(&self, v: &[f64], out: &mut [f64]) {
        let mut cur = v.to_vec();
        for f in self.factors.iter().skip(1).rev() {
            let mut next = vec![0.0; f.rows()];
            f.apply_into(&cur, &mut next);
            cur = next;
        }
        self.factors[0].apply_into(&cur, out);
    }
    fn apply_transpose_into(&self, w: &[f64], out: &mut [f64]) {
        let last = self.factors.len() - 1;
        let mut cur = w.to_vec();
        for f in &self.factors[..last] {
            let mut next = vec![0.0; f.cols()];
            f.apply_transpose_into(&cur, &mut next);
            cur = next;
        }
        self.factors[last].apply_transpose_into(&cur, out);
    }
}

/// Horizontal concatenation `[B_1 B_2 ... B_L]` of blocks sharing a row count.
#[derive(Clone, Debug)]
pub struct BlockRowOperator {
    blocks: Vec<OpRef>,
    offsets: Vec<usize>,
}

impl BlockRowOperator {
    pub fn new(blocks: Vec<OpRef>) -> Result<Self> {
        let m = blocks
            .first()
            .map(|b| b.rows())
            .ok_or_else(|| Error::InvalidArgument("no blocks".into()))?;
        let mut offsets = vec![0];
        for b in &blocks {
            if b.rows() != m {
                return Err(Error::DimensionMismatch {
                    context: "block row count",
                    expected: m,
                    found: b.rows(),
                });
            }
            offsets.push(offsets.last().unwrap() + b.cols());
        }
        Ok(Self { blocks, offsets })
    }

    pub fn offsets(&self) -> &[usize] {
        &self.offsets
    }
}

impl LinearOperator for BlockRowOperator {
    fn rows(&self) -> usize {
        self.blocks[0].rows()
    }
    fn cols(&self) -> usize {
        *self.offsets.last().unwrap()
    }
    fn kind(&self) -> OperatorKind {
        OperatorKind::Composite
    }
    fn apply_into(&self, v: &[f64], out: &mut [f64]) {
        out.iter_mut().for_each(|o| *o = 0.0);
        let mut tmp = vec![0.0; out.len()];
        for (l, b) in self.blocks.iter().enumerate() {
            b.apply_into(&v[self.offsets[l]..self.offsets[l + 1]], &mut tmp);
            out.iter_mut().zip(&tmp).for_each(|(o, t)| *o += t);
        }
    }
    fn apply_transpose_into(&self, w: &[f64], out: &mut [f64]) {
        for (l, b) in self.blocks.iter().enumerate() {
            b.apply_transpose_into(w, &mut out[self.offsets[l]..self.offsets[l + 1]]);
        }
    }
}

type Kernel = dyn Fn(&[f64], &mut [f64]) + Send + Sync;

/// Operator defined by a pair of closures.
pub struct CallbackOperator {
    rows: usize,
    cols: usize,
    forward: Box<Kernel>,
    adjoint: Box<Kernel>,
}

impl CallbackOperator {
    pub fn new(
        rows: usize,
        cols: usize,
        forward: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
        adjoint: impl Fn(&[f64], &mut [f64]) + Send + Sync + 'static,
    ) -> Self {
        Self {
            rows,
            cols,
            forward: Box::new(forward),
            adjoint: Box::new(adjoint),
        }
    }
}

impl fmt::Debug for CallbackOperator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CallbackOperator")
            .field("rows", &self.rows)
            .field("cols", &self.cols)
            .finish_non_exhaustive()
    }
}

impl LinearOperator for CallbackOperator {
    fn rows(&self) -> usize {
        self.rows
    }
    fn cols(&self) -> usize {
        self.cols
    }
    fn kind(&self) -> OperatorKind {
        OperatorKind::Callback
    }
    fn apply_into(&self, v: &[f64], out: &mut [f64]) {
        (self.forward)(v, out)
    }
    fn apply_transpose_into(&self, w: &[f64], out: &mut [f64]) {
        (self.adjoint)(w, out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn identity_apply() {
        let id = IdentityOperator::new(2);
        assert_eq!(id.apply(&[3.0, -1.0]).unwrap(), vec![3.0, -1.0]);
        let id1 = IdentityOperator::new(1);
        assert_eq!(id1.apply_transpose(&[5.0]).unwrap(), vec![5.0]);
    }

    #[test]
    fn dense_hand_computation() {
        let a = DenseMatrix::from_rows(&[&[1.0, 2.0, 0.0], &[0.0, 1.0, 1.0]]).unwrap();
        assert_eq!(a.apply(&[1.0, 1.0, 1.0]).unwrap(), vec![3.0, 2.0]);
        assert_eq!(a.apply_transpose(&[1.0, 0.0]).unwrap(), vec![1.0, 2.0, 0.0]);
    }

    #[test]
    fn checked_apply_rejects_bad_input() {
        let a = DenseMatrix::identity(3);
        assert!(matches!(a.apply(&[1.0, 2.0]), Err(Error::DimensionMismatch { .. })));
        assert!(matches!(
            a.apply(&[1.0, f64::INFINITY, 0.0]),
            Err(Error::NonFinite { .. })
        ));
        assert!(matches!(
            a.apply_transpose(&[1.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn product_dimensions_checked() {
        let a: OpRef = Arc::new(DenseMatrix::zeros(2, 3));
        let b: OpRef = Arc::new(DenseMatrix::zeros(4, 2));
        assert!(ProductOperator::new(vec![a.clone(), b.clone()]).is_err());
        let p = ProductOperator::new(vec![b, a]).unwrap();
        assert_eq!((p.rows(), p.cols()), (4, 3));
    }

    #[test]
    fn block_row_concatenates() {
        let b1 = DenseMatrix::from_rows(&[&[1.0], &[2.0]]).unwrap();
        let b2 = DenseMatrix::from_rows(&[&[0.0, 1.0], &[1.0, 0.0]]).unwrap();
        let op = BlockRowOperator::new(vec![Arc::new(b1), Arc::new(b2)]).unwrap();
        assert_eq!(op.apply(&[1.0, 2.0, 3.0]).unwrap(), vec![4.0, 4.0]);
        assert_eq!(op.apply_transpose(&[1.0, 1.0]).unwrap(), vec![3.0, 1.0, 1.0]);
    }
}

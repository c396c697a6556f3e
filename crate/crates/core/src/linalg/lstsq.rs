use crate::error::{Error, Result};
use crate::linalg::dense::{dot, DenseMatrix};

/// Householder QR of a tall matrix, kept in compact form.
#[derive(Clone, Debug)]
pub struct HouseholderQr {
    /// R in the upper triangle, reflector tails below the diagonal.
    qr: DenseMatrix,
    /// Reflector scalars `tau_k` with `H_k = I - tau_k v v^T`, `v_k = 1`.
    tau: Vec<f64>,
    rdiag: Vec<f64>,
}

impl HouseholderQr {
    pub fn new(a: &DenseMatrix) -> Result<Self> {
        let (p, q) = (a.rows(), a.cols());
        if p < q {
            return Err(Error::InvalidArgument(format!(
                "least squares needs rows >= cols, got {p}x{q}"
            )));
        }
        let mut qr = a.clone();
        let mut tau = vec![0.0; q];
        let mut rdiag = vec![0.0; q];
        for k in 0..q {
            let col = &qr.col(k)[k..];
            let norm = dot(col, col).sqrt();
            if norm == 0.0 {
                tau[k] = 0.0;
                rdiag[k] = 0.0;
                continue;
            }
            let alpha = if col[0] > 0.0 { -norm } else { norm };
            let v0 = col[0] - alpha;
            // scale so that v_k = 1
            {
                let c = qr.col_mut(k);
                for v in &mut c[k + 1..] {
                    *v /= v0;
                }
                c[k] = alpha;
            }
            let t = -v0 / alpha;
            tau[k] = t;
            rdiag[k] = alpha;
            for j in (k + 1)..q {
                let (vpart, rest) = qr.data_mut().split_at_mut(j * p);
                let v = &vpart[k * p + k..k * p + p];
                let cj = &mut rest[k..p];
                // w = v^T c with v[0] = 1
                let w = cj[0] + dot(&v[1..], &cj[1..]);
                let s = t * w;
                cj[0] -= s;
                for (ci, &vi) in cj[1..].iter_mut().zip(&v[1..]) {
                    *ci -= s * vi;
                }
            }
        }
        Ok(Self { qr, tau, rdiag })
    }

    /// Numerical rank from the diagonal of R.
    pub fn rank(&self) -> usize {
        let (p, q) = (self.qr.rows(), self.qr.cols());
        let rmax = self.rdiag.iter().fold(0.0_f64, |a, r| a.max(r.abs()));
        let tol = rmax * f64::EPSILON * p.max(q) as f64;
        self.rdiag.iter().filter(|r| r.abs() > tol).count()
    }

    /// `y <- Q^T y`
    pub fn apply_qt(&self, y: &mut [f64]) {
        let p = self.qr.rows();
        for k in 0..self.qr.cols() {
            if self.tau[k] == 0.0 {
                continue;
            }
            let v = &self.qr.col(k)[k..p];
            let w = y[k] + dot(&v[1..], &y[k + 1..]);
            let s = self.tau[k] * w;
            y[k] -= s;
            for (yi, &vi) in y[k + 1..].iter_mut().zip(&v[1..]) {
                *yi -= s * vi;
            }
        }
    }

    /// Solves `min ‖A x - b‖` assuming full column rank.
    pub fn solve(&self, b: &[f64]) -> Result<Vec<f64>> {
        let (p, q) = (self.qr.rows(), self.qr.cols());
        if b.len() != p {
            return Err(Error::DimensionMismatch {
                context: "least squares right-hand side",
                expected: p,
                found: b.len(),
            });
        }
        let rank = self.rank();
        if rank < q {
            return Err(Error::RankDeficient { rank, cols: q });
        }
        let mut y = b.to_vec();
        self.apply_qt(&mut y);
        let mut x = y[..q].to_vec();
        for i in (0..q).rev() {
            let mut s = x[i];
            for j in (i + 1)..q {
                s -= self.qr.get(i, j) * x[j];
            }
            x[i] = s / self.qr.get(i, i);
        }
        Ok(x)
    }

    /// Upper-triangular factor R (q × q).
    pub fn r(&self) -> DenseMatrix {
        let q = self.qr.cols();
        DenseMatrix::from_fn(q, q, |i, j| if i <= j { self.qr.get(i, j) } else { 0.0 })
    }

    /// Thin Q (p × q).
    pub fn thin_q(&self) -> DenseMatrix {
        let (p, q) = (self.qr.rows(), self.qr.cols());
        let mut out = DenseMatrix::zeros(p, q);
        for j in 0..q {
            let col = out.col_mut(j);
            col[j] = 1.0;
            // Q e_j = H_0 H_1 ... H_{q-1} e_j
            for k in (0..q).rev() {
                if self.tau[k] == 0.0 {
                    continue;
                }
                let v = &self.qr.col(k)[k..p];
                let w = col[k] + dot(&v[1..], &col[k + 1..]);
                let s = self.tau[k] * w;
                col[k] -= s;
                for (ci, &vi) in col[k + 1..].iter_mut().zip(&v[1..]) {
                    *ci -= s * vi;
                }
            }
        }
        out
    }
}

/// Dense linear least squares `argmin ‖A x - b‖` for `p ≥ q`, full column rank.
pub fn dense_lstsq(a: &DenseMatrix, b: &[f64]) -> Result<Vec<f64>> {
    HouseholderQr::new(a)?.solve(b)
}

use crate::error::{Error, Result};
use crate::linalg::dense::{axpy, dot, norm2, DenseMatrix};
use crate::linalg::operator::{check_input, LinearOperator};

/// Breakdown threshold relative to the running norm estimate of the bidiagonal.
pub const BREAKDOWN_TOL: f64 = 1e-14;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Reorth {
    /// Reorthogonalize every new Lanczos vector against all stored ones.
    #[default]
    Full,
    None,
}

/// Lanczos triplet `(U_{ℓ+1}, B_ℓ, V_ℓ)` with `A V_ℓ = U_{ℓ+1} B_ℓ`.
///
/// `B_ℓ` is lower bidiagonal `(ℓ+1) × ℓ` with diagonal `alphas` and
/// subdiagonal `betas[1..]`; `betas[0]` is `‖b‖`. After a breakdown the
/// trailing vector that could not be normalized is stored as zeros.
#[derive(Clone, Debug)]
pub struct BidiagFactors {
    pub u: DenseMatrix,
    pub v: DenseMatrix,
    pub alphas: Vec<f64>,
    pub betas: Vec<f64>,
    /// `α_{ℓ+1}`, the coefficient coupling `v^{(ℓ+1)}` into `A^T U_{ℓ+1}`.
    pub alpha_next: f64,
    pub breakdown: bool,
}

impl BidiagFactors {
    pub fn steps(&self) -> usize {
        self.alphas.len()
    }

    /// Dense `(ℓ+1) × ℓ` bidiagonal matrix.
    pub fn b_matrix(&self) -> DenseMatrix {
        let l = self.steps();
        let mut b = DenseMatrix::zeros(l + 1, l);
        for j in 0..l {
            b.set(j, j, self.alphas[j]);
            b.set(j + 1, j, self.betas[j + 1]);
        }
        b
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub(crate) enum Advance {
    Ok,
    /// `β_{j+1}` vanished: `A V_j = U_j C_j`, the Krylov space is invariant.
    BetaBreakdown,
    /// `α_{j+1}` vanished: `A^T U_{j+1} = V_j B_j^T`.
    AlphaBreakdown,
}

/// Incremental Golub-Kahan process shared by [`golub_kahan`] and the solvers.
pub(crate) struct Bidiagonalization<'a> {
    op: &'a dyn LinearOperator,
    reorth: Reorth,
    pub(crate) us: Vec<Vec<f64>>,
    pub(crate) vs: Vec<Vec<f64>>,
    /// `α_1 ..= α_{k+1}` after `k` advances.
    pub(crate) alphas: Vec<f64>,
    /// `β_1 ..= β_{k+1}` after `k` advances.
    pub(crate) betas: Vec<f64>,
    norm_sq: f64,
    pub(crate) stopped: Option<Advance>,
}

impl<'a> Bidiagonalization<'a> {
    pub(crate) fn new(op: &'a dyn LinearOperator, b: &[f64], reorth: Reorth) -> Result<Self> {
        check_input(b, op.rows(), "bidiagonalization seed")?;
        let beta1 = norm2(b);
        if beta1 == 0.0 {
            return Err(Error::ZeroSeed);
        }
        let u1: Vec<f64> = b.iter().map(|x| x / beta1).collect();
        let mut t = vec![0.0; op.cols()];
        op.apply_transpose_into(&u1, &mut t);
        let alpha1 = norm2(&t);
        let mut stopped = None;
        if alpha1 == 0.0 || !alpha1.is_finite() {
            stopped = Some(Advance::AlphaBreakdown);
            t.iter_mut().for_each(|x| *x = 0.0);
        } else {
            t.iter_mut().for_each(|x| *x /= alpha1);
        }
        let alpha1 = if stopped.is_some() { 0.0 } else { alpha1 };
        Ok(Self {
            op,
            reorth,
            us: vec![u1],
            vs: vec![t],
            alphas: vec![alpha1],
            betas: vec![beta1],
            norm_sq: alpha1 * alpha1,
            stopped,
        })
    }

    /// Number of completed steps `ℓ` (so `U_{ℓ+1}`, `V_ℓ` are available).
    pub(crate) fn steps(&self) -> usize {
        self.betas.len() - 1
    }

    fn threshold(&self) -> f64 {
        BREAKDOWN_TOL * self.norm_sq.sqrt()
    }

    /// Computes `β_{j+1}, u^{(j+1)}` and then `α_{j+1}, v^{(j+1)}`.
    pub(crate) fn advance(&mut self) -> Advance {
        if let Some(s) = self.stopped {
            return s;
        }
        let j = self.steps();
        let alpha_j = self.alphas[j];
        let mut u = vec![0.0; self.op.rows()];
        self.op.apply_into(&self.vs[j], &mut u);
        axpy(-alpha_j, &self.us[j], &mut u);
        if self.reorth == Reorth::Full {
            reorthogonalize(&mut u, &self.us);
        }
        let beta = norm2(&u);
        self.norm_sq += beta * beta;
        if !(beta > self.threshold()) {
            self.betas.push(0.0);
            self.us.push(vec![0.0; self.op.rows()]);
            self.alphas.push(0.0);
            self.vs.push(vec![0.0; self.op.cols()]);
            self.stopped = Some(Advance::BetaBreakdown);
            return Advance::BetaBreakdown;
        }
        u.iter_mut().for_each(|x| *x /= beta);

        let mut v = vec![0.0; self.op.cols()];
        self.op.apply_transpose_into(&u, &mut v);
        axpy(-beta, &self.vs[j], &mut v);
        if self.reorth == Reorth::Full {
            reorthogonalize(&mut v, &self.vs);
        }
        let alpha = norm2(&v);
        self.norm_sq += alpha * alpha;
        self.betas.push(beta);
        self.us.push(u);
        if !(alpha > self.threshold()) {
            self.alphas.push(0.0);
            self.vs.push(vec![0.0; self.op.cols()]);
            self.stopped = Some(Advance::AlphaBreakdown);
            return Advance::AlphaBreakdown;
        }
        v.iter_mut().for_each(|x| *x /= alpha);
        self.alphas.push(alpha);
        self.vs.push(v);
        Advance::Ok
    }

    /// `Σ_k coeffs[k] u^{(k+1)}`
    pub(crate) fn combine_u(&self, coeffs: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.op.rows()];
        for (c, u) in coeffs.iter().zip(&self.us) {
            axpy(*c, u, &mut out);
        }
        out
    }

    /// `Σ_k coeffs[k] v^{(k+1)}`
    pub(crate) fn combine_v(&self, coeffs: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.op.cols()];
        for (c, v) in coeffs.iter().zip(&self.vs) {
            axpy(*c, v, &mut out);
        }
        out
    }

    pub(crate) fn factors(&self) -> BidiagFactors {
        let l = self.steps();
        let m = self.op.rows();
        let n = self.op.cols();
        let u = DenseMatrix::from_columns(m, &self.us[..=l]).expect("consistent lengths");
        let v = DenseMatrix::from_columns(n, &self.vs[..l]).expect("consistent lengths");
        BidiagFactors {
            u,
            v,
            alphas: self.alphas[..l].to_vec(),
            betas: self.betas[..=l].to_vec(),
            alpha_next: self.alphas[l],
            breakdown: self.stopped.is_some(),
        }
    }
}

/// Two passes of classical Gram-Schmidt against the stored basis.
fn reorthogonalize(x: &mut [f64], basis: &[Vec<f64>]) {
    for _ in 0..2 {
        for q in basis {
            let c = dot(q, x);
            if c != 0.0 {
                axpy(-c, q, x);
            }
        }
    }
}

/// Runs `steps` Golub-Kahan steps seeded with `b`.
///
/// Stops early if some `α_j` or `β_j` falls below the breakdown threshold; the
/// truncated factors are returned with `breakdown` set.
pub fn golub_kahan(
    op: &dyn LinearOperator,
    b: &[f64],
    steps: usize,
    reorth: Reorth,
) -> Result<BidiagFactors> {
    let limit = op.rows().min(op.cols());
    if steps == 0 || steps >= limit {
        return Err(Error::InvalidArgument(format!(
            "bidiagonalization steps must satisfy 1 <= steps < min(m, n) = {limit}, got {steps}"
        )));
    }
    let mut bd = Bidiagonalization::new(op, b, reorth)?;
    for _ in 0..steps {
        if bd.advance() != Advance::Ok {
            break;
        }
    }
    Ok(bd.factors())
}

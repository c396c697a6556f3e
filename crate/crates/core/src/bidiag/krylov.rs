use crate::bidiag::lanczos::{Advance, Bidiagonalization, Reorth};
use crate::error::{Error, Result};
use crate::linalg::dense::{norm2, DenseMatrix};
use crate::linalg::lstsq::dense_lstsq;
use crate::linalg::operator::{check_input, LinearOperator};

/// Storage strategy for the Lanczos vectors.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum MemoryMode {
    /// Keep every basis vector and form the solution at the end.
    #[default]
    Store,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct KrylovConfig {
    pub max_steps: usize,
    /// Stop once the projected residual norm divided by the norm of the
    /// right-hand side drops below this.
    pub tol: f64,
    pub reorth: Reorth,
    pub memory: MemoryMode,
}

impl Default for KrylovConfig {
    fn default() -> Self {
        Self {
            max_steps: 30,
            tol: 1e-8,
            reorth: Reorth::Full,
            memory: MemoryMode::Store,
        }
    }
}

impl KrylovConfig {
    pub fn new(max_steps: usize, tol: f64) -> Result<Self> {
        let cfg = Self {
            max_steps,
            tol,
            ..Self::default()
        };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn with_reorth(mut self, reorth: Reorth) -> Self {
        self.reorth = reorth;
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.max_steps == 0 {
            return Err(Error::InvalidArgument("max_steps must be at least 1".into()));
        }
        if !(self.tol > 0.0 && self.tol < 1.0) {
            return Err(Error::InvalidArgument(format!(
                "Krylov tolerance must lie in (0, 1), got {}",
                self.tol
            )));
        }
        Ok(())
    }
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct KrylovStats {
    pub steps: usize,
    /// Final projected residual norm relative to the right-hand side norm.
    pub residual: f64,
    pub converged: bool,
    pub breakdown: bool,
    /// Relative projected residual after each step.
    pub history: Vec<f64>,
}

impl KrylovStats {
    pub const CSV_HEADER: &'static str = "steps,residual,breakdown";

    pub fn csv_row(&self) -> String {
        format!("{},{:.16e},{}", self.steps, self.residual, self.breakdown)
    }

    fn trivial() -> Self {
        Self {
            steps: 0,
            residual: 0.0,
            converged: true,
            breakdown: false,
            history: Vec::new(),
        }
    }
}

fn check_shift(mu: f64) -> Result<()> {
    if !(mu >= 0.0) || !mu.is_finite() {
        return Err(Error::InvalidArgument(format!("shift must be finite and >= 0, got {mu}")));
    }
    Ok(())
}

/// Solves `(A A^T + μ I) z = b` with `z = U_ℓ ξ`, where `ξ` minimizes
/// `‖(C_ℓ C_ℓ^T + μ I_ℓ) ξ - β_1 e_1‖² + (β_{ℓ+1} α_ℓ ξ_ℓ)²` and `C_ℓ` is `B_ℓ`
/// without its last row.
///
/// Non-convergence within `max_steps` is reported through
/// [`KrylovStats::converged`], not as an error.
pub fn solve_adjoint_krylov(
    op: &dyn LinearOperator,
    b: &[f64],
    mu: f64,
    cfg: &KrylovConfig,
) -> Result<(Vec<f64>, KrylovStats)> {
    cfg.validate()?;
    check_shift(mu)?;
    check_input(b, op.rows(), "adjoint Krylov right-hand side")?;
    let mut bd = Bidiagonalization::new(op, b, cfg.reorth)?;
    let beta1 = bd.betas[0];
    if bd.stopped == Some(Advance::AlphaBreakdown) {
        // A^T b = 0, so b is an eigenvector of A A^T with eigenvalue 0
        if mu == 0.0 {
            return Err(Error::InvalidArgument(
                "A A^T is singular along the right-hand side and the shift is zero".into(),
            ));
        }
        let z = b.iter().map(|x| x / mu).collect();
        return Ok((z, KrylovStats::trivial()));
    }

    let limit = cfg.max_steps.min(op.rows()).min(op.cols());
    let mut stats = KrylovStats::default();
    let mut xi: Vec<f64> = Vec::new();
    for _ in 0..limit {
        let status = bd.advance();
        let l = bd.steps();
        let a = &bd.alphas;
        let bt = &bd.betas;
        let (sol, res) = if status == Advance::AlphaBreakdown {
            // A A^T U_{ℓ+1} = U_{ℓ+1} B_ℓ B_ℓ^T: solve the square system exactly
            let mut m = bbt_square(a, bt, l);
            m.add_diagonal(mu);
            let mut rhs = vec![0.0; l + 1];
            rhs[0] = beta1;
            let s = dense_lstsq(&m, &rhs)?;
            let r = residual_norm(&m, &s, &rhs);
            (s, r)
        } else {
            // stacked (ℓ+1) × ℓ system
            let mut m = DenseMatrix::zeros(l + 1, l);
            let cct = cct(a, bt, l);
            for j in 0..l {
                for i in 0..l {
                    m.set(i, j, cct.get(i, j));
                }
                m.set(j, j, m.get(j, j) + mu);
            }
            m.set(l, l - 1, bt[l] * a[l - 1]);
            let mut rhs = vec![0.0; l + 1];
            rhs[0] = beta1;
            let s = dense_lstsq(&m, &rhs)?;
            let r = residual_norm(&m, &s, &rhs);
            (s, r)
        };
        xi = sol;
        let rel = res / beta1;
        stats.history.push(rel);
        stats.steps = l;
        stats.residual = rel;
        if status != Advance::Ok {
            stats.breakdown = true;
            stats.converged = true;
            break;
        }
        if rel < cfg.tol {
            stats.converged = true;
            break;
        }
    }
    let z = bd.combine_u(&xi);
    Ok((z, stats))
}

/// Solves `(A^T A + μ I) x = A^T b` with `x = V_ℓ ζ`, where `ζ` minimizes
/// `‖(B_ℓ^T B_ℓ + μ I_ℓ) ζ - α_1 β_1 e_1‖² + (α_{ℓ+1} β_{ℓ+1} ζ_ℓ)²`.
pub fn solve_normal_krylov(
    op: &dyn LinearOperator,
    b: &[f64],
    mu: f64,
    cfg: &KrylovConfig,
) -> Result<(Vec<f64>, KrylovStats)> {
    cfg.validate()?;
    check_shift(mu)?;
    check_input(b, op.rows(), "normal Krylov right-hand side")?;
    let mut bd = Bidiagonalization::new(op, b, cfg.reorth)?;
    if bd.stopped == Some(Advance::AlphaBreakdown) {
        // A^T b = 0
        return Ok((vec![0.0; op.cols()], KrylovStats::trivial()));
    }
    let scale = bd.alphas[0] * bd.betas[0];
    let limit = cfg.max_steps.min(op.rows()).min(op.cols());
    let mut stats = KrylovStats::default();
    let mut zeta: Vec<f64> = Vec::new();
    for _ in 0..limit {
        let status = bd.advance();
        let l = bd.steps();
        let a = &bd.alphas;
        let bt = &bd.betas;
        let btb = btb(a, bt, l);
        let mut m = DenseMatrix::zeros(l + 1, l);
        for j in 0..l {
            for i in 0..l {
                m.set(i, j, btb.get(i, j));
            }
            m.set(j, j, m.get(j, j) + mu);
        }
        m.set(l, l - 1, a[l] * bt[l]);
        let mut rhs = vec![0.0; l + 1];
        rhs[0] = scale;
        zeta = dense_lstsq(&m, &rhs)?;
        let rel = residual_norm(&m, &zeta, &rhs) / scale;
        stats.history.push(rel);
        stats.steps = l;
        stats.residual = rel;
        if status != Advance::Ok {
            stats.breakdown = true;
            stats.converged = true;
            break;
        }
        if rel < cfg.tol {
            stats.converged = true;
            break;
        }
    }
    let x = bd.combine_v(&zeta);
    Ok((x, stats))
}

fn residual_norm(m: &DenseMatrix, x: &[f64], rhs: &[f64]) -> f64 {
    let mut r = m.matvec(x);
    r.iter_mut().zip(rhs).for_each(|(ri, b)| *ri -= b);
    norm2(&r)
}

/// `C_ℓ C_ℓ^T` (tridiagonal), `C_ℓ` lower bidiagonal with diagonal
/// `α_1..α_ℓ` and subdiagonal `β_2..β_ℓ`.
fn cct(alphas: &[f64], betas: &[f64], l: usize) -> DenseMatrix {
    let mut m = DenseMatrix::zeros(l, l);
    for i in 0..l {
        let sub = if i > 0 { betas[i] } else { 0.0 };
        m.set(i, i, alphas[i] * alphas[i] + sub * sub);
        if i + 1 < l {
            let off = alphas[i] * betas[i + 1];
            m.set(i, i + 1, off);
            m.set(i + 1, i, off);
        }
    }
    m
}

/// `B_ℓ^T B_ℓ` (tridiagonal).
fn btb(alphas: &[f64], betas: &[f64], l: usize) -> DenseMatrix {
    let mut m = DenseMatrix::zeros(l, l);
    for j in 0..l {
        m.set(j, j, alphas[j] * alphas[j] + betas[j + 1] * betas[j + 1]);
        if j + 1 < l {
            let off = betas[j + 1] * alphas[j + 1];
            m.set(j, j + 1, off);
            m.set(j + 1, j, off);
        }
    }
    m
}

/// `B_ℓ B_ℓ^T`, `(ℓ+1) × (ℓ+1)`.
fn bbt_square(alphas: &[f64], betas: &[f64], l: usize) -> DenseMatrix {
    let mut b = DenseMatrix::zeros(l + 1, l);
    for j in 0..l {
        b.set(j, j, alphas[j]);
        b.set(j + 1, j, betas[j + 1]);
    }
    b.outer_gram()
}

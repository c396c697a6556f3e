//! Randomize-then-optimize draws.
//!
//! A draw for perturbations `η ~ N(0, I_m)`, `ν ~ N(0, I_n)` is the solution of
//! the normal equations `(A^T A + I) x = A^T (b + η) + ν`. When `m < n` the
//! same `x` is obtained from the data space: split `ν = A^T δ + h` with
//! `A A^T δ = A ν` and `h ∈ null(A)`, solve `(A A^T + I) z = b + η + δ`, and set
//! `x = A^T z + h`.

use crate::bidiag::{solve_adjoint_krylov, solve_normal_krylov, KrylovConfig, KrylovStats};
use crate::error::{Error, Result};
use crate::linalg::cholesky::{cholesky_factor, CholeskyFactor};
use crate::linalg::dense::{axpy, norm2, DenseMatrix};
use crate::linalg::operator::{check_input, OpRef};
use crate::sampler::model::StandardFormModel;

#[derive(Clone, Copy, Debug, PartialEq, Default)]
pub enum Solver {
    /// Dense factorization, computed once and reused for every draw.
    #[default]
    Direct,
    /// Matrix-free projected Krylov solves, one Lanczos run per system.
    Krylov(KrylovConfig),
}

/// Solver work for a single draw.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct DrawStats {
    /// Lanczos steps summed over all Krylov solves of the draw (0 for direct).
    pub steps: usize,
    /// Largest relative projected residual over the Krylov solves (0 for direct).
    pub residual: f64,
    pub converged: bool,
}

impl DrawStats {
    pub(crate) fn direct() -> Self {
        Self {
            steps: 0,
            residual: 0.0,
            converged: true,
        }
    }

    fn absorb(&mut self, k: &KrylovStats) {
        self.steps += k.steps;
        self.residual = self.residual.max(k.residual);
        self.converged &= k.converged;
    }
}

/// One subspace-splitting draw with all intermediate vectors exposed.
#[derive(Clone, Debug, PartialEq)]
pub struct SplitDraw {
    pub eta: Vec<f64>,
    pub nu: Vec<f64>,
    pub delta: Vec<f64>,
    pub h: Vec<f64>,
    pub z: Vec<f64>,
    /// Standard-form draw `A^T z + h`.
    pub x: Vec<f64>,
}

fn krylov_converged() -> DrawStats {
    DrawStats {
        steps: 0,
        residual: 0.0,
        converged: true,
    }
}

/// Prepared normal-equation solver for `(A^T A + I) x = A^T d + ν`.
#[derive(Clone, Debug)]
pub struct NormalSolver {
    op: OpRef,
    kind: NormalKind,
}

#[derive(Clone, Debug)]
enum NormalKind {
    Direct { a: DenseMatrix, factor: CholeskyFactor },
    Krylov(KrylovConfig),
}

impl NormalSolver {
    pub fn new(op: OpRef, solver: Solver) -> Result<Self> {
        let kind = match solver {
            Solver::Direct => {
                let a = op.to_dense();
                let mut g = a.gram();
                g.add_diagonal(1.0);
                let factor = cholesky_factor(&g)?;
                NormalKind::Direct { a, factor }
            }
            Solver::Krylov(cfg) => {
                cfg.validate()?;
                NormalKind::Krylov(cfg)
            }
        };
        Ok(Self { op, kind })
    }

    /// Solves `(A^T A + I) x = A^T d + ν`.
    pub fn solve(&self, d: &[f64], nu: &[f64]) -> Result<(Vec<f64>, DrawStats)> {
        match &self.kind {
            NormalKind::Direct { a, factor } => {
                let mut x = a.matvec_t(d);
                axpy(1.0, nu, &mut x);
                factor.solve_in_place(&mut x);
                Ok((x, DrawStats::direct()))
            }
            NormalKind::Krylov(cfg) => {
                // x = ν + y with (A^T A + I) y = A^T (d - A ν)
                let mut r = vec![0.0; self.op.rows()];
                self.op.apply_into(nu, &mut r);
                r.iter_mut().zip(d).for_each(|(ri, di)| *ri = di - *ri);
                let mut stats = krylov_converged();
                let mut x = nu.to_vec();
                if norm2(&r) > 0.0 {
                    let (y, ks) = solve_normal_krylov(self.op.as_ref(), &r, 1.0, cfg)?;
                    stats.absorb(&ks);
                    axpy(1.0, &y, &mut x);
                }
                Ok((x, stats))
            }
        }
    }
}

/// Prepared data-space solver: the split `(A A^T + ridge I) δ = A ν` and the
/// adjoint system `(A A^T + I) z = r`.
#[derive(Clone, Debug)]
pub struct AdjointSolver {
    op: OpRef,
    ridge: f64,
    kind: AdjointKind,
}

#[derive(Clone, Debug)]
enum AdjointKind {
    Direct {
        a: DenseMatrix,
        adjoint: CholeskyFactor,
        split: CholeskyFactor,
    },
    Krylov(KrylovConfig),
}

impl AdjointSolver {
    pub fn new(op: OpRef, solver: Solver, ridge: f64) -> Result<Self> {
        if !(ridge >= 0.0) || !ridge.is_finite() {
            return Err(Error::InvalidArgument(format!("ridge must be >= 0, got {ridge}")));
        }
        let kind = match solver {
            Solver::Direct => {
                let a = op.to_dense();
                let outer = a.outer_gram();
                let mut split_m = outer.clone();
                split_m.add_diagonal(ridge);
                let singular = |pivot| Error::SingularSplit {
                    pivot,
                    recommended_ridge: recommended_ridge(&outer),
                };
                let split = cholesky_factor(&split_m).map_err(|e| match e {
                    Error::NotPositiveDefinite { pivot, .. } => singular(pivot),
                    other => other,
                })?;
                if let Some(pivot) = negligible_pivot(&split, &split_m) {
                    return Err(singular(pivot));
                }
                let mut adj_m = outer;
                adj_m.add_diagonal(1.0);
                let adjoint = cholesky_factor(&adj_m)?;
                AdjointKind::Direct { a, adjoint, split }
            }
            Solver::Krylov(cfg) => {
                cfg.validate()?;
                AdjointKind::Krylov(cfg)
            }
        };
        Ok(Self { op, ridge, kind })
    }

    pub fn ridge(&self) -> f64 {
        self.ridge
    }

    /// `ν = A^T δ + h`.
    pub fn split(&self, nu: &[f64]) -> Result<(Vec<f64>, Vec<f64>, DrawStats)> {
        let mut a_nu = vec![0.0; self.op.rows()];
        self.op.apply_into(nu, &mut a_nu);
        let (delta, stats) = match &self.kind {
            AdjointKind::Direct { split, .. } => {
                split.solve_in_place(&mut a_nu);
                (a_nu, DrawStats::direct())
            }
            AdjointKind::Krylov(cfg) => {
                let mut stats = krylov_converged();
                if norm2(&a_nu) == 0.0 {
                    (a_nu, stats)
                } else {
                    let (d, ks) = solve_adjoint_krylov(self.op.as_ref(), &a_nu, self.ridge, cfg)
                        .map_err(|e| match e {
                            Error::RankDeficient { rank, .. } => Error::SingularSplit {
                                pivot: rank,
                                recommended_ridge: 0.0,
                            },
                            other => other,
                        })?;
                    stats.absorb(&ks);
                    (d, stats)
                }
            }
        };
        let mut h = self.transpose_apply(&delta);
        h.iter_mut().zip(nu).for_each(|(hi, ni)| *hi = ni - *hi);
        Ok((delta, h, stats))
    }

    /// Solves `(A A^T + I) z = r`.
    pub fn solve_adjoint(&self, r: &[f64]) -> Result<(Vec<f64>, DrawStats)> {
        match &self.kind {
            AdjointKind::Direct { adjoint, .. } => {
                let mut z = r.to_vec();
                adjoint.solve_in_place(&mut z);
                Ok((z, DrawStats::direct()))
            }
            AdjointKind::Krylov(cfg) => {
                if norm2(r) == 0.0 {
                    return Ok((vec![0.0; r.len()], krylov_converged()));
                }
                let (z, ks) = solve_adjoint_krylov(self.op.as_ref(), r, 1.0, cfg)?;
                let mut stats = krylov_converged();
                stats.absorb(&ks);
                Ok((z, stats))
            }
        }
    }

    fn transpose_apply(&self, w: &[f64]) -> Vec<f64> {
        match &self.kind {
            AdjointKind::Direct { a, .. } => a.matvec_t(w),
            AdjointKind::Krylov(_) => {
                let mut out = vec![0.0; self.op.cols()];
                self.op.apply_transpose_into(w, &mut out);
                out
            }
        }
    }

    /// Full splitting draw for data `b` and perturbations `(η, ν)`.
    pub fn draw(&self, b: &[f64], eta: &[f64], nu: &[f64]) -> Result<(SplitDraw, DrawStats)> {
        let (delta, h, mut stats) = self.split(nu)?;
        let mut r = b.to_vec();
        axpy(1.0, eta, &mut r);
        axpy(1.0, &delta, &mut r);
        let (z, zs) = self.solve_adjoint(&r)?;
        stats.steps += zs.steps;
        stats.residual = stats.residual.max(zs.residual);
        stats.converged &= zs.converged;
        let mut x = self.transpose_apply(&z);
        axpy(1.0, &h, &mut x);
        Ok((
            SplitDraw {
                eta: eta.to_vec(),
                nu: nu.to_vec(),
                delta,
                h,
                z,
                x,
            },
            stats,
        ))
    }
}

/// First pivot of `G G^T = M` at rounding level, `G_jj^2 <= m eps max_i M_ii`.
/// Such a pivot means `M` is numerically singular even though the
/// factorization went through.
fn negligible_pivot(factor: &CholeskyFactor, m: &DenseMatrix) -> Option<usize> {
    let n = m.rows();
    let scale = (0..n).fold(0.0_f64, |acc, i| acc.max(m.get(i, i)));
    let floor = n as f64 * f64::EPSILON * scale;
    (0..n).find(|&j| factor.lower().get(j, j).powi(2) <= floor)
}

/// Suggested ridge when `A A^T` is numerically singular: `1e-12 ‖A‖²`, with
/// `‖A‖²` estimated by the largest diagonal entry of `A A^T`.
fn recommended_ridge(outer: &DenseMatrix) -> f64 {
    let d = (0..outer.rows()).fold(0.0_f64, |acc, i| acc.max(outer.get(i, i)));
    1e-12 * d.max(f64::MIN_POSITIVE)
}

fn check_perturbations(model: &StandardFormModel, eta: &[f64], nu: &[f64]) -> Result<()> {
    check_input(eta, model.m(), "data perturbation")?;
    check_input(nu, model.n(), "prior perturbation")
}

/// Solves `(A^T A + I) x = A^T (b + η) + ν`.
pub fn rto_draw_normal(
    model: &StandardFormModel,
    eta: &[f64],
    nu: &[f64],
    solver: Solver,
) -> Result<Vec<f64>> {
    check_perturbations(model, eta, nu)?;
    let ns = NormalSolver::new(model.op.clone(), solver)?;
    let mut d = model.b.clone();
    axpy(1.0, eta, &mut d);
    Ok(ns.solve(&d, nu)?.0)
}

/// Splits `ν = A^T δ + h` with `(A A^T + ridge I) δ = A ν`.
pub fn split_nu(
    model: &StandardFormModel,
    nu: &[f64],
    solver: Solver,
    ridge: f64,
) -> Result<(Vec<f64>, Vec<f64>)> {
    check_input(nu, model.n(), "prior perturbation")?;
    let s = AdjointSolver::new(model.op.clone(), solver, ridge)?;
    let (delta, h, _) = s.split(nu)?;
    Ok((delta, h))
}

/// Subspace-splitting draw with zero ridge.
pub fn split_draw_adjoint(
    model: &StandardFormModel,
    eta: &[f64],
    nu: &[f64],
    solver: Solver,
) -> Result<SplitDraw> {
    check_perturbations(model, eta, nu)?;
    let s = AdjointSolver::new(model.op.clone(), solver, 0.0)?;
    Ok(s.draw(&model.b, eta, nu)?.0)
}

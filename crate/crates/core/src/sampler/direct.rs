use crate::error::{Error, Result};
use crate::linalg::cholesky::{cholesky_factor, CholeskyFactor};
use crate::linalg::dense::{axpy, DenseMatrix};
use crate::linalg::operator::check_input;
use crate::sampler::model::StandardFormModel;

/// Largest parameter dimension for which the dense oracle forms `A^T A`.
pub const DEFAULT_ORACLE_CAP: usize = 2000;

/// Closed-form posterior of a standard-form model:
/// precision `A^T A + I`, mean `μ` solving `(A^T A + I) μ = A^T b`.
#[derive(Clone, Debug)]
pub struct PosteriorDirect {
    pub mean: Vec<f64>,
    /// Cholesky factor of the posterior precision `A^T A + I`.
    pub precision_factor: CholeskyFactor,
    a: DenseMatrix,
}

pub fn posterior_direct(model: &StandardFormModel) -> Result<PosteriorDirect> {
    posterior_direct_with_cap(model, DEFAULT_ORACLE_CAP)
}

pub fn posterior_direct_with_cap(model: &StandardFormModel, cap: usize) -> Result<PosteriorDirect> {
    let n = model.n();
    if n > cap {
        return Err(Error::CapExceeded { dim: n, cap });
    }
    let a = model.op.to_dense();
    let mut precision = a.gram();
    precision.add_diagonal(1.0);
    let factor = cholesky_factor(&precision)?;
    let mut mean = a.matvec_t(&model.b);
    factor.solve_in_place(&mut mean);
    Ok(PosteriorDirect {
        mean,
        precision_factor: factor,
        a,
    })
}

impl PosteriorDirect {
    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Dense posterior covariance `C = (A^T A + I)^{-1}`.
    pub fn covariance(&self) -> DenseMatrix {
        self.precision_factor.inverse()
    }

    /// Materialized forward operator.
    pub fn operator(&self) -> &DenseMatrix {
        &self.a
    }

    /// `x = μ + C (A^T η + ν)`: the posterior draw for perturbations `(η, ν)`.
    pub fn draw_with(&self, eta: &[f64], nu: &[f64]) -> Result<Vec<f64>> {
        check_input(eta, self.a.rows(), "data perturbation")?;
        check_input(nu, self.a.cols(), "prior perturbation")?;
        let mut r = self.a.matvec_t(eta);
        axpy(1.0, nu, &mut r);
        self.precision_factor.solve_in_place(&mut r);
        axpy(1.0, &self.mean, &mut r);
        Ok(r)
    }
}

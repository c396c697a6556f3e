//! Reduction of general Gaussian models to standard form.
//!
//! With prior `x ~ N(x₀, Γ)`, noise `e ~ N(0, Σ)` and precision factors
//! `Γ⁻¹ = LᵀL`, `Σ⁻¹ = SᵀS`, the variable `x̃ = L(x - x₀)` has an identity
//! prior and `b̃ = S(b - A x₀) = S A L⁻¹ x̃ + S e` has identity noise.
//!
//! A rectangular `L` (`p × n`, `p ≥ n`, full column rank) is handled in the
//! variable `z = L x`: the sampler works with `A L†` in `ℝ^p` and every draw is
//! mapped back by `L† = (LᵀL)⁻¹Lᵀ`. Components of a draw orthogonal to
//! `range(L)` are annihilated by that final map.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::linalg::cholesky::{cholesky_factor, CholeskyFactor};
use crate::linalg::operator::{check_input, LinearOperator, OpRef, OperatorKind, ProductOperator};
use crate::sampler::{
    BackTransform, DrawStats, RngStream, SampleBatch, Sampler, SamplerOptions, StandardFormModel,
};

/// `L† = (LᵀL)⁻¹Lᵀ` for a full-column-rank `L`, with `LᵀL` factorized once.
#[derive(Clone, Debug)]
pub struct PinvOperator {
    l: OpRef,
    gram_factor: CholeskyFactor,
}

impl PinvOperator {
    pub fn new(l: OpRef) -> Result<Self> {
        let n = l.cols();
        if l.rows() < n {
            return Err(Error::RankDeficient {
                rank: l.rows(),
                cols: n,
            });
        }
        let gram_factor = cholesky_factor(&l.gram()).map_err(|e| match e {
            Error::NotPositiveDefinite { pivot, .. } => Error::RankDeficient { rank: pivot, cols: n },
            other => other,
        })?;
        Ok(Self { l, gram_factor })
    }

    pub fn factor(&self) -> &OpRef {
        &self.l
    }

    pub fn gram_factor(&self) -> &CholeskyFactor {
        &self.gram_factor
    }
}

impl LinearOperator for PinvOperator {
    fn rows(&self) -> usize {
        self.l.cols()
    }
    fn cols(&self) -> usize {
        self.l.rows()
    }
    fn kind(&self) -> OperatorKind {
        OperatorKind::Composite
    }
    fn apply_into(&self, z: &[f64], out: &mut [f64]) {
        self.l.apply_transpose_into(z, out);
        self.gram_factor.solve_in_place(out);
    }
    fn apply_transpose_into(&self, y: &[f64], out: &mut [f64]) {
        let mut t = y.to_vec();
        self.gram_factor.solve_in_place(&mut t);
        self.l.apply_into(&t, out);
    }
}

/// `(LᵀL)⁻¹Lᵀ z`.
pub fn pinv_apply(p: &PinvOperator, z: &[f64]) -> Result<Vec<f64>> {
    p.apply(z)
}

/// `L (LᵀL)⁻¹ y`.
pub fn pinv_transpose_apply(p: &PinvOperator, y: &[f64]) -> Result<Vec<f64>> {
    p.apply_transpose(y)
}

/// How the prior covariance is specified.
#[derive(Clone, Debug)]
pub enum Prior {
    /// Square invertible `L` with `Γ⁻¹ = LᵀL`. `inverse`, when known in closed
    /// form, is used for `L⁻¹`; otherwise `L⁻¹ = (LᵀL)⁻¹Lᵀ` is applied through
    /// a factorization of `LᵀL`.
    PrecisionFactor { factor: OpRef, inverse: Option<OpRef> },
    /// `z = L x ~ N(0, I_p)` with `L` of size `p × n`, `p ≥ n`.
    Transform(OpRef),
}

/// `b = A x + e`, `x ~ N(x₀, Γ)`, `e ~ N(0, Σ)`.
#[derive(Clone, Debug)]
pub struct GeneralGaussianModel {
    pub op: OpRef,
    pub b: Vec<f64>,
    /// Prior mean; `None` means zero.
    pub x0: Option<Vec<f64>>,
    pub prior: Prior,
    /// `S` with `Σ⁻¹ = SᵀS`; `None` means identity noise.
    pub noise_factor: Option<OpRef>,
}

impl GeneralGaussianModel {
    pub fn new(op: OpRef, b: Vec<f64>, prior: Prior) -> Result<Self> {
        let model = Self {
            op,
            b,
            x0: None,
            prior,
            noise_factor: None,
        };
        model.validate()?;
        Ok(model)
    }

    pub fn with_mean(mut self, x0: Vec<f64>) -> Result<Self> {
        self.x0 = Some(x0);
        self.validate()?;
        Ok(self)
    }

    pub fn with_noise_factor(mut self, s: OpRef) -> Result<Self> {
        self.noise_factor = Some(s);
        self.validate()?;
        Ok(self)
    }

    fn validate(&self) -> Result<()> {
        let (m, n) = (self.op.rows(), self.op.cols());
        check_input(&self.b, m, "data vector")?;
        if let Some(x0) = &self.x0 {
            check_input(x0, n, "prior mean")?;
        }
        let dim = |context, expected, found| {
            if expected == found {
                Ok(())
            } else {
                Err(Error::DimensionMismatch {
                    context,
                    expected,
                    found,
                })
            }
        };
        match &self.prior {
            Prior::PrecisionFactor { factor, inverse } => {
                dim("prior precision factor rows", n, factor.rows())?;
                dim("prior precision factor cols", n, factor.cols())?;
                if let Some(inv) = inverse {
                    dim("prior factor inverse rows", n, inv.rows())?;
                    dim("prior factor inverse cols", n, inv.cols())?;
                }
            }
            Prior::Transform(l) => {
                dim("transform prior cols", n, l.cols())?;
                if l.rows() < n {
                    return Err(Error::RankDeficient {
                        rank: l.rows(),
                        cols: n,
                    });
                }
            }
        }
        if let Some(s) = &self.noise_factor {
            dim("noise precision factor rows", m, s.rows())?;
            dim("noise precision factor cols", m, s.cols())?;
        }
        Ok(())
    }

    /// `S (b - A x₀)`.
    fn whitened_data(&self) -> Vec<f64> {
        let mut r = self.b.clone();
        if let Some(x0) = &self.x0 {
            let mut ax = vec![0.0; self.op.rows()];
            self.op.apply_into(x0, &mut ax);
            r.iter_mut().zip(&ax).for_each(|(ri, a)| *ri -= a);
        }
        match &self.noise_factor {
            Some(s) => {
                let mut out = vec![0.0; s.rows()];
                s.apply_into(&r, &mut out);
                out
            }
            None => r,
        }
    }

    /// `S A M` where `M` is the map from standard-form variables to `x - x₀`.
    fn whitened_operator(&self, back: OpRef) -> Result<OpRef> {
        let mut factors: Vec<OpRef> = Vec::with_capacity(3);
        if let Some(s) = &self.noise_factor {
            factors.push(s.clone());
        }
        factors.push(self.op.clone());
        factors.push(back);
        Ok(Arc::new(ProductOperator::new(factors)?))
    }

    fn standard_form(&self, back: OpRef) -> Result<StandardFormModel> {
        let op = self.whitened_operator(back.clone())?;
        let bt = BackTransform::new(Some(back), self.x0.clone());
        StandardFormModel::with_back_transform(op, self.whitened_data(), bt)
    }
}

/// Standard-form model with operator `S A L⁻¹`, data `S(b - A x₀)` and
/// back-transform `x = L⁻¹ x̃ + x₀`.
pub fn whiten(model: &GeneralGaussianModel) -> Result<StandardFormModel> {
    match &model.prior {
        Prior::PrecisionFactor { factor, inverse } => {
            let inv: OpRef = match inverse {
                Some(inv) => inv.clone(),
                None => Arc::new(PinvOperator::new(factor.clone())?),
            };
            model.standard_form(inv)
        }
        Prior::Transform(_) => Err(Error::InvalidArgument(
            "whiten expects a square prior precision factor; use TransformPriorSampler for transform priors"
                .into(),
        )),
    }
}

/// Sampler for transform priors `L x ~ N(0, I_p)`: draws `z` for the model
/// with operator `S A L†` and returns `x = L† z + x₀`.
#[derive(Clone, Debug)]
pub struct TransformPriorSampler {
    pinv: Arc<PinvOperator>,
    sampler: Sampler,
}

impl TransformPriorSampler {
    pub fn new(model: &GeneralGaussianModel, opts: SamplerOptions) -> Result<Self> {
        let l = match &model.prior {
            Prior::Transform(l) => l.clone(),
            Prior::PrecisionFactor { factor, .. } => factor.clone(),
        };
        let pinv = Arc::new(PinvOperator::new(l)?);
        let standard = model.standard_form(pinv.clone())?;
        Ok(Self {
            pinv,
            sampler: Sampler::new(standard, opts)?,
        })
    }

    pub fn pinv(&self) -> &PinvOperator {
        &self.pinv
    }

    /// The standard-form model in `z`-coordinates.
    pub fn standard_model(&self) -> &StandardFormModel {
        self.sampler.model()
    }

    /// Draw in `x`-coordinates for explicit perturbations `η ∈ ℝ^m`, `ν ∈ ℝ^p`.
    pub fn draw_with(&self, eta: &[f64], nu: &[f64]) -> Result<(Vec<f64>, DrawStats)> {
        check_input(eta, self.sampler.model().m(), "data perturbation")?;
        check_input(nu, self.sampler.model().n(), "prior perturbation")?;
        let (z, st) = self.sampler.draw_with(eta, nu)?;
        Ok((self.sampler.model().back_transform.apply(&z), st))
    }

    pub fn sample(&self, count: usize, rng: RngStream) -> Result<SampleBatch> {
        self.sampler.sample(count, rng)
    }
}

/// `count` draws in `x`-coordinates for a model with a transform prior.
pub fn sample_transform_prior(
    model: &GeneralGaussianModel,
    count: usize,
    rng: RngStream,
    opts: SamplerOptions,
) -> Result<SampleBatch> {
    TransformPriorSampler::new(model, opts)?.sample(count, rng)
}

/// Sampler for any [`GeneralGaussianModel`], returning draws in `x`-coordinates.
#[derive(Clone, Debug)]
pub enum ModelSampler {
    Whitened(Sampler),
    Transform(TransformPriorSampler),
}

impl ModelSampler {
    pub fn new(model: &GeneralGaussianModel, opts: SamplerOptions) -> Result<Self> {
        Ok(match model.prior {
            Prior::PrecisionFactor { .. } => ModelSampler::Whitened(Sampler::new(whiten(model)?, opts)?),
            Prior::Transform(_) => ModelSampler::Transform(TransformPriorSampler::new(model, opts)?),
        })
    }

    /// The standard-form model the draws are computed in.
    pub fn standard_model(&self) -> &StandardFormModel {
        match self {
            ModelSampler::Whitened(s) => s.model(),
            ModelSampler::Transform(t) => t.standard_model(),
        }
    }

    pub fn strategy(&self) -> crate::sampler::Strategy {
        match self {
            ModelSampler::Whitened(s) => s.strategy(),
            ModelSampler::Transform(t) => t.sampler.strategy(),
        }
    }

    /// Draw in `x`-coordinates for explicit standard-form perturbations.
    pub fn draw_with(&self, eta: &[f64], nu: &[f64]) -> Result<(Vec<f64>, DrawStats)> {
        match self {
            ModelSampler::Whitened(s) => {
                check_input(eta, s.model().m(), "data perturbation")?;
                check_input(nu, s.model().n(), "prior perturbation")?;
                let (x, st) = s.draw_with(eta, nu)?;
                Ok((s.model().back_transform.apply(&x), st))
            }
            ModelSampler::Transform(t) => t.draw_with(eta, nu),
        }
    }

    /// Draw in `x`-coordinates with perturbations taken from `stream`.
    pub fn draw_stream(&self, stream: RngStream) -> Result<Vec<f64>> {
        let model = self.standard_model();
        let (nu, eta) = crate::sampler::draw_perturbations(&mut stream.generator(), model.n(), model.m());
        Ok(self.draw_with(&eta, &nu)?.0)
    }

    /// Posterior mean in `x`-coordinates (the unperturbed draw).
    pub fn mean(&self) -> Result<Vec<f64>> {
        let model = self.standard_model();
        Ok(self.draw_with(&vec![0.0; model.m()], &vec![0.0; model.n()])?.0)
    }

    pub fn sample(&self, count: usize, rng: RngStream) -> Result<SampleBatch> {
        match self {
            ModelSampler::Whitened(s) => s.sample(count, rng),
            ModelSampler::Transform(t) => t.sample(count, rng),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::dense::DenseMatrix;
    use crate::linalg::operator::IdentityOperator;

    #[test]
    fn pinv_of_column_of_ones_averages() {
        let l: OpRef = Arc::new(DenseMatrix::from_rows(&[&[1.0], &[1.0]]).unwrap());
        let p = PinvOperator::new(l).unwrap();
        let x = pinv_apply(&p, &[0.0, 2.0]).unwrap();
        assert!((x[0] - 1.0).abs() < 1e-15);
    }

    #[test]
    fn identity_whitening_keeps_model() {
        let a = DenseMatrix::from_rows(&[&[1.0, 2.0, 3.0]]).unwrap();
        let model = GeneralGaussianModel::new(
            Arc::new(a.clone()),
            vec![4.0],
            Prior::PrecisionFactor {
                factor: Arc::new(IdentityOperator::new(3)),
                inverse: Some(Arc::new(IdentityOperator::new(3))),
            },
        )
        .unwrap();
        let w = whiten(&model).unwrap();
        assert_eq!(w.b, vec![4.0]);
        assert_eq!(w.op.to_dense(), a);
    }

    #[test]
    fn rank_deficient_transform_rejected() {
        let l: OpRef = Arc::new(DenseMatrix::from_rows(&[&[1.0, 1.0], &[2.0, 2.0], &[0.0, 0.0]]).unwrap());
        assert!(matches!(PinvOperator::new(l), Err(Error::RankDeficient { .. })));
    }
}

//! Conditionally Gaussian models with inverse-gamma block variances.
//!
//! The unknown is split into blocks `x = (x¹, ..., x^L)` with
//! `x^ℓ | θ_ℓ ~ N(0, θ_ℓ I)`, `θ_ℓ ~ InvGamma(β, ϑ_ℓ)` and
//! `b = Σ L^ℓ x^ℓ + e`, `e ~ N(0, σ² I)`. For fixed `θ` the scaled variable
//! `x̃^ℓ = x^ℓ / √θ_ℓ` turns the conditional of `x` into a standard-form model
//! with operator `σ⁻¹ [√θ_1 L¹ ... √θ_L L^L]` and data `b / σ`.

use std::fmt::Write as _;
use std::ops::Range;
use std::path::Path;
use std::sync::{Arc, OnceLock};

use rand::Rng;
use rand_distr::{Distribution, Gamma};

use crate::error::{Error, Result};
use crate::linalg::dense::{norm2, DenseMatrix};
use crate::linalg::operator::{check_input, BlockRowOperator, DiagonalOperator, LinearOperator, OpRef};
use crate::sampler::{
    draw_perturbations, push_csv_row, BackTransform, RngStream, Sampler, SamplerOptions,
    StandardFormModel,
};

#[derive(Clone, Debug)]
pub struct BlockModel {
    blocks: Vec<OpRef>,
    offsets: Vec<usize>,
    pub b: Vec<f64>,
    pub sigma: f64,
    pub beta: f64,
    pub vartheta: Vec<f64>,
    dense: OnceLock<DenseMatrix>,
}

impl BlockModel {
    pub fn new(blocks: Vec<OpRef>, b: Vec<f64>, sigma: f64, beta: f64, vartheta: Vec<f64>) -> Result<Self> {
        let op = BlockRowOperator::new(blocks.clone())?;
        check_input(&b, op.rows(), "block model data")?;
        if !(sigma > 0.0 && sigma.is_finite()) {
            return Err(Error::InvalidArgument(format!("sigma must be positive, got {sigma}")));
        }
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::InvalidArgument(format!("beta must be positive, got {beta}")));
        }
        if vartheta.len() != blocks.len() {
            return Err(Error::DimensionMismatch {
                context: "scale parameters per block",
                expected: blocks.len(),
                found: vartheta.len(),
            });
        }
        if let Some(v) = vartheta.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
            return Err(Error::InvalidArgument(format!("scale parameters must be positive, got {v}")));
        }
        Ok(Self {
            offsets: op.offsets().to_vec(),
            blocks,
            b,
            sigma,
            beta,
            vartheta,
            dense: OnceLock::new(),
        })
    }

    pub fn m(&self) -> usize {
        self.b.len()
    }

    pub fn n(&self) -> usize {
        *self.offsets.last().unwrap()
    }

    pub fn n_blocks(&self) -> usize {
        self.blocks.len()
    }

    pub fn blocks(&self) -> &[OpRef] {
        &self.blocks
    }

    pub fn block_size(&self, l: usize) -> usize {
        self.offsets[l + 1] - self.offsets[l]
    }

    pub fn block_range(&self, l: usize) -> Range<usize> {
        self.offsets[l]..self.offsets[l + 1]
    }

    /// `[L¹ ... L^L]` as a dense matrix, built on first use.
    pub fn dense_operator(&self) -> &DenseMatrix {
        self.dense.get_or_init(|| {
            let mut a = DenseMatrix::zeros(self.m(), self.n());
            for (l, blk) in self.blocks.iter().enumerate() {
                let d = blk.to_dense();
                for j in 0..d.cols() {
                    a.col_mut(self.offsets[l] + j).copy_from_slice(d.col(j));
                }
            }
            a
        })
    }

    pub fn with_data(&self, b: Vec<f64>) -> Result<Self> {
        Self::new(self.blocks.clone(), b, self.sigma, self.beta, self.vartheta.clone())
    }

    /// `κ_ℓ = β + 1 + n_ℓ / 2`.
    pub fn kappa(&self, l: usize) -> f64 {
        self.beta + 1.0 + self.block_size(l) as f64 / 2.0
    }

    fn check_theta(&self, theta: &[f64]) -> Result<()> {
        check_input(theta, self.n_blocks(), "block variances")?;
        if let Some(t) = theta.iter().find(|t| **t <= 0.0) {
            return Err(Error::InvalidArgument(format!("block variances must be positive, got {t}")));
        }
        Ok(())
    }

    /// Per-coordinate `√θ_ℓ`.
    fn sqrt_theta_diag(&self, theta: &[f64]) -> Vec<f64> {
        let mut d = vec![0.0; self.n()];
        for (l, t) in theta.iter().enumerate() {
            d[self.block_range(l)].iter_mut().for_each(|v| *v = t.sqrt());
        }
        d
    }

    /// Standard-form model of `x | θ, b`; its back-transform returns `x`.
    pub fn conditional_model(&self, theta: &[f64]) -> Result<StandardFormModel> {
        self.check_theta(theta)?;
        let d = self.sqrt_theta_diag(theta);
        let mut a = self.dense_operator().clone();
        let inv_sigma = 1.0 / self.sigma;
        for (j, dj) in d.iter().enumerate() {
            let s = dj * inv_sigma;
            a.col_mut(j).iter_mut().for_each(|v| *v *= s);
        }
        let b = self.b.iter().map(|v| v * inv_sigma).collect();
        let back = BackTransform::new(Some(Arc::new(DiagonalOperator::new(d))), None);
        StandardFormModel::with_back_transform(Arc::new(a), b, back)
    }

    /// `‖x^ℓ‖²` for every block.
    pub fn block_norms_sq(&self, x: &[f64]) -> Vec<f64> {
        (0..self.n_blocks())
            .map(|l| x[self.block_range(l)].iter().map(|v| v * v).sum())
            .collect()
    }

    /// Negative log posterior up to an additive constant:
    /// `‖b - Ax‖²/(2σ²) + ½ Σ ‖x^ℓ‖²/θ_ℓ + Σ (ϑ_ℓ/θ_ℓ + κ_ℓ log θ_ℓ)`.
    pub fn objective(&self, x: &[f64], theta: &[f64]) -> Result<f64> {
        check_input(x, self.n(), "block model state")?;
        self.check_theta(theta)?;
        let mut r = self.dense_operator().matvec(x);
        r.iter_mut().zip(&self.b).for_each(|(ri, bi)| *ri = bi - *ri);
        let misfit = norm2(&r).powi(2) / (2.0 * self.sigma * self.sigma);
        let norms = self.block_norms_sq(x);
        let prior: f64 = (0..self.n_blocks())
            .map(|l| {
                let t = theta[l];
                0.5 * norms[l] / t + self.vartheta[l] / t + self.kappa(l) * t.ln()
            })
            .sum();
        Ok(misfit + prior)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct HierState {
    pub x: Vec<f64>,
    pub theta: Vec<f64>,
}

/// Minimizer of the objective in `x` for fixed `θ`.
pub fn ias_x_update(model: &BlockModel, theta: &[f64], opts: SamplerOptions) -> Result<Vec<f64>> {
    let cond = model.conditional_model(theta)?;
    let sampler = Sampler::new(cond, opts)?;
    let (xt, _) = sampler.draw_with(&vec![0.0; model.m()], &vec![0.0; model.n()])?;
    Ok(sampler.model().back_transform.apply(&xt))
}

/// `θ_ℓ = (‖x^ℓ‖²/2 + ϑ_ℓ) / κ_ℓ`.
pub fn ias_theta_update(x: &[f64], model: &BlockModel) -> Result<Vec<f64>> {
    check_input(x, model.n(), "block model state")?;
    Ok(model
        .block_norms_sq(x)
        .iter()
        .enumerate()
        .map(|(l, nsq)| (0.5 * nsq + model.vartheta[l]) / model.kappa(l))
        .collect())
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct IasOptions {
    pub tol: f64,
    pub max_iter: usize,
    pub sampler: SamplerOptions,
}

impl Default for IasOptions {
    fn default() -> Self {
        Self {
            tol: 1e-6,
            max_iter: 200,
            sampler: SamplerOptions::default(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct IasResult {
    pub state: HierState,
    pub converged: bool,
    pub iterations: usize,
    /// Objective after each half-step (`x` update, then `θ` update).
    pub objective: Vec<f64>,
}

/// Relative slack allowed when checking that the objective does not increase.
const MONOTONE_SLACK: f64 = 1e-10;

/// Alternating minimization from `θ = ϑ` until the relative change of
/// `(x, θ)` falls below `tol`.
pub fn ias_map(model: &BlockModel, opts: &IasOptions) -> Result<IasResult> {
    if !(opts.tol > 0.0) || opts.max_iter == 0 {
        return Err(Error::InvalidArgument("IAS needs tol > 0 and max_iter >= 1".into()));
    }
    let mut theta = model.vartheta.clone();
    let mut x = vec![0.0; model.n()];
    let mut history: Vec<f64> = Vec::new();
    let push = |history: &mut Vec<f64>, value: f64, iteration: usize| -> Result<()> {
        if let Some(&prev) = history.last() {
            if value > prev + MONOTONE_SLACK * prev.abs().max(1.0) {
                return Err(Error::ObjectiveIncrease {
                    iteration,
                    previous: prev,
                    current: value,
                });
            }
        }
        history.push(value);
        Ok(())
    };
    for it in 1..=opts.max_iter {
        let x_new = ias_x_update(model, &theta, opts.sampler)?;
        push(&mut history, model.objective(&x_new, &theta)?, it)?;
        let theta_new = ias_theta_update(&x_new, model)?;
        push(&mut history, model.objective(&x_new, &theta_new)?, it)?;

        let mut diff = 0.0;
        let mut size = 0.0;
        for (a, b) in x_new.iter().zip(&x).chain(theta_new.iter().zip(&theta)) {
            diff += (a - b) * (a - b);
            size += a * a;
        }
        x = x_new;
        theta = theta_new;
        if it > 1 && diff.sqrt() <= opts.tol * size.sqrt() {
            return Ok(IasResult {
                state: HierState { x, theta },
                converged: true,
                iterations: it,
                objective: history,
            });
        }
    }
    Ok(IasResult {
        state: HierState { x, theta },
        converged: false,
        iterations: opts.max_iter,
        objective: history,
    })
}

/// Draw from the density proportional to `θ^{-shape-1} exp(-scale/θ)`.
pub fn draw_inverse_gamma<R: Rng + ?Sized>(shape: f64, scale: f64, rng: &mut R) -> Result<f64> {
    if !(shape > 0.0 && shape.is_finite() && scale > 0.0 && scale.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "inverse-gamma parameters must be positive, got shape {shape}, scale {scale}"
        )));
    }
    let g = Gamma::new(shape, 1.0).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    Ok(scale / g.sample(rng))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct GibbsOptions {
    /// Number of retained iterations.
    pub samples: usize,
    /// Iterations discarded before the first retained one.
    pub burn_in: usize,
    /// Store `x` every `thin` retained iterations.
    pub thin: usize,
    pub sampler: SamplerOptions,
}

impl GibbsOptions {
    pub fn new(samples: usize) -> Self {
        Self {
            samples,
            burn_in: 0,
            thin: 1,
            sampler: SamplerOptions::default(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct GibbsChain {
    /// `θ` after each retained iteration.
    pub theta: Vec<Vec<f64>>,
    /// `(retained iteration, x)` for every `thin`-th retained iteration.
    pub x: Vec<(usize, Vec<f64>)>,
    pub seed: u64,
}

impl GibbsChain {
    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }

    pub fn theta_mean(&self) -> Vec<f64> {
        let l = self.theta.first().map_or(0, |t| t.len());
        let mut mean = vec![0.0; l];
        for t in &self.theta {
            mean.iter_mut().zip(t).for_each(|(m, v)| *m += v);
        }
        mean.iter_mut().for_each(|m| *m /= self.len().max(1) as f64);
        mean
    }

    pub fn theta_csv(&self) -> String {
        let l = self.theta.first().map_or(0, |t| t.len());
        let mut s = String::from("iteration");
        (0..l).for_each(|i| {
            let _ = write!(s, ",theta{i}");
        });
        s.push('\n');
        for (it, t) in self.theta.iter().enumerate() {
            let _ = write!(s, "{it},");
            push_csv_row(&mut s, t);
        }
        s
    }

    pub fn x_csv(&self) -> String {
        let n = self.x.first().map_or(0, |(_, x)| x.len());
        let mut s = String::from("iteration");
        (0..n).for_each(|i| {
            let _ = write!(s, ",x{i}");
        });
        s.push('\n');
        for (it, x) in &self.x {
            let _ = write!(s, "{it},");
            push_csv_row(&mut s, x);
        }
        s
    }

    pub fn write_csv(&self, theta_path: &Path, x_path: Option<&Path>) -> Result<()> {
        std::fs::write(theta_path, self.theta_csv()).map_err(|e| Error::io(theta_path, e))?;
        if let Some(p) = x_path {
            std::fs::write(p, self.x_csv()).map_err(|e| Error::io(p, e))?;
        }
        Ok(())
    }
}

/// Block-Gibbs sampler started at `θ = ϑ`. Iteration `t` draws its
/// perturbations and gamma variates from `rng.substream(t)`.
pub fn gibbs_sample(model: &BlockModel, opts: &GibbsOptions, rng: RngStream) -> Result<GibbsChain> {
    if opts.samples == 0 || opts.thin == 0 {
        return Err(Error::InvalidArgument("Gibbs sampler needs samples >= 1 and thin >= 1".into()));
    }
    let mut theta = model.vartheta.clone();
    let mut chain = GibbsChain {
        theta: Vec::with_capacity(opts.samples),
        x: Vec::new(),
        seed: rng.seed,
    };
    let shapes: Vec<f64> = (0..model.n_blocks())
        .map(|l| model.beta + model.block_size(l) as f64 / 2.0)
        .collect();
    for t in 0..opts.burn_in + opts.samples {
        let mut g = rng.substream(t as u64).generator();
        let sampler = Sampler::new(model.conditional_model(&theta)?, opts.sampler)?;
        let (nu, eta) = draw_perturbations(&mut g, model.n(), model.m());
        let (xt, _) = sampler.draw_with(&eta, &nu)?;
        let x = sampler.model().back_transform.apply(&xt);
        let norms = model.block_norms_sq(&x);
        for l in 0..model.n_blocks() {
            theta[l] = draw_inverse_gamma(shapes[l], model.vartheta[l] + 0.5 * norms[l], &mut g)?;
        }
        if t >= opts.burn_in {
            let kept = t - opts.burn_in;
            chain.theta.push(theta.clone());
            if kept % opts.thin == 0 {
                chain.x.push((kept, x));
            }
        }
    }
    Ok(chain)
}

/// Index of the largest entry.
pub fn argmax(v: &[f64]) -> usize {
    v.iter()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |(bi, bv), (i, &x)| if x > bv { (i, x) } else { (bi, bv) })
        .0
}

use std::sync::Arc;

use rand::Rng;

use crate::error::{Error, Result};
use crate::hier::BlockModel;
use crate::linalg::dense::DenseMatrix;
use crate::linalg::operator::{LinearOperator, OpRef};
use crate::sampler::{standard_normal_vec, RngStream};

/// `b = op x_true + ε`, `ε ~ N(0, σ² I)` with `σ = noise_pct · max|op x_true|`.
/// Returns the data and `σ`.
pub fn generate_data<R: Rng + ?Sized>(
    op: &dyn LinearOperator,
    x_true: &[f64],
    noise_pct: f64,
    rng: &mut R,
) -> Result<(Vec<f64>, f64)> {
    if !(noise_pct >= 0.0 && noise_pct.is_finite()) {
        return Err(Error::InvalidArgument(format!("noise level must be >= 0, got {noise_pct}")));
    }
    let mut b = op.apply(x_true)?;
    let peak = b.iter().fold(0.0_f64, |acc, v| acc.max(v.abs()));
    let sigma = noise_pct * peak;
    if sigma > 0.0 {
        let e = standard_normal_vec(rng, b.len());
        b.iter_mut().zip(&e).for_each(|(bi, ei)| *bi += sigma * ei);
    }
    Ok((b, sigma))
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BlocksConfig {
    pub n_blocks: usize,
    pub block_size: usize,
    pub m: usize,
    /// Generative block; `None` picks one at random.
    pub active: Option<usize>,
    pub noise_pct: f64,
    /// Likelihood noise level relative to the generative one.
    pub sigma_inflation: f64,
    pub beta: f64,
    pub vartheta: f64,
}

impl Default for BlocksConfig {
    fn default() -> Self {
        Self {
            n_blocks: 10,
            block_size: 5,
            m: 20,
            active: None,
            noise_pct: 0.005,
            sigma_inflation: 1.0,
            beta: 1.5,
            vartheta: 1e-3,
        }
    }
}

#[derive(Clone, Debug)]
pub struct SyntheticBlocks {
    pub model: BlockModel,
    pub x_true: Vec<f64>,
    pub active: usize,
    /// Standard deviation of the noise that was added to the data.
    pub noise_sigma: f64,
}

/// Random Gaussian lead-field blocks with a ground truth supported on one
/// block, amplitudes drawn from `U(0, 1)`.
pub fn synthetic_blocks(cfg: &BlocksConfig, rng: RngStream) -> Result<SyntheticBlocks> {
    if cfg.n_blocks == 0 || cfg.block_size == 0 || cfg.m == 0 {
        return Err(Error::InvalidArgument("block model dimensions must be positive".into()));
    }
    let active = match cfg.active {
        Some(a) if a >= cfg.n_blocks => {
            return Err(Error::InvalidArgument(format!(
                "active block {a} out of range for {} blocks",
                cfg.n_blocks
            )))
        }
        Some(a) => a,
        None => rng.substream(0).generator().random_range(0..cfg.n_blocks),
    };
    let mut g = rng.substream(1).generator();
    let blocks: Vec<OpRef> = (0..cfg.n_blocks)
        .map(|_| {
            let data = standard_normal_vec(&mut g, cfg.m * cfg.block_size);
            Ok(Arc::new(DenseMatrix::new(cfg.m, cfg.block_size, data)?) as OpRef)
        })
        .collect::<Result<_>>()?;
    let n = cfg.n_blocks * cfg.block_size;
    let mut x_true = vec![0.0; n];
    let mut g = rng.substream(2).generator();
    for v in &mut x_true[active * cfg.block_size..(active + 1) * cfg.block_size] {
        *v = g.random::<f64>();
    }
    let placeholder = BlockModel::new(
        blocks.clone(),
        vec![0.0; cfg.m],
        1.0,
        cfg.beta,
        vec![cfg.vartheta; cfg.n_blocks],
    )?;
    let (b, noise_sigma) = generate_data(
        placeholder.dense_operator(),
        &x_true,
        cfg.noise_pct,
        &mut rng.substream(3).generator(),
    )?;
    let sigma = if noise_sigma > 0.0 { noise_sigma * cfg.sigma_inflation } else { 1.0 };
    let model = BlockModel::new(blocks, b, sigma, cfg.beta, vec![cfg.vartheta; cfg.n_blocks])?;
    Ok(SyntheticBlocks {
        model,
        x_true,
        active,
        noise_sigma,
    })
}

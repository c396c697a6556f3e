//! Test problems: cross-borehole ray tomography with Whittle-Matérn priors,
//! graph first-difference priors, and synthetic group-sparse block models.

mod blocks;
mod priors;
mod tomography;

use std::sync::Arc;

pub use blocks::{generate_data, synthetic_blocks, BlocksConfig, SyntheticBlocks};
pub use priors::{
    graph_first_difference, graph_prior, pixel_adjacency_edges, second_difference, whittle_matern, Edge,
    GraphDifference, WhittleMaternPrior,
};
pub use tomography::{borehole_rays, build_crossborehole, ray_matrix, trace_ray, PixelGrid, Ray, RaySet};

use crate::error::{Error, Result};
use crate::linalg::operator::{IdentityOperator, OpRef, ScaledOperator};
use crate::sampler::RngStream;
use crate::whitening::GeneralGaussianModel;

/// Names accepted by [`preset`].
pub const PRESETS: [&str; 3] = ["crossborehole-paper", "crossborehole-desk", "blocks-meg-toy"];

/// Smooth background with two almost horizontal layer interfaces, evaluated
/// at relative coordinates `(s, t) ∈ [0, 1]²` (`t` pointing down).
pub fn layered_phantom(s: f64, t: f64) -> f64 {
    use std::f64::consts::PI;
    let smooth = 0.3 * (2.0 * PI * s).sin() * (PI * t).cos() + 0.2 * t;
    let first = 0.35 + 0.05 * (PI * s).sin();
    let second = 0.7 - 0.08 * s;
    let layer = if t > second {
        0.8
    } else if t > first {
        0.4
    } else {
        0.0
    };
    smooth + layer
}

/// Pixel averages of [`layered_phantom`] sampled at pixel centres.
pub fn rasterize_phantom(grid: &PixelGrid) -> Vec<f64> {
    (0..grid.len())
        .map(|k| {
            let (iy, iz) = grid.coords(k);
            let s = (iy as f64 + 0.5) / grid.ny as f64;
            let t = (iz as f64 + 0.5) / grid.nz as f64;
            layered_phantom(s, t)
        })
        .collect()
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CrossboreholeConfig {
    pub ny: usize,
    pub nz: usize,
    pub n_src: usize,
    pub n_rcv: usize,
    pub lambda_y: f64,
    pub lambda_z: f64,
    pub gamma: f64,
    pub noise_pct: f64,
    /// Refinement of the grid the data are simulated on.
    pub data_refinement: usize,
}

impl CrossboreholeConfig {
    pub fn paper() -> Self {
        Self {
            ny: 100,
            nz: 200,
            n_src: 20,
            n_rcv: 20,
            lambda_y: 20.0,
            lambda_z: 10.0,
            gamma: 70.0,
            noise_pct: 0.005,
            data_refinement: 3,
        }
    }

    pub fn desk() -> Self {
        Self {
            ny: 20,
            nz: 40,
            n_src: 8,
            n_rcv: 8,
            lambda_y: 4.0,
            lambda_z: 2.0,
            gamma: 70.0,
            noise_pct: 0.005,
            data_refinement: 3,
        }
    }
}

#[derive(Clone, Debug)]
pub struct LinearProblem {
    pub name: String,
    pub model: GeneralGaussianModel,
    /// Ground truth on the inversion grid.
    pub x_true: Vec<f64>,
    pub noise_sigma: f64,
    pub grid: Option<PixelGrid>,
}

/// Cross-borehole problem: data simulated on a refined grid, inversion on the
/// coarse one with a Whittle-Matérn prior and whitened noise.
pub fn crossborehole_problem(name: &str, cfg: &CrossboreholeConfig, rng: RngStream) -> Result<LinearProblem> {
    let grid = PixelGrid::unit(cfg.ny, cfg.nz)?;
    let (a, _) = build_crossborehole(&grid, cfg.n_src, cfg.n_rcv)?;
    let r = cfg.data_refinement.max(1);
    let fine = PixelGrid::new(cfg.ny * r, cfg.nz * r, grid.width, grid.height)?;
    let (a_fine, _) = build_crossborehole(&fine, cfg.n_src, cfg.n_rcv)?;
    let (b, sigma) = generate_data(&a_fine, &rasterize_phantom(&fine), cfg.noise_pct, &mut rng.generator())?;
    let prior = whittle_matern(grid, cfg.lambda_y, cfg.lambda_z, cfg.gamma)?;
    let op: OpRef = Arc::new(a);
    let mut model = GeneralGaussianModel::new(op, b, prior.prior()?)?;
    if sigma > 0.0 {
        let m = cfg.n_src * cfg.n_rcv;
        model = model.with_noise_factor(Arc::new(ScaledOperator::new(1.0 / sigma, Arc::new(IdentityOperator::new(m)))))?;
    }
    Ok(LinearProblem {
        name: name.to_string(),
        model,
        x_true: rasterize_phantom(&grid),
        noise_sigma: sigma,
        grid: Some(grid),
    })
}

#[derive(Clone, Debug)]
pub enum Problem {
    Linear(LinearProblem),
    Blocks(SyntheticBlocks),
}

/// Builds a named preset; the seed controls data noise and random operators.
pub fn preset(name: &str, seed: u64) -> Result<Problem> {
    let rng = RngStream::new(seed, 1 << 30);
    match name {
        "crossborehole-paper" => Ok(Problem::Linear(crossborehole_problem(name, &CrossboreholeConfig::paper(), rng)?)),
        "crossborehole-desk" => Ok(Problem::Linear(crossborehole_problem(name, &CrossboreholeConfig::desk(), rng)?)),
        "blocks-meg-toy" => Ok(Problem::Blocks(synthetic_blocks(&BlocksConfig::default(), rng)?)),
        other => Err(Error::Config(format!(
            "unknown preset '{other}', expected one of: {}",
            PRESETS.join(", ")
        ))),
    }
}

//! Cross-borehole travel-time tomography on a 20 × 40 pixel grid.
//!
//! 64 straight rays, anisotropic Whittle-Matérn prior, whitened noise. With
//! m = 64 and n = 800 the adjoint strategy only factors a 64 × 64 matrix.

use std::time::Instant;

use subspace_rto::linalg::norm2;
use subspace_rto::problems::{preset, Problem};
use subspace_rto::sampler::{RngStream, SamplerOptions};
use subspace_rto::whitening::ModelSampler;

fn main() -> subspace_rto::Result<()> {
    let Problem::Linear(p) = preset("crossborehole-desk", 0)? else {
        unreachable!("desk preset is linear")
    };
    let grid = p.grid.expect("tomography problems carry their grid");
    println!(
        "{} rays, {}x{} pixels, noise sigma {:.3e}",
        p.model.op.rows(),
        grid.ny,
        grid.nz,
        p.noise_sigma
    );

    let t = Instant::now();
    let sampler = ModelSampler::new(&p.model, SamplerOptions::default())?;
    let batch = sampler.sample(1000, RngStream::from_seed(2))?;
    println!("{} draws with the {} strategy in {:.2} s", batch.len(), sampler.strategy().name(), t.elapsed().as_secs_f64());

    let rel = |mean: &[f64]| {
        let err: Vec<f64> = mean.iter().zip(&p.x_true).map(|(a, b)| a - b).collect();
        norm2(&err) / norm2(&p.x_true)
    };
    println!("relative error of the exact posterior mean: {:.3}", rel(&sampler.mean()?));
    // the prior is weak (gamma = 70), so 1000 draws leave a large Monte Carlo error
    println!("relative error of the sample mean:          {:.3}", rel(&batch.mean()));

    // pointwise standard deviation along the middle row of pixels
    let cov = batch.covariance();
    let iz = grid.nz / 2;
    let row: Vec<String> = (0..grid.ny)
        .map(|iy| {
            let k = grid.index(iy, iz);
            format!("{:.3}", cov.get(k, k).sqrt())
        })
        .collect();
    println!("posterior std at depth {iz}: {}", row.join(" "));
    Ok(())
}

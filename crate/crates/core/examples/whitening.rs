//! General Gaussian model with correlated prior and noise, reduced to
//! standard form by its precision factors and sampled there.

use std::sync::Arc;

use subspace_rto::linalg::{DenseMatrix, OpRef};
use subspace_rto::sampler::{RngStream, SamplerOptions};
use subspace_rto::whitening::{whiten, GeneralGaussianModel, ModelSampler, Prior};

fn main() -> subspace_rto::Result<()> {
    // three point observations of a 6-vector
    let a = DenseMatrix::from_fn(3, 6, |i, j| f64::from(u8::from(j == 2 * i + 1)));
    // prior precision factor: scaled first differences plus a diagonal anchor
    let l = DenseMatrix::from_fn(6, 6, |i, j| match (i, j) {
        _ if i == j => 2.0,
        _ if i == j + 1 => -2.0,
        _ => 0.0,
    });
    // noise with standard deviations 0.1, 0.2, 0.1
    let s = DenseMatrix::from_fn(3, 3, |i, j| if i == j { [10.0, 5.0, 10.0][i] } else { 0.0 });

    let model = GeneralGaussianModel::new(
        Arc::new(a) as OpRef,
        vec![1.0, 0.5, -0.3],
        Prior::PrecisionFactor {
            factor: Arc::new(l),
            inverse: None,
        },
    )?
    .with_noise_factor(Arc::new(s))?
    .with_mean(vec![0.2; 6])?;

    let standard = whiten(&model)?;
    println!("standard form: {} x {} operator", standard.m(), standard.n());

    let sampler = ModelSampler::new(&model, SamplerOptions::default())?;
    let mean = sampler.mean()?;
    let batch = sampler.sample(20_000, RngStream::from_seed(3))?;
    let cov = batch.covariance();
    println!("{:>3} {:>10} {:>10} {:>10}", "i", "exact", "sampled", "std");
    for (i, (m, s)) in mean.iter().zip(batch.mean()).enumerate() {
        println!("{i:>3} {m:>10.4} {s:>10.4} {:>10.4}", cov.get(i, i).sqrt());
    }
    Ok(())
}

//! Smoothness prior written as `L x ~ N(0, I)` with a rectangular graph
//! difference matrix, sampled through its pseudoinverse.

use std::sync::Arc;

use subspace_rto::linalg::{DenseMatrix, OpRef};
use subspace_rto::problems::{graph_prior, pixel_adjacency_edges, PixelGrid};
use subspace_rto::sampler::{RngStream, SamplerOptions};
use subspace_rto::whitening::{sample_transform_prior, GeneralGaussianModel};

fn main() -> subspace_rto::Result<()> {
    let grid = PixelGrid::unit(8, 8)?;
    let edges = pixel_adjacency_edges(&grid, true);
    let prior = graph_prior(&edges, grid.len(), 1.0)?;
    println!("{} pixels, {} difference rows", grid.len(), edges.len());

    // observe four pixels
    let observed = [grid.index(1, 1), grid.index(6, 1), grid.index(1, 6), grid.index(6, 6)];
    let a = DenseMatrix::from_fn(4, grid.len(), |i, j| f64::from(u8::from(observed[i] == j)));
    // noise standard deviation 0.05
    let s = DenseMatrix::from_fn(4, 4, |i, j| if i == j { 20.0 } else { 0.0 });
    let model = GeneralGaussianModel::new(Arc::new(a) as OpRef, vec![1.0, -1.0, 0.5, 2.0], prior)?.with_noise_factor(Arc::new(s))?;

    let batch = sample_transform_prior(&model, 5000, RngStream::from_seed(4), SamplerOptions::default())?;
    let mean = batch.mean();
    for iz in (0..grid.nz).rev() {
        let row: Vec<String> = (0..grid.ny).map(|iy| format!("{:>6.2}", mean[grid.index(iy, iz)])).collect();
        println!("{}", row.join(""));
    }
    Ok(())
}

//! Smallest possible model: one observation of one unknown.
//!
//! `b = x + e` with `x ~ N(0, 1)`, `e ~ N(0, 1)` and `b = 2` has posterior
//! `N(1, 1/2)`. Each draw solves a perturbed least-squares problem.

use subspace_rto::linalg::DenseMatrix;
use subspace_rto::sampler::{posterior_direct, sample, RngStream, SamplerOptions, StandardFormModel};

fn main() -> subspace_rto::Result<()> {
    let a = DenseMatrix::from_rows(&[&[1.0]])?;
    let model = StandardFormModel::from_operator(a, vec![2.0])?;

    let exact = posterior_direct(&model)?;
    println!("exact:   mean {:.4}, variance {:.4}", exact.mean[0], exact.covariance().get(0, 0));

    let batch = sample(&model, 20_000, SamplerOptions::default(), RngStream::from_seed(1))?;
    println!(
        "sampled: mean {:.4}, variance {:.4} ({} draws)",
        batch.mean()[0],
        batch.covariance().get(0, 0),
        batch.len()
    );
    Ok(())
}

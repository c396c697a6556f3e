//! Normal-equation vs adjoint sampling time on the desk tomography problem.
//! The standard-form operator is made dense first so both paths do the same
//! kind of arithmetic.

use std::sync::Arc;

use subspace_rto::cli::{benchmark_model, benchmark_table};
use subspace_rto::linalg::OpRef;
use subspace_rto::problems::{preset, Problem};
use subspace_rto::sampler::{SamplerOptions, StandardFormModel};
use subspace_rto::whitening::ModelSampler;

fn main() -> subspace_rto::Result<()> {
    let Problem::Linear(p) = preset("crossborehole-desk", 0)? else {
        unreachable!("desk preset is linear")
    };
    let standard = ModelSampler::new(&p.model, SamplerOptions::default())?.standard_model().clone();
    let dense: OpRef = Arc::new(standard.op.to_dense());
    let model = StandardFormModel::new(dense, standard.b)?;
    let rows = benchmark_model(&model, &[50, 200, 1000], None, 0)?;
    print!("{}", benchmark_table(&rows));
    Ok(())
}

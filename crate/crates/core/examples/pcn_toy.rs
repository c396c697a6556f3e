//! pCN on a mildly nonlinear forward model. The Gaussian reference is the
//! linearized posterior, so only the quadratic perturbation enters the
//! acceptance ratio.

use std::sync::Arc;

use subspace_rto::mcmc::{pcn_chain, PcnOptions, ToyNonlinear, TOY_PERTURBATION};
use subspace_rto::sampler::{RngStream, SamplerOptions};

fn main() -> subspace_rto::Result<()> {
    let toy = Arc::new(ToyNonlinear::random(20, 50, TOY_PERTURBATION, RngStream::new(5, 1))?);
    for h in [0.02, 0.05, 0.1, 0.2] {
        let target = toy.target(h, SamplerOptions::default())?;
        let mut opts = PcnOptions::new(5000);
        opts.thin = 10;
        let chain = pcn_chain(&target, None, &opts, RngStream::from_seed(6))?;
        let last = chain.phi.last().copied().unwrap_or(f64::NAN);
        println!("h = {h:<5} acceptance {:>5.1}%, final potential {last:.3}", 100.0 * chain.acceptance_rate());
    }
    Ok(())
}

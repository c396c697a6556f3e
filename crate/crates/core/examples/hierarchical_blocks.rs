//! Block-sparse recovery with a conditionally Gaussian prior: 10 blocks of 5
//! sources, one active. IAS gives the MAP estimate, Gibbs the posterior.

use subspace_rto::hier::{gibbs_sample, ias_map, GibbsOptions, IasOptions};
use subspace_rto::problems::{synthetic_blocks, BlocksConfig};
use subspace_rto::sampler::RngStream;

fn main() -> subspace_rto::Result<()> {
    let p = synthetic_blocks(&BlocksConfig::default(), RngStream::from_seed(12))?;
    println!("active block: {}", p.active);

    let map = ias_map(&p.model, &IasOptions::default())?;
    println!("IAS: {} iterations, converged {}", map.iterations, map.converged);

    let mut opts = GibbsOptions::new(1000);
    opts.burn_in = 200;
    let chain = gibbs_sample(&p.model, &opts, RngStream::from_seed(13))?;
    let post = chain.theta_mean();

    println!("{:>5} {:>12} {:>12}", "block", "IAS theta", "Gibbs mean");
    for (l, (a, b)) in map.state.theta.iter().zip(&post).enumerate() {
        let mark = if l == p.active { " <" } else { "" };
        println!("{l:>5} {a:>12.3e} {b:>12.3e}{mark}");
    }
    Ok(())
}

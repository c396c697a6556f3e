mod common;

use std::sync::Arc;

use common::*;
use subspace_rto::linalg::*;
use subspace_rto::mcmc::*;
use subspace_rto::sampler::*;
use subspace_rto::whitening::*;

fn op(m: DenseMatrix) -> OpRef {
    Arc::new(m)
}

/// Model `b = A x + e` with `x ~ N(0, (LᵀL)⁻¹)` and its dense reference
/// covariance `(AᵀA + LᵀL)⁻¹`.
fn reference_model(seed: u64, m: usize, n: usize, scale: f64) -> (GeneralGaussianModel, DenseMatrix) {
    let mut g = rng(seed);
    let mut a = random_matrix(&mut g, m, n);
    a.scale(scale);
    let mut l = random_matrix(&mut g, n, n);
    for i in 0..n {
        l.set(i, i, l.get(i, i) + 3.0);
    }
    let mut precision = a.transpose().matmul(&a).unwrap();
    let ltl = l.transpose().matmul(&l).unwrap();
    for i in 0..n {
        for j in 0..n {
            precision.set(i, j, precision.get(i, j) + ltl.get(i, j));
        }
    }
    let b = normal_vec(&mut g, m);
    let model = GeneralGaussianModel::new(
        op(a),
        b,
        Prior::PrecisionFactor {
            factor: op(l),
            inverse: None,
        },
    )
    .unwrap();
    (model, gauss_jordan_inverse(&precision))
}

fn identity_prior_model(a: DenseMatrix) -> GeneralGaussianModel {
    let n = a.cols();
    let b = vec![0.0; a.rows()];
    let id: OpRef = Arc::new(IdentityOperator::new(n));
    GeneralGaussianModel::new(
        op(a),
        b,
        Prior::PrecisionFactor {
            factor: id.clone(),
            inverse: Some(id),
        },
    )
    .unwrap()
}

fn proposal_draws(reference: &GaussianReference, k: usize, seed: u64) -> DenseMatrix {
    let rng = RngStream::from_seed(seed);
    let mut out = DenseMatrix::zeros(reference.dim(), k);
    for j in 0..k {
        let w = pcn_proposal_draw(reference, rng.substream(j as u64)).unwrap();
        out.col_mut(j).copy_from_slice(&w);
    }
    out
}

#[test]
fn proposal_draws_have_zero_mean_and_reference_covariance() {
    let (model, cov) = reference_model(1, 3, 8, 1.0);
    let reference = GaussianReference::from_model(&model, SamplerOptions::default()).unwrap();
    let k = 50_000;
    let draws = proposal_draws(&reference, k, 11);
    let (mean, sample_cov) = moments(&draws);
    for i in 0..8 {
        let bound = 4.0 * (cov.get(i, i) / k as f64).sqrt();
        assert!(mean[i].abs() < bound, "mean[{i}] = {} exceeds {bound}", mean[i]);
    }
    let rel = frobenius_rel(&sample_cov, &cov);
    assert!(rel < 0.05, "covariance relative error {rel}");
}

#[test]
fn negligible_forward_operator_gives_standard_normal_proposals() {
    let mut g = rng(2);
    let mut a = random_matrix(&mut g, 2, 5);
    a.scale(1e-12);
    let model = identity_prior_model(a);
    let reference = GaussianReference::from_model(&model, SamplerOptions::default()).unwrap();
    let draws = proposal_draws(&reference, 5000, 3);
    for i in 0..5 {
        let d = ks_statistic(&draws.row(i), normal_cdf);
        assert!(d < 1.63 / (5000f64).sqrt(), "coordinate {i}: KS distance {d}");
    }
}

#[test]
fn zero_potential_accepts_every_step() {
    let (model, _) = reference_model(3, 3, 6, 1.0);
    let reference = GaussianReference::from_model(&model, SamplerOptions::default()).unwrap();
    let target = PcnTarget {
        reference,
        phi: Arc::new(|_: &[f64]| 0.0),
        h: 0.7,
    };
    let chain = pcn_chain(&target, None, &PcnOptions::new(500), RngStream::from_seed(4)).unwrap();
    assert_eq!(chain.accept_count, 500);
    assert!(chain.accepted.iter().all(|&a| a));
}

#[test]
fn tiny_step_stays_at_the_mean_and_accepts() {
    let gbar = vec![0.0; 4];
    let current = PcnState {
        gamma: gbar.clone(),
        phi: 0.0,
    };
    let phi = |g: &[f64]| 0.5 * g.iter().map(|x| x * x).sum::<f64>();
    let w = vec![1.0, -2.0, 0.5, 3.0];
    let mut g = rng(5);
    for _ in 0..20 {
        let (next, accepted) = pcn_step(&current, &gbar, &w, 1e-8, &phi, &mut g).unwrap();
        assert!(accepted);
        assert!(norm(&next.gamma) < 1e-7);
    }
}

#[test]
fn step_outside_unit_interval_is_rejected() {
    let current = PcnState {
        gamma: vec![0.0; 2],
        phi: 0.0,
    };
    let phi = |_: &[f64]| 0.0;
    for h in [0.0, 1.0, -0.2, 1.5] {
        assert!(pcn_step(&current, &[0.0; 2], &[1.0; 2], h, &phi, &mut rng(0)).is_err());
    }
}

#[test]
fn quadratic_potential_matches_tilted_gaussian() {
    let mut g = rng(6);
    let a = random_matrix(&mut g, 1, 2);
    let model = identity_prior_model(a.clone());
    let gbar = vec![1.0, -0.5];
    let reference = GaussianReference::with_mean(&model, gbar.clone(), SamplerOptions::default()).unwrap();

    // reference C = (AᵀA + I)⁻¹; the target has precision C⁻¹ + I and mean
    // (C⁻¹ + I)⁻¹ C⁻¹ γ̄
    let mut c_inv = a.transpose().matmul(&a).unwrap();
    c_inv.add_diagonal(1.0);
    let mut post_prec = c_inv.clone();
    post_prec.add_diagonal(1.0);
    let post_cov = gauss_jordan_inverse(&post_prec);
    let post_mean = post_cov.matvec(&c_inv.matvec(&gbar));

    let target = PcnTarget {
        reference,
        phi: Arc::new(|g: &[f64]| 0.5 * g.iter().map(|x| x * x).sum::<f64>()),
        h: 0.6,
    };
    let chain = pcn_chain(&target, None, &PcnOptions::new(200_000), RngStream::from_seed(7)).unwrap();
    let states = chain.state_matrix();
    let (mean, cov) = moments(&states);
    let scale = post_cov.get(0, 0).max(post_cov.get(1, 1)).sqrt();
    assert!(norm(&sub(&mean, &post_mean)) < 0.03 * scale.max(norm(&post_mean)), "mean {mean:?} vs {post_mean:?}");
    let rel = frobenius_rel(&cov, &post_cov);
    assert!(rel < 0.05, "covariance relative error {rel}");
    let rate = chain.acceptance_rate();
    assert!(rate > 0.2 && rate < 1.0, "acceptance {rate}");
}

#[test]
fn zero_potential_chain_samples_the_reference() {
    let (model, cov) = reference_model(8, 2, 4, 1.0);
    let reference = GaussianReference::from_model(&model, SamplerOptions::default()).unwrap();
    let target = PcnTarget {
        reference,
        phi: Arc::new(|_: &[f64]| 0.0),
        h: 0.3,
    };
    let chain = pcn_chain(&target, None, &PcnOptions::new(100_000), RngStream::from_seed(9)).unwrap();
    assert_eq!(chain.acceptance_rate(), 1.0);
    let (_, sample_cov) = moments(&chain.state_matrix());
    let rel = frobenius_rel(&sample_cov, &cov);
    assert!(rel < 0.05, "covariance relative error {rel}");
}

#[test]
fn infinite_potential_never_moves() {
    let (model, _) = reference_model(10, 2, 3, 1.0);
    let reference = GaussianReference::from_model(&model, SamplerOptions::default()).unwrap();
    let start = reference.mean.clone();
    let target = PcnTarget {
        reference,
        phi: Arc::new(|_: &[f64]| f64::INFINITY),
        h: 0.5,
    };
    let chain = pcn_chain(&target, None, &PcnOptions::new(200), RngStream::from_seed(1)).unwrap();
    assert_eq!(chain.accept_count, 0);
    for (_, s) in &chain.states {
        assert_eq!(s, &start);
    }
}

#[test]
fn toy_problem_acceptance_is_healthy() {
    let toy = Arc::new(ToyNonlinear::random(20, 50, TOY_PERTURBATION, RngStream::new(3, 1)).unwrap());
    let target = toy.target(0.05, SamplerOptions::default()).unwrap();
    let chain = pcn_chain(&target, None, &PcnOptions::new(5000), RngStream::from_seed(3)).unwrap();
    let rate = chain.acceptance_rate();
    assert!((0.15..=0.75).contains(&rate), "acceptance {rate}");
}

#[test]
fn toy_potential_matches_misfit_difference() {
    // Φ(γ) = ½‖F(γ) - r‖² - ½‖Aγ - r‖²
    let toy = ToyNonlinear::random(5, 7, 1.5, RngStream::new(2, 0)).unwrap();
    let gamma = normal_vec(&mut rng(12), 7);
    let half_sq = |v: Vec<f64>| 0.5 * v.iter().map(|x| x * x).sum::<f64>();
    let full = half_sq(sub(&toy.forward(&gamma), &toy.r));
    let linear = half_sq(sub(&toy.a.matvec(&gamma), &toy.r));
    assert!((toy.phi(&gamma) - (full - linear)).abs() < 1e-10 * full.abs().max(1.0));
}

#[test]
fn batch_and_stream_modes_give_identical_chains() {
    let toy = Arc::new(ToyNonlinear::random(8, 12, TOY_PERTURBATION, RngStream::new(5, 1)).unwrap());
    let target = toy.target(0.1, SamplerOptions::default()).unwrap();
    let mut opts = PcnOptions::new(300);
    let batch = pcn_chain(&target, None, &opts, RngStream::from_seed(21)).unwrap();
    opts.mode = ProposalMode::Stream;
    let stream = pcn_chain(&target, None, &opts, RngStream::from_seed(21)).unwrap();
    assert_eq!(batch.accepted, stream.accepted);
    assert_eq!(batch.states, stream.states);
    assert_eq!(batch.trace_csv(), stream.trace_csv());
}

#[test]
fn csv_layout_has_headers_and_one_row_per_step() {
    let toy = Arc::new(ToyNonlinear::random(3, 4, 1.0, RngStream::new(6, 1)).unwrap());
    let target = toy.target(0.2, SamplerOptions::default()).unwrap();
    let mut opts = PcnOptions::new(10);
    opts.thin = 3;
    let chain = pcn_chain(&target, None, &opts, RngStream::from_seed(2)).unwrap();
    let trace = chain.trace_csv();
    let lines: Vec<&str> = trace.lines().collect();
    assert_eq!(lines[0], "step,accepted,phi");
    assert_eq!(lines.len(), 11);
    let states = chain.states_csv();
    let lines: Vec<&str> = states.lines().collect();
    assert_eq!(lines[0], "step,gamma0,gamma1,gamma2,gamma3");
    assert_eq!(lines.len(), 1 + 4);
    assert!(lines[2].starts_with("3,"));
}

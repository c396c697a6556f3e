mod common;

use std::sync::Arc;

use common::*;
use subspace_rto::linalg::*;
use subspace_rto::sampler::*;
use subspace_rto::whitening::*;
use subspace_rto::Error;

fn op(m: DenseMatrix) -> OpRef {
    Arc::new(m)
}

#[test]
fn identity_whitening_leaves_model_unchanged() {
    let mut g = rng(1);
    let a = random_matrix(&mut g, 3, 5);
    let b = normal_vec(&mut g, 3);
    let id: OpRef = Arc::new(IdentityOperator::new(5));
    let model = GeneralGaussianModel::new(op(a.clone()), b.clone(), Prior::PrecisionFactor { factor: id.clone(), inverse: Some(id) }).unwrap();
    let w = whiten(&model).unwrap();
    assert_eq!(w.b, b);
    assert!(max_abs_diff(&w.op.to_dense(), &a) < 1e-15);
    let x = normal_vec(&mut g, 5);
    assert_eq!(w.back_transform.apply(&x), x);
}

#[test]
fn scalar_whitening_hand_case() {
    // A = 2, Γ = 4 so L = 1/2, Σ = 1, b = 3
    let l: OpRef = op(DenseMatrix::from_rows(&[&[0.5]]).unwrap());
    let model = GeneralGaussianModel::new(op(DenseMatrix::from_rows(&[&[2.0]]).unwrap()), vec![3.0], Prior::PrecisionFactor { factor: l, inverse: None }).unwrap();
    let w = whiten(&model).unwrap();
    assert!((w.op.to_dense().get(0, 0) - 4.0).abs() < 1e-15);
    assert_eq!(w.b, vec![3.0]);
    let p = posterior_direct(&w).unwrap();
    let mean = w.back_transform.apply(&p.mean)[0];
    let var = 4.0 * p.covariance().get(0, 0);
    // C = (4 + 1/4)⁻¹, μ = 6 C
    let c = 1.0 / 4.25;
    assert!((mean - 6.0 * c).abs() < 1e-14);
    assert!((var - c).abs() < 1e-14);
}

#[test]
fn posterior_forms_agree() {
    for seed in 0..5 {
        let r = random_general(seed, 3, 6);
        let (m6, c6) = information_form(&r.a, &r.gamma, &r.sigma, &r.b, &r.x0);
        let (m7, c7) = data_space_form(&r.a, &r.gamma, &r.sigma, &r.b, &r.x0);
        assert!(rel_err(&m6, &m7) <= 1e-10);
        assert!(frobenius_rel(&c6, &c7) <= 1e-10);
    }
}

#[test]
fn whitened_sampling_matches_closed_form() {
    let r = random_general(7, 3, 5);
    let (mean, cov) = information_form(&r.a, &r.gamma, &r.sigma, &r.b, &r.x0);
    let sampler = ModelSampler::new(&r.model, SamplerOptions::default()).unwrap();
    let exact = sampler.mean().unwrap();
    assert!(rel_err(&exact, &mean) <= 1e-10);
    let batch = sampler.sample(50_000, RngStream::from_seed(5)).unwrap();
    let (m, c) = moments(&batch.draws);
    let sd: f64 = (0..5).map(|i| cov.get(i, i)).sum::<f64>().sqrt();
    assert!(norm(&sub(&m, &mean)) <= 0.05 * sd.max(norm(&mean)));
    assert!(frobenius_rel(&c, &cov) <= 0.05);
}

#[test]
fn pinv_small_cases() {
    let id = PinvOperator::new(Arc::new(IdentityOperator::new(3))).unwrap();
    assert_eq!(pinv_apply(&id, &[1.0, 2.0, 3.0]).unwrap(), vec![1.0, 2.0, 3.0]);
    assert_eq!(pinv_transpose_apply(&id, &[1.0, 2.0, 3.0]).unwrap(), vec![1.0, 2.0, 3.0]);
    let ones = PinvOperator::new(op(DenseMatrix::from_rows(&[&[1.0], &[1.0]]).unwrap())).unwrap();
    assert!((pinv_apply(&ones, &[0.0, 2.0]).unwrap()[0] - 1.0).abs() < 1e-15);
}

#[test]
fn pinv_matches_qr_pseudoinverse() {
    let mut g = rng(9);
    let l = random_matrix(&mut g, 9, 4);
    let qr = HouseholderQr::new(&l).unwrap();
    let pinv_qr = gauss_jordan_inverse(&qr.r()).matmul(&qr.thin_q().transpose()).unwrap();
    let p = PinvOperator::new(op(l)).unwrap();
    let z = normal_vec(&mut g, 9);
    let y = normal_vec(&mut g, 4);
    assert!(rel_err(&pinv_apply(&p, &z).unwrap(), &pinv_qr.matvec(&z)) <= 1e-10);
    assert!(rel_err(&pinv_transpose_apply(&p, &y).unwrap(), &pinv_qr.matvec_t(&y)) <= 1e-10);
    let lhs = dot(&pinv_apply(&p, &z).unwrap(), &y);
    let rhs = dot(&z, &pinv_transpose_apply(&p, &y).unwrap());
    assert!((lhs - rhs).abs() <= 1e-12 * lhs.abs().max(1.0));
}

#[test]
fn pinv_rejects_wide_or_rank_deficient() {
    assert!(matches!(PinvOperator::new(op(DenseMatrix::zeros(2, 3))), Err(Error::RankDeficient { .. })));
    let rank1 = DenseMatrix::from_rows(&[&[1.0, 2.0], &[2.0, 4.0], &[3.0, 6.0]]).unwrap();
    assert!(PinvOperator::new(op(rank1)).is_err());
}

#[test]
fn identity_transform_prior_is_plain_sampling() {
    let mut g = rng(10);
    let a = random_matrix(&mut g, 3, 6);
    let b = normal_vec(&mut g, 3);
    let model = GeneralGaussianModel::new(op(a.clone()), b.clone(), Prior::Transform(Arc::new(IdentityOperator::new(6)))).unwrap();
    let rng = RngStream::from_seed(12);
    let via_transform = sample_transform_prior(&model, 20, rng, SamplerOptions::default()).unwrap();
    let plain = sample(&StandardFormModel::from_operator(a, b).unwrap(), 20, SamplerOptions::default(), rng).unwrap();
    assert_eq!(via_transform.draws.as_slice(), plain.draws.as_slice());
}

/// First differences with boundary rows: `p = n + 1` rows.
fn boundary_difference(n: usize) -> DenseMatrix {
    DenseMatrix::from_fn(n + 1, n, |i, j| {
        if i == j {
            1.0
        } else if i == j + 1 {
            -1.0
        } else {
            0.0
        }
    })
}

fn point_observations(n: usize, at: &[usize]) -> DenseMatrix {
    DenseMatrix::from_fn(at.len(), n, |i, j| f64::from(u8::from(at[i] == j)))
}

#[test]
fn transform_prior_matches_dense_posterior() {
    let n = 10;
    let l = boundary_difference(n);
    let a = point_observations(n, &[2, 5, 8]);
    let b = vec![1.0, -0.5, 2.0];
    let model = GeneralGaussianModel::new(op(a.clone()), b.clone(), Prior::Transform(op(l.clone()))).unwrap();
    // precision A^T A + L^T L
    let mut h = a.gram();
    let ltl = l.gram();
    for i in 0..n {
        for j in 0..n {
            h.set(i, j, h.get(i, j) + ltl.get(i, j));
        }
    }
    let cov = gauss_jordan_inverse(&h);
    let mean = cov.matvec(&a.matvec_t(&b));
    let batch = sample_transform_prior(&model, 50_000, RngStream::from_seed(3), SamplerOptions::default()).unwrap();
    let (m, c) = moments(&batch.draws);
    assert!(norm(&sub(&m, &mean)) <= 0.05 * norm(&mean));
    assert!(frobenius_rel(&c, &cov) <= 0.05);
}

#[test]
fn null_space_of_transpose_is_filtered() {
    let n = 10;
    let l = boundary_difference(n);
    let a = point_observations(n, &[1, 4, 7]);
    let model = GeneralGaussianModel::new(op(a), vec![0.3, 0.1, -0.2], Prior::Transform(op(l.clone()))).unwrap();
    let s = TransformPriorSampler::new(&model, SamplerOptions::default()).unwrap();
    // projector onto null(L^T): I - L (L^T L)⁻¹ L^T
    let mut g = rng(4);
    let r = normal_vec(&mut g, n + 1);
    let proj = l.matmul(&gauss_jordan_inverse(&l.gram())).unwrap().matmul(&l.transpose()).unwrap();
    let nu_null = sub(&r, &proj.matvec(&r));
    assert!(norm(&l.matvec_t(&nu_null)) < 1e-12 * norm(&r));
    let eta = normal_vec(&mut g, 3);
    let nu = normal_vec(&mut g, n + 1);
    let nu_shifted: Vec<f64> = nu.iter().zip(&nu_null).map(|(u, v)| u + 5.0 * v).collect();
    let (x0, _) = s.draw_with(&eta, &nu).unwrap();
    let (x1, _) = s.draw_with(&eta, &nu_shifted).unwrap();
    assert!(rel_err(&x1, &x0) <= 1e-10);
    let (xz, _) = s.draw_with(&eta, &vec![0.0; n + 1]).unwrap();
    let (xn, _) = s.draw_with(&eta, &nu_null).unwrap();
    assert!(rel_err(&xn, &xz) <= 1e-10);
}

#[test]
fn model_validation() {
    let id: OpRef = Arc::new(IdentityOperator::new(2));
    let a = op(DenseMatrix::identity(2));
    assert!(GeneralGaussianModel::new(a.clone(), vec![1.0], Prior::Transform(id.clone())).is_err());
    let m = GeneralGaussianModel::new(a, vec![1.0, 2.0], Prior::Transform(id)).unwrap();
    assert!(m.clone().with_mean(vec![0.0; 3]).is_err());
    assert!(m.with_noise_factor(Arc::new(IdentityOperator::new(3))).is_err());
}

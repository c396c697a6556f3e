#![allow(dead_code)]

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use std::sync::Arc;

use subspace_rto::linalg::{DenseMatrix, LinearOperator, OpRef};
use subspace_rto::whitening::{GeneralGaussianModel, Prior};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn normal_vec(g: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    (0..n).map(|_| g.sample(StandardNormal)).collect()
}

pub fn random_matrix(g: &mut ChaCha8Rng, rows: usize, cols: usize) -> DenseMatrix {
    DenseMatrix::new(rows, cols, normal_vec(g, rows * cols)).unwrap()
}

/// `B B^T + shift I` for a random square `B`.
pub fn random_spd(g: &mut ChaCha8Rng, n: usize, shift: f64) -> DenseMatrix {
    let b = random_matrix(g, n, n);
    let mut m = b.matmul(&b.transpose()).unwrap();
    m.add_diagonal(shift);
    m
}

pub fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

pub fn sub(a: &[f64], b: &[f64]) -> Vec<f64> {
    a.iter().zip(b).map(|(x, y)| x - y).collect()
}

pub fn rel_err(a: &[f64], reference: &[f64]) -> f64 {
    norm(&sub(a, reference)) / norm(reference).max(f64::MIN_POSITIVE)
}

pub fn max_abs_diff(a: &DenseMatrix, b: &DenseMatrix) -> f64 {
    a.as_slice()
        .iter()
        .zip(b.as_slice())
        .fold(0.0, |acc, (x, y)| f64::max(acc, (x - y).abs()))
}

/// Inverse through Gauss-Jordan elimination with partial pivoting, kept
/// independent of the library's Cholesky code.
pub fn gauss_jordan_inverse(m: &DenseMatrix) -> DenseMatrix {
    let n = m.rows();
    let mut a: Vec<Vec<f64>> = (0..n).map(|i| m.row(i)).collect();
    let mut inv: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| f64::from(u8::from(i == j))).collect()).collect();
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs())).unwrap();
        a.swap(c, p);
        inv.swap(c, p);
        let d = a[c][c];
        for j in 0..n {
            a[c][j] /= d;
            inv[c][j] /= d;
        }
        for r in 0..n {
            if r != c {
                let f = a[r][c];
                if f != 0.0 {
                    for j in 0..n {
                        a[r][j] -= f * a[c][j];
                        inv[r][j] -= f * inv[c][j];
                    }
                }
            }
        }
    }
    DenseMatrix::from_fn(n, n, |i, j| inv[i][j])
}

pub fn gauss_jordan_solve(m: &DenseMatrix, b: &[f64]) -> Vec<f64> {
    gauss_jordan_inverse(m).matvec(b)
}

/// Sample mean and unbiased covariance of the columns of `draws`.
pub fn moments(draws: &DenseMatrix) -> (Vec<f64>, DenseMatrix) {
    let (n, k) = (draws.rows(), draws.cols());
    let mut mean = vec![0.0; n];
    for j in 0..k {
        for (m, x) in mean.iter_mut().zip(draws.col(j)) {
            *m += x / k as f64;
        }
    }
    let mut cov = DenseMatrix::zeros(n, n);
    for j in 0..k {
        let d = sub(draws.col(j), &mean);
        for a in 0..n {
            for b in 0..n {
                cov.set(a, b, cov.get(a, b) + d[a] * d[b] / (k - 1) as f64);
            }
        }
    }
    (mean, cov)
}

pub fn frobenius_rel(a: &DenseMatrix, reference: &DenseMatrix) -> f64 {
    a.frobenius_distance(reference) / reference.frobenius_norm()
}

pub fn dense_of(op: &dyn LinearOperator) -> DenseMatrix {
    DenseMatrix::from_fn(op.rows(), op.cols(), |i, j| {
        let mut e = vec![0.0; op.cols()];
        e[j] = 1.0;
        op.apply(&e).unwrap()[i]
    })
}

/// Standard normal CDF by composite Simpson integration of the density.
pub fn normal_cdf(x: f64) -> f64 {
    if x.abs() > 12.0 {
        return if x > 0.0 { 1.0 } else { 0.0 };
    }
    let n = 2000;
    let h = x.abs() / n as f64;
    let pdf = |t: f64| (-0.5 * t * t).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let mut s = pdf(0.0) + pdf(x.abs());
    for i in 1..n {
        s += pdf(i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    let half = s * h / 3.0;
    if x >= 0.0 {
        0.5 + half
    } else {
        0.5 - half
    }
}

/// Kolmogorov-Smirnov distance between the sample and `cdf`.
pub fn ks_statistic(sample: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    let mut xs = sample.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter().enumerate().fold(0.0, |d, (i, &x)| {
        let f = cdf(x);
        d.max((f - i as f64 / n).abs()).max(((i + 1) as f64 / n - f).abs())
    })
}

/// Upper factor `F` with `F^T F = M`, from the library-independent inverse
/// and a plain Cholesky written here.
pub fn upper_factor(m: &DenseMatrix) -> DenseMatrix {
    let n = m.rows();
    let mut g = DenseMatrix::zeros(n, n);
    for j in 0..n {
        let mut d = m.get(j, j);
        for k in 0..j {
            d -= g.get(j, k) * g.get(j, k);
        }
        let d = d.sqrt();
        g.set(j, j, d);
        for i in j + 1..n {
            let mut v = m.get(i, j);
            for k in 0..j {
                v -= g.get(i, k) * g.get(j, k);
            }
            g.set(i, j, v / d);
        }
    }
    g.transpose()
}

/// Posterior from the information form: `C = (A^T Σ⁻¹ A + Γ⁻¹)⁻¹`,
/// `μ = C (A^T Σ⁻¹ b + Γ⁻¹ x₀)`.
pub fn information_form(a: &DenseMatrix, gamma: &DenseMatrix, sigma: &DenseMatrix, b: &[f64], x0: &[f64]) -> (Vec<f64>, DenseMatrix) {
    let gi = gauss_jordan_inverse(gamma);
    let si = gauss_jordan_inverse(sigma);
    let ats = a.transpose().matmul(&si).unwrap();
    let mut h = ats.matmul(a).unwrap();
    for i in 0..h.rows() {
        for j in 0..h.cols() {
            h.set(i, j, h.get(i, j) + gi.get(i, j));
        }
    }
    let c = gauss_jordan_inverse(&h);
    let rhs: Vec<f64> = ats.matvec(b).iter().zip(gi.matvec(x0)).map(|(u, v)| u + v).collect();
    (c.matvec(&rhs), c)
}

/// Posterior from the data-space form: `C = Γ - Γ A^T (A Γ A^T + Σ)⁻¹ A Γ`,
/// `μ = x₀ + Γ A^T (A Γ A^T + Σ)⁻¹ (b - A x₀)`.
pub fn data_space_form(a: &DenseMatrix, gamma: &DenseMatrix, sigma: &DenseMatrix, b: &[f64], x0: &[f64]) -> (Vec<f64>, DenseMatrix) {
    let ga = gamma.matmul(&a.transpose()).unwrap();
    let mut inner = a.matmul(&ga).unwrap();
    for i in 0..inner.rows() {
        for j in 0..inner.cols() {
            inner.set(i, j, inner.get(i, j) + sigma.get(i, j));
        }
    }
    let k = ga.matmul(&gauss_jordan_inverse(&inner)).unwrap();
    let corr = k.matmul(&ga.transpose()).unwrap();
    let c = DenseMatrix::from_fn(gamma.rows(), gamma.cols(), |i, j| gamma.get(i, j) - corr.get(i, j));
    let resid = sub(b, &a.matvec(x0));
    let mean: Vec<f64> = x0.iter().zip(k.matvec(&resid)).map(|(u, v)| u + v).collect();
    (mean, c)
}

pub struct RandomGeneral {
    pub a: DenseMatrix,
    pub gamma: DenseMatrix,
    pub sigma: DenseMatrix,
    pub b: Vec<f64>,
    pub x0: Vec<f64>,
    pub model: GeneralGaussianModel,
}

pub fn random_general(seed: u64, m: usize, n: usize) -> RandomGeneral {
    let mut g = rng(seed);
    let a = random_matrix(&mut g, m, n);
    let gamma = random_spd(&mut g, n, 0.5);
    let sigma = random_spd(&mut g, m, 0.5);
    let b = normal_vec(&mut g, m);
    let x0 = normal_vec(&mut g, n);
    let l = upper_factor(&gauss_jordan_inverse(&gamma));
    let s = upper_factor(&gauss_jordan_inverse(&sigma));
    let model = GeneralGaussianModel::new(Arc::new(a.clone()) as OpRef, b.clone(), Prior::PrecisionFactor { factor: Arc::new(l), inverse: None })
        .unwrap()
        .with_noise_factor(Arc::new(s))
        .unwrap()
        .with_mean(x0.clone())
        .unwrap();
    RandomGeneral { a, gamma, sigma, b, x0, model }
}

mod common;

use common::*;
use proptest::prelude::*;
use subspace_rto::bidiag::*;
use subspace_rto::linalg::*;

fn orthogonality_defect(q: &DenseMatrix, cols: usize) -> f64 {
    let sub = DenseMatrix::from_fn(q.rows(), cols, |i, j| q.get(i, j));
    sub.gram().frobenius_distance(&DenseMatrix::identity(cols))
}

#[test]
fn identity_breaks_down_after_one_step() {
    let f = golub_kahan(&IdentityOperator::new(2), &[1.0, 0.0], 1, Reorth::Full).unwrap();
    assert_eq!(f.steps(), 1);
    assert!((f.alphas[0] - 1.0).abs() < 1e-15);
    assert!(f.betas[1].abs() < 1e-15);
}

#[test]
fn diagonal_recurrence_holds() {
    let a = DenseMatrix::from_diagonal(&[2.0, 3.0]);
    let f = golub_kahan(&a, &[1.0, 1.0], 1, Reorth::Full).unwrap();
    let av = a.matmul(&DenseMatrix::from_fn(2, 1, |i, _| f.v.get(i, 0))).unwrap();
    let ub = DenseMatrix::from_fn(2, 2, |i, j| f.u.get(i, j)).matmul(&f.b_matrix()).unwrap();
    assert!(av.frobenius_distance(&ub) < 1e-14);
    assert!((f.betas[0] - 2f64.sqrt()).abs() < 1e-15);
}

#[test]
fn recurrences_and_orthogonality_on_random_operator() {
    let mut g = rng(30);
    let a = random_matrix(&mut g, 30, 50);
    let b = normal_vec(&mut g, 30);
    let l = 15;
    let f = golub_kahan(&a, &b, l, Reorth::Full).unwrap();
    assert_eq!(f.steps(), l);
    // beta_1 u_1 = b
    let u1: Vec<f64> = (0..30).map(|i| f.betas[0] * f.u.get(i, 0)).collect();
    assert!(rel_err(&u1, &b) < 1e-14);
    assert!(orthogonality_defect(&f.u, l + 1) <= 1e-10);
    assert!(orthogonality_defect(&f.v, l) <= 1e-10);

    let scale = a.frobenius_norm();
    let v = DenseMatrix::from_fn(50, l, |i, j| f.v.get(i, j));
    let u = DenseMatrix::from_fn(30, l + 1, |i, j| f.u.get(i, j));
    let bm = f.b_matrix();
    let av = a.matmul(&v).unwrap();
    assert!(av.frobenius_distance(&u.matmul(&bm).unwrap()) <= 1e-10 * scale);

    // A^T U - V B^T = alpha_{l+1} v_{l+1} e_{l+1}^T with a unit v_{l+1}
    let atu = a.transpose().matmul(&u).unwrap();
    let vbt = v.matmul(&bm.transpose()).unwrap();
    let first: Vec<f64> = (0..50 * l).map(|k| atu.as_slice()[k] - vbt.as_slice()[k]).collect();
    assert!(norm(&first) <= 1e-10 * scale);
    let last = sub(atu.col(l), vbt.col(l));
    assert!((norm(&last) - f.alpha_next.abs()).abs() <= 1e-10 * scale);
    assert!(norm(&v.matvec_t(&last)) <= 1e-10 * scale);
}

#[test]
fn step_count_is_validated() {
    let a = DenseMatrix::identity(3);
    assert!(golub_kahan(&a, &[1.0, 0.0, 0.0], 0, Reorth::Full).is_err());
    assert!(golub_kahan(&a, &[1.0, 0.0, 0.0], 3, Reorth::Full).is_err());
    assert!(golub_kahan(&a, &[0.0, 0.0, 0.0], 1, Reorth::Full).is_err());
}

#[test]
fn identity_solves() {
    let cfg = KrylovConfig::default();
    let b = [1.0, -2.0, 4.0];
    let (z, _) = solve_adjoint_krylov(&IdentityOperator::new(3), &b, 1.0, &cfg).unwrap();
    assert!(rel_err(&z, &[0.5, -1.0, 2.0]) < 1e-14);
    let (x, _) = solve_normal_krylov(&IdentityOperator::new(3), &b, 1.0, &cfg).unwrap();
    assert!(rel_err(&x, &[0.5, -1.0, 2.0]) < 1e-14);
}

#[test]
fn adjoint_matches_dense_solve() {
    let mut g = rng(7);
    let a = random_matrix(&mut g, 5, 12);
    let b = normal_vec(&mut g, 5);
    let mut m = a.outer_gram();
    m.add_diagonal(1.0);
    let direct = gauss_jordan_solve(&m, &b);
    let (z, stats) = solve_adjoint_krylov(&a, &b, 1.0, &KrylovConfig::new(5, 1e-12).unwrap()).unwrap();
    assert!(stats.steps <= 5);
    assert!(rel_err(&z, &direct) <= 1e-8);
}

#[test]
fn normal_matches_dense_solve() {
    let mut g = rng(8);
    let a = random_matrix(&mut g, 12, 5);
    let b = normal_vec(&mut g, 12);
    let mut m = a.gram();
    m.add_diagonal(1.0);
    let direct = gauss_jordan_solve(&m, &a.matvec_t(&b));
    let (x, _) = solve_normal_krylov(&a, &b, 1.0, &KrylovConfig::default()).unwrap();
    assert!(rel_err(&x, &direct) <= 1e-8);
}

#[test]
fn normal_solution_is_transpose_of_adjoint_solution() {
    let mut g = rng(9);
    let a = random_matrix(&mut g, 4, 20);
    let b = normal_vec(&mut g, 4);
    let cfg = KrylovConfig::default();
    let (x, _) = solve_normal_krylov(&a, &b, 1.0, &cfg).unwrap();
    let (z, _) = solve_adjoint_krylov(&a, &b, 1.0, &cfg).unwrap();
    assert!(rel_err(&a.matvec_t(&z), &x) <= 1e-8);
}

#[test]
fn zero_right_hand_side_is_rejected() {
    let mut g = rng(10);
    let a = random_matrix(&mut g, 3, 6);
    let cfg = KrylovConfig::default();
    assert!(matches!(solve_adjoint_krylov(&a, &[0.0; 3], 1.0, &cfg), Err(subspace_rto::Error::ZeroSeed)));
    assert!(matches!(solve_normal_krylov(&a, &[0.0; 3], 1.0, &cfg), Err(subspace_rto::Error::ZeroSeed)));
    assert!(solve_adjoint_krylov(&a, &[1.0, 0.0, 0.0], -1.0, &cfg).is_err());
}

#[test]
fn residual_history_reported() {
    let mut g = rng(12);
    let a = random_matrix(&mut g, 20, 40);
    let b = normal_vec(&mut g, 20);
    let (_, stats) = solve_adjoint_krylov(&a, &b, 1.0, &KrylovConfig::new(6, 1e-15).unwrap()).unwrap();
    assert_eq!(stats.history.len(), stats.steps);
    assert_eq!(stats.residual, *stats.history.last().unwrap());
    assert!(!stats.converged);
    assert!(KrylovConfig::new(0, 1e-6).is_err());
    assert!(KrylovConfig::new(5, 1.5).is_err());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]
    #[test]
    fn converged_solvers_agree_with_direct(m in 2usize..8, extra in 1usize..10, mu in 0.1f64..3.0, seed in any::<u64>()) {
        let n = m + extra;
        let mut g = rng(seed);
        let a = random_matrix(&mut g, m, n);
        let b = normal_vec(&mut g, m);
        let cfg = KrylovConfig::new(m, 1e-13).unwrap();
        let mut outer = a.outer_gram();
        outer.add_diagonal(mu);
        let z_direct = cholesky_factor(&outer).unwrap().solve_vec(&b).unwrap();
        let (z, _) = solve_adjoint_krylov(&a, &b, mu, &cfg).unwrap();
        prop_assert!(rel_err(&z, &z_direct) <= 1e-8);
        let (x, _) = solve_normal_krylov(&a, &b, mu, &cfg).unwrap();
        prop_assert!(rel_err(&a.matvec_t(&z), &x) <= 1e-8);
    }
}

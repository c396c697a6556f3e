//! Matrix-free solves of the normal and adjoint systems with Golub-Kahan
//! bidiagonalization, compared against dense factorizations.

use std::sync::Arc;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use subspace_rto::bidiag::{solve_adjoint_krylov, solve_normal_krylov, KrylovConfig};
use subspace_rto::linalg::{norm2, DenseMatrix, OpRef};
use subspace_rto::sampler::{standard_normal_vec, AdjointSolver, NormalSolver, Solver};

fn rel(a: &[f64], b: &[f64]) -> f64 {
    let d: Vec<f64> = a.iter().zip(b).map(|(x, y)| x - y).collect();
    norm2(&d) / norm2(b)
}

fn main() -> subspace_rto::Result<()> {
    let (m, n) = (30, 600);
    let mut g = ChaCha8Rng::seed_from_u64(7);
    let mut a = DenseMatrix::new(m, n, standard_normal_vec(&mut g, m * n))?;
    a.scale(1.0 / (n as f64).sqrt());
    let b = standard_normal_vec(&mut g, m);
    let op: OpRef = Arc::new(a);

    let (x, _) = NormalSolver::new(op.clone(), Solver::Direct)?.solve(&b, &vec![0.0; n])?;
    let (z, _) = AdjointSolver::new(op.clone(), Solver::Direct, 0.0)?.solve_adjoint(&b)?;

    for steps in [2, 5, 10, 20] {
        let cfg = KrylovConfig::new(steps, 1e-15)?;
        let (xk, ks) = solve_normal_krylov(op.as_ref(), &b, 1.0, &cfg)?;
        let (zk, _) = solve_adjoint_krylov(op.as_ref(), &b, 1.0, &cfg)?;
        println!(
            "{steps:>3} steps: normal error {:.2e}, adjoint error {:.2e}, projected residual {:.2e}",
            rel(&xk, &x),
            rel(&zk, &z),
            ks.residual
        );
    }

    // x = Aᵀz links the two systems
    println!("|A^T z - x| / |x| = {:.2e}", rel(&op.apply_transpose(&z)?, &x));
    Ok(())
}

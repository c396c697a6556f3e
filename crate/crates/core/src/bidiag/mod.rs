//! Golub-Kahan (Lanczos) bidiagonalization and the projected Krylov solvers
//! for the shifted normal equations `(A^T A + μ I) x = A^T b` and the adjoint
//! equations `(A A^T + μ I) z = b`.

mod krylov;
mod lanczos;

pub use krylov::{solve_adjoint_krylov, solve_normal_krylov, KrylovConfig, KrylovStats, MemoryMode};
pub use lanczos::{golub_kahan, BidiagFactors, Reorth, BREAKDOWN_TOL};

//! Independent sampling from Gaussian posteriors of linear inverse problems.
//!
//! For a standard-form model `b = A x + e` with `x ~ N(0, I_n)` and
//! `e ~ N(0, I_m)`, every posterior draw is the solution of a randomly
//! perturbed regularized least-squares problem. When `m < n` the prior
//! perturbation can be split into a row-space part and a null-space part of
//! `A`, and each draw then only needs two `m × m` solves instead of one
//! `n × n` solve. The crate provides
//!
//! * [`linalg`]: dense/sparse/Kronecker operators and direct factorizations,
//! * [`bidiag`]: Golub-Kahan bidiagonalization and the matrix-free Krylov
//!   solvers for the shifted normal and adjoint equations,
//! * [`sampler`]: the normal-equation and subspace-splitting samplers plus a
//!   dense closed-form oracle,
//! * [`whitening`]: reduction of general Gaussian models to standard form,
//!   including rectangular transformation priors through pseudoinverses,
//! * [`hier`]: IAS MAP estimation and block-Gibbs sampling for
//!   conditionally Gaussian models with inverse-gamma hypervariances,
//! * [`mcmc`]: a preconditioned Crank-Nicolson sampler that uses the Gaussian
//!   sampler as its proposal engine,
//! * [`problems`]: tomography, Whittle-Matérn and group-sparse test problems,
//! * [`cli`]: the batch front-end behind the `subspace-rto` binary.

pub mod bidiag;
pub mod cli;
pub mod error;
pub mod hier;
pub mod linalg;
pub mod mcmc;
pub mod problems;
pub mod sampler;
pub mod whitening;

pub use error::{Error, Result};

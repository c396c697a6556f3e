//! Dense and sparse primitives, the operator abstraction, and the direct
//! factorizations used by oracle samplers and small projected problems.

pub mod cholesky;
pub mod dense;
pub mod io;
pub mod lstsq;
pub mod operator;
pub mod sparse;

pub use cholesky::{cholesky_factor, solve_spd, CholeskyFactor};
pub use dense::{axpy, dot, norm2, DenseMatrix};
pub use lstsq::{dense_lstsq, HouseholderQr};
pub use operator::{
    BlockRowOperator, CallbackOperator, DiagonalOperator, IdentityOperator, KroneckerOperator,
    LinearOperator, OpRef, OperatorKind, ProductOperator, ScaledOperator,
};
pub use sparse::CscMatrix;

//! Exact posterior sampling for standard-form linear Gaussian models.

mod batch;
mod direct;
mod model;
mod rng;
mod rto;

pub use batch::{fmt_f64, push_csv_row, sample, SampleBatch, Sampler, SamplerOptions, Strategy};
pub use direct::{posterior_direct, posterior_direct_with_cap, PosteriorDirect, DEFAULT_ORACLE_CAP};
pub use model::{BackTransform, StandardFormModel};
pub use rng::{draw_perturbations, standard_normal_vec, RngStream};
pub use rto::{
    rto_draw_normal, split_draw_adjoint, split_nu, AdjointSolver, DrawStats, NormalSolver, Solver,
    SplitDraw,
};

//! Batch front-end: TOML run configurations, sampling runs with CSV output,
//! and the normal-vs-adjoint timing benchmark.

mod bench;
mod config;
mod run;

pub use bench::{
    benchmark, benchmark_csv, benchmark_model, benchmark_table, equivalence_error, equivalence_tolerance, BenchmarkRow, EQUIVALENCE_DRAWS,
    EQUIVALENCE_TOL,
};
pub use config::{
    config_schema, nearest, HierConfig, HierMethod, KeySpec, PcnConfig, PriorSpec, ProblemSpec, RunConfig,
    SamplingConfig, ENV_OUTPUT_DIR, ENV_WORKERS, SCHEMA,
};
pub use run::{quantile, run, summary_csv, RunReport};

use std::fmt::Write as _;
use std::sync::Arc;
use std::time::Instant;

use toml::{Table, Value};

use crate::cli::config::RunConfig;
use crate::cli::run::{load_problem, Writer};
use crate::error::{Error, Result};
use crate::linalg::dense::norm2;
use crate::linalg::operator::{LinearOperator, OpRef};
use crate::problems::Problem;
use crate::sampler::{fmt_f64, RngStream, Sampler, SamplerOptions, Solver, StandardFormModel, Strategy};
use crate::whitening::ModelSampler;

/// Relative tolerance of the normal/adjoint equivalence check on
/// well-conditioned models.
pub const EQUIVALENCE_TOL: f64 = 1e-8;

/// Tolerance actually used for `A`: the two paths solve systems with condition
/// number up to `1 + ‖A‖²`, so the floor is widened by a few ulps of that.
pub fn equivalence_tolerance(op: &dyn LinearOperator) -> f64 {
    let fro = op.to_dense().frobenius_norm();
    EQUIVALENCE_TOL.max(4.0 * f64::EPSILON * (1.0 + fro * fro))
}

/// Draws compared before any timing starts.
pub const EQUIVALENCE_DRAWS: usize = 8;

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BenchmarkRow {
    pub k: usize,
    pub t_normal: f64,
    pub t_adjoint: f64,
    /// `100 · t_adjoint / t_normal`.
    pub ratio: f64,
}

pub fn benchmark_csv(rows: &[BenchmarkRow]) -> String {
    let mut s = String::from("k,t_normal,t_adjoint,ratio_percent\n");
    for r in rows {
        let _ = writeln!(s, "{},{},{},{}", r.k, fmt_f64(r.t_normal), fmt_f64(r.t_adjoint), fmt_f64(r.ratio));
    }
    s
}

pub fn benchmark_table(rows: &[BenchmarkRow]) -> String {
    let mut s = format!("{:>8} {:>12} {:>12} {:>10}\n", "K", "normal [s]", "adjoint [s]", "ratio");
    for r in rows {
        let _ = writeln!(s, "{:>8} {:>12.4} {:>12.4} {:>9.1}%", r.k, r.t_normal, r.t_adjoint, r.ratio);
    }
    s
}

/// Largest relative difference between normal-equation and adjoint draws for
/// the first `draws` substreams of `rng`.
pub fn equivalence_error(model: &StandardFormModel, opts: SamplerOptions, draws: usize, rng: RngStream) -> Result<f64> {
    let normal = Sampler::new(model.clone(), opts.with_strategy(Strategy::Normal))?;
    let adjoint = Sampler::new(model.clone(), opts.with_strategy(Strategy::Adjoint))?;
    let mut worst = 0.0_f64;
    for j in 0..draws as u64 {
        let (xn, _) = normal.draw_stream(rng.substream(j))?;
        let (xa, _) = adjoint.draw_stream(rng.substream(j))?;
        let diff: Vec<f64> = xn.iter().zip(&xa).map(|(a, b)| a - b).collect();
        worst = worst.max(norm2(&diff) / norm2(&xn).max(f64::MIN_POSITIVE));
    }
    Ok(worst)
}

/// Times `count` draws including the factorization.
fn time_strategy(model: &StandardFormModel, opts: SamplerOptions, count: usize, rng: RngStream) -> Result<f64> {
    let t = Instant::now();
    let sampler = Sampler::new(model.clone(), opts)?;
    let batch = sampler.sample(count, rng)?;
    let elapsed = t.elapsed().as_secs_f64();
    debug_assert_eq!(batch.len(), count);
    Ok(elapsed.max(f64::MIN_POSITIVE))
}

/// Benchmarks both direct samplers on a standard-form model for each sample
/// size. The equivalence check runs first and aborts on failure.
pub fn benchmark_model(model: &StandardFormModel, sizes: &[usize], workers: Option<usize>, seed: u64) -> Result<Vec<BenchmarkRow>> {
    if model.m() >= model.n() {
        return Err(Error::InvalidArgument(format!(
            "benchmark needs m < n, got m = {}, n = {}",
            model.m(),
            model.n()
        )));
    }
    if sizes.is_empty() || sizes.contains(&0) {
        return Err(Error::InvalidArgument("benchmark sizes must be positive".into()));
    }
    let opts = SamplerOptions {
        solver: Solver::Direct,
        workers,
        ..SamplerOptions::default()
    };
    let rng = RngStream::from_seed(seed);
    let rel = equivalence_error(model, opts, EQUIVALENCE_DRAWS, rng)?;
    if !(rel <= equivalence_tolerance(model.op.as_ref())) {
        return Err(Error::EquivalenceFailure { rel_error: rel });
    }
    sizes
        .iter()
        .map(|&k| {
            let t_normal = time_strategy(model, opts.with_strategy(Strategy::Normal), k, rng)?;
            let t_adjoint = time_strategy(model, opts.with_strategy(Strategy::Adjoint), k, rng)?;
            Ok(BenchmarkRow {
                k,
                t_normal,
                t_adjoint,
                ratio: 100.0 * t_adjoint / t_normal,
            })
        })
        .collect()
}

/// Runs the benchmark described by `cfg` and writes `benchmark.csv` and a
/// manifest. The standard-form operator is materialized before timing.
pub fn benchmark(cfg: &RunConfig) -> Result<Vec<BenchmarkRow>> {
    if cfg.benchmark_sizes.is_empty() {
        return Err(Error::Config("[benchmark] sizes must list at least one sample size".into()));
    }
    let model = match load_problem(cfg)? {
        Some(Problem::Linear(p)) => p.model,
        Some(Problem::Blocks(_)) | None => {
            return Err(Error::Config("benchmark needs a linear Gaussian problem".into()));
        }
    };
    let standard = ModelSampler::new(&model, SamplerOptions::default().with_strategy(Strategy::Adjoint))?
        .standard_model()
        .clone();
    let dense: OpRef = Arc::new(standard.op.to_dense());
    let dense_model = StandardFormModel::new(dense, standard.b.clone())?;
    let mut w = Writer::new(&cfg.output_dir)?;
    let rows = benchmark_model(&dense_model, &cfg.benchmark_sizes, cfg.sampling.workers, cfg.sampling.seed)?;
    for r in &rows {
        w.report.timings.push((format!("normal_k{}", r.k), r.t_normal));
        w.report.timings.push((format!("adjoint_k{}", r.k), r.t_adjoint));
    }
    w.write("benchmark.csv", &benchmark_csv(&rows))?;
    let mut t = Table::new();
    t.insert("m".into(), Value::Integer(dense_model.m() as i64));
    t.insert("n".into(), Value::Integer(dense_model.n() as i64));
    t.insert(
        "equivalence_tol".into(),
        Value::Float(equivalence_tolerance(dense_model.op.as_ref())),
    );
    let mut extra = Table::new();
    extra.insert("benchmark".into(), Value::Table(t));
    w.manifest(cfg, "bench", extra)?;
    Ok(rows)
}

use std::fmt::Write as _;
use std::path::Path;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::dense::{axpy, DenseMatrix};
use crate::sampler::direct::{posterior_direct_with_cap, PosteriorDirect, DEFAULT_ORACLE_CAP};
use crate::sampler::model::StandardFormModel;
use crate::sampler::rng::{draw_perturbations, RngStream};
use crate::sampler::rto::{AdjointSolver, DrawStats, NormalSolver, Solver};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum Strategy {
    /// Adjoint when `m < n`, normal otherwise.
    #[default]
    Auto,
    Normal,
    Adjoint,
    /// Dense posterior oracle; requires `n` below the oracle cap.
    Direct,
}

impl Strategy {
    pub fn name(self) -> &'static str {
        match self {
            Strategy::Auto => "auto",
            Strategy::Normal => "normal",
            Strategy::Adjoint => "adjoint",
            Strategy::Direct => "direct",
        }
    }

    pub fn parse(s: &str) -> Option<Self> {
        match s {
            "auto" => Some(Strategy::Auto),
            "normal" => Some(Strategy::Normal),
            "adjoint" => Some(Strategy::Adjoint),
            "direct" => Some(Strategy::Direct),
            _ => None,
        }
    }

    pub fn resolve(self, m: usize, n: usize) -> Self {
        match self {
            Strategy::Auto if m < n => Strategy::Adjoint,
            Strategy::Auto => Strategy::Normal,
            s => s,
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SamplerOptions {
    pub strategy: Strategy,
    pub solver: Solver,
    /// Regularization of the split system `A A^T + ridge I`.
    pub ridge: f64,
    /// Worker threads; `None` uses the global rayon pool.
    pub workers: Option<usize>,
    pub oracle_cap: usize,
}

impl Default for SamplerOptions {
    fn default() -> Self {
        Self {
            strategy: Strategy::Auto,
            solver: Solver::Direct,
            ridge: 0.0,
            workers: None,
            oracle_cap: DEFAULT_ORACLE_CAP,
        }
    }
}

impl SamplerOptions {
    pub fn with_strategy(mut self, strategy: Strategy) -> Self {
        self.strategy = strategy;
        self
    }

    pub fn with_solver(mut self, solver: Solver) -> Self {
        self.solver = solver;
        self
    }

    pub fn with_workers(mut self, workers: usize) -> Self {
        self.workers = Some(workers);
        self
    }

    pub fn with_ridge(mut self, ridge: f64) -> Self {
        self.ridge = ridge;
        self
    }
}

#[derive(Clone, Debug)]
enum Engine {
    Normal(NormalSolver),
    Adjoint(AdjointSolver),
    Direct(PosteriorDirect),
}

/// A standard-form model with its factorizations prepared for repeated draws.
///
/// Draw `j` of a batch uses stream `rng.substream(j)`, so results do not depend
/// on the number of workers.
#[derive(Clone, Debug)]
pub struct Sampler {
    model: StandardFormModel,
    strategy: Strategy,
    workers: Option<usize>,
    engine: Engine,
}

impl Sampler {
    pub fn new(model: StandardFormModel, opts: SamplerOptions) -> Result<Self> {
        let strategy = opts.strategy.resolve(model.m(), model.n());
        let engine = match strategy {
            Strategy::Normal => Engine::Normal(NormalSolver::new(model.op.clone(), opts.solver)?),
            Strategy::Adjoint => {
                Engine::Adjoint(AdjointSolver::new(model.op.clone(), opts.solver, opts.ridge)?)
            }
            Strategy::Direct => Engine::Direct(posterior_direct_with_cap(&model, opts.oracle_cap)?),
            Strategy::Auto => unreachable!("resolved above"),
        };
        if opts.workers == Some(0) {
            return Err(Error::InvalidArgument("workers must be at least 1".into()));
        }
        Ok(Self {
            model,
            strategy,
            workers: opts.workers,
            engine,
        })
    }

    pub fn model(&self) -> &StandardFormModel {
        &self.model
    }

    /// The concrete strategy after resolving `Auto`.
    pub fn strategy(&self) -> Strategy {
        self.strategy
    }

    /// Standard-form draw for given perturbations.
    pub fn draw_with(&self, eta: &[f64], nu: &[f64]) -> Result<(Vec<f64>, DrawStats)> {
        let b = &self.model.b;
        match &self.engine {
            Engine::Normal(s) => {
                let mut d = b.clone();
                axpy(1.0, eta, &mut d);
                s.solve(&d, nu)
            }
            Engine::Adjoint(s) => s.draw(b, eta, nu).map(|(d, st)| (d.x, st)),
            Engine::Direct(p) => Ok((p.draw_with(eta, nu)?, DrawStats::direct())),
        }
    }

    /// Standard-form draw using perturbations taken from `stream`.
    pub fn draw_stream(&self, stream: RngStream) -> Result<(Vec<f64>, DrawStats)> {
        let (nu, eta) = draw_perturbations(&mut stream.generator(), self.model.n(), self.model.m());
        self.draw_with(&eta, &nu)
    }

    /// `count` posterior draws in the original parameterization.
    pub fn sample(&self, count: usize, rng: RngStream) -> Result<SampleBatch> {
        let run = || -> Result<Vec<(Vec<f64>, DrawStats)>> {
            (0..count)
                .into_par_iter()
                .map(|j| {
                    let (x, st) = self.draw_stream(rng.substream(j as u64))?;
                    Ok((self.model.back_transform.apply(&x), st))
                })
                .collect()
        };
        let results = match self.workers {
            Some(w) => rayon::ThreadPoolBuilder::new()
                .num_threads(w)
                .build()
                .map_err(|e| Error::InvalidArgument(format!("cannot build worker pool: {e}")))?
                .install(run)?,
            None => run()?,
        };
        let dim = self.model.back_transform.output_dim(self.model.n());
        let mut draws = DenseMatrix::zeros(dim, count);
        let mut stats = Vec::with_capacity(count);
        for (j, (x, st)) in results.into_iter().enumerate() {
            draws.col_mut(j).copy_from_slice(&x);
            stats.push(st);
        }
        Ok(SampleBatch {
            draws,
            seed: rng.seed,
            stream_id: rng.stream_id,
            strategy: self.strategy,
            stats,
        })
    }
}

/// Draws `count` samples from the posterior of `model`.
pub fn sample(
    model: &StandardFormModel,
    count: usize,
    opts: SamplerOptions,
    rng: RngStream,
) -> Result<SampleBatch> {
    Sampler::new(model.clone(), opts)?.sample(count, rng)
}

/// Posterior draws stored column-wise: column `j` is draw `j`.
#[derive(Clone, Debug)]
pub struct SampleBatch {
    pub draws: DenseMatrix,
    pub seed: u64,
    pub stream_id: u64,
    pub strategy: Strategy,
    pub stats: Vec<DrawStats>,
}

impl SampleBatch {
    pub fn len(&self) -> usize {
        self.draws.cols()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn dim(&self) -> usize {
        self.draws.rows()
    }

    pub fn draw(&self, j: usize) -> &[f64] {
        self.draws.col(j)
    }

    pub fn mean(&self) -> Vec<f64> {
        let mut mean = vec![0.0; self.dim()];
        for j in 0..self.len() {
            axpy(1.0, self.draw(j), &mut mean);
        }
        let k = self.len().max(1) as f64;
        mean.iter_mut().for_each(|v| *v /= k);
        mean
    }

    /// Unbiased sample covariance.
    pub fn covariance(&self) -> DenseMatrix {
        let n = self.dim();
        let k = self.len();
        let mean = self.mean();
        let mut centered = self.draws.clone();
        for j in 0..k {
            let c = centered.col_mut(j);
            c.iter_mut().zip(&mean).for_each(|(x, m)| *x -= m);
        }
        let mut cov = centered.outer_gram();
        if k > 1 {
            cov.scale(1.0 / (k - 1) as f64);
        } else {
            cov = DenseMatrix::zeros(n, n);
        }
        cov
    }

    /// One draw per row, one coordinate per column.
    pub fn to_csv(&self) -> String {
        let mut s = String::new();
        let header: Vec<String> = (0..self.dim()).map(|i| format!("x{i}")).collect();
        s.push_str(&header.join(","));
        s.push('\n');
        for j in 0..self.len() {
            push_csv_row(&mut s, self.draw(j));
        }
        s
    }

    pub fn stats_csv(&self) -> String {
        let mut s = String::from("draw,strategy,steps,residual\n");
        for (j, st) in self.stats.iter().enumerate() {
            let _ = writeln!(
                s,
                "{j},{},{},{}",
                self.strategy.name(),
                st.steps,
                fmt_f64(st.residual)
            );
        }
        s
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_csv()).map_err(|e| Error::io(path, e))
    }
}

/// 17 significant digits, enough to round-trip any `f64`.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn push_csv_row(s: &mut String, row: &[f64]) {
    for (i, v) in row.iter().enumerate() {
        if i > 0 {
            s.push(',');
        }
        s.push_str(&fmt_f64(*v));
    }
    s.push('\n');
}

use std::fmt::Write as _;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Instant;

use toml::{Table, Value};

use crate::cli::config::{HierConfig, HierMethod, PcnConfig, PriorSpec, ProblemSpec, RunConfig};
use crate::error::{Error, Result};
use crate::hier::{gibbs_sample, ias_map, BlockModel, GibbsOptions, IasOptions};
use crate::linalg::dense::DenseMatrix;
use crate::linalg::io::{read_matrix, read_vector};
use crate::linalg::operator::{IdentityOperator, OpRef};
use crate::mcmc::{pcn_chain, PcnOptions, ProposalMode, ToyNonlinear};
use crate::problems::{preset, Problem};
use crate::sampler::{fmt_f64, push_csv_row, RngStream, SampleBatch, SamplerOptions};
use crate::whitening::{GeneralGaussianModel, ModelSampler, Prior};

/// Empirical quantile with linear interpolation between order statistics.
/// `sorted` must be ascending and non-empty.
pub fn quantile(sorted: &[f64], p: f64) -> f64 {
    let h = (sorted.len() - 1) as f64 * p.clamp(0.0, 1.0);
    let lo = h.floor() as usize;
    let hi = (lo + 1).min(sorted.len() - 1);
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

/// `coordinate,mean,std,q25,q50,q75` for draws stored as columns.
pub fn summary_csv(draws: &DenseMatrix) -> String {
    let (n, k) = (draws.rows(), draws.cols());
    let mut s = String::from("coordinate,mean,std,q25,q50,q75\n");
    let mut row = vec![0.0; k];
    for i in 0..n {
        for (j, r) in row.iter_mut().enumerate() {
            *r = draws.get(i, j);
        }
        let mean = row.iter().sum::<f64>() / k as f64;
        let var = if k > 1 {
            row.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>() / (k - 1) as f64
        } else {
            0.0
        };
        row.sort_by(f64::total_cmp);
        let _ = write!(s, "{i},");
        push_csv_row(
            &mut s,
            &[mean, var.sqrt(), quantile(&row, 0.25), quantile(&row, 0.5), quantile(&row, 0.75)],
        );
    }
    s
}

/// Files written by a run and wall-clock timings.
#[derive(Clone, Debug, Default)]
pub struct RunReport {
    pub output_dir: PathBuf,
    pub files: Vec<PathBuf>,
    pub timings: Vec<(String, f64)>,
    pub summary: Vec<String>,
}

pub(crate) struct Writer {
    dir: PathBuf,
    pub(crate) report: RunReport,
}

impl Writer {
    pub(crate) fn new(dir: &Path) -> Result<Self> {
        std::fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
        Ok(Self {
            dir: dir.to_path_buf(),
            report: RunReport {
                output_dir: dir.to_path_buf(),
                ..RunReport::default()
            },
        })
    }

    pub(crate) fn write(&mut self, name: &str, contents: &str) -> Result<()> {
        let path = self.dir.join(name);
        std::fs::write(&path, contents).map_err(|e| Error::io(&path, e))?;
        self.report.files.push(path);
        Ok(())
    }

    pub(crate) fn time<T>(&mut self, label: &str, f: impl FnOnce() -> Result<T>) -> Result<T> {
        let t = Instant::now();
        let out = f()?;
        self.report.timings.push((label.to_string(), t.elapsed().as_secs_f64()));
        Ok(out)
    }

    pub(crate) fn note(&mut self, line: String) {
        self.report.summary.push(line);
    }

    pub(crate) fn manifest(&mut self, cfg: &RunConfig, command: &str, extra: Table) -> Result<()> {
        let mut run = Table::new();
        run.insert("command".into(), Value::String(command.into()));
        run.insert("version".into(), Value::String(env!("CARGO_PKG_VERSION").into()));
        run.insert("config_sha256".into(), Value::String(cfg.config_hash.clone()));
        run.insert("seed".into(), Value::Integer(cfg.sampling.seed as i64));
        run.insert("samples".into(), Value::Integer(cfg.sampling.samples as i64));
        run.insert(
            "strategy".into(),
            Value::String(cfg.sampling.strategy.name().into()),
        );
        run.insert(
            "solver".into(),
            Value::String(match cfg.sampling.solver {
                crate::sampler::Solver::Direct => "direct".into(),
                crate::sampler::Solver::Krylov(k) => format!("krylov(steps={}, tol={:e})", k.max_steps, k.tol),
            }),
        );
        run.insert("ridge".into(), Value::Float(cfg.sampling.ridge));
        if let Some(w) = cfg.sampling.workers {
            run.insert("workers".into(), Value::Integer(w as i64));
        }
        if let ProblemSpec::Preset { name, data_seed } = &cfg.problem {
            run.insert("preset".into(), Value::String(name.clone()));
            run.insert("data_seed".into(), Value::Integer(*data_seed as i64));
        }
        let mut timings = Table::new();
        for (k, v) in &self.report.timings {
            timings.insert(format!("{k}_seconds"), Value::Float(*v));
        }
        let mut root = Table::new();
        root.insert("run".into(), Value::Table(run));
        for (k, v) in extra {
            root.insert(k, v);
        }
        root.insert("timings".into(), Value::Table(timings));
        let text = toml::to_string(&root).map_err(|e| Error::Config(e.to_string()))?;
        self.write("manifest.toml", &text)
    }
}

pub(crate) fn sampler_options(cfg: &RunConfig) -> SamplerOptions {
    SamplerOptions {
        strategy: cfg.sampling.strategy,
        solver: cfg.sampling.solver,
        ridge: cfg.sampling.ridge,
        workers: cfg.sampling.workers,
        ..SamplerOptions::default()
    }
}

/// Gaussian model described by the `[problem]` section, if it is linear.
pub(crate) fn load_problem(cfg: &RunConfig) -> Result<Option<Problem>> {
    match &cfg.problem {
        ProblemSpec::None => Ok(None),
        ProblemSpec::Preset { name, data_seed } => preset(name, *data_seed).map(Some),
        ProblemSpec::Files {
            operator,
            data,
            prior,
            noise_factor,
            prior_mean,
        } => {
            let op = read_matrix(operator)?.into_operator();
            let b = read_vector(data)?;
            let n = op.cols();
            let prior = match prior {
                PriorSpec::Identity => {
                    let id: OpRef = Arc::new(IdentityOperator::new(n));
                    Prior::PrecisionFactor {
                        factor: id.clone(),
                        inverse: Some(id),
                    }
                }
                PriorSpec::PrecisionFactor(p) => Prior::PrecisionFactor {
                    factor: read_matrix(p)?.into_operator(),
                    inverse: None,
                },
                PriorSpec::Transform(p) => Prior::Transform(read_matrix(p)?.into_operator()),
            };
            let mut model = GeneralGaussianModel::new(op, b, prior)?;
            if let Some(s) = noise_factor {
                model = model.with_noise_factor(read_matrix(s)?.into_operator())?;
            }
            if let Some(x0) = prior_mean {
                model = model.with_mean(read_vector(x0)?)?;
            }
            Ok(Some(Problem::Linear(crate::problems::LinearProblem {
                name: "files".into(),
                model,
                x_true: Vec::new(),
                noise_sigma: 0.0,
                grid: None,
            })))
        }
    }
}

/// Executes a configuration and writes its artifacts.
pub fn run(cfg: &RunConfig) -> Result<RunReport> {
    let mut w = Writer::new(&cfg.output_dir)?;
    let problem = w.time("setup", || load_problem(cfg))?;
    let mut extra = Table::new();
    match problem {
        Some(Problem::Linear(p)) => run_linear(cfg, &p.model, &mut w, &mut extra)?,
        Some(Problem::Blocks(b)) => {
            let h = cfg.hierarchical.unwrap_or(HierConfig {
                method: HierMethod::Both,
                samples: cfg.sampling.samples,
                burn_in: 0,
                thin: 1,
                tol: 1e-6,
                max_iter: 200,
                beta: None,
                vartheta: None,
            });
            let mut model = b.model.clone();
            if h.beta.is_some() || h.vartheta.is_some() {
                model = BlockModel::new(
                    model.blocks().to_vec(),
                    model.b.clone(),
                    model.sigma,
                    h.beta.unwrap_or(model.beta),
                    h.vartheta.map_or(model.vartheta.clone(), |v| vec![v; model.n_blocks()]),
                )?;
            }
            let mut t = Table::new();
            t.insert("active_block".into(), Value::Integer(b.active as i64));
            extra.insert("problem".into(), Value::Table(t));
            run_hier(cfg, &h, &model, &mut w)?;
        }
        None => {}
    }
    if let Some(p) = &cfg.pcn {
        run_pcn(cfg, p, &mut w)?;
    }
    w.manifest(cfg, "run", extra)?;
    Ok(w.report)
}

fn run_linear(cfg: &RunConfig, model: &GeneralGaussianModel, w: &mut Writer, extra: &mut Table) -> Result<()> {
    let sampler = w.time("factorization", || ModelSampler::new(model, sampler_options(cfg)))?;
    let batch: SampleBatch =
        w.time("sampling", || sampler.sample(cfg.sampling.samples, RngStream::from_seed(cfg.sampling.seed)))?;
    let sm = sampler.standard_model();
    w.note(format!(
        "{} draws, m = {}, n = {}, strategy {}",
        batch.len(),
        sm.m(),
        batch.dim(),
        batch.strategy.name()
    ));
    w.write("samples.csv", &batch.to_csv())?;
    w.write("summary.csv", &summary_csv(&batch.draws))?;
    w.write("stats.csv", &batch.stats_csv())?;
    let mut t = Table::new();
    t.insert("m".into(), Value::Integer(sm.m() as i64));
    t.insert("n".into(), Value::Integer(batch.dim() as i64));
    t.insert("resolved_strategy".into(), Value::String(batch.strategy.name().into()));
    extra.insert("problem".into(), Value::Table(t));
    Ok(())
}

fn run_hier(cfg: &RunConfig, h: &HierConfig, model: &BlockModel, w: &mut Writer) -> Result<()> {
    let opts = sampler_options(cfg);
    if matches!(h.method, HierMethod::Ias | HierMethod::Both) {
        let ias = IasOptions {
            tol: h.tol,
            max_iter: h.max_iter,
            sampler: opts,
        };
        let res = w.time("ias", || ias_map(model, &ias))?;
        let mut s = String::from("block,theta\n");
        for (l, t) in res.state.theta.iter().enumerate() {
            let _ = writeln!(s, "{l},{}", fmt_f64(*t));
        }
        w.write("map_theta.csv", &s)?;
        let mut s = String::from("coordinate,x\n");
        for (i, x) in res.state.x.iter().enumerate() {
            let _ = writeln!(s, "{i},{}", fmt_f64(*x));
        }
        w.write("map_x.csv", &s)?;
        w.note(format!(
            "IAS {} after {} iterations, largest variance in block {}",
            if res.converged { "converged" } else { "stopped" },
            res.iterations,
            crate::hier::argmax(&res.state.theta)
        ));
    }
    if matches!(h.method, HierMethod::Gibbs | HierMethod::Both) {
        let g = GibbsOptions {
            samples: h.samples,
            burn_in: h.burn_in,
            thin: h.thin,
            sampler: SamplerOptions { workers: None, ..opts },
        };
        let chain = w.time("gibbs", || gibbs_sample(model, &g, RngStream::from_seed(cfg.sampling.seed)))?;
        w.write("gibbs_theta.csv", &chain.theta_csv())?;
        w.write("gibbs_x.csv", &chain.x_csv())?;
        let mut xs = DenseMatrix::zeros(model.n(), chain.x.len());
        for (j, (_, x)) in chain.x.iter().enumerate() {
            xs.col_mut(j).copy_from_slice(x);
        }
        w.write("summary.csv", &summary_csv(&xs))?;
        let mut th = DenseMatrix::zeros(model.n_blocks(), chain.len());
        for (j, t) in chain.theta.iter().enumerate() {
            th.col_mut(j).copy_from_slice(t);
        }
        w.write("theta_summary.csv", &summary_csv(&th))?;
        w.note(format!(
            "Gibbs: {} retained iterations, largest posterior mean variance in block {}",
            chain.len(),
            crate::hier::argmax(&chain.theta_mean())
        ));
    }
    Ok(())
}

fn run_pcn(cfg: &RunConfig, p: &PcnConfig, w: &mut Writer) -> Result<()> {
    let seed = RngStream::from_seed(cfg.sampling.seed);
    let toy = Arc::new(ToyNonlinear::random(p.m, p.n, p.c, RngStream::new(cfg.sampling.seed, 1 << 30))?);
    let target = w.time("pcn_setup", || toy.target(p.h, sampler_options(cfg)))?;
    let opts = PcnOptions {
        steps: p.steps,
        mode: if p.stream { ProposalMode::Stream } else { ProposalMode::Batch },
        thin: p.thin,
    };
    let chain = w.time("pcn", || pcn_chain(&target, None, &opts, seed))?;
    w.write("pcn_trace.csv", &chain.trace_csv())?;
    if p.thin > 0 {
        w.write("pcn_states.csv", &chain.states_csv())?;
        w.write("pcn_summary.csv", &summary_csv(&chain.state_matrix()))?;
    }
    w.note(format!("pCN: {} steps, acceptance rate {:.1}%", chain.len(), 100.0 * chain.acceptance_rate()));
    Ok(())
}

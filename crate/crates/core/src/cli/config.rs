use std::path::{Path, PathBuf};

use sha2::{Digest, Sha256};
use toml::{Table, Value};

use crate::bidiag::KrylovConfig;
use crate::error::{Error, Result};
use crate::problems::PRESETS;
use crate::sampler::{Solver, Strategy};
use crate::mcmc::TOY_PERTURBATION;

pub const ENV_OUTPUT_DIR: &str = "SUBSPACE_RTO_OUTPUT_DIR";
pub const ENV_WORKERS: &str = "SUBSPACE_RTO_WORKERS";

/// One documented configuration key.
#[derive(Clone, Copy, Debug)]
pub struct KeySpec {
    pub name: &'static str,
    pub kind: &'static str,
    pub default: &'static str,
    pub help: &'static str,
}

const fn key(name: &'static str, kind: &'static str, default: &'static str, help: &'static str) -> KeySpec {
    KeySpec {
        name,
        kind,
        default,
        help,
    }
}

/// Every accepted `[section]` and its keys.
pub const SCHEMA: &[(&str, &[KeySpec])] = &[
    (
        "problem",
        &[
            key("preset", "string", "-", "named problem, see the preset list"),
            key("data_seed", "integer", "sampling.seed", "seed for synthetic data and random operators of presets"),
            key("operator", "path", "-", "forward operator A (text or .bin matrix file)"),
            key("data", "path", "-", "data vector b (one value per line)"),
            key("prior_factor", "path", "identity", "square prior precision factor L with inverse covariance LᵀL"),
            key("transform_prior", "path", "-", "rectangular transform prior L (p × n, p ≥ n), Lx ~ N(0, I)"),
            key("noise_factor", "path", "identity", "noise precision factor S with inverse covariance SᵀS"),
            key("prior_mean", "path", "zero", "prior mean x₀"),
        ],
    ),
    (
        "sampling",
        &[
            key("strategy", "auto|normal|adjoint|direct", "auto", "auto uses adjoint when m < n"),
            key("solver", "direct|krylov", "direct", "dense factorization or matrix-free Krylov"),
            key("samples", "integer ≥ 1", "1000", "number of posterior draws K"),
            key("seed", "integer", "0", "sampling seed"),
            key("workers", "integer ≥ 1", "all cores", "worker threads (env SUBSPACE_RTO_WORKERS)"),
            key("ridge", "float ≥ 0", "0", "shift added to AAᵀ in the null-space split"),
            key("krylov_steps", "integer ≥ 1", "30", "maximum Lanczos steps per solve"),
            key("krylov_tol", "float in (0, 1)", "1e-8", "relative projected residual tolerance"),
        ],
    ),
    (
        "output",
        &[key("dir", "path", "output", "output directory (env SUBSPACE_RTO_OUTPUT_DIR)")],
    ),
    (
        "benchmark",
        &[key("sizes", "list of integers", "[100, 1000, 10000]", "sample sizes timed by `bench`")],
    ),
    (
        "hierarchical",
        &[
            key("method", "ias|gibbs|both", "both", "MAP estimate, block-Gibbs chain, or both"),
            key("samples", "integer ≥ 1", "sampling.samples", "retained Gibbs iterations"),
            key("burn_in", "integer ≥ 0", "0", "discarded Gibbs iterations"),
            key("thin", "integer ≥ 1", "1", "store x every `thin` retained iterations"),
            key("tol", "float > 0", "1e-6", "IAS relative change tolerance"),
            key("max_iter", "integer ≥ 1", "200", "IAS iteration limit"),
            key("beta", "float > 0", "preset", "inverse-gamma shape"),
            key("vartheta", "float > 0", "preset", "inverse-gamma scale, same for all blocks"),
        ],
    ),
    (
        "pcn",
        &[
            key("h", "float in (0, 1)", "0.05", "pCN step size"),
            key("steps", "integer ≥ 1", "sampling.samples", "chain length"),
            key("mode", "batch|stream", "batch", "pre-generate or stream proposal draws"),
            key("thin", "integer ≥ 0", "1", "keep every `thin`-th state, 0 keeps none"),
            key("m", "integer ≥ 1", "20", "toy model data dimension"),
            key("n", "integer ≥ 1", "50", "toy model parameter dimension"),
            key("c", "float", "3.0", "strength of the quadratic forward perturbation"),
        ],
    ),
];

#[derive(Clone, Debug, PartialEq)]
pub enum PriorSpec {
    Identity,
    PrecisionFactor(PathBuf),
    Transform(PathBuf),
}

#[derive(Clone, Debug, PartialEq)]
pub enum ProblemSpec {
    Preset {
        name: String,
        data_seed: u64,
    },
    Files {
        operator: PathBuf,
        data: PathBuf,
        prior: PriorSpec,
        noise_factor: Option<PathBuf>,
        prior_mean: Option<PathBuf>,
    },
    /// No `[problem]` section; only valid together with `[pcn]`.
    None,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SamplingConfig {
    pub strategy: Strategy,
    pub solver: Solver,
    pub samples: usize,
    pub seed: u64,
    pub workers: Option<usize>,
    pub ridge: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum HierMethod {
    Ias,
    Gibbs,
    Both,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct HierConfig {
    pub method: HierMethod,
    pub samples: usize,
    pub burn_in: usize,
    pub thin: usize,
    pub tol: f64,
    pub max_iter: usize,
    pub beta: Option<f64>,
    pub vartheta: Option<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct PcnConfig {
    pub h: f64,
    pub steps: usize,
    pub stream: bool,
    pub thin: usize,
    pub m: usize,
    pub n: usize,
    pub c: f64,
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunConfig {
    pub problem: ProblemSpec,
    pub sampling: SamplingConfig,
    pub output_dir: PathBuf,
    pub benchmark_sizes: Vec<usize>,
    pub hierarchical: Option<HierConfig>,
    pub pcn: Option<PcnConfig>,
    /// SHA-256 of the configuration text, hex encoded.
    pub config_hash: String,
}

/// Nearest valid name by edit distance.
pub fn nearest<'a>(name: &str, candidates: impl IntoIterator<Item = &'a str>) -> Option<&'a str> {
    candidates
        .into_iter()
        .map(|c| (strsim::levenshtein(name, c), c))
        .min()
        .map(|(_, c)| c)
}

struct Section<'a> {
    name: &'static str,
    table: Option<&'a Table>,
}

impl<'a> Section<'a> {
    fn get(&self, key: &str) -> Option<&'a Value> {
        self.table.and_then(|t| t.get(key))
    }

    fn err(&self, key: &str, what: &str) -> Error {
        Error::Config(format!("`{}.{}` {what}", self.name, key))
    }

    fn str(&self, key: &str) -> Result<Option<&'a str>> {
        match self.get(key) {
            None => Ok(None),
            Some(Value::String(s)) => Ok(Some(s)),
            Some(_) => Err(self.err(key, "must be a string")),
        }
    }

    fn uint(&self, key: &str) -> Result<Option<u64>> {
        match self.get(key) {
            None => Ok(None),
            Some(Value::Integer(i)) if *i >= 0 => Ok(Some(*i as u64)),
            Some(_) => Err(self.err(key, "must be a non-negative integer")),
        }
    }

    fn count(&self, key: &str) -> Result<Option<usize>> {
        Ok(self.uint(key)?.map(|v| v as usize))
    }

    fn float(&self, key: &str) -> Result<Option<f64>> {
        match self.get(key) {
            None => Ok(None),
            Some(Value::Float(f)) => Ok(Some(*f)),
            Some(Value::Integer(i)) => Ok(Some(*i as f64)),
            Some(_) => Err(self.err(key, "must be a number")),
        }
    }

    fn path(&self, key: &str, base: &Path) -> Result<Option<PathBuf>> {
        Ok(self.str(key)?.map(|s| {
            let p = PathBuf::from(s);
            if p.is_absolute() {
                p
            } else {
                base.join(p)
            }
        }))
    }
}

fn check_keys(table: &Table) -> Result<()> {
    for (section, value) in table {
        let Some((_, keys)) = SCHEMA.iter().find(|(s, _)| s == section) else {
            let hint = nearest(section, SCHEMA.iter().map(|(s, _)| *s))
                .map(|s| format!("; did you mean `[{s}]`?"))
                .unwrap_or_default();
            return Err(Error::Config(format!("unknown section `[{section}]`{hint}")));
        };
        let Value::Table(inner) = value else {
            return Err(Error::Config(format!("`{section}` must be a section")));
        };
        for k in inner.keys() {
            if !keys.iter().any(|spec| spec.name == k) {
                let hint = nearest(k, keys.iter().map(|spec| spec.name))
                    .map(|s| format!("; did you mean `{section}.{s}`?"))
                    .unwrap_or_default();
                return Err(Error::Config(format!("unknown key `{section}.{k}`{hint}")));
            }
        }
    }
    Ok(())
}

impl RunConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let base = path.parent().unwrap_or(Path::new("."));
        Self::parse(&text, base)
    }

    /// Parses configuration text; relative paths are resolved against `base`.
    /// Environment overrides are not applied here.
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let table: Table = text.parse().map_err(|e: toml::de::Error| Error::Config(e.to_string()))?;
        check_keys(&table)?;
        let section = |name: &'static str| Section {
            name,
            table: table.get(name).and_then(Value::as_table),
        };

        let s = section("sampling");
        let strategy = match s.str("strategy")? {
            None => Strategy::Auto,
            Some(v) => Strategy::parse(v).ok_or_else(|| {
                s.err("strategy", &format!("must be one of auto, normal, adjoint, direct (got '{v}')"))
            })?,
        };
        let mut krylov = KrylovConfig::default();
        if let Some(k) = s.count("krylov_steps")? {
            krylov.max_steps = k;
        }
        if let Some(t) = s.float("krylov_tol")? {
            krylov.tol = t;
        }
        let solver = match s.str("solver")? {
            None | Some("direct") => Solver::Direct,
            Some("krylov") => {
                krylov.validate().map_err(|e| Error::Config(e.to_string()))?;
                Solver::Krylov(krylov)
            }
            Some(v) => return Err(s.err("solver", &format!("must be direct or krylov (got '{v}')"))),
        };
        let samples = s.count("samples")?.unwrap_or(1000);
        if samples == 0 {
            return Err(s.err("samples", "must be at least 1"));
        }
        let seed = s.uint("seed")?.unwrap_or(0);
        let workers = s.count("workers")?;
        if workers == Some(0) {
            return Err(s.err("workers", "must be at least 1"));
        }
        let ridge = s.float("ridge")?.unwrap_or(0.0);
        if !(ridge >= 0.0) {
            return Err(s.err("ridge", "must be >= 0"));
        }
        let sampling = SamplingConfig {
            strategy,
            solver,
            samples,
            seed,
            workers,
            ridge,
        };

        let p = section("problem");
        let problem = if p.table.is_none() {
            ProblemSpec::None
        } else if let Some(name) = p.str("preset")? {
            if !PRESETS.contains(&name) {
                let hint = nearest(name, PRESETS).map(|s| format!("; did you mean '{s}'?")).unwrap_or_default();
                return Err(p.err("preset", &format!("'{name}' is not a known preset{hint}")));
            }
            for k in ["operator", "data", "prior_factor", "transform_prior", "noise_factor", "prior_mean"] {
                if p.get(k).is_some() {
                    return Err(p.err(k, "cannot be combined with `problem.preset`"));
                }
            }
            ProblemSpec::Preset {
                name: name.to_string(),
                data_seed: p.uint("data_seed")?.unwrap_or(seed),
            }
        } else {
            let operator = p.path("operator", base)?.ok_or_else(|| p.err("operator", "is required without a preset"))?;
            let data = p.path("data", base)?.ok_or_else(|| p.err("data", "is required without a preset"))?;
            let prior = match (p.path("prior_factor", base)?, p.path("transform_prior", base)?) {
                (Some(_), Some(_)) => {
                    return Err(p.err("transform_prior", "cannot be combined with `problem.prior_factor`"))
                }
                (Some(l), None) => PriorSpec::PrecisionFactor(l),
                (None, Some(l)) => PriorSpec::Transform(l),
                (None, None) => PriorSpec::Identity,
            };
            ProblemSpec::Files {
                operator,
                data,
                prior,
                noise_factor: p.path("noise_factor", base)?,
                prior_mean: p.path("prior_mean", base)?,
            }
        };

        let o = section("output");
        let output_dir = o.path("dir", base)?.unwrap_or_else(|| base.join("output"));

        let b = section("benchmark");
        let benchmark_sizes = match b.get("sizes") {
            None => vec![100, 1000, 10000],
            Some(Value::Array(items)) => items
                .iter()
                .map(|v| match v {
                    Value::Integer(i) if *i >= 1 => Ok(*i as usize),
                    _ => Err(b.err("sizes", "must be a list of positive integers")),
                })
                .collect::<Result<_>>()?,
            Some(_) => return Err(b.err("sizes", "must be a list of positive integers")),
        };

        let h = section("hierarchical");
        let hierarchical = match h.table {
            None => None,
            Some(_) => {
                let method = match h.str("method")? {
                    None | Some("both") => HierMethod::Both,
                    Some("ias") => HierMethod::Ias,
                    Some("gibbs") => HierMethod::Gibbs,
                    Some(v) => return Err(h.err("method", &format!("must be ias, gibbs or both (got '{v}')"))),
                };
                let cfg = HierConfig {
                    method,
                    samples: h.count("samples")?.unwrap_or(samples),
                    burn_in: h.count("burn_in")?.unwrap_or(0),
                    thin: h.count("thin")?.unwrap_or(1),
                    tol: h.float("tol")?.unwrap_or(1e-6),
                    max_iter: h.count("max_iter")?.unwrap_or(200),
                    beta: h.float("beta")?,
                    vartheta: h.float("vartheta")?,
                };
                if cfg.samples == 0 || cfg.thin == 0 || cfg.max_iter == 0 || !(cfg.tol > 0.0) {
                    return Err(Error::Config(
                        "`hierarchical` needs samples, thin, max_iter >= 1 and tol > 0".into(),
                    ));
                }
                Some(cfg)
            }
        };

        let c = section("pcn");
        let pcn = match c.table {
            None => None,
            Some(_) => {
                let stream = match c.str("mode")? {
                    None | Some("batch") => false,
                    Some("stream") => true,
                    Some(v) => return Err(c.err("mode", &format!("must be batch or stream (got '{v}')"))),
                };
                let cfg = PcnConfig {
                    h: c.float("h")?.unwrap_or(0.05),
                    steps: c.count("steps")?.unwrap_or(samples),
                    stream,
                    thin: c.count("thin")?.unwrap_or(1),
                    m: c.count("m")?.unwrap_or(20),
                    n: c.count("n")?.unwrap_or(50),
                    c: c.float("c")?.unwrap_or(TOY_PERTURBATION),
                };
                if !(cfg.h > 0.0 && cfg.h < 1.0) {
                    return Err(c.err("h", "must lie in (0, 1)"));
                }
                if cfg.steps == 0 || cfg.m == 0 || cfg.n == 0 {
                    return Err(Error::Config("`pcn` needs steps, m, n >= 1".into()));
                }
                Some(cfg)
            }
        };

        if problem == ProblemSpec::None && pcn.is_none() {
            return Err(Error::Config("missing `[problem]` section".into()));
        }

        Ok(Self {
            problem,
            sampling,
            output_dir,
            benchmark_sizes,
            hierarchical,
            pcn,
            config_hash: hex(&Sha256::digest(text.as_bytes())),
        })
    }

    /// Applies `SUBSPACE_RTO_OUTPUT_DIR` and `SUBSPACE_RTO_WORKERS`.
    pub fn apply_env(&mut self) -> Result<()> {
        self.apply_overrides(
            std::env::var(ENV_OUTPUT_DIR).ok().as_deref(),
            std::env::var(ENV_WORKERS).ok().as_deref(),
        )
    }

    pub fn apply_overrides(&mut self, output_dir: Option<&str>, workers: Option<&str>) -> Result<()> {
        if let Some(d) = output_dir.filter(|d| !d.is_empty()) {
            self.output_dir = PathBuf::from(d);
        }
        if let Some(w) = workers.filter(|w| !w.is_empty()) {
            let n: usize = w
                .parse()
                .map_err(|_| Error::Config(format!("{ENV_WORKERS} must be a positive integer, got '{w}'")))?;
            if n == 0 {
                return Err(Error::Config(format!("{ENV_WORKERS} must be at least 1")));
            }
            self.sampling.workers = Some(n);
        }
        Ok(())
    }
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

/// Human-readable description of the configuration format.
pub fn config_schema() -> String {
    let mut s = String::from("Configuration file (TOML). Sections and keys:\n");
    for (section, keys) in SCHEMA {
        s.push_str(&format!("\n[{section}]\n"));
        for k in *keys {
            s.push_str(&format!("  {:<16} {:<22} default {:<18} {}\n", k.name, k.kind, k.default, k.help));
        }
    }
    s.push_str("\nPresets:\n");
    for p in PRESETS {
        s.push_str(&format!("  {p}\n"));
    }
    s.push_str(&format!(
        "\nEnvironment:\n  {ENV_OUTPUT_DIR:<24} overrides output.dir\n  {ENV_WORKERS:<24} overrides sampling.workers\n"
    ));
    s.push_str(
        "\nCommands:\n  run <config>    sample and write samples.csv, summary.csv, stats.csv, manifest.toml\n  bench <config>  time normal vs adjoint direct samplers over benchmark.sizes\n  schema          print this text\n",
    );
    s
}

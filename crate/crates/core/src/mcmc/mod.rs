//! Preconditioned Crank-Nicolson sampling of `π(γ) ∝ N(γ; γ̄, C) exp(-Φ(γ))`.
//!
//! The proposal `γ* = γ̄ + √(1-h²)(γ - γ̄) + h w` with `w ~ N(0, C)` leaves the
//! Gaussian reference invariant, so the acceptance ratio only involves `Φ`.
//! Proposal draws `w` come from the linear Gaussian sampler applied to the
//! reference model with zero data.

use std::fmt::Write as _;
use std::path::Path;
use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::linalg::dense::DenseMatrix;
use crate::linalg::operator::{check_input, OpRef};
use crate::sampler::{fmt_f64, push_csv_row, RngStream, SamplerOptions};
use crate::whitening::{GeneralGaussianModel, ModelSampler, Prior};

/// Gaussian reference `N(γ̄, C)` with `C = (AᵀS ᵀS A + LᵀL)⁻¹`.
#[derive(Clone, Debug)]
pub struct GaussianReference {
    pub mean: Vec<f64>,
    proposal: ModelSampler,
}

impl GaussianReference {
    /// Reference whose mean is the posterior mean of `model` and whose
    /// covariance is its posterior covariance.
    pub fn from_model(model: &GeneralGaussianModel, opts: SamplerOptions) -> Result<Self> {
        let mean = ModelSampler::new(model, opts)?.mean()?;
        Self::with_mean(model, mean, opts)
    }

    /// Reference with the covariance of `model`'s posterior and the given mean.
    pub fn with_mean(model: &GeneralGaussianModel, mean: Vec<f64>, opts: SamplerOptions) -> Result<Self> {
        check_input(&mean, model.op.cols(), "reference mean")?;
        let mut zero = model.clone();
        zero.b = vec![0.0; model.op.rows()];
        zero.x0 = None;
        Ok(Self {
            mean,
            proposal: ModelSampler::new(&zero, opts)?,
        })
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// `w ~ N(0, C)` from the given stream.
    pub fn draw(&self, stream: RngStream) -> Result<Vec<f64>> {
        self.proposal.draw_stream(stream)
    }
}

/// One proposal draw `w ~ N(0, C)`.
pub fn pcn_proposal_draw(reference: &GaussianReference, rng: RngStream) -> Result<Vec<f64>> {
    reference.draw(rng)
}

#[derive(Clone, Debug, PartialEq)]
pub struct PcnState {
    pub gamma: Vec<f64>,
    pub phi: f64,
}

/// One pCN step from `current` with proposal noise `w`. A uniform variate is
/// drawn on every call, whether or not it is needed.
pub fn pcn_step<R: Rng + ?Sized>(
    current: &PcnState,
    gbar: &[f64],
    w: &[f64],
    h: f64,
    phi: &dyn Fn(&[f64]) -> f64,
    rng: &mut R,
) -> Result<(PcnState, bool)> {
    check_step(h)?;
    check_input(gbar, current.gamma.len(), "reference mean")?;
    check_input(w, current.gamma.len(), "proposal draw")?;
    let c = (1.0 - h * h).sqrt();
    let proposal: Vec<f64> = current
        .gamma
        .iter()
        .zip(gbar)
        .zip(w)
        .map(|((g, m), wi)| m + c * (g - m) + h * wi)
        .collect();
    let phi_new = phi(&proposal);
    let u: f64 = rng.random();
    if !phi_new.is_finite() {
        log::warn!("potential is not finite at the proposed state, rejecting");
        return Ok((current.clone(), false));
    }
    let alpha = if current.phi.is_finite() {
        (-phi_new + current.phi).exp()
    } else {
        1.0
    };
    if u < alpha {
        Ok((
            PcnState {
                gamma: proposal,
                phi: phi_new,
            },
            true,
        ))
    } else {
        Ok((current.clone(), false))
    }
}

fn check_step(h: f64) -> Result<()> {
    if !(h > 0.0 && h < 1.0) {
        return Err(Error::InvalidArgument(format!("pCN step must lie in (0, 1), got {h}")));
    }
    Ok(())
}

pub type Potential = Arc<dyn Fn(&[f64]) -> f64 + Send + Sync>;

#[derive(Clone)]
pub struct PcnTarget {
    pub reference: GaussianReference,
    pub phi: Potential,
    pub h: f64,
}

impl std::fmt::Debug for PcnTarget {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("PcnTarget")
            .field("reference", &self.reference)
            .field("h", &self.h)
            .finish_non_exhaustive()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default)]
pub enum ProposalMode {
    /// Generate all proposal draws up front, in parallel.
    #[default]
    Batch,
    /// Generate each proposal draw when it is needed.
    Stream,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct PcnOptions {
    pub steps: usize,
    pub mode: ProposalMode,
    /// Keep every `thin`-th state; `0` keeps none.
    pub thin: usize,
}

impl PcnOptions {
    pub fn new(steps: usize) -> Self {
        Self {
            steps,
            mode: ProposalMode::Batch,
            thin: 1,
        }
    }
}

#[derive(Clone, Debug)]
pub struct PcnChain {
    /// `(step, state)` for kept steps; step `k` is the state after `k + 1` moves.
    pub states: Vec<(usize, Vec<f64>)>,
    pub accepted: Vec<bool>,
    pub phi: Vec<f64>,
    pub accept_count: usize,
    pub seed: u64,
}

impl PcnChain {
    pub fn len(&self) -> usize {
        self.accepted.len()
    }

    pub fn is_empty(&self) -> bool {
        self.accepted.is_empty()
    }

    pub fn acceptance_rate(&self) -> f64 {
        self.accept_count as f64 / self.len().max(1) as f64
    }

    /// Kept states as columns.
    pub fn state_matrix(&self) -> DenseMatrix {
        let n = self.states.first().map_or(0, |(_, s)| s.len());
        let mut out = DenseMatrix::zeros(n, self.states.len());
        for (j, (_, s)) in self.states.iter().enumerate() {
            out.col_mut(j).copy_from_slice(s);
        }
        out
    }

    /// `step,accepted,phi` per step.
    pub fn trace_csv(&self) -> String {
        let mut s = String::from("step,accepted,phi\n");
        for k in 0..self.len() {
            let _ = writeln!(s, "{k},{},{}", u8::from(self.accepted[k]), fmt_f64(self.phi[k]));
        }
        s
    }

    /// `step,gamma0,...` for the kept states.
    pub fn states_csv(&self) -> String {
        let n = self.states.first().map_or(0, |(_, s)| s.len());
        let mut s = String::from("step");
        (0..n).for_each(|i| {
            let _ = write!(s, ",gamma{i}");
        });
        s.push('\n');
        for (k, state) in &self.states {
            let _ = write!(s, "{k},");
            push_csv_row(&mut s, state);
        }
        s
    }

    pub fn write_csv(&self, trace_path: &Path, states_path: Option<&Path>) -> Result<()> {
        std::fs::write(trace_path, self.trace_csv()).map_err(|e| Error::io(trace_path, e))?;
        if let Some(p) = states_path {
            std::fs::write(p, self.states_csv()).map_err(|e| Error::io(p, e))?;
        }
        Ok(())
    }
}

/// Runs `opts.steps` pCN steps from `start` (default `γ̄`). Step `k` takes its
/// proposal from `rng.substream(2k)` and its uniform from `rng.substream(2k+1)`,
/// so batch and streaming modes give identical chains.
pub fn pcn_chain(target: &PcnTarget, start: Option<Vec<f64>>, opts: &PcnOptions, rng: RngStream) -> Result<PcnChain> {
    check_step(target.h)?;
    if opts.steps == 0 {
        return Err(Error::InvalidArgument("pCN chain needs at least one step".into()));
    }
    let n = target.reference.dim();
    let gamma = start.unwrap_or_else(|| target.reference.mean.clone());
    check_input(&gamma, n, "chain start")?;
    let phi0 = (target.phi)(&gamma);
    if !phi0.is_finite() {
        // every proposal with a finite potential would be accepted with ratio
        // exp(inf) or NaN; the step rejects non-finite proposals and the chain
        // stays put until it sees a finite one
        log::warn!("potential is not finite at the chain start");
    }
    let proposal = |k: usize| target.reference.draw(rng.substream(2 * k as u64));
    let batch: Option<Vec<Vec<f64>>> = match opts.mode {
        ProposalMode::Batch => Some((0..opts.steps).into_par_iter().map(proposal).collect::<Result<_>>()?),
        ProposalMode::Stream => None,
    };
    let mut state = PcnState { gamma, phi: phi0 };
    let mut chain = PcnChain {
        states: Vec::new(),
        accepted: Vec::with_capacity(opts.steps),
        phi: Vec::with_capacity(opts.steps),
        accept_count: 0,
        seed: rng.seed,
    };
    let phi = target.phi.as_ref();
    for k in 0..opts.steps {
        let streamed;
        let w = match &batch {
            Some(ws) => &ws[k],
            None => {
                streamed = proposal(k)?;
                &streamed
            }
        };
        let mut u = rng.substream(2 * k as u64 + 1).generator();
        let (next, accepted) = pcn_step(&state, &target.reference.mean, w, target.h, phi, &mut u)?;
        state = next;
        chain.accepted.push(accepted);
        chain.accept_count += usize::from(accepted);
        chain.phi.push(state.phi);
        if opts.thin > 0 && k % opts.thin == 0 {
            chain.states.push((k, state.gamma.clone()));
        }
    }
    Ok(chain)
}

/// Default `c` of [`ToyNonlinear`]; at `h = 0.05`, `n = 50`, `m = 20` the
/// acceptance rate is roughly 45 to 70%.
pub const TOY_PERTURBATION: f64 = 3.0;

/// Forward map `F(γ) = Aγ + M(γ)` with the quadratic perturbation
/// `M(γ) = c (Bγ) ∘ (Bγ)`, and data `r` (whitened noise).
#[derive(Clone, Debug)]
pub struct ToyNonlinear {
    pub a: DenseMatrix,
    pub b: DenseMatrix,
    pub c: f64,
    pub r: Vec<f64>,
    pub gamma_true: Vec<f64>,
}

impl ToyNonlinear {
    /// Random instance with `A`, `B` entries `N(0, 1/n)`, ground truth drawn
    /// from the standard normal prior, and unit observation noise.
    pub fn random(m: usize, n: usize, c: f64, rng: RngStream) -> Result<Self> {
        let scale = 1.0 / (n as f64).sqrt();
        let mat = |k: u64| -> Result<DenseMatrix> {
            let v = crate::sampler::standard_normal_vec(&mut rng.substream(k).generator(), m * n);
            DenseMatrix::new(m, n, v.into_iter().map(|x| x * scale).collect())
        };
        let a = mat(0)?;
        let b = mat(1)?;
        let gamma_true = crate::sampler::standard_normal_vec(&mut rng.substream(2).generator(), n);
        let mut toy = Self {
            a,
            b,
            c,
            r: Vec::new(),
            gamma_true,
        };
        let mut r = toy.forward(&toy.gamma_true.clone());
        let e = crate::sampler::standard_normal_vec(&mut rng.substream(3).generator(), m);
        r.iter_mut().zip(&e).for_each(|(ri, ei)| *ri += ei);
        toy.r = r;
        Ok(toy)
    }

    pub fn perturbation(&self, gamma: &[f64]) -> Vec<f64> {
        let mut bg = self.b.matvec(gamma);
        bg.iter_mut().for_each(|v| *v = self.c * *v * *v);
        bg
    }

    pub fn forward(&self, gamma: &[f64]) -> Vec<f64> {
        let mut f = self.a.matvec(gamma);
        f.iter_mut().zip(self.perturbation(gamma)).for_each(|(fi, mi)| *fi += mi);
        f
    }

    /// `Φ(γ) = ½‖M(γ)‖² + M(γ)ᵀ(Aγ - r)`.
    pub fn phi(&self, gamma: &[f64]) -> f64 {
        let mq = self.perturbation(gamma);
        let ag = self.a.matvec(gamma);
        mq.iter()
            .zip(ag.iter().zip(&self.r))
            .map(|(mi, (ai, ri))| 0.5 * mi * mi + mi * (ai - ri))
            .sum()
    }

    /// Linearized model `r = Aγ + e` with a standard normal prior.
    pub fn linear_model(&self) -> Result<GeneralGaussianModel> {
        let n = self.a.cols();
        let op: OpRef = Arc::new(self.a.clone());
        let id: OpRef = Arc::new(crate::linalg::operator::IdentityOperator::new(n));
        GeneralGaussianModel::new(
            op,
            self.r.clone(),
            Prior::PrecisionFactor {
                factor: id.clone(),
                inverse: Some(id),
            },
        )
    }

    /// pCN target built on the linearized posterior.
    pub fn target(self: &Arc<Self>, h: f64, opts: SamplerOptions) -> Result<PcnTarget> {
        let reference = GaussianReference::from_model(&self.linear_model()?, opts)?;
        let toy = Arc::clone(self);
        Ok(PcnTarget {
            reference,
            phi: Arc::new(move |g: &[f64]| toy.phi(g)),
            h,
        })
    }
}

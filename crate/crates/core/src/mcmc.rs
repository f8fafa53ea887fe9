//! Metropolis-Hastings sampling of the Gibbs measure
//! `mu(dx) ~ exp(-2 V(x)) nu(dx)`, `nu = N(0, Lambda^{-1}/2)`.
//!
//! The proposal is one drift-free modified Euler step, which is reversible
//! with respect to `nu`, so the acceptance ratio involves only `V`.

use crate::diagnostics::Observable;
use crate::error::{Error, Result};
use crate::field::FieldState;
use crate::noise::{par_replicas, NoiseStream};
use crate::operators::{ResolventFactors, SpatialOperator};
use crate::problems::ProblemSpec;
use crate::stats::BatchMeans;

/// `A_tau x + sqrt(tau) (B_{tau,1} g1 + B_{tau,2} g2)`.
pub fn propose(
    f: &ResolventFactors,
    x: &FieldState,
    g1: &FieldState,
    g2: &FieldState,
) -> Result<FieldState> {
    let mut y = f.apply_resolvent(x)?;
    y.axpy(1.0, &f.sample_modified_noise(g1, g2)?)?;
    Ok(y)
}

/// `min(1, exp(2 (V(x) - V(xhat))))`.
pub fn acceptance_prob(v_x: f64, v_xhat: f64) -> Result<f64> {
    if v_x.is_nan() || v_xhat.is_nan() {
        return Err(Error::invalid("NaN potential value"));
    }
    Ok((2.0 * (v_x - v_xhat)).exp().min(1.0))
}

/// `V` of a state in the operator's representation.
pub fn potential(op: &SpatialOperator, p: &ProblemSpec, x: &FieldState) -> Result<f64> {
    p.evaluate_v(&op.nodal_values(x)?)
}

#[derive(Debug, Clone)]
pub struct ChainState {
    pub current: FieldState,
    pub v_current: f64,
    pub accepted: u64,
    pub steps: u64,
}

impl ChainState {
    pub fn new(op: &SpatialOperator, p: &ProblemSpec, x0: FieldState) -> Result<Self> {
        let v_current = potential(op, p, &x0)?;
        Ok(ChainState {
            current: x0,
            v_current,
            accepted: 0,
            steps: 0,
        })
    }

    /// One proposal and accept/reject; returns whether it was accepted.
    pub fn advance(
        &mut self,
        op: &SpatialOperator,
        f: &ResolventFactors,
        p: &ProblemSpec,
        stream: &mut NoiseStream,
    ) -> Result<bool> {
        let (n, r) = (op.len(), op.representation());
        let g1 = stream.draw_cylindrical(n, r);
        let g2 = stream.draw_cylindrical(n, r);
        let candidate = propose(f, &self.current, &g1, &g2)?;
        let v_candidate = potential(op, p, &candidate)?;
        let a = acceptance_prob(self.v_current, v_candidate)?;
        let u = stream.uniform();
        self.steps += 1;
        if u < a {
            self.current = candidate;
            self.v_current = v_candidate;
            self.accepted += 1;
            Ok(true)
        } else {
            Ok(false)
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChainConfig {
    /// Total number of steps, burn-in included.
    pub n_steps: usize,
    pub burn_in: usize,
    pub batch_len: usize,
    /// Record every `thin`-th post-burn-in state; 0 records nothing.
    pub thin: usize,
}

#[derive(Debug, Clone)]
pub struct ChainStats {
    pub acceptance_rate: f64,
    pub observables: Vec<Observable>,
    pub means: Vec<f64>,
    pub stderrs: Vec<f64>,
    pub batches: Vec<BatchMeans>,
    /// `(step, observable values)` rows.
    pub trace: Vec<(usize, Vec<f64>)>,
    pub final_state: FieldState,
}

pub fn run_chain(
    op: &SpatialOperator,
    f: &ResolventFactors,
    p: &ProblemSpec,
    x0: &FieldState,
    cfg: &ChainConfig,
    stream: &mut NoiseStream,
    observables: &[Observable],
) -> Result<ChainStats> {
    if cfg.burn_in >= cfg.n_steps {
        return Err(Error::invalid(format!(
            "burn-in {} must be below the step count {}",
            cfg.burn_in, cfg.n_steps
        )));
    }
    if !p.has_potential() {
        return Err(Error::invalid(format!(
            "problem `{}` has no potential",
            p.label()
        )));
    }
    let mut chain = ChainState::new(op, p, x0.clone())?;
    let mut batches = vec![BatchMeans::new(cfg.batch_len.max(1)); observables.len()];
    let mut trace = Vec::new();
    for step in 1..=cfg.n_steps {
        chain.advance(op, f, p, stream)?;
        if step > cfg.burn_in {
            let nodal = op.nodal_values(&chain.current)?;
            let values = observables
                .iter()
                .map(|o| o.evaluate(&nodal))
                .collect::<Result<Vec<_>>>()?;
            for (b, v) in batches.iter_mut().zip(&values) {
                b.push(*v);
            }
            if cfg.thin > 0 && (step - cfg.burn_in).is_multiple_of(cfg.thin) {
                trace.push((step, values));
            }
        }
    }
    let est: Vec<(f64, f64)> = batches.iter().map(|b| b.estimate()).collect();
    Ok(ChainStats {
        acceptance_rate: chain.accepted as f64 / chain.steps as f64,
        observables: observables.to_vec(),
        means: est.iter().map(|e| e.0).collect(),
        stderrs: est.iter().map(|e| e.1).collect(),
        batches,
        trace,
        final_state: chain.current,
    })
}

#[derive(Debug, Clone)]
pub struct PooledChains {
    pub chains: Vec<ChainStats>,
    pub acceptance_rate: f64,
    pub means: Vec<f64>,
    pub stderrs: Vec<f64>,
}

/// Independent chains on streams `(master_seed, 0..n_chains)`, with batch
/// means pooled across chains.
#[allow(clippy::too_many_arguments)]
pub fn run_chains(
    op: &SpatialOperator,
    f: &ResolventFactors,
    p: &ProblemSpec,
    x0: &FieldState,
    cfg: &ChainConfig,
    master_seed: u64,
    n_chains: usize,
    observables: &[Observable],
) -> Result<PooledChains> {
    if n_chains == 0 {
        return Err(Error::invalid("need at least one chain"));
    }
    let chains = par_replicas(master_seed, n_chains, |_, stream| {
        run_chain(op, f, p, x0, cfg, stream, observables)
    })
    .into_iter()
    .collect::<Result<Vec<_>>>()?;
    let acceptance_rate = chains.iter().map(|c| c.acceptance_rate).sum::<f64>() / n_chains as f64;
    let (mut means, mut stderrs) = (Vec::new(), Vec::new());
    for k in 0..observables.len() {
        let parts: Vec<BatchMeans> = chains.iter().map(|c| c.batches[k].clone()).collect();
        let (m, s) = BatchMeans::pooled(&parts);
        means.push(m);
        stderrs.push(s);
    }
    Ok(PooledChains {
        chains,
        acceptance_rate,
        means,
        stderrs,
    })
}

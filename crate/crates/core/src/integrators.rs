//! Time-stepping kernels.
//!
//! Every step is a pure function of the state and the Gaussian draws it is
//! given; [`Stepper`] bundles the precomputed factors of one scheme and draws
//! its own noise from a [`NoiseStream`].

use std::f64::consts::FRAC_1_SQRT_2;
use std::fmt;
use std::str::FromStr;

use crate::diagnostics::Observable;
use crate::error::{Error, Result};
use crate::field::{FieldState, Representation};
use crate::modified_equation::ModifiedSpectra;
use crate::noise::{CoupledDraw, NoiseStream};
use crate::operators::{ResolventFactors, SpatialOperator, SpectralOperator};
use crate::problems::ProblemSpec;
use crate::sine::SineTransform;
use crate::stats::BatchMeans;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Scheme {
    /// Modified Euler with two noise operators.
    Modified,
    /// Modified Euler with the single diagonal noise operator `B_tau`.
    ModifiedBForm,
    /// Modified Euler written as an exact step of the modified equation.
    ModifiedExpForm,
    /// Standard linear-implicit Euler.
    Standard,
    /// Accelerated exponential Euler.
    Exponential,
    /// Exact Ornstein-Uhlenbeck transition (no drift allowed).
    ExactOu,
}

impl Scheme {
    pub const ALL: [Scheme; 6] = [
        Scheme::Modified,
        Scheme::ModifiedBForm,
        Scheme::ModifiedExpForm,
        Scheme::Standard,
        Scheme::Exponential,
        Scheme::ExactOu,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Scheme::Modified => "modified",
            Scheme::ModifiedBForm => "modified_bform",
            Scheme::ModifiedExpForm => "modified_expform",
            Scheme::Standard => "standard",
            Scheme::Exponential => "exponential",
            Scheme::ExactOu => "exact_ou",
        }
    }

    pub fn requires_spectral(self) -> bool {
        matches!(
            self,
            Scheme::ModifiedBForm | Scheme::ModifiedExpForm | Scheme::Exponential | Scheme::ExactOu
        )
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Scheme::ALL
            .into_iter()
            .find(|k| k.name() == s.trim())
            .ok_or_else(|| Error::invalid(format!("unknown scheme `{s}`")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemeConfig {
    pub scheme: Scheme,
    pub tau: f64,
    pub n_steps: usize,
}

impl SchemeConfig {
    pub fn new(scheme: Scheme, tau: f64, n_steps: usize) -> Result<Self> {
        if !(tau.is_finite() && tau > 0.0) {
            return Err(Error::invalid(format!(
                "time step must be positive, got {tau}"
            )));
        }
        Ok(SchemeConfig {
            scheme,
            tau,
            n_steps,
        })
    }

    /// Step count `T / tau`, which must be an integer up to rounding.
    pub fn with_horizon(scheme: Scheme, tau: f64, t_end: f64) -> Result<Self> {
        Self::new(scheme, tau, steps_for(t_end, tau)?)
    }

    pub fn t_end(&self) -> f64 {
        self.n_steps as f64 * self.tau
    }
}

pub fn steps_for(t_end: f64, tau: f64) -> Result<usize> {
    if !(tau > 0.0 && t_end >= 0.0) {
        return Err(Error::invalid(format!("bad horizon T={t_end}, tau={tau}")));
    }
    let n = (t_end / tau).round();
    if (n * tau - t_end).abs() > 1e-9 * t_end.max(tau) {
        return Err(Error::invalid(format!(
            "T={t_end} is not a multiple of tau={tau}"
        )));
    }
    Ok(n as usize)
}

/// `F(x)` in the representation of `x`; `None` for problems without drift.
/// Modal states go through the grid and back.
pub fn drift(p: &ProblemSpec, x: &FieldState) -> Result<Option<FieldState>> {
    if !p.has_drift() {
        return Ok(None);
    }
    match x.representation() {
        Representation::Nodal => p.apply_f(x).map(Some),
        Representation::Modal => {
            let t = SineTransform::shared(x.len());
            let mut nodal = vec![0.0; x.len()];
            t.synthesize(x.values(), &mut nodal);
            nodal.iter_mut().for_each(|z| *z = p.f(*z));
            let mut out = vec![0.0; x.len()];
            t.analyze(&nodal, &mut out);
            Ok(Some(FieldState::modal(out)))
        }
    }
}

/// `x + tau F(x)`.
fn explicit_part(p: &ProblemSpec, x: &FieldState, tau: f64) -> Result<FieldState> {
    let mut y = x.clone();
    if let Some(fx) = drift(p, x)? {
        y.axpy(tau, &fx)?;
    }
    Ok(y)
}

/// `A_tau (x + tau F(x)) + sqrt(tau) (B_{tau,1} g1 + B_{tau,2} g2)`.
pub fn step_modified(
    f: &ResolventFactors,
    p: &ProblemSpec,
    x: &FieldState,
    g1: &FieldState,
    g2: &FieldState,
) -> Result<FieldState> {
    f.check(x)?;
    let mut y = explicit_part(p, x, f.tau())?;
    f.resolve_in_place(y.values_mut());
    y.axpy(1.0, &f.sample_modified_noise(g1, g2)?)?;
    Ok(y)
}

/// `A_tau (x + tau F(x)) + sqrt(tau) B_tau g` with
/// `B_tau = sqrt(2 + tau lambda) / (sqrt(2) (1 + tau lambda))`.
pub fn step_modified_bform(
    f: &ResolventFactors,
    p: &ProblemSpec,
    x: &FieldState,
    g: &FieldState,
) -> Result<FieldState> {
    let a = f
        .resolvent_scalars()
        .ok_or(Error::SpectralOnly("the B-form of the modified scheme"))?;
    f.check(x)?;
    f.check(g)?;
    let mut y = explicit_part(p, x, f.tau())?;
    let s = f.tau().sqrt();
    for ((v, a), g) in y.values_mut().iter_mut().zip(a).zip(g.values()) {
        *v = a * *v + s * (0.5 * (a * a + a)).sqrt() * g;
    }
    Ok(y)
}

/// Diagonal one-step map `x_j <- decay_j x_j + drift_j F(x)_j + sd_j g_j`.
#[derive(Debug, Clone)]
pub struct DiagonalStep {
    tau: f64,
    decay: Vec<f64>,
    drift: Vec<f64>,
    noise_sd: Vec<f64>,
}

impl DiagonalStep {
    /// Exponential Euler: `e^{-tau lambda}`, `(1 - e^{-tau lambda}) / lambda`,
    /// `sqrt((1 - e^{-2 tau lambda}) / (2 lambda))`.
    pub fn exponential(op: &SpectralOperator, tau: f64) -> Result<Self> {
        if !(tau.is_finite() && tau > 0.0) {
            return Err(Error::invalid(format!(
                "time step must be positive, got {tau}"
            )));
        }
        let l = op.eigenvalues();
        Ok(DiagonalStep {
            tau,
            decay: l.iter().map(|l| (-tau * l).exp()).collect(),
            drift: l.iter().map(|l| -(-tau * l).exp_m1() / l).collect(),
            noise_sd: l
                .iter()
                .map(|l| (-(-2.0 * tau * l).exp_m1() / (2.0 * l)).sqrt())
                .collect(),
        })
    }

    /// Modified Euler as an exact step of the modified equation.
    pub fn modified_expform(spectra: &ModifiedSpectra) -> Self {
        DiagonalStep {
            tau: spectra.tau(),
            decay: spectra.semigroup(spectra.tau()),
            drift: spectra.drift_factors(),
            noise_sd: spectra.noise_variances().iter().map(|v| v.sqrt()).collect(),
        }
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn len(&self) -> usize {
        self.decay.len()
    }

    pub fn is_empty(&self) -> bool {
        self.decay.is_empty()
    }

    pub fn decay(&self) -> &[f64] {
        &self.decay
    }

    pub fn drift_factors(&self) -> &[f64] {
        &self.drift
    }

    pub fn noise_sd(&self) -> &[f64] {
        &self.noise_sd
    }

    pub fn step(&self, p: &ProblemSpec, x: &FieldState, g: &FieldState) -> Result<FieldState> {
        g.expect(Representation::Modal, self.len())?;
        let increment: Vec<f64> = g
            .values()
            .iter()
            .zip(&self.noise_sd)
            .map(|(g, s)| s * g)
            .collect();
        self.step_increment(p, x, &increment)
    }

    /// Same map with the stochastic convolution increment supplied directly.
    pub fn step_increment(
        &self,
        p: &ProblemSpec,
        x: &FieldState,
        increment: &[f64],
    ) -> Result<FieldState> {
        x.expect(Representation::Modal, self.len())?;
        if increment.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                found: increment.len(),
            });
        }
        let fx = drift(p, x)?;
        let mut y = x.clone();
        for (j, v) in y.values_mut().iter_mut().enumerate() {
            let f = fx.as_ref().map_or(0.0, |f| f.values()[j]);
            *v = self.decay[j] * *v + self.drift[j] * f + increment[j];
        }
        Ok(y)
    }
}

pub fn step_modified_expform(
    s: &DiagonalStep,
    p: &ProblemSpec,
    x: &FieldState,
    g: &FieldState,
) -> Result<FieldState> {
    s.step(p, x, g)
}

/// `A_tau (x + tau F(x) + sqrt(tau) g)`.
pub fn step_standard(
    f: &ResolventFactors,
    p: &ProblemSpec,
    x: &FieldState,
    g: &FieldState,
) -> Result<FieldState> {
    f.check(x)?;
    let mut y = explicit_part(p, x, f.tau())?;
    y.axpy(f.tau().sqrt(), g)?;
    f.resolve_in_place(y.values_mut());
    Ok(y)
}

pub fn step_exponential(
    e: &DiagonalStep,
    p: &ProblemSpec,
    x: &FieldState,
    g: &FieldState,
) -> Result<FieldState> {
    e.step(p, x, g)
}

/// Precomputed factors for one scheme at one step size.
#[derive(Debug, Clone)]
pub enum Stepper {
    Modified(ResolventFactors),
    ModifiedBForm(ResolventFactors),
    ModifiedExpForm(DiagonalStep),
    Standard(ResolventFactors),
    Exponential(DiagonalStep),
    ExactOu(DiagonalStep),
}

impl Stepper {
    pub fn new(scheme: Scheme, op: &SpatialOperator, tau: f64) -> Result<Self> {
        let spectral = || op.as_spectral().ok_or(Error::SpectralOnly(scheme.name()));
        Ok(match scheme {
            Scheme::Modified => Stepper::Modified(op.factorize(tau)?),
            Scheme::ModifiedBForm => {
                spectral()?;
                Stepper::ModifiedBForm(op.factorize(tau)?)
            }
            Scheme::ModifiedExpForm => Stepper::ModifiedExpForm(DiagonalStep::modified_expform(
                &ModifiedSpectra::new(spectral()?, tau)?,
            )),
            Scheme::Standard => Stepper::Standard(op.factorize(tau)?),
            Scheme::Exponential => {
                Stepper::Exponential(DiagonalStep::exponential(spectral()?, tau)?)
            }
            Scheme::ExactOu => Stepper::ExactOu(DiagonalStep::exponential(spectral()?, tau)?),
        })
    }

    pub fn scheme(&self) -> Scheme {
        match self {
            Stepper::Modified(_) => Scheme::Modified,
            Stepper::ModifiedBForm(_) => Scheme::ModifiedBForm,
            Stepper::ModifiedExpForm(_) => Scheme::ModifiedExpForm,
            Stepper::Standard(_) => Scheme::Standard,
            Stepper::Exponential(_) => Scheme::Exponential,
            Stepper::ExactOu(_) => Scheme::ExactOu,
        }
    }

    pub fn tau(&self) -> f64 {
        match self {
            Stepper::Modified(f) | Stepper::ModifiedBForm(f) | Stepper::Standard(f) => f.tau(),
            Stepper::ModifiedExpForm(d) | Stepper::Exponential(d) | Stepper::ExactOu(d) => d.tau(),
        }
    }

    pub fn representation(&self) -> Representation {
        match self {
            Stepper::Modified(f) | Stepper::Standard(f) => f.representation(),
            _ => Representation::Modal,
        }
    }

    fn check_problem(&self, p: &ProblemSpec) -> Result<()> {
        if matches!(self, Stepper::ExactOu(_)) && p.has_drift() {
            return Err(Error::invalid(format!(
                "exact_ou is only exact without drift, problem `{}` has one",
                p.label()
            )));
        }
        Ok(())
    }

    /// One step with noise drawn from `stream`.
    pub fn step(
        &self,
        p: &ProblemSpec,
        x: &FieldState,
        stream: &mut NoiseStream,
    ) -> Result<FieldState> {
        let (n, r) = (x.len(), self.representation());
        match self {
            Stepper::Modified(f) => {
                let g1 = stream.draw_cylindrical(n, r);
                let g2 = stream.draw_cylindrical(n, r);
                step_modified(f, p, x, &g1, &g2)
            }
            _ => {
                let g = stream.draw_cylindrical(n, r);
                self.step_single(p, x, &g)
            }
        }
    }

    /// One step on a coupled draw: the modified scheme consumes both halves,
    /// every other scheme the combined increment.
    pub fn step_coupled(
        &self,
        p: &ProblemSpec,
        x: &FieldState,
        draw: &CoupledDraw,
    ) -> Result<FieldState> {
        match self {
            Stepper::Modified(f) => step_modified(f, p, x, &draw.first, &draw.second),
            _ => self.step_single(p, x, &draw.combined),
        }
    }

    fn step_single(&self, p: &ProblemSpec, x: &FieldState, g: &FieldState) -> Result<FieldState> {
        self.check_problem(p)?;
        match self {
            Stepper::Modified(_) => Err(Error::invalid("the modified scheme needs two draws")),
            Stepper::ModifiedBForm(f) => step_modified_bform(f, p, x, g),
            Stepper::Standard(f) => step_standard(f, p, x, g),
            Stepper::ModifiedExpForm(d) | Stepper::Exponential(d) | Stepper::ExactOu(d) => {
                d.step(p, x, g)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Record {
    /// Keep only the final state.
    Final,
    /// Keep the initial state and every step.
    Path,
}

#[derive(Debug, Clone)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<FieldState>,
}

impl Trajectory {
    pub fn final_state(&self) -> &FieldState {
        self.states.last().expect("trajectory is never empty")
    }

    pub fn into_final(mut self) -> FieldState {
        self.states.pop().expect("trajectory is never empty")
    }
}

fn guard(x: &FieldState, step: usize, what: &str) -> Result<()> {
    if x.is_finite() {
        Ok(())
    } else {
        let bad = x.values().iter().position(|v| !v.is_finite()).unwrap_or(0);
        Err(Error::NonFinite {
            step,
            detail: format!("{what}, first bad component {}", bad + 1),
        })
    }
}

/// Iterates the configured scheme `n_steps` times from `x0`.
pub fn run_trajectory(
    cfg: &SchemeConfig,
    op: &SpatialOperator,
    p: &ProblemSpec,
    x0: &FieldState,
    stream: &mut NoiseStream,
    record: Record,
) -> Result<Trajectory> {
    let stepper = Stepper::new(cfg.scheme, op, cfg.tau)?;
    stepper.check_problem(p)?;
    x0.expect(op.representation(), op.len())?;
    let mut traj = Trajectory {
        times: vec![0.0],
        states: vec![x0.clone()],
    };
    let mut x = x0.clone();
    for n in 1..=cfg.n_steps {
        x = stepper.step(p, &x, stream)?;
        guard(&x, n, cfg.scheme.name())?;
        if record == Record::Path {
            traj.times.push(n as f64 * cfg.tau);
            traj.states.push(x.clone());
        }
    }
    if record == Record::Final {
        traj.times = vec![cfg.t_end()];
        traj.states = vec![x];
    }
    Ok(traj)
}

/// Runs the modified and the standard scheme on one Wiener path: each step
/// draws `(G1, G2)` for the modified scheme and feeds `(G1 + G2)/sqrt(2)` to
/// the standard one.
pub fn run_coupled(
    op: &SpatialOperator,
    p: &ProblemSpec,
    x0: &FieldState,
    tau: f64,
    n_steps: usize,
    stream: &mut NoiseStream,
    record: Record,
) -> Result<(Trajectory, Trajectory)> {
    let modified = Stepper::new(Scheme::Modified, op, tau)?;
    let standard = Stepper::new(Scheme::Standard, op, tau)?;
    x0.expect(op.representation(), op.len())?;
    let start = Trajectory {
        times: vec![0.0],
        states: vec![x0.clone()],
    };
    let (mut tm, mut ts) = (start.clone(), start);
    let (mut xm, mut xs) = (x0.clone(), x0.clone());
    for n in 1..=n_steps {
        let draw = stream.draw_coupled_pair(op.len(), op.representation());
        xm = modified.step_coupled(p, &xm, &draw)?;
        xs = standard.step_coupled(p, &xs, &draw)?;
        guard(&xm, n, "modified")?;
        guard(&xs, n, "standard")?;
        if record == Record::Path {
            let t = n as f64 * tau;
            tm.times.push(t);
            tm.states.push(xm.clone());
            ts.times.push(t);
            ts.states.push(xs.clone());
        }
    }
    if record == Record::Final {
        let t = n_steps as f64 * tau;
        tm = Trajectory {
            times: vec![t],
            states: vec![xm],
        };
        ts = Trajectory {
            times: vec![t],
            states: vec![xs],
        };
    }
    Ok((tm, ts))
}

/// Long-run averages of observables along one trajectory, with batch-means
/// standard errors. Returns `(mean, stderr)` per observable.
#[allow(clippy::too_many_arguments)]
pub fn ergodic_averages(
    stepper: &Stepper,
    op: &SpatialOperator,
    p: &ProblemSpec,
    x0: &FieldState,
    n_steps: usize,
    burn_in: usize,
    batch_len: usize,
    stream: &mut NoiseStream,
    observables: &[Observable],
) -> Result<Vec<(f64, f64)>> {
    let mut batches = vec![BatchMeans::new(batch_len); observables.len()];
    let mut x = x0.clone();
    for n in 1..=burn_in + n_steps {
        x = stepper.step(p, &x, stream)?;
        guard(&x, n, stepper.scheme().name())?;
        if n > burn_in {
            let nodal = op.nodal_values(&x)?;
            for (b, o) in batches.iter_mut().zip(observables) {
                b.push(o.evaluate(&nodal)?);
            }
        }
    }
    Ok(batches.iter().map(|b| b.estimate()).collect())
}

/// Scalar one-step data of a scheme for a linear mode with eigenvalue
/// `lambda`: the mean multiplier and the noise variance.
pub fn one_step_law(scheme: Scheme, tau: f64, lambda: f64) -> (f64, f64) {
    let z = tau * lambda;
    let a = 1.0 / (1.0 + z);
    match scheme {
        Scheme::Modified => (a, tau * (0.5 * a * a + (FRAC_1_SQRT_2 * a.sqrt()).powi(2))),
        Scheme::ModifiedBForm => (a, tau * (2.0 + z) / (2.0 * (1.0 + z) * (1.0 + z))),
        Scheme::ModifiedExpForm => {
            let q = z.ln_1p() / z;
            let lt = q * lambda;
            (
                (-tau * lt).exp(),
                -q * (-2.0 * tau * lt).exp_m1() / (2.0 * lt),
            )
        }
        Scheme::Standard => (a, tau * a * a),
        Scheme::Exponential | Scheme::ExactOu => {
            ((-z).exp(), -(-2.0 * z).exp_m1() / (2.0 * lambda))
        }
    }
}

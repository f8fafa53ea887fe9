//! Weak and strong errors against a fine exponential-Euler reference, with all
//! step sizes driven by the same Brownian path.
//!
//! On each fine step `delta` and for each mode the pair
//! `(dW, I) = (W(t+delta) - W(t), int e^{-lambda(t+delta-s)} dW(s))` is drawn
//! from its exact joint Gaussian law. Coarse steps aggregate these: plain sums
//! of `dW` (split into the two half steps for the modified scheme) and
//! discounted sums of `I` for the exponential scheme, so every scheme sees a
//! consistent restriction of one path.

use std::f64::consts::SQRT_2;

use super::observables::Observable;
use super::rates::{fit_rate_above_noise, RateFit};
use crate::error::{Error, Result};
use crate::field::{FieldState, Representation};
use crate::integrators::{
    step_modified, step_modified_bform, step_standard, steps_for, DiagonalStep, Scheme, Stepper,
};
use crate::noise::par_replicas;
use crate::operators::{SpatialOperator, SpectralOperator};
use crate::problems::ProblemSpec;
use crate::stats::mean_and_stderr;

#[derive(Debug, Clone)]
pub struct ConvergenceConfig {
    pub taus: Vec<f64>,
    pub t_end: f64,
    pub tau_ref: f64,
    pub replicas: usize,
    pub master_seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelEstimate {
    pub tau: f64,
    pub mean: f64,
    pub stderr: f64,
}

#[derive(Debug, Clone)]
pub struct ConvergenceStudy {
    pub schemes: Vec<Scheme>,
    pub taus: Vec<f64>,
    pub observable: Observable,
    /// `E phi(X_ref)` and its standard error.
    pub reference: (f64, f64),
    /// Signed `E[phi(X_N^tau) - phi(X_ref)]` per scheme and step.
    pub weak: Vec<Vec<LevelEstimate>>,
    /// `E |X_N^tau - X_ref|` per scheme and step.
    pub strong: Vec<Vec<LevelEstimate>>,
}

impl ConvergenceStudy {
    fn index(&self, scheme: Scheme) -> Result<usize> {
        self.schemes
            .iter()
            .position(|s| *s == scheme)
            .ok_or_else(|| Error::invalid(format!("scheme {scheme} not in this study")))
    }

    pub fn weak_fit(&self, scheme: Scheme) -> Result<RateFit> {
        fit_levels(&self.weak[self.index(scheme)?])
    }

    pub fn strong_fit(&self, scheme: Scheme) -> Result<RateFit> {
        fit_levels(&self.strong[self.index(scheme)?])
    }
}

fn fit_levels(levels: &[LevelEstimate]) -> Result<RateFit> {
    let taus: Vec<f64> = levels.iter().map(|l| l.tau).collect();
    let errs: Vec<f64> = levels.iter().map(|l| l.mean.abs()).collect();
    let ses: Vec<f64> = levels.iter().map(|l| l.stderr).collect();
    fit_rate_above_noise(&taus, &errs, &ses, 3.0)
}

struct Level {
    tau: f64,
    ratio: usize,
    steppers: Vec<Stepper>,
}

/// Runs every scheme at every step size on `replicas` shared paths.
pub fn convergence_study(
    cfg: &ConvergenceConfig,
    op: &SpectralOperator,
    p: &ProblemSpec,
    x0: &FieldState,
    schemes: &[Scheme],
    phi: Observable,
) -> Result<ConvergenceStudy> {
    x0.expect(Representation::Modal, op.len())?;
    if cfg.replicas == 0 {
        return Err(Error::invalid("need at least one replica"));
    }
    if schemes.contains(&Scheme::ExactOu) && p.has_drift() {
        return Err(Error::invalid("exact_ou is only exact without drift"));
    }
    let fine_steps = steps_for(cfg.t_end, cfg.tau_ref)?;
    let spatial = SpatialOperator::Spectral(op.clone());
    let mut levels = Vec::with_capacity(cfg.taus.len());
    for &tau in &cfg.taus {
        let ratio = steps_for(tau, cfg.tau_ref)?;
        steps_for(cfg.t_end, tau)?;
        if ratio < 2 || (ratio % 2 == 1 && schemes.contains(&Scheme::Modified)) {
            return Err(Error::invalid(format!(
                "tau={tau} must be an even multiple of tau_ref={}",
                cfg.tau_ref
            )));
        }
        let steppers = schemes
            .iter()
            .map(|&s| Stepper::new(s, &spatial, tau))
            .collect::<Result<Vec<_>>>()?;
        levels.push(Level {
            tau,
            ratio,
            steppers,
        });
    }
    let reference = DiagonalStep::exponential(op, cfg.tau_ref)?;
    let delta = cfg.tau_ref;
    let fine: Vec<(f64, f64, f64)> = op
        .eigenvalues()
        .iter()
        .map(|&l| {
            let c = -(-l * delta).exp_m1() / l;
            let var_i = -(-2.0 * l * delta).exp_m1() / (2.0 * l);
            let beta = (var_i - c * c / delta).max(0.0).sqrt();
            ((-l * delta).exp(), c / delta, beta)
        })
        .collect();
    let n = op.len();
    let ns = schemes.len();

    let per_replica = par_replicas(
        cfg.master_seed,
        cfg.replicas,
        |_, stream| -> Result<Vec<f64>> {
            let mut x_ref = x0.clone();
            let mut states: Vec<Vec<FieldState>> = vec![vec![x0.clone(); ns]; levels.len()];
            let mut w1 = vec![vec![0.0; n]; levels.len()];
            let mut w2 = vec![vec![0.0; n]; levels.len()];
            let mut conv = vec![vec![0.0; n]; levels.len()];
            let mut z = vec![0.0; 2 * n];
            let mut dw = vec![0.0; n];
            let mut inc = vec![0.0; n];
            let sqrt_delta = delta.sqrt();
            for k in 0..fine_steps {
                stream.fill_standard_normal(&mut z);
                for j in 0..n {
                    let (_, slope, beta) = fine[j];
                    dw[j] = sqrt_delta * z[2 * j];
                    inc[j] = slope * dw[j] + beta * z[2 * j + 1];
                }
                x_ref = reference.step_increment(p, &x_ref, &inc)?;
                for (li, level) in levels.iter().enumerate() {
                    let pos = k % level.ratio;
                    let half = if 2 * pos < level.ratio {
                        &mut w1[li]
                    } else {
                        &mut w2[li]
                    };
                    half.iter_mut().zip(&dw).for_each(|(a, d)| *a += d);
                    for j in 0..n {
                        conv[li][j] = fine[j].0 * conv[li][j] + inc[j];
                    }
                    if pos + 1 == level.ratio {
                        for (si, stepper) in level.steppers.iter().enumerate() {
                            let x = &states[li][si];
                            states[li][si] =
                                coarse_step(stepper, p, x, &w1[li], &w2[li], &conv[li], level.tau)?;
                        }
                        w1[li].iter_mut().for_each(|v| *v = 0.0);
                        w2[li].iter_mut().for_each(|v| *v = 0.0);
                        conv[li].iter_mut().for_each(|v| *v = 0.0);
                    }
                }
            }
            let phi_ref = phi.evaluate(&x_ref)?;
            let mut out = Vec::with_capacity(1 + 2 * ns * levels.len());
            out.push(phi_ref);
            for level_states in &states {
                for x in level_states {
                    if !x.is_finite() {
                        return Err(Error::NonFinite {
                            step: fine_steps,
                            detail: "coarse state in convergence study".into(),
                        });
                    }
                    out.push(phi.evaluate(x)? - phi_ref);
                    out.push(x.l2_distance(&x_ref)?);
                }
            }
            Ok(out)
        },
    );
    let rows = per_replica.into_iter().collect::<Result<Vec<_>>>()?;
    let column = |c: usize| -> Vec<f64> { rows.iter().map(|r| r[c]).collect() };
    let reference_mean = mean_and_stderr(&column(0));
    let mut weak = vec![Vec::new(); ns];
    let mut strong = vec![Vec::new(); ns];
    for (li, level) in levels.iter().enumerate() {
        for si in 0..ns {
            let base = 1 + 2 * (li * ns + si);
            let (wm, ws) = mean_and_stderr(&column(base));
            let (sm, ss) = mean_and_stderr(&column(base + 1));
            weak[si].push(LevelEstimate {
                tau: level.tau,
                mean: wm,
                stderr: ws,
            });
            strong[si].push(LevelEstimate {
                tau: level.tau,
                mean: sm,
                stderr: ss,
            });
        }
    }
    Ok(ConvergenceStudy {
        schemes: schemes.to_vec(),
        taus: cfg.taus.clone(),
        observable: phi,
        reference: reference_mean,
        weak,
        strong,
    })
}

fn coarse_step(
    stepper: &Stepper,
    p: &ProblemSpec,
    x: &FieldState,
    w1: &[f64],
    w2: &[f64],
    conv: &[f64],
    tau: f64,
) -> Result<FieldState> {
    let combined = || {
        FieldState::modal(
            w1.iter()
                .zip(w2)
                .map(|(a, b)| (a + b) / tau.sqrt())
                .collect(),
        )
    };
    match stepper {
        Stepper::Modified(f) => {
            // Each half-step increment has variance tau/2.
            let s = SQRT_2 / tau.sqrt();
            let g1 = FieldState::modal(w1.iter().map(|v| s * v).collect());
            let g2 = FieldState::modal(w2.iter().map(|v| s * v).collect());
            step_modified(f, p, x, &g1, &g2)
        }
        Stepper::ModifiedBForm(f) => step_modified_bform(f, p, x, &combined()),
        Stepper::Standard(f) => step_standard(f, p, x, &combined()),
        Stepper::ModifiedExpForm(d) => d.step(p, x, &combined()),
        Stepper::Exponential(d) | Stepper::ExactOu(d) => d.step_increment(p, x, conv),
    }
}

/// Weak-error rate of one scheme; points within three standard errors of
/// zero are excluded and the fit is refused if fewer than three remain.
pub fn mc_weak_error(
    cfg: &ConvergenceConfig,
    op: &SpectralOperator,
    p: &ProblemSpec,
    x0: &FieldState,
    scheme: Scheme,
    phi: Observable,
) -> Result<RateFit> {
    convergence_study(cfg, op, p, x0, &[scheme], phi)?.weak_fit(scheme)
}

/// Strong-error rate of one scheme.
pub fn strong_error(
    cfg: &ConvergenceConfig,
    op: &SpectralOperator,
    p: &ProblemSpec,
    x0: &FieldState,
    scheme: Scheme,
) -> Result<RateFit> {
    convergence_study(cfg, op, p, x0, &[scheme], Observable::SquaredNorm)?.strong_fit(scheme)
}

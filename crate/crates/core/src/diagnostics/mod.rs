//! Closed-form Gaussian diagnostics, roughness statistics, error estimators
//! and rate fits.
//!
//! For `F = 0` every scheme started at zero is a centered Gaussian with a
//! diagonal covariance in the sine basis, so most comparisons reduce to
//! per-mode variance tables.

mod monte_carlo;
mod observables;
mod rates;

pub use monte_carlo::{
    convergence_study, mc_weak_error, strong_error, ConvergenceConfig, ConvergenceStudy,
    LevelEstimate,
};
pub use observables::Observable;
pub use rates::{fit_rate, fit_rate_above_noise, RateFit};

use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::field::{FieldState, Representation};
use crate::integrators::{steps_for, Scheme};
use crate::operators::SpectralOperator;

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Horizon {
    /// After `N` steps from a zero initial state.
    Steps(usize),
    /// The `N -> infinity` limit.
    Stationary,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum VarianceLaw {
    Exact,
    Modified,
    Standard,
}

impl VarianceLaw {
    pub fn of(scheme: Scheme) -> Self {
        match scheme {
            Scheme::Modified | Scheme::ModifiedBForm | Scheme::ModifiedExpForm => {
                VarianceLaw::Modified
            }
            Scheme::Standard => VarianceLaw::Standard,
            Scheme::Exponential | Scheme::ExactOu => VarianceLaw::Exact,
        }
    }
}

#[derive(Debug, Clone)]
pub struct ModeVarianceTable {
    pub scheme: Scheme,
    pub horizon: Horizon,
    pub tau: f64,
    pub lambdas: Vec<f64>,
    pub variances: Vec<f64>,
}

/// Per-mode variances of the linear scheme started at zero:
/// exact `(1 - e^{-2 N tau lambda}) / (2 lambda)`,
/// modified `(1 - (1 + tau lambda)^{-2N}) / (2 lambda)`,
/// standard `(1 - (1 + tau lambda)^{-2N}) / (lambda (2 + tau lambda))`.
pub fn mode_variances(
    scheme: Scheme,
    op: &SpectralOperator,
    tau: f64,
    horizon: Horizon,
) -> Result<ModeVarianceTable> {
    if !(tau.is_finite() && tau > 0.0) {
        return Err(Error::invalid(format!(
            "time step must be positive, got {tau}"
        )));
    }
    let law = VarianceLaw::of(scheme);
    let variances = op
        .eigenvalues()
        .iter()
        .map(|&l| {
            let z = tau * l;
            let filled = match (horizon, law) {
                (Horizon::Stationary, _) => 1.0,
                (Horizon::Steps(n), VarianceLaw::Exact) => -(-2.0 * n as f64 * z).exp_m1(),
                (Horizon::Steps(n), _) => -(-2.0 * n as f64 * z.ln_1p()).exp_m1(),
            };
            match law {
                VarianceLaw::Exact | VarianceLaw::Modified => filled / (2.0 * l),
                VarianceLaw::Standard => filled / (l * (2.0 + z)),
            }
        })
        .collect();
    Ok(ModeVarianceTable {
        scheme,
        horizon,
        tau,
        lambdas: op.eigenvalues().to_vec(),
        variances,
    })
}

/// Exact variance at time `t` (not tied to a step count).
pub fn exact_variances(op: &SpectralOperator, t: f64) -> Vec<f64> {
    op.eigenvalues()
        .iter()
        .map(|&l| {
            if t.is_infinite() {
                1.0 / (2.0 * l)
            } else {
                -(-2.0 * t * l).exp_m1() / (2.0 * l)
            }
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct SobolevMoment {
    pub alpha: f64,
    /// `sum_j lambda_j^{2 alpha} v_j` over all retained modes.
    pub partial_sum: f64,
    /// Growth of the partial sum from `J/2` to `J` modes.
    pub last_increment: f64,
    /// `last_increment` divided by the growth from `J/4` to `J/2`.
    pub increment_ratio: f64,
    /// Doubling-test verdict on the infinite sum.
    pub converges: bool,
    /// Verdict from the decay exponent of the summand.
    pub predicted_converges: bool,
}

/// `E |X|_alpha^2` under the table's law, with a doubling test on the partial
/// sums. The test declares convergence when the last increment is below
/// `1e-8` or smaller than the previous one.
pub fn sobolev_moment(table: &ModeVarianceTable, alpha: f64) -> Result<SobolevMoment> {
    if !(0.0..1.0).contains(&alpha) {
        return Err(Error::invalid(format!("alpha = {alpha} outside [0, 1)")));
    }
    let n = table.variances.len();
    if n < 4 {
        return Err(Error::invalid("doubling test needs at least 4 modes"));
    }
    let terms: Vec<f64> = table
        .lambdas
        .iter()
        .zip(&table.variances)
        .map(|(l, v)| l.powf(2.0 * alpha) * v)
        .collect();
    let partial = |k: usize| crate::stats::pairwise_sum(&terms[..k]);
    let (s4, s2, s1) = (partial(n / 4), partial(n / 2), partial(n));
    let (d_prev, d_last) = (s2 - s4, s1 - s2);
    let ratio = d_last / d_prev;
    // Stationary tails: lambda^{2 alpha - 1} (exact, modified) and
    // lambda^{2 alpha - 2} / tau (standard); finite horizons share them.
    let threshold = match VarianceLaw::of(table.scheme) {
        VarianceLaw::Standard => 0.5,
        _ => 0.25,
    };
    Ok(SobolevMoment {
        alpha,
        partial_sum: s1,
        last_increment: d_last,
        increment_ratio: ratio,
        converges: d_last < 1e-8 || ratio < 1.0,
        predicted_converges: alpha < threshold,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct FeldmanHajek {
    /// `sum_j (1 + tau lambda_j)^{-2N}` over the retained modes.
    pub modified_sum: f64,
    /// `sum_j e^{-2 N tau lambda_j}` over the retained modes.
    pub exact_sum: f64,
    /// Integral bounds on the omitted tails for `lambda_j = (j pi)^2`.
    pub modified_tail_bound: f64,
    pub exact_tail_bound: f64,
    pub equivalent: bool,
}

/// Mode sums deciding equivalence of the modified-scheme and exact laws at
/// `T = N tau` with the stationary law.
pub fn feldman_hajek_indicator(
    op: &SpectralOperator,
    tau: f64,
    n_steps: usize,
) -> Result<FeldmanHajek> {
    if n_steps == 0 {
        return Err(Error::invalid("N must be at least 1"));
    }
    if !(tau.is_finite() && tau > 0.0) {
        return Err(Error::invalid(format!(
            "time step must be positive, got {tau}"
        )));
    }
    let n = n_steps as f64;
    let modified: Vec<f64> = op
        .eigenvalues()
        .iter()
        .map(|l| (-2.0 * n * (tau * l).ln_1p()).exp())
        .collect();
    let exact: Vec<f64> = op
        .eigenvalues()
        .iter()
        .map(|l| (-2.0 * n * tau * l).exp())
        .collect();
    let j = op.len() as f64;
    let c = tau * PI * PI;
    // sum_{j>J} (1 + c j^2)^{-2N} <= int_J^inf (c x^2)^{-2N} dx.
    let modified_tail_bound = c.powf(-2.0 * n) * j.powf(1.0 - 4.0 * n) / (4.0 * n - 1.0);
    // sum_{j>J} e^{-2Nc j^2} <= int_J^inf (x/J) e^{-2Nc x^2} dx.
    let exact_tail_bound = (-2.0 * n * c * j * j).exp() / (4.0 * n * c * j);
    let modified_sum = crate::stats::pairwise_sum(&modified);
    let exact_sum = crate::stats::pairwise_sum(&exact);
    Ok(FeldmanHajek {
        modified_sum,
        exact_sum,
        modified_tail_bound,
        exact_tail_bound,
        equivalent: (modified_sum + modified_tail_bound).is_finite()
            && (exact_sum + exact_tail_bound).is_finite(),
    })
}

/// Hellinger distance between centered Gaussians with diagonal covariances.
pub fn hellinger_diag(v1: &[f64], v2: &[f64]) -> Result<f64> {
    let log_affinity = log_affinity_diag(v1, v2)?;
    Ok((-log_affinity.exp_m1()).max(0.0).sqrt())
}

/// Log of the Bhattacharyya coefficient `1 - H^2`; `-inf` for singular pairs.
/// Keeps resolution where the Hellinger distance has rounded to one.
pub fn log_affinity_diag(v1: &[f64], v2: &[f64]) -> Result<f64> {
    if v1.len() != v2.len() {
        return Err(Error::DimensionMismatch {
            expected: v1.len(),
            found: v2.len(),
        });
    }
    let mut log_affinity = 0.0;
    for (&a, &b) in v1.iter().zip(v2) {
        if !(a >= 0.0 && b >= 0.0) {
            return Err(Error::invalid(format!(
                "negative or NaN variance ({a}, {b})"
            )));
        }
        if a == 0.0 && b == 0.0 {
            continue;
        }
        if a == 0.0 || b == 0.0 {
            return Ok(f64::NEG_INFINITY);
        }
        log_affinity += 0.5 * (2.0 * (a * b).sqrt() / (a + b)).ln();
    }
    Ok(log_affinity)
}

/// `sum_{i=0}^{J} (x_{i+1} - x_i)^2` with zero boundary values.
pub fn quadratic_variation(x: &FieldState) -> Result<f64> {
    x.expect(Representation::Nodal, x.len())?;
    let v = x.values();
    if v.is_empty() {
        return Ok(0.0);
    }
    let inner: f64 = v.windows(2).map(|w| (w[1] - w[0]).powi(2)).sum();
    Ok(inner + v[0] * v[0] + v[v.len() - 1] * v[v.len() - 1])
}

/// Expected grid quadratic variation of a field with independent sine
/// coefficients of the given variances, sampled on the matching grid:
/// `sum_j v_j (4/h) sin^2(j pi h / 2)`.
pub fn expected_quadratic_variation(variances: &[f64]) -> f64 {
    let h = 1.0 / (variances.len() as f64 + 1.0);
    variances
        .iter()
        .enumerate()
        .map(|(k, v)| v * 4.0 / h * ((k + 1) as f64 * PI * h / 2.0).sin().powi(2))
        .sum()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum WeakHorizon {
    Time(f64),
    Stationary,
}

#[derive(Debug, Clone)]
pub struct DeterministicWeakError {
    pub scheme: Scheme,
    pub taus: Vec<f64>,
    pub errors: Vec<f64>,
    /// `None` when fewer than three errors exceed `1e-13`.
    pub fit: Option<RateFit>,
}

/// Weak error of `E |X|_alpha^2` for the linear equation started at zero,
/// from the exact covariances.
pub fn deterministic_weak_error(
    op: &SpectralOperator,
    taus: &[f64],
    horizon: WeakHorizon,
    scheme: Scheme,
    alpha: f64,
) -> Result<DeterministicWeakError> {
    if taus.len() < 3 {
        return Err(Error::invalid("a rate needs at least three step sizes"));
    }
    let reference = match horizon {
        WeakHorizon::Time(t) => exact_variances(op, t),
        WeakHorizon::Stationary => exact_variances(op, f64::INFINITY),
    };
    let mut errors = Vec::with_capacity(taus.len());
    for &tau in taus {
        let h = match horizon {
            WeakHorizon::Time(t) => Horizon::Steps(steps_for(t, tau)?),
            WeakHorizon::Stationary => Horizon::Stationary,
        };
        let table = mode_variances(scheme, op, tau, h)?;
        let diff: Vec<f64> = table
            .variances
            .iter()
            .zip(&reference)
            .zip(op.eigenvalues())
            .map(|((v, r), l)| l.powf(2.0 * alpha) * (v - r))
            .collect();
        errors.push(crate::stats::pairwise_sum(&diff).abs());
    }
    let (kt, ke): (Vec<f64>, Vec<f64>) = taus
        .iter()
        .zip(&errors)
        .filter(|(_, e)| **e >= 1e-13)
        .map(|(t, e)| (*t, *e))
        .unzip();
    let fit = if kt.len() >= 3 {
        Some(fit_rate(&kt, &ke)?)
    } else {
        None
    };
    Ok(DeterministicWeakError {
        scheme,
        taus: taus.to_vec(),
        errors,
        fit,
    })
}

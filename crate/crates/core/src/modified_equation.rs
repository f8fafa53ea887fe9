//! Spectra of the modified equation solved exactly by the modified Euler scheme.
//!
//! Per mode, `lambda_tau = log(1 + tau lambda) / tau` and
//! `q_tau = lambda_tau / lambda`. Then `exp(-tau lambda_tau) = 1 / (1 + tau lambda)`,
//! the integrated drift over one step is `tau / (1 + tau lambda)` and the
//! stochastic convolution increment has variance
//! `q_tau (1 - exp(-2 tau lambda_tau)) / (2 lambda_tau)`.

use crate::error::{Error, Result};
use crate::operators::{ResolventFactors, SpectralOperator};

#[derive(Debug, Clone)]
pub struct ModifiedSpectra {
    tau: f64,
    lambdas: Vec<f64>,
    lambda_tau: Vec<f64>,
    q_tau: Vec<f64>,
}

impl ModifiedSpectra {
    pub fn new(op: &SpectralOperator, tau: f64) -> Result<Self> {
        if !(tau.is_finite() && tau > 0.0) {
            return Err(Error::invalid(format!(
                "time step must be positive, got {tau}"
            )));
        }
        let lambdas = op.eigenvalues().to_vec();
        let q_tau: Vec<f64> = lambdas.iter().map(|&l| log1p_ratio(tau * l)).collect();
        let lambda_tau = lambdas.iter().zip(&q_tau).map(|(l, q)| q * l).collect();
        Ok(ModifiedSpectra {
            tau,
            lambdas,
            lambda_tau,
            q_tau,
        })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn len(&self) -> usize {
        self.lambdas.len()
    }

    pub fn is_empty(&self) -> bool {
        self.lambdas.is_empty()
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.lambdas
    }

    pub fn lambda_tau(&self) -> &[f64] {
        &self.lambda_tau
    }

    pub fn q_tau(&self) -> &[f64] {
        &self.q_tau
    }

    /// `exp(-t lambda_tau_j)`.
    pub fn semigroup(&self, t: f64) -> Vec<f64> {
        self.lambda_tau.iter().map(|l| (-t * l).exp()).collect()
    }

    /// One-step drift factors `lambda_tau^{-1} (1 - exp(-tau lambda_tau)) q_tau`.
    pub fn drift_factors(&self) -> Vec<f64> {
        self.lambda_tau
            .iter()
            .zip(&self.q_tau)
            .map(|(l, q)| -(-self.tau * l).exp_m1() / l * q)
            .collect()
    }

    /// One-step noise variances `q_tau (1 - exp(-2 tau lambda_tau)) / (2 lambda_tau)`.
    pub fn noise_variances(&self) -> Vec<f64> {
        self.lambda_tau
            .iter()
            .zip(&self.q_tau)
            .map(|(l, q)| -q * (-2.0 * self.tau * l).exp_m1() / (2.0 * l))
            .collect()
    }
}

/// `log(1 + z) / z`, with the limit 1 at `z = 0`.
fn log1p_ratio(z: f64) -> f64 {
    if z == 0.0 {
        1.0
    } else {
        z.ln_1p() / z
    }
}

/// Residuals of the three per-mode identities
/// `1 - a^2 = 2 tau lambda b^2`, `tau b^2 / (1 - a^2) = 1 / (2 lambda)` and
/// `q_tau / lambda_tau = 1 / lambda`, each relative to its right-hand side.
pub fn identity_residuals(tau: f64, lambda: f64) -> [f64; 3] {
    let z = tau * lambda;
    let a = 1.0 / (1.0 + z);
    let b2 = (2.0 + z) / (2.0 * (1.0 + z) * (1.0 + z));
    let one_minus_a2 = z * (2.0 + z) * a * a;
    let q = log1p_ratio(z);
    let lambda_tau = q * lambda;
    let rhs1 = 2.0 * z * b2;
    [
        ((one_minus_a2 - rhs1) / rhs1).abs(),
        ((tau * b2 / one_minus_a2) * 2.0 * lambda - 1.0).abs(),
        ((q / lambda_tau) * lambda - 1.0).abs(),
    ]
}

#[derive(Debug, Clone, PartialEq)]
pub struct IdentityReport {
    pub violations: Vec<usize>,
    pub max_residual: f64,
}

/// Checks the identities mode by mode at tolerance `1e-12`.
pub fn check_identities(
    spectra: &ModifiedSpectra,
    factors: &ResolventFactors,
) -> Result<IdentityReport> {
    let scalars = factors
        .resolvent_scalars()
        .ok_or(Error::SpectralOnly("identity check"))?;
    if scalars.len() != spectra.len() {
        return Err(Error::DimensionMismatch {
            expected: spectra.len(),
            found: scalars.len(),
        });
    }
    let tau = spectra.tau();
    let mut violations = Vec::new();
    let mut max_residual: f64 = 0.0;
    for (j, (&lambda, &a)) in spectra.eigenvalues().iter().zip(scalars).enumerate() {
        let mut r = identity_residuals(tau, lambda);
        // The factors must carry the same resolvent.
        r[0] = r[0].max((a * (1.0 + tau * lambda) - 1.0).abs());
        let worst = r.iter().cloned().fold(0.0, f64::max);
        max_residual = max_residual.max(worst);
        if worst > 1e-12 {
            violations.push(j + 1);
        }
    }
    Ok(IdentityReport {
        violations,
        max_residual,
    })
}

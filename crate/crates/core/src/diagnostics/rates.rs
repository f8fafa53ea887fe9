use crate::error::{Error, Result};

/// Least-squares fit of `log(error) = intercept + slope log(tau)`.
#[derive(Debug, Clone, PartialEq)]
pub struct RateFit {
    pub taus: Vec<f64>,
    pub errors: Vec<f64>,
    /// Standard errors of Monte Carlo estimates, when available.
    pub stderrs: Option<Vec<f64>>,
    /// Which points entered the fit.
    pub used: Vec<bool>,
    pub slope: f64,
    pub intercept: f64,
    /// Root-mean-square residual in log space.
    pub residual: f64,
}

impl RateFit {
    /// `C` such that `error ~ C tau^p` with the exponent held at `p`,
    /// as the geometric mean of `error / tau^p` over the fitted points.
    pub fn constant_at(&self, exponent: f64) -> f64 {
        let logs: Vec<f64> = self
            .taus
            .iter()
            .zip(&self.errors)
            .zip(&self.used)
            .filter(|(_, u)| **u)
            .map(|((t, e), _)| e.ln() - exponent * t.ln())
            .collect();
        (logs.iter().sum::<f64>() / logs.len() as f64).exp()
    }

    pub fn n_used(&self) -> usize {
        self.used.iter().filter(|u| **u).count()
    }
}

pub fn fit_rate(taus: &[f64], errors: &[f64]) -> Result<RateFit> {
    if taus.len() != errors.len() {
        return Err(Error::DimensionMismatch {
            expected: taus.len(),
            found: errors.len(),
        });
    }
    if taus.len() < 3 {
        return Err(Error::FitRefused(format!(
            "{} points, need at least 3",
            taus.len()
        )));
    }
    if let Some((t, e)) = taus
        .iter()
        .zip(errors)
        .find(|(t, e)| !(t.is_finite() && **t > 0.0 && e.is_finite() && **e > 0.0))
    {
        return Err(Error::invalid(format!(
            "non-positive pair (tau={t}, error={e})"
        )));
    }
    let used = vec![true; taus.len()];
    Ok(least_squares(taus, errors, None, used))
}

/// Fit restricted to points whose error exceeds `k` standard errors.
pub fn fit_rate_above_noise(
    taus: &[f64],
    errors: &[f64],
    stderrs: &[f64],
    k: f64,
) -> Result<RateFit> {
    if taus.len() != errors.len() || taus.len() != stderrs.len() {
        return Err(Error::DimensionMismatch {
            expected: taus.len(),
            found: errors.len().min(stderrs.len()),
        });
    }
    let used: Vec<bool> = errors
        .iter()
        .zip(stderrs)
        .map(|(e, s)| e.is_finite() && s.is_finite() && *e > k * s && *e > 0.0)
        .collect();
    let n = used.iter().filter(|u| **u).count();
    if n < 3 {
        return Err(Error::FitRefused(format!(
            "only {n} of {} points exceed {k} standard errors",
            taus.len()
        )));
    }
    Ok(least_squares(taus, errors, Some(stderrs.to_vec()), used))
}

fn least_squares(
    taus: &[f64],
    errors: &[f64],
    stderrs: Option<Vec<f64>>,
    used: Vec<bool>,
) -> RateFit {
    let pts: Vec<(f64, f64)> = taus
        .iter()
        .zip(errors)
        .zip(&used)
        .filter(|(_, u)| **u)
        .map(|((t, e), _)| (t.ln(), e.ln()))
        .collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxy: f64 = pts.iter().map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = pts.iter().map(|(x, _)| (x - mx) * (x - mx)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let residual = (pts
        .iter()
        .map(|(x, y)| (y - intercept - slope * x).powi(2))
        .sum::<f64>()
        / n)
        .sqrt();
    RateFit {
        taus: taus.to_vec(),
        errors: errors.to_vec(),
        stderrs,
        used,
        slope,
        intercept,
        residual,
    }
}

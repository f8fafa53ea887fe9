//! Asymptotic-preserving integration of the slow-fast system
//!
//! ```text
//! dX = -Lambda X dt + G(X, Y) dt,
//! dY = -(1/eps) Lambda Y dt + sigma(X) eps^{-1/2} dW.
//! ```
//!
//! The fast component is advanced by the modified Euler scheme at step
//! `tau/eps`, which samples `N(0, sigma^2 Lambda^{-1}/2)` exactly in the limit
//! `eps -> 0`; the slow component then sees the updated fast state.

use std::f64::consts::FRAC_1_SQRT_2;

use crate::diagnostics::{fit_rate_above_noise, Observable, RateFit};
use crate::error::{Error, Result};
use crate::field::{FieldState, Representation};
use crate::integrators::steps_for;
use crate::noise::{par_replicas, NoiseStream};
use crate::operators::{ResolventFactors, SpatialOperator, SpectralOperator};
use crate::problems::SlowFastSpec;
use crate::stats::mean_and_stderr;

#[derive(Debug, Clone, PartialEq)]
pub struct SlowFastState {
    pub x: FieldState,
    pub y: FieldState,
}

impl SlowFastState {
    pub fn new(x: FieldState, y: FieldState) -> Result<Self> {
        x.expect_like(&y)?;
        Ok(SlowFastState { x, y })
    }
}

/// Noise used in the fast update.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FastNoise {
    /// Modified Euler noise operators (asymptotic preserving).
    Modified,
    /// Standard linear-implicit Euler noise, for contrast.
    Standard,
}

/// `G(x, y)` evaluated on the grid, returned in the representation of `x`.
fn coupling(
    op: &SpatialOperator,
    sf: &SlowFastSpec,
    x: &FieldState,
    y: &FieldState,
) -> Result<FieldState> {
    match op {
        SpatialOperator::FiniteDifference(_) => sf.apply_g(x, y),
        SpatialOperator::Spectral(s) => s.to_modal(&sf.apply_g(&s.to_nodal(x)?, &s.to_nodal(y)?)?),
    }
}

#[derive(Debug, Clone)]
pub struct ApScheme {
    op: SpatialOperator,
    slow: ResolventFactors,
    fast: ResolventFactors,
    epsilon: f64,
    fast_noise: FastNoise,
}

impl ApScheme {
    pub fn new(
        op: &SpatialOperator,
        tau: f64,
        epsilon: f64,
        fast_noise: FastNoise,
    ) -> Result<Self> {
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(Error::invalid(format!(
                "epsilon must be positive, got {epsilon}"
            )));
        }
        Ok(ApScheme {
            op: op.clone(),
            slow: op.factorize(tau)?,
            fast: op.factorize(tau / epsilon)?,
            epsilon,
            fast_noise,
        })
    }

    pub fn tau(&self) -> f64 {
        self.slow.tau()
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn step(
        &self,
        sf: &SlowFastSpec,
        s: &SlowFastState,
        stream: &mut NoiseStream,
    ) -> Result<SlowFastState> {
        let (n, r) = (self.op.len(), self.op.representation());
        let g1 = stream.draw_cylindrical(n, r);
        let g2 = stream.draw_cylindrical(n, r);
        self.step_with(sf, s, &g1, &g2)
    }

    /// One step on given draws; the standard fast noise uses `(g1 + g2)/sqrt(2)`.
    pub fn step_with(
        &self,
        sf: &SlowFastSpec,
        s: &SlowFastState,
        g1: &FieldState,
        g2: &FieldState,
    ) -> Result<SlowFastState> {
        self.slow.check(&s.x)?;
        self.slow.check(&s.y)?;
        let sigma = sf.sigma(&s.x);
        let y = match self.fast_noise {
            FastNoise::Modified => {
                let mut y = self.fast.apply_resolvent(&s.y)?;
                y.axpy(sigma, &self.fast.sample_modified_noise(g1, g2)?)?;
                y
            }
            FastNoise::Standard => {
                let mut y = s.y.clone();
                let scale = sigma * self.fast.tau().sqrt() * FRAC_1_SQRT_2;
                y.axpy(scale, g1)?;
                y.axpy(scale, g2)?;
                self.fast.resolve_in_place(y.values_mut());
                y
            }
        };
        let mut x = s.x.clone();
        x.axpy(self.tau(), &coupling(&self.op, sf, &s.x, &y)?)?;
        self.slow.resolve_in_place(x.values_mut());
        Ok(SlowFastState { x, y })
    }
}

/// The `eps -> 0` limit of [`ApScheme`]:
/// `X_{n+1} = A_tau (X_n + tau G(X_n, sigma(X_n) Q^{1/2} g))` with
/// `Q = Lambda^{-1}/2`.
#[derive(Debug, Clone)]
pub struct LimitingScheme {
    op: SpatialOperator,
    slow: ResolventFactors,
    z_scale: Vec<f64>,
}

impl LimitingScheme {
    pub fn new(op: &SpectralOperator, tau: f64) -> Result<Self> {
        let spatial = SpatialOperator::Spectral(op.clone());
        Ok(LimitingScheme {
            slow: spatial.factorize(tau)?,
            op: spatial,
            z_scale: op
                .eigenvalues()
                .iter()
                .map(|l| (2.0 * l).sqrt().recip())
                .collect(),
        })
    }

    pub fn tau(&self) -> f64 {
        self.slow.tau()
    }

    /// `Q^{1/2} g` for a modal draw `g`.
    pub fn invariant_sample(&self, g: &FieldState) -> Result<FieldState> {
        self.slow.check(g)?;
        Ok(FieldState::modal(
            g.values()
                .iter()
                .zip(&self.z_scale)
                .map(|(g, s)| g * s)
                .collect(),
        ))
    }

    pub fn step(
        &self,
        sf: &SlowFastSpec,
        x: &FieldState,
        stream: &mut NoiseStream,
    ) -> Result<FieldState> {
        let g = stream.draw_cylindrical(x.len(), Representation::Modal);
        self.step_with(sf, x, &g)
    }

    pub fn step_with(
        &self,
        sf: &SlowFastSpec,
        x: &FieldState,
        g: &FieldState,
    ) -> Result<FieldState> {
        self.slow.check(x)?;
        let mut z = self.invariant_sample(g)?;
        z.scale(sf.sigma(x));
        let mut out = x.clone();
        out.axpy(self.tau(), &coupling(&self.op, sf, x, &z)?)?;
        self.slow.resolve_in_place(out.values_mut());
        Ok(out)
    }
}

pub fn step_limiting(
    scheme: &LimitingScheme,
    sf: &SlowFastSpec,
    x: &FieldState,
    stream: &mut NoiseStream,
) -> Result<FieldState> {
    scheme.step(sf, x, stream)
}

#[derive(Debug, Clone)]
pub struct AveragedDrift {
    /// Grid values of the estimated average.
    pub mean: FieldState,
    pub stderr: Vec<f64>,
}

/// Monte Carlo estimate of `E G(x, sigma(x) Z)` with `Z ~ N(0, Lambda^{-1}/2)`.
pub fn averaged_drift_mc(
    x: &FieldState,
    sf: &SlowFastSpec,
    op: &SpectralOperator,
    samples: usize,
    stream: &mut NoiseStream,
) -> Result<AveragedDrift> {
    if samples == 0 {
        return Err(Error::invalid("need at least one sample"));
    }
    x.expect(Representation::Modal, op.len())?;
    let n = op.len();
    let scale: Vec<f64> = op
        .eigenvalues()
        .iter()
        .map(|l| (2.0 * l).sqrt().recip())
        .collect();
    let x_nodal = op.to_nodal(x)?;
    let sigma = sf.sigma(x);
    let mut sum = vec![0.0; n];
    let mut sq = vec![0.0; n];
    for _ in 0..samples {
        let mut z = stream.draw_cylindrical(n, Representation::Modal);
        z.values_mut()
            .iter_mut()
            .zip(&scale)
            .for_each(|(v, s)| *v *= s * sigma);
        let g = sf.apply_g(&x_nodal, &op.to_nodal(&z)?)?;
        for ((s, q), v) in sum.iter_mut().zip(sq.iter_mut()).zip(g.values()) {
            *s += v;
            *q += v * v;
        }
    }
    let m = samples as f64;
    let mean: Vec<f64> = sum.iter().map(|s| s / m).collect();
    let stderr = if samples < 2 {
        vec![f64::INFINITY; n]
    } else {
        sq.iter()
            .zip(&mean)
            .map(|(q, mu)| ((q / m - mu * mu).max(0.0) * m / (m - 1.0) / m).sqrt())
            .collect()
    };
    Ok(AveragedDrift {
        mean: FieldState::nodal(mean),
        stderr,
    })
}

/// `E cos(Z(xi)) = exp(-xi (1 - xi) / 4)` for `Z ~ N(0, Lambda^{-1}/2)`,
/// whose pointwise variance is `xi (1 - xi) / 2`.
pub fn cos_averaged_drift(xi: f64) -> f64 {
    (-xi * (1.0 - xi) / 4.0).exp()
}

/// Deterministic linear-implicit Euler for `dx = -Lambda x + Gbar(x)` with
/// `gbar` acting on grid values.
pub fn averaged_euler(
    op: &SpectralOperator,
    x0: &FieldState,
    tau: f64,
    n_steps: usize,
    gbar: &dyn Fn(&FieldState) -> FieldState,
) -> Result<FieldState> {
    let f = SpatialOperator::Spectral(op.clone()).factorize(tau)?;
    let mut x = x0.clone();
    f.check(&x)?;
    for _ in 0..n_steps {
        let drift = op.to_modal(&gbar(&op.to_nodal(&x)?))?;
        x.axpy(tau, &drift)?;
        f.resolve_in_place(x.values_mut());
    }
    Ok(x)
}

#[derive(Debug, Clone)]
pub struct SweepConfig {
    pub tau: f64,
    pub n_steps: usize,
    pub epsilons: Vec<f64>,
    pub replicas: usize,
    pub master_seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SweepRow {
    pub epsilon: f64,
    pub phi_mean: f64,
    pub phi_stderr: f64,
    /// `E[phi(X^eps) - phi(X^0)]` on coupled noise.
    pub gap: f64,
    pub gap_stderr: f64,
    /// Same gap for the standard-noise fast update.
    pub standard_gap: f64,
    pub standard_gap_stderr: f64,
}

#[derive(Debug, Clone)]
pub struct SweepResult {
    pub rows: Vec<SweepRow>,
    /// `E phi(X^0_n)` and its standard error, the resolution of the sweep.
    pub limit: (f64, f64),
}

impl SweepResult {
    /// `|gap|` never grows by more than two combined standard errors from
    /// one epsilon to the next.
    pub fn monotone_within_noise(&self) -> bool {
        self.rows.windows(2).all(|w| {
            let se = (w[0].gap_stderr.powi(2) + w[1].gap_stderr.powi(2)).sqrt();
            w[1].gap.abs() <= w[0].gap.abs() + 2.0 * se
        })
    }

    /// The last gap is no larger than the standard error of the limit mean.
    pub fn reaches_noise_floor(&self) -> bool {
        self.rows
            .last()
            .is_some_and(|r| r.gap.abs() <= self.limit.1.max(2.0 * r.gap_stderr))
    }
}

/// Runs the AP scheme for each epsilon, the standard-noise variant and the
/// limiting scheme on shared draws: replica `r` uses stream `(seed, r)` for
/// every run, and the limiting scheme consumes the second draw of each pair,
/// which is the pathwise limit of the modified fast update.
pub fn epsilon_sweep(
    cfg: &SweepConfig,
    op: &SpectralOperator,
    sf: &SlowFastSpec,
    initial: &SlowFastState,
    phi: Observable,
) -> Result<SweepResult> {
    if cfg.replicas == 0 {
        return Err(Error::invalid("need at least one replica"));
    }
    let spatial = SpatialOperator::Spectral(op.clone());
    let mut ap = Vec::new();
    for &eps in &cfg.epsilons {
        ap.push((
            ApScheme::new(&spatial, cfg.tau, eps, FastNoise::Modified)?,
            ApScheme::new(&spatial, cfg.tau, eps, FastNoise::Standard)?,
        ));
    }
    let limiting = LimitingScheme::new(op, cfg.tau)?;
    let n = op.len();
    let rows = par_replicas(cfg.master_seed, cfg.replicas, |r, _| -> Result<Vec<f64>> {
        let draws = |stream: &mut NoiseStream| {
            (
                stream.draw_cylindrical(n, Representation::Modal),
                stream.draw_cylindrical(n, Representation::Modal),
            )
        };
        let mut stream = NoiseStream::new(cfg.master_seed, r as u64);
        let mut x = initial.x.clone();
        for _ in 0..cfg.n_steps {
            let (_, g2) = draws(&mut stream);
            x = limiting.step_with(sf, &x, &g2)?;
        }
        let phi0 = phi.evaluate(&x)?;
        let mut out = vec![phi0];
        for (modified, standard) in &ap {
            let sfe = sf.with_epsilon(modified.epsilon())?;
            for scheme in [modified, standard] {
                let mut stream = NoiseStream::new(cfg.master_seed, r as u64);
                let mut s = initial.clone();
                for _ in 0..cfg.n_steps {
                    let (g1, g2) = draws(&mut stream);
                    s = scheme.step_with(&sfe, &s, &g1, &g2)?;
                }
                out.push(phi.evaluate(&s.x)?);
            }
        }
        Ok(out)
    });
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    let col = |c: usize| -> Vec<f64> { rows.iter().map(|r| r[c]).collect() };
    let diff = |c: usize| -> Vec<f64> { rows.iter().map(|r| r[c] - r[0]).collect() };
    let limit = mean_and_stderr(&col(0));
    let mut out = Vec::new();
    for (k, &eps) in cfg.epsilons.iter().enumerate() {
        let (pm, ps) = mean_and_stderr(&col(1 + 2 * k));
        let (gm, gs) = mean_and_stderr(&diff(1 + 2 * k));
        let (sm, ss) = mean_and_stderr(&diff(2 + 2 * k));
        out.push(SweepRow {
            epsilon: eps,
            phi_mean: pm,
            phi_stderr: ps,
            gap: gm,
            gap_stderr: gs,
            standard_gap: sm,
            standard_gap_stderr: ss,
        });
    }
    Ok(SweepResult { rows: out, limit })
}

#[derive(Debug, Clone)]
pub struct ConsistencyConfig {
    pub taus: Vec<f64>,
    pub t_end: f64,
    pub replicas: usize,
    pub master_seed: u64,
    /// Reference step is `tau / refinement`.
    pub refinement: usize,
}

#[derive(Debug)]
pub struct ConsistencyResult {
    pub taus: Vec<f64>,
    pub errors: Vec<f64>,
    pub stderrs: Vec<f64>,
    pub fit: Result<RateFit>,
}

/// Compares `E phi(X^{0,tau}_N)` with `phi` of the averaged equation solved
/// by linear-implicit Euler at `tau / refinement`.
pub fn limiting_consistency(
    cfg: &ConsistencyConfig,
    op: &SpectralOperator,
    sf: &SlowFastSpec,
    x0: &FieldState,
    phi: Observable,
    gbar: &(dyn Fn(&FieldState) -> FieldState + Sync),
) -> Result<ConsistencyResult> {
    if cfg.replicas == 0 || cfg.refinement == 0 {
        return Err(Error::invalid(
            "need at least one replica and refinement >= 1",
        ));
    }
    let schemes = cfg
        .taus
        .iter()
        .map(|&tau| Ok((LimitingScheme::new(op, tau)?, steps_for(cfg.t_end, tau)?)))
        .collect::<Result<Vec<_>>>()?;
    let rows = par_replicas(
        cfg.master_seed,
        cfg.replicas,
        |_, stream| -> Result<Vec<f64>> {
            schemes
                .iter()
                .map(|(scheme, n)| {
                    let mut x = x0.clone();
                    for _ in 0..*n {
                        x = scheme.step(sf, &x, stream)?;
                    }
                    phi.evaluate(&x)
                })
                .collect()
        },
    );
    let rows = rows.into_iter().collect::<Result<Vec<_>>>()?;
    let mut errors = Vec::new();
    let mut stderrs = Vec::new();
    for (k, &tau) in cfg.taus.iter().enumerate() {
        let fine = tau / cfg.refinement as f64;
        let reference = averaged_euler(op, x0, fine, steps_for(cfg.t_end, fine)?, gbar)?;
        let target = phi.evaluate(&reference)?;
        let (m, s) = mean_and_stderr(&rows.iter().map(|r| r[k]).collect::<Vec<_>>());
        errors.push((m - target).abs());
        stderrs.push(s);
    }
    let fit = fit_rate_above_noise(&cfg.taus, &errors, &stderrs, 3.0);
    Ok(ConsistencyResult {
        taus: cfg.taus.clone(),
        errors,
        stderrs,
        fit,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::operators::FdOperator;

    fn zero_g() -> SlowFastSpec {
        SlowFastSpec::new("zero", |_, _| 0.0, |_| 1.0, 0.1, 0.0).unwrap()
    }

    #[test]
    fn noiseless_fast_component_contracts() {
        let op: SpatialOperator = FdOperator::laplacian(6).unwrap().into();
        let sf = SlowFastSpec::new("zero", |_, _| 0.0, |_| 0.0, 0.05, 0.0).unwrap();
        let ap = ApScheme::new(&op, 0.1, 0.05, FastNoise::Modified).unwrap();
        let y0 = FieldState::nodal(vec![1.0, -2.0, 3.0, 0.5, 0.0, 1.0]);
        let mut s =
            SlowFastState::new(FieldState::zeros(6, Representation::Nodal), y0.clone()).unwrap();
        let mut stream = NoiseStream::new(0, 0);
        let fast = op.factorize(2.0).unwrap();
        let mut want = y0;
        for _ in 0..3 {
            s = ap.step(&sf, &s, &mut stream).unwrap();
            want = fast.apply_resolvent(&want).unwrap();
        }
        assert_eq!(s.y, want);
    }

    #[test]
    fn zero_coupling_decouples_slow_component() {
        let op: SpatialOperator = SpectralOperator::dirichlet_laplacian(5).unwrap().into();
        let ap = ApScheme::new(&op, 0.02, 0.1, FastNoise::Modified).unwrap();
        let x0 = FieldState::modal(vec![1.0, 0.5, 0.0, 0.0, 2.0]);
        let mut s =
            SlowFastState::new(x0.clone(), FieldState::zeros(5, Representation::Modal)).unwrap();
        let slow = op.factorize(0.02).unwrap();
        let mut want = x0;
        let mut stream = NoiseStream::new(1, 0);
        for _ in 0..4 {
            s = ap.step(&zero_g(), &s, &mut stream).unwrap();
            want = slow.apply_resolvent(&want).unwrap();
        }
        assert_eq!(s.x, want);
        assert!(ApScheme::new(&op, 0.02, 0.0, FastNoise::Modified).is_err());
    }

    #[test]
    fn limiting_scheme_needs_spectral_state_and_resolves_without_coupling() {
        let op = SpectralOperator::dirichlet_laplacian(4).unwrap();
        let lim = LimitingScheme::new(&op, 0.1).unwrap();
        let x0 = FieldState::unit_mode(4, 2);
        let y = lim
            .step(&zero_g(), &x0, &mut NoiseStream::new(0, 0))
            .unwrap();
        let a = 1.0 / (1.0 + 0.1 * op.eigenvalues()[1]);
        assert!((y.values()[1] - a).abs() < 1e-15);
        assert!(lim
            .step(
                &zero_g(),
                &FieldState::zeros(4, Representation::Nodal),
                &mut NoiseStream::new(0, 0)
            )
            .is_err());
    }

    #[test]
    fn averaged_drift_trivial_cases() {
        let op = SpectralOperator::dirichlet_laplacian(16).unwrap();
        let x = op
            .to_modal(&FieldState::nodal(
                (1..=16).map(|i| i as f64 / 10.0).collect(),
            ))
            .unwrap();
        let mut stream = NoiseStream::new(4, 0);
        let lin = SlowFastSpec::new("y", |_, y| y, |_| 1.0, 1.0, f64::INFINITY).unwrap();
        let avg = averaged_drift_mc(&x, &lin, &op, 20_000, &mut stream).unwrap();
        for (m, s) in avg.mean.values().iter().zip(&avg.stderr) {
            assert!(m.abs() < 4.0 * s, "{m} vs {s}");
        }
        let ident = SlowFastSpec::new("x", |x, _| x, |_| 1.0, 1.0, f64::INFINITY).unwrap();
        let avg = averaged_drift_mc(&x, &ident, &op, 3, &mut stream).unwrap();
        let xn = op.to_nodal(&x).unwrap();
        for (m, v) in avg.mean.values().iter().zip(xn.values()) {
            assert!((m - v).abs() < 1e-12);
        }
        assert!(averaged_drift_mc(&x, &ident, &op, 0, &mut stream).is_err());
    }

    #[test]
    fn closed_form_average_at_midpoint() {
        assert!((cos_averaged_drift(0.5) - (-1.0f64 / 16.0).exp()).abs() < 1e-16);
        assert!((cos_averaged_drift(0.5) - 0.939_41).abs() < 5e-6);
    }
}

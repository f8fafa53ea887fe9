//! Problem data: the pointwise nonlinearity `f`, its potential, and slow-fast
//! couplings.

use std::fmt;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::field::{FieldState, Representation};

pub type ScalarFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;
pub type CouplingFn = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;
pub type AmplitudeFn = Arc<dyn Fn(&FieldState) -> f64 + Send + Sync>;

/// `F(x) = f(x(.))`, optionally with `v' = f` so that `F = -DV` for
/// `V(x) = -int v(x(xi)) dxi`.
#[derive(Clone)]
pub struct ProblemSpec {
    label: String,
    f: Option<ScalarFn>,
    v: Option<ScalarFn>,
    lipschitz: f64,
}

impl fmt::Debug for ProblemSpec {
    fn fmt(&self, fmt: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt.debug_struct("ProblemSpec")
            .field("label", &self.label)
            .field("has_drift", &self.f.is_some())
            .field("has_potential", &self.v.is_some())
            .field("lipschitz", &self.lipschitz)
            .finish()
    }
}

impl ProblemSpec {
    pub fn new(
        label: impl Into<String>,
        f: impl Fn(f64) -> f64 + Send + Sync + 'static,
        lipschitz: f64,
    ) -> Self {
        ProblemSpec {
            label: label.into(),
            f: Some(Arc::new(f)),
            v: None,
            lipschitz,
        }
    }

    pub fn with_potential(mut self, v: impl Fn(f64) -> f64 + Send + Sync + 'static) -> Self {
        self.v = Some(Arc::new(v));
        self
    }

    /// `f = 0`, `V = 0`.
    pub fn ornstein_uhlenbeck() -> Self {
        ProblemSpec {
            label: "ou".into(),
            f: None,
            v: Some(Arc::new(|_| 0.0)),
            lipschitz: 0.0,
        }
    }

    /// `f = sin`.
    pub fn sine() -> Self {
        let mut p = Self::gradient_cos(1.0);
        p.label = "sine".into();
        p
    }

    /// `f(z) = beta sin z`, `v(z) = -beta cos z`, so `V(x) = beta int cos x`.
    pub fn gradient_cos(beta: f64) -> Self {
        ProblemSpec::new(
            format!("gradient_cos({beta})"),
            move |z| beta * z.sin(),
            beta.abs(),
        )
        .with_potential(move |z| -beta * z.cos())
    }

    /// `ou`, `sine` or `gradient_cos(beta)`.
    pub fn parse(name: &str) -> Result<Self> {
        let name = name.trim();
        match name {
            "ou" => return Ok(Self::ornstein_uhlenbeck()),
            "sine" => return Ok(Self::sine()),
            _ => {}
        }
        if let Some(arg) = name
            .strip_prefix("gradient_cos(")
            .and_then(|s| s.strip_suffix(')'))
        {
            let beta: f64 = arg
                .trim()
                .parse()
                .map_err(|_| Error::invalid(format!("bad beta in problem `{name}`")))?;
            return Ok(Self::gradient_cos(beta));
        }
        Err(Error::invalid(format!(
            "unknown problem `{name}` (expected ou, sine or gradient_cos(beta))"
        )))
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn lipschitz(&self) -> f64 {
        self.lipschitz
    }

    pub fn has_drift(&self) -> bool {
        self.f.is_some()
    }

    pub fn has_potential(&self) -> bool {
        self.v.is_some()
    }

    pub fn f(&self, z: f64) -> f64 {
        self.f.as_ref().map_or(0.0, |f| f(z))
    }

    pub fn v(&self, z: f64) -> Option<f64> {
        self.v.as_ref().map(|v| v(z))
    }

    /// Pointwise `f` on grid values.
    pub fn apply_f(&self, x: &FieldState) -> Result<FieldState> {
        x.expect(Representation::Nodal, x.len())?;
        Ok(FieldState::nodal(
            x.values().iter().map(|&z| self.f(z)).collect(),
        ))
    }

    /// `V(x) = -h sum_i v(x_i)`.
    pub fn evaluate_v(&self, x: &FieldState) -> Result<f64> {
        x.expect(Representation::Nodal, x.len())?;
        let v = self
            .v
            .as_ref()
            .ok_or_else(|| Error::invalid(format!("problem `{}` has no potential", self.label)))?;
        let s: f64 = x.values().iter().map(|&z| v(z)).sum();
        Ok(-x.mesh_width() * s)
    }
}

/// Slow-fast coupling `G(x, y)` applied pointwise on the grid, the fast noise
/// amplitude `sigma(x)` and the time-scale ratio `epsilon`.
#[derive(Clone)]
pub struct SlowFastSpec {
    label: String,
    g: CouplingFn,
    sigma: AmplitudeFn,
    epsilon: f64,
    g_bound: f64,
}

impl fmt::Debug for SlowFastSpec {
    fn fmt(&self, fmt: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt.debug_struct("SlowFastSpec")
            .field("label", &self.label)
            .field("epsilon", &self.epsilon)
            .field("g_bound", &self.g_bound)
            .finish()
    }
}

impl SlowFastSpec {
    pub fn new(
        label: impl Into<String>,
        g: impl Fn(f64, f64) -> f64 + Send + Sync + 'static,
        sigma: impl Fn(&FieldState) -> f64 + Send + Sync + 'static,
        epsilon: f64,
        g_bound: f64,
    ) -> Result<Self> {
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(Error::invalid(format!(
                "epsilon must be positive, got {epsilon}"
            )));
        }
        Ok(SlowFastSpec {
            label: label.into(),
            g: Arc::new(g),
            sigma: Arc::new(sigma),
            epsilon,
            g_bound,
        })
    }

    /// `G(x, y) = cos y`, `sigma = 1`.
    pub fn cosine(epsilon: f64) -> Result<Self> {
        Self::new("cos", |_, y| y.cos(), |_| 1.0, epsilon, 1.0)
    }

    pub fn with_epsilon(&self, epsilon: f64) -> Result<Self> {
        if !(epsilon.is_finite() && epsilon > 0.0) {
            return Err(Error::invalid(format!(
                "epsilon must be positive, got {epsilon}"
            )));
        }
        Ok(SlowFastSpec {
            epsilon,
            ..self.clone()
        })
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn epsilon(&self) -> f64 {
        self.epsilon
    }

    pub fn g_bound(&self) -> f64 {
        self.g_bound
    }

    pub fn g(&self, x: f64, y: f64) -> f64 {
        (self.g)(x, y)
    }

    pub fn sigma(&self, x: &FieldState) -> f64 {
        (self.sigma)(x)
    }

    /// Pointwise `G` on grid values.
    pub fn apply_g(&self, x: &FieldState, y: &FieldState) -> Result<FieldState> {
        x.expect(Representation::Nodal, x.len())?;
        y.expect(Representation::Nodal, x.len())?;
        Ok(FieldState::nodal(
            x.values()
                .iter()
                .zip(y.values())
                .map(|(&a, &b)| self.g(a, b))
                .collect(),
        ))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::FRAC_PI_2;

    #[test]
    fn nonlinearity_examples() {
        let p = ProblemSpec::sine();
        assert_eq!(
            p.apply_f(&FieldState::nodal(vec![0.0; 3]))
                .unwrap()
                .values(),
            &[0.0; 3]
        );
        let q = ProblemSpec::gradient_cos(0.5);
        let y = q.apply_f(&FieldState::nodal(vec![FRAC_PI_2; 4])).unwrap();
        assert!(y.values().iter().all(|v| (v - 0.5).abs() < 1e-15));
        assert!(p.lipschitz() <= std::f64::consts::PI.powi(2));
        assert!(p.apply_f(&FieldState::modal(vec![0.0])).is_err());
    }

    #[test]
    fn potential_examples() {
        let beta = 0.5;
        let p = ProblemSpec::gradient_cos(beta);
        let zero = FieldState::nodal(vec![0.0; 7]);
        // Zero boundary values: h * J = J / (J + 1).
        assert!((p.evaluate_v(&zero).unwrap() - beta * 7.0 / 8.0).abs() < 1e-15);
        assert_eq!(
            ProblemSpec::gradient_cos(0.0).evaluate_v(&zero).unwrap(),
            0.0
        );
        let wild = FieldState::nodal((0..7).map(|i| 3.7 * i as f64).collect());
        assert!(p.evaluate_v(&wild).unwrap().abs() <= beta);
        let no_v = ProblemSpec::new("x", |z| z, 1.0);
        assert!(no_v.evaluate_v(&zero).is_err());
    }

    #[test]
    fn parse_names() {
        assert!(!ProblemSpec::parse("ou").unwrap().has_drift());
        assert_eq!(ProblemSpec::parse("sine").unwrap().f(1.0), 1f64.sin());
        assert_eq!(
            ProblemSpec::parse("gradient_cos(0.25)")
                .unwrap()
                .f(FRAC_PI_2),
            0.25
        );
        assert!(ProblemSpec::parse("allen_cahn").is_err());
        assert!(ProblemSpec::parse("gradient_cos(x)").is_err());
    }

    #[test]
    fn slow_fast_rejects_nonpositive_epsilon() {
        assert!(SlowFastSpec::cosine(0.0).is_err());
        assert!(SlowFastSpec::cosine(-1.0).is_err());
        assert_eq!(SlowFastSpec::cosine(0.1).unwrap().g(3.0, 0.0), 1.0);
    }
}

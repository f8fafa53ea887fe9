//! Discretizations of `Lambda = -d/dxi (a d/dxi)` with Dirichlet conditions,
//! the resolvent `A_tau = (I + tau Lambda)^{-1}` and the noise operators of the
//! modified Euler scheme.

use std::f64::consts::{FRAC_1_SQRT_2, PI, SQRT_2};
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::field::{FieldState, Representation};
use crate::sine::SineTransform;

/// `e_j(xi) = sqrt(2) sin(j pi xi)`.
pub fn eigenfunction(j: usize, xi: f64) -> f64 {
    SQRT_2 * (j as f64 * PI * xi).sin()
}

/// Diagonal operator in the sine basis.
#[derive(Debug, Clone)]
pub struct SpectralOperator {
    lambdas: Vec<f64>,
    transform: Arc<SineTransform>,
}

impl SpectralOperator {
    /// Dirichlet Laplacian truncated to `j_modes` modes: `lambda_j = (j pi)^2`.
    pub fn dirichlet_laplacian(j_modes: usize) -> Result<Self> {
        if j_modes == 0 {
            return Err(Error::invalid("spectral operator needs J >= 1"));
        }
        let lambdas = (1..=j_modes).map(|j| (j as f64 * PI).powi(2)).collect();
        Self::from_eigenvalues(lambdas)
    }

    pub fn from_eigenvalues(lambdas: Vec<f64>) -> Result<Self> {
        if lambdas.is_empty() {
            return Err(Error::invalid("spectral operator needs J >= 1"));
        }
        if !lambdas.iter().all(|l| l.is_finite() && *l > 0.0) {
            return Err(Error::invalid("eigenvalues must be positive and finite"));
        }
        if lambdas.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("eigenvalues must be strictly increasing"));
        }
        let transform = SineTransform::shared(lambdas.len());
        Ok(SpectralOperator { lambdas, transform })
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

    pub fn mesh_width(&self) -> f64 {
        1.0 / (self.len() as f64 + 1.0)
    }

    /// Interior grid points `xi_i = i h`.
    pub fn grid(&self) -> Vec<f64> {
        let h = self.mesh_width();
        (1..=self.len()).map(|i| i as f64 * h).collect()
    }

    /// `(sum_j lambda_j^{2 alpha} x_j^2)^{1/2}`.
    pub fn sobolev_norm(&self, x: &FieldState, alpha: f64) -> Result<f64> {
        x.expect(Representation::Modal, self.len())?;
        if !(0.0..=1.0).contains(&alpha) {
            return Err(Error::invalid(format!("alpha = {alpha} outside [0, 1]")));
        }
        let s: f64 = self
            .lambdas
            .iter()
            .zip(x.values())
            .map(|(l, c)| l.powf(2.0 * alpha) * c * c)
            .sum();
        Ok(s.sqrt())
    }

    /// Converts between grid values and sine coefficients, in whichever
    /// direction the input requires.
    pub fn transform(&self, x: &FieldState) -> Result<FieldState> {
        match x.representation() {
            Representation::Nodal => self.to_modal(x),
            Representation::Modal => self.to_nodal(x),
        }
    }

    pub fn to_modal(&self, x: &FieldState) -> Result<FieldState> {
        x.expect(Representation::Nodal, self.len())?;
        let mut out = vec![0.0; self.len()];
        self.transform.analyze(x.values(), &mut out);
        Ok(FieldState::modal(out))
    }

    pub fn to_nodal(&self, x: &FieldState) -> Result<FieldState> {
        x.expect(Representation::Modal, self.len())?;
        let mut out = vec![0.0; self.len()];
        self.transform.synthesize(x.values(), &mut out);
        Ok(FieldState::nodal(out))
    }
}

/// Second-order finite differences for `-(a x')'` on interior nodes.
#[derive(Debug, Clone)]
pub struct FdOperator {
    h: f64,
    diag: Vec<f64>,
    offdiag: Vec<f64>,
}

impl FdOperator {
    /// Assembles the stencil with `a` sampled at cell midpoints.
    pub fn assemble(j_nodes: usize, a: impl Fn(f64) -> f64) -> Result<Self> {
        if j_nodes == 0 {
            return Err(Error::invalid("finite-difference operator needs J >= 1"));
        }
        let h = 1.0 / (j_nodes as f64 + 1.0);
        let mid: Vec<f64> = (0..=j_nodes).map(|i| a((i as f64 + 0.5) * h)).collect();
        if let Some(bad) = mid.iter().find(|v| !(v.is_finite() && **v > 0.0)) {
            return Err(Error::invalid(format!(
                "diffusion coefficient must be positive, got {bad}"
            )));
        }
        let h2 = h * h;
        let diag = (0..j_nodes).map(|i| (mid[i] + mid[i + 1]) / h2).collect();
        let offdiag = (0..j_nodes - 1).map(|i| -mid[i + 1] / h2).collect();
        Ok(FdOperator { h, diag, offdiag })
    }

    /// Constant coefficient `a = 1`.
    pub fn laplacian(j_nodes: usize) -> Result<Self> {
        Self::assemble(j_nodes, |_| 1.0)
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn mesh_width(&self) -> f64 {
        self.h
    }

    pub fn diag(&self) -> &[f64] {
        &self.diag
    }

    /// Sub/super-diagonal, length `J - 1`.
    pub fn offdiag(&self) -> &[f64] {
        &self.offdiag
    }

    /// `Lambda_h x`.
    pub fn apply(&self, x: &FieldState) -> Result<FieldState> {
        x.expect(Representation::Nodal, self.len())?;
        let v = x.values();
        let n = v.len();
        let mut out: Vec<f64> = self.diag.iter().zip(v).map(|(d, x)| d * x).collect();
        for i in 0..n.saturating_sub(1) {
            out[i] += self.offdiag[i] * v[i + 1];
            out[i + 1] += self.offdiag[i] * v[i];
        }
        Ok(FieldState::nodal(out))
    }
}

#[derive(Debug, Clone)]
pub enum SpatialOperator {
    Spectral(SpectralOperator),
    FiniteDifference(FdOperator),
}

impl From<SpectralOperator> for SpatialOperator {
    fn from(op: SpectralOperator) -> Self {
        SpatialOperator::Spectral(op)
    }
}

impl From<FdOperator> for SpatialOperator {
    fn from(op: FdOperator) -> Self {
        SpatialOperator::FiniteDifference(op)
    }
}

impl SpatialOperator {
    pub fn len(&self) -> usize {
        match self {
            SpatialOperator::Spectral(op) => op.len(),
            SpatialOperator::FiniteDifference(op) => op.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Spectral operators act on coefficients, finite differences on grid values.
    pub fn representation(&self) -> Representation {
        match self {
            SpatialOperator::Spectral(_) => Representation::Modal,
            SpatialOperator::FiniteDifference(_) => Representation::Nodal,
        }
    }

    pub fn as_spectral(&self) -> Option<&SpectralOperator> {
        match self {
            SpatialOperator::Spectral(op) => Some(op),
            SpatialOperator::FiniteDifference(_) => None,
        }
    }

    pub fn factorize(&self, tau: f64) -> Result<ResolventFactors> {
        ResolventFactors::new(self, tau)
    }

    /// Grid values of a state in this operator's representation.
    pub fn nodal_values(&self, x: &FieldState) -> Result<FieldState> {
        x.expect(self.representation(), self.len())?;
        match self {
            SpatialOperator::Spectral(op) => op.to_nodal(x),
            SpatialOperator::FiniteDifference(_) => Ok(x.clone()),
        }
    }
}

#[derive(Debug, Clone)]
enum Factor {
    /// `1 / (1 + tau lambda_j)`.
    Spectral(Vec<f64>),
    /// `I + tau Lambda_h = L L^T` with `L` lower bidiagonal.
    Cholesky { diag: Vec<f64>, sub: Vec<f64> },
}

/// Factorization of `I + tau Lambda` for a fixed step.
#[derive(Debug, Clone)]
pub struct ResolventFactors {
    tau: f64,
    factor: Factor,
}

impl ResolventFactors {
    pub fn new(op: &SpatialOperator, tau: f64) -> Result<Self> {
        if !(tau.is_finite() && tau > 0.0) {
            return Err(Error::invalid(format!(
                "time step must be positive, got {tau}"
            )));
        }
        let factor = match op {
            SpatialOperator::Spectral(op) => Factor::Spectral(
                op.eigenvalues()
                    .iter()
                    .map(|l| 1.0 / (1.0 + tau * l))
                    .collect(),
            ),
            SpatialOperator::FiniteDifference(op) => {
                let n = op.len();
                let mut diag = Vec::with_capacity(n);
                let mut sub = Vec::with_capacity(n.saturating_sub(1));
                let mut pivot = 1.0 + tau * op.diag()[0];
                for i in 0..n {
                    if !(pivot.is_finite() && pivot > 0.0) {
                        return Err(Error::Factorization {
                            index: i,
                            value: pivot,
                        });
                    }
                    let d = pivot.sqrt();
                    diag.push(d);
                    if i + 1 < n {
                        let l = tau * op.offdiag()[i] / d;
                        sub.push(l);
                        pivot = 1.0 + tau * op.diag()[i + 1] - l * l;
                    }
                }
                Factor::Cholesky { diag, sub }
            }
        };
        Ok(ResolventFactors { tau, factor })
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    pub fn len(&self) -> usize {
        match &self.factor {
            Factor::Spectral(a) => a.len(),
            Factor::Cholesky { diag, .. } => diag.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn representation(&self) -> Representation {
        match self.factor {
            Factor::Spectral(_) => Representation::Modal,
            Factor::Cholesky { .. } => Representation::Nodal,
        }
    }

    /// Per-mode resolvent multipliers, spectral case only.
    pub fn resolvent_scalars(&self) -> Option<&[f64]> {
        match &self.factor {
            Factor::Spectral(a) => Some(a),
            Factor::Cholesky { .. } => None,
        }
    }

    /// Diagonal and subdiagonal of `L`, finite-difference case only.
    pub fn cholesky_factor(&self) -> Option<(&[f64], &[f64])> {
        match &self.factor {
            Factor::Spectral(_) => None,
            Factor::Cholesky { diag, sub } => Some((diag, sub)),
        }
    }

    pub fn check(&self, x: &FieldState) -> Result<()> {
        x.expect(self.representation(), self.len())
    }

    /// Overwrites `v` with `A_tau v`.
    pub fn resolve_in_place(&self, v: &mut [f64]) {
        match &self.factor {
            Factor::Spectral(a) => v.iter_mut().zip(a).for_each(|(x, a)| *x *= a),
            Factor::Cholesky { diag, sub } => {
                forward_solve(diag, sub, v);
                backward_solve(diag, sub, v);
            }
        }
    }

    pub fn apply_resolvent(&self, x: &FieldState) -> Result<FieldState> {
        self.check(x)?;
        let mut out = x.clone();
        self.resolve_in_place(out.values_mut());
        Ok(out)
    }

    /// `B_{tau,2} g`, with `B_{tau,2} B_{tau,2}^T = A_tau / 2`.
    pub fn apply_b2(&self, g: &FieldState) -> Result<FieldState> {
        self.check(g)?;
        let mut out = g.clone();
        self.b2_in_place(out.values_mut());
        Ok(out)
    }

    fn b2_in_place(&self, v: &mut [f64]) {
        match &self.factor {
            Factor::Spectral(a) => v
                .iter_mut()
                .zip(a)
                .for_each(|(x, a)| *x *= FRAC_1_SQRT_2 * a.sqrt()),
            Factor::Cholesky { diag, sub } => {
                backward_solve(diag, sub, v);
                v.iter_mut().for_each(|x| *x *= FRAC_1_SQRT_2);
            }
        }
    }

    /// `sqrt(tau) (B_{tau,1} g1 + B_{tau,2} g2)` with `B_{tau,1} = A_tau / sqrt(2)`.
    pub fn sample_modified_noise(&self, g1: &FieldState, g2: &FieldState) -> Result<FieldState> {
        self.check(g1)?;
        self.check(g2)?;
        let mut first = g1.clone();
        self.resolve_in_place(first.values_mut());
        let mut second = g2.clone();
        self.b2_in_place(second.values_mut());
        let s = self.tau.sqrt();
        let values = first
            .values()
            .iter()
            .zip(second.values())
            .map(|(a, b)| s * (FRAC_1_SQRT_2 * a + b))
            .collect();
        Ok(FieldState::new(values, self.representation()))
    }

    /// Dense `L L^T`, for verification.
    pub fn reconstruct(&self) -> Option<Vec<Vec<f64>>> {
        let (diag, sub) = self.cholesky_factor()?;
        let n = diag.len();
        let mut m = vec![vec![0.0; n]; n];
        for i in 0..n {
            m[i][i] = diag[i] * diag[i] + if i > 0 { sub[i - 1] * sub[i - 1] } else { 0.0 };
            if i + 1 < n {
                m[i + 1][i] = sub[i] * diag[i];
                m[i][i + 1] = m[i + 1][i];
            }
        }
        Some(m)
    }
}

fn forward_solve(diag: &[f64], sub: &[f64], v: &mut [f64]) {
    v[0] /= diag[0];
    for i in 1..v.len() {
        v[i] = (v[i] - sub[i - 1] * v[i - 1]) / diag[i];
    }
}

fn backward_solve(diag: &[f64], sub: &[f64], v: &mut [f64]) {
    let n = v.len();
    v[n - 1] /= diag[n - 1];
    for i in (0..n - 1).rev() {
        v[i] = (v[i] - sub[i] * v[i + 1]) / diag[i];
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn spectral_eigenvalues() {
        let op = SpectralOperator::dirichlet_laplacian(2).unwrap();
        assert_relative_eq!(
            op.eigenvalues()[0],
            9.869_604_401_089_358,
            max_relative = 1e-15
        );
        assert_relative_eq!(
            op.eigenvalues()[1],
            39.478_417_604_357_43,
            max_relative = 1e-15
        );
        assert_relative_eq!(eigenfunction(1, 0.5), SQRT_2, max_relative = 1e-15);
        assert!(eigenfunction(3, 0.0).abs() < 1e-15 && eigenfunction(3, 1.0).abs() < 1e-14);
        assert!(SpectralOperator::dirichlet_laplacian(0).is_err());
        assert!(SpectralOperator::from_eigenvalues(vec![2.0, 1.0]).is_err());
        assert!(SpectralOperator::from_eigenvalues(vec![0.0, 1.0]).is_err());
    }

    #[test]
    fn fd_assembly_constant_coefficient() {
        let op = FdOperator::laplacian(3).unwrap();
        assert_eq!(op.diag(), &[32.0, 32.0, 32.0]);
        assert_eq!(op.offdiag(), &[-16.0, -16.0]);
        assert!(FdOperator::assemble(4, |x| x - 0.5).is_err());
        assert!(FdOperator::laplacian(0).is_err());
    }

    #[test]
    fn fd_smallest_eigenvalue_tends_to_pi_squared() {
        // Richardson extrapolation of the O(h^2) discrete eigenvalue.
        let lam = |j: usize| {
            let h = 1.0 / (j as f64 + 1.0);
            4.0 / (h * h) * (PI * h / 2.0).sin().powi(2)
        };
        let (coarse, fine) = (lam(255), lam(511));
        let extrapolated = (4.0 * fine - coarse) / 3.0;
        assert!((extrapolated - PI * PI).abs() < 1e-8);
        assert!((fine - PI * PI).abs() < 1e-4);
    }

    #[test]
    fn resolvent_scalars() {
        let op: SpatialOperator = SpectralOperator::from_eigenvalues(vec![10.0])
            .unwrap()
            .into();
        let f = op.factorize(0.1).unwrap();
        assert_relative_eq!(f.resolvent_scalars().unwrap()[0], 0.5, max_relative = 1e-15);
        let tiny = SpatialOperator::from(SpectralOperator::dirichlet_laplacian(4).unwrap())
            .factorize(1e-15)
            .unwrap();
        assert!(tiny
            .resolvent_scalars()
            .unwrap()
            .iter()
            .all(|a| (a - 1.0).abs() < 1e-12));
        assert!(op.factorize(0.0).is_err());
        assert!(op.factorize(-1.0).is_err());
    }

    #[test]
    fn fd_single_node_resolvent() {
        let op: SpatialOperator = FdOperator::laplacian(1).unwrap().into();
        let f = op.factorize(0.125).unwrap();
        let y = f.apply_resolvent(&FieldState::nodal(vec![1.0])).unwrap();
        assert_relative_eq!(y.values()[0], 0.5, max_relative = 1e-15);
    }

    #[test]
    fn fd_resolvent_residual() {
        let fd = FdOperator::laplacian(3).unwrap();
        let tau = 1.0 / 32.0;
        let f = SpatialOperator::from(fd.clone()).factorize(tau).unwrap();
        let x = FieldState::nodal(vec![1.0, 1.0, 1.0]);
        let y = f.apply_resolvent(&x).unwrap();
        let mut back = fd.apply(&y).unwrap();
        back.scale(tau);
        back.axpy(1.0, &y).unwrap();
        for (a, b) in back.values().iter().zip(x.values()) {
            assert!((a - b).abs() < 1e-12);
        }
    }

    #[test]
    fn cholesky_reconstructs_shifted_operator() {
        let fd = FdOperator::assemble(9, |x| 1.0 + 0.5 * (2.0 * PI * x).sin()).unwrap();
        let tau = 0.01;
        let f = SpatialOperator::from(fd.clone()).factorize(tau).unwrap();
        let m = f.reconstruct().unwrap();
        for i in 0..9 {
            let want = 1.0 + tau * fd.diag()[i];
            assert!((m[i][i] - want).abs() <= 1e-12 * want);
            if i + 1 < 9 {
                let want = tau * fd.offdiag()[i];
                assert!((m[i + 1][i] - want).abs() <= 1e-12 * want.abs());
            }
        }
    }

    #[test]
    fn modified_noise_variance_at_unit_step_ratio() {
        let op: SpatialOperator = SpectralOperator::from_eigenvalues(vec![1.0])
            .unwrap()
            .into();
        let f = op.factorize(1.0).unwrap();
        // Coefficients of g1 and g2 give the variance directly.
        let c1 = f
            .sample_modified_noise(&FieldState::modal(vec![1.0]), &FieldState::modal(vec![0.0]))
            .unwrap()
            .values()[0];
        let c2 = f
            .sample_modified_noise(&FieldState::modal(vec![0.0]), &FieldState::modal(vec![1.0]))
            .unwrap()
            .values()[0];
        assert_relative_eq!(c1 * c1 + c2 * c2, 0.375, max_relative = 1e-15);
        let zero = f
            .sample_modified_noise(
                &FieldState::zeros(1, Representation::Modal),
                &FieldState::zeros(1, Representation::Modal),
            )
            .unwrap();
        assert_eq!(zero.values(), &[0.0]);
    }

    #[test]
    fn sobolev_norm_examples() {
        let op = SpectralOperator::dirichlet_laplacian(4).unwrap();
        let e1 = FieldState::unit_mode(4, 1);
        assert_relative_eq!(op.sobolev_norm(&e1, 0.5).unwrap(), PI, max_relative = 1e-15);
        let x = FieldState::modal(vec![3.0, 4.0, 0.0, 0.0]);
        assert_relative_eq!(op.sobolev_norm(&x, 0.0).unwrap(), 5.0, max_relative = 1e-15);
        assert_eq!(
            op.sobolev_norm(&FieldState::zeros(4, Representation::Modal), 0.7)
                .unwrap(),
            0.0
        );
        assert!(op
            .sobolev_norm(&FieldState::zeros(4, Representation::Nodal), 0.5)
            .is_err());
    }

    #[test]
    fn sampled_first_mode_maps_to_unit_coefficient() {
        let op = SpectralOperator::dirichlet_laplacian(8).unwrap();
        let x = FieldState::nodal(op.grid().iter().map(|&xi| eigenfunction(1, xi)).collect());
        let c = op.to_modal(&x).unwrap();
        for (k, v) in c.values().iter().enumerate() {
            let want = if k == 0 { 1.0 } else { 0.0 };
            assert!((v - want).abs() < 1e-12);
        }
        assert!(op
            .to_modal(&FieldState::zeros(7, Representation::Nodal))
            .is_err());
    }
}

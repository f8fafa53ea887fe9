use nalgebra::{DMatrix, SymmetricEigen};
use proptest::prelude::*;

use spde_euler::diagnostics::{deterministic_weak_error, mode_variances, Horizon, WeakHorizon};
use spde_euler::integrators::one_step_law;
use spde_euler::mcmc::acceptance_prob;
use spde_euler::modified_equation::{identity_residuals, ModifiedSpectra};
use spde_euler::sine::SineTransform;
use spde_euler::{
    FdOperator, FieldState, NoiseStream, ProblemSpec, Representation, Scheme, SpatialOperator,
    SpectralOperator,
};

fn dense(fd: &FdOperator) -> DMatrix<f64> {
    let j = fd.len();
    DMatrix::from_fn(j, j, |r, c| {
        if r == c {
            fd.diag()[r]
        } else if r + 1 == c {
            fd.offdiag()[r]
        } else if c + 1 == r {
            fd.offdiag()[c]
        } else {
            0.0
        }
    })
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(256))]

    #[test]
    fn covariance_identity_holds_for_any_step(log_tau in -8.0f64..2.0, log_lambda in 0.0f64..8.0) {
        let (tau, lambda) = (10f64.powf(log_tau), 10f64.powf(log_lambda));
        for r in identity_residuals(tau, lambda) {
            prop_assert!(r <= 1e-12, "residual {r} at tau={tau}, lambda={lambda}");
        }
        let a = 1.0 / (1.0 + tau * lambda);
        let lhs = tau * (0.5 * a * a + 0.5 * a) / (1.0 - a * a);
        prop_assert!((lhs * 2.0 * lambda - 1.0).abs() <= 1e-12 * (1.0 + 1.0 / (tau * lambda)));
    }

    #[test]
    fn resolvent_is_linear_and_contracting(
        j in 1usize..24,
        c0 in 0.2f64..3.0,
        c1 in -0.15f64..1.0,
        tau in 1e-4f64..1.0,
        seed in any::<u64>(),
    ) {
        let fd = FdOperator::assemble(j, |xi| c0 * (1.0 + c1 * xi))?;
        let lambda_min = SymmetricEigen::new(dense(&fd)).eigenvalues.min();
        let op = SpatialOperator::from(fd);
        let f = op.factorize(tau)?;
        let mut stream = NoiseStream::new(seed, 0);
        let x = stream.draw_cylindrical(j, Representation::Nodal);
        let y = stream.draw_cylindrical(j, Representation::Nodal);
        let ax = f.apply_resolvent(&x)?;
        prop_assert!(norm(ax.values()) <= norm(x.values()) / (1.0 + tau * lambda_min) * (1.0 + 1e-12));

        let mut combo = x.clone();
        combo.scale(2.5);
        combo.axpy(-0.75, &y)?;
        let lhs = f.apply_resolvent(&combo)?;
        let mut rhs = ax.clone();
        rhs.scale(2.5);
        rhs.axpy(-0.75, &f.apply_resolvent(&y)?)?;
        prop_assert!(lhs.l2_distance(&rhs)? <= 1e-12 * (1.0 + lhs.l2_norm()));
    }

    #[test]
    fn cholesky_reconstructs_shifted_operator(j in 1usize..40, c1 in -0.5f64..2.0, tau in 1e-5f64..10.0) {
        let fd = FdOperator::assemble(j, |xi| 1.0 + c1 * xi * xi)?;
        let target = DMatrix::<f64>::identity(j, j) + dense(&fd) * tau;
        let f = SpatialOperator::from(fd).factorize(tau)?;
        let m = f.reconstruct().unwrap();
        for r in 0..j {
            for c in 0..j {
                let t = target[(r, c)];
                let scale = target[(r, r)].abs().max(t.abs());
                prop_assert!((m[r][c] - t).abs() <= 1e-12 * scale, "entry ({r},{c})");
            }
        }
    }

    #[test]
    fn fd_operator_is_symmetric_positive_and_dominant(j in 1usize..30, c0 in 0.1f64..5.0, c1 in 0.0f64..1.0) {
        let fd = FdOperator::assemble(j, |xi| c0 + c1 * (3.0 * xi).sin().abs())?;
        // Interior rows balance exactly; the Dirichlet rows are strictly dominant.
        for i in 0..j {
            let off: f64 = [i.checked_sub(1).map(|k| fd.offdiag()[k]), fd.offdiag().get(i).copied()]
                .into_iter()
                .flatten()
                .map(f64::abs)
                .sum();
            let slack = fd.diag()[i] - off;
            prop_assert!(slack >= -1e-12 * fd.diag()[i]);
            if i == 0 || i + 1 == j {
                prop_assert!(slack > 1e-9 * fd.diag()[i]);
            }
        }
        prop_assert!(SymmetricEigen::new(dense(&fd)).eigenvalues.min() > 0.0);
    }

    #[test]
    fn potential_gradient_matches_drift(j in 2usize..40, beta in -2.0f64..2.0, seed in any::<u64>()) {
        let p = ProblemSpec::gradient_cos(beta);
        let mut stream = NoiseStream::new(seed, 1);
        let x = stream.draw_cylindrical(j, Representation::Nodal);
        let dir = stream.draw_cylindrical(j, Representation::Nodal);
        let s = 1e-5;
        let mut shifted = x.clone();
        shifted.axpy(s, &dir)?;
        let fd_quotient = (p.evaluate_v(&shifted)? - p.evaluate_v(&x)?) / s;
        let fx = p.apply_f(&x)?;
        let h = x.mesh_width();
        let inner: f64 = fx.values().iter().zip(dir.values()).map(|(a, b)| a * b).sum::<f64>() * h;
        let scale: f64 = fx.values().iter().zip(dir.values()).map(|(a, b)| (a * b).abs()).sum::<f64>() * h;
        prop_assert!((fd_quotient + inner).abs() <= 1e-4 * scale.max(1e-12));
    }

    #[test]
    fn nonlinearities_respect_their_lipschitz_constants(
        z1 in -50.0f64..50.0,
        z2 in -50.0f64..50.0,
        beta in -3.0f64..3.0,
    ) {
        for p in [ProblemSpec::sine(), ProblemSpec::gradient_cos(beta), ProblemSpec::ornstein_uhlenbeck()] {
            prop_assert!((p.f(z2) - p.f(z1)).abs() <= p.lipschitz() * (z2 - z1).abs() * (1.0 + 1e-12) + 1e-15);
        }
    }

    #[test]
    fn sine_transform_round_trips(len in 1usize..300, seed in any::<u64>()) {
        let t = SineTransform::new(len);
        let mut stream = NoiseStream::new(seed, 2);
        let x = stream.draw_cylindrical(len, Representation::Modal);
        let mut nodal = vec![0.0; len];
        let mut back = vec![0.0; len];
        t.synthesize(x.values(), &mut nodal);
        t.analyze(&nodal, &mut back);
        for (a, b) in x.values().iter().zip(&back) {
            prop_assert!((a - b).abs() <= 1e-10);
        }
    }

    #[test]
    fn modified_spectra_are_bounded_and_ordered(j in 1usize..200, log_tau in -8.0f64..1.0) {
        let tau = 10f64.powf(log_tau);
        let op = SpectralOperator::dirichlet_laplacian(j)?;
        let s = ModifiedSpectra::new(&op, tau)?;
        let q = s.q_tau();
        prop_assert!(q.iter().all(|&q| q > 0.0 && q <= 1.0));
        prop_assert!(q.windows(2).all(|w| w[1] <= w[0]));
        for ((lt, l), q) in s.lambda_tau().iter().zip(op.eigenvalues()).zip(q) {
            prop_assert!(lt <= l);
            prop_assert!((lt - q * l).abs() <= 1e-14 * l);
        }
        for (d, l) in s.semigroup(tau).iter().zip(op.eigenvalues()) {
            prop_assert!((d * (1.0 + tau * l) - 1.0).abs() <= 1e-13);
        }
    }

    #[test]
    fn spectral_gap_of_the_modified_operator(log_tau0 in -4.0f64..1.0, frac in 0.0f64..1.0) {
        let op = SpectralOperator::dirichlet_laplacian(1)?;
        let tau0 = 10f64.powf(log_tau0);
        let tau = tau0 * frac.max(1e-6);
        let l1 = op.eigenvalues()[0];
        let bound = (1.0 + tau0 * l1).ln() / tau0;
        prop_assert!(ModifiedSpectra::new(&op, tau)?.lambda_tau()[0] >= bound * (1.0 - 1e-14));
    }

    #[test]
    fn two_half_steps_compose_to_one_modified_step(log_tau in -6.0f64..1.0, log_lambda in 0.0f64..7.0) {
        let (tau, lambda) = (10f64.powf(log_tau), 10f64.powf(log_lambda));
        let s = tau / 2.0;
        let at = (1.0 + 2.0 * s * lambda).powf(-0.5);
        let two_step = s * (at.powi(4) + at.powi(2));
        let (_, one_step) = one_step_law(Scheme::Modified, tau, lambda);
        prop_assert!((two_step - one_step).abs() <= 1e-12 * one_step);
    }

    #[test]
    fn acceptance_ignores_constant_shifts(a in -1_000_000i64..1_000_000, b in -1_000_000i64..1_000_000, c in -1000i64..1000) {
        let (va, vb) = (a as f64 / 1024.0, b as f64 / 1024.0);
        let shift = c as f64;
        prop_assert_eq!(acceptance_prob(va, vb)?, acceptance_prob(va + shift, vb + shift)?);
    }

    #[test]
    fn mode_variance_orderings(j in 4usize..300, log_tau in -4.0f64..0.5, n in 1usize..50) {
        let tau = 10f64.powf(log_tau);
        let op = SpectralOperator::dirichlet_laplacian(j)?;
        let exact = mode_variances(Scheme::ExactOu, &op, tau, Horizon::Stationary)?;
        let modified = mode_variances(Scheme::Modified, &op, tau, Horizon::Steps(n))?;
        let standard = mode_variances(Scheme::Standard, &op, tau, Horizon::Stationary)?;
        for k in 0..j {
            prop_assert!(modified.variances[k] >= 0.0 && modified.variances[k] <= exact.variances[k]);
            let l = op.eigenvalues()[k];
            let ratio = standard.variances[k] / exact.variances[k];
            prop_assert!((ratio * (1.0 + tau * l / 2.0) - 1.0).abs() <= 1e-12);
        }
        let ratios: Vec<f64> = (0..j).map(|k| standard.variances[k] / exact.variances[k]).collect();
        prop_assert!(ratios.windows(2).all(|w| w[1] < w[0]));
    }

    #[test]
    fn exponential_scheme_has_no_weak_error_for_linear_problems(j in 4usize..128, k in 1i32..6) {
        let op = SpectralOperator::dirichlet_laplacian(j)?;
        let taus: Vec<f64> = (k..k + 3).map(|e| 2f64.powi(-e)).collect();
        let r = deterministic_weak_error(&op, &taus, WeakHorizon::Time(1.0), Scheme::Exponential, 0.0)?;
        prop_assert!(r.errors.iter().all(|e| *e == 0.0));
    }

    #[test]
    fn representations_never_mix(j in 1usize..16) {
        let mut modal = FieldState::zeros(j, Representation::Modal);
        let nodal = FieldState::zeros(j, Representation::Nodal);
        prop_assert!(modal.axpy(1.0, &nodal).is_err());
        prop_assert!(modal.l2_distance(&nodal).is_err());
        let f = SpatialOperator::from(FdOperator::laplacian(j)?).factorize(0.1)?;
        prop_assert!(f.apply_resolvent(&modal).is_err());
    }
}

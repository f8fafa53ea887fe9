//! Pathwise errors `E |X_N - X(T)|` with common random numbers.
//!
//! ```bash
//! cargo run --release --example strong_order
//! ```

use spde_euler::diagnostics::{convergence_study, ConvergenceConfig, Observable};
use spde_euler::{FieldState, ProblemSpec, Representation, Scheme, SpectralOperator};

fn main() -> spde_euler::Result<()> {
    let op = SpectralOperator::dirichlet_laplacian(64)?;
    let cfg = ConvergenceConfig {
        taus: (3..=8).map(|k| 2f64.powi(-k)).collect(),
        t_end: 0.5,
        tau_ref: 2f64.powi(-11),
        replicas: 1000,
        master_seed: 4,
    };
    let x0 = FieldState::zeros(64, Representation::Modal);
    let schemes = [Scheme::Exponential, Scheme::Modified, Scheme::Standard];
    let study = convergence_study(
        &cfg,
        &op,
        &ProblemSpec::sine(),
        &x0,
        &schemes,
        Observable::SquaredNorm,
    )?;
    for (k, scheme) in schemes.iter().enumerate() {
        let errors: Vec<String> = study.strong[k]
            .iter()
            .map(|l| format!("{:.3e}", l.mean))
            .collect();
        let slope = study
            .strong_fit(*scheme)
            .map(|f| f.slope)
            .unwrap_or(f64::NAN);
        println!(
            "{:<12} slope {slope:.3}  [{}]",
            scheme.name(),
            errors.join(", ")
        );
    }
    Ok(())
}

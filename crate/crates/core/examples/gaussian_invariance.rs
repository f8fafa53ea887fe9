//! Stationary laws of the linear equation under three time discretizations.
//!
//! ```bash
//! cargo run --release --example gaussian_invariance
//! ```

use spde_euler::diagnostics::{hellinger_diag, mode_variances, Horizon};
use spde_euler::{Scheme, SpectralOperator};

fn main() -> spde_euler::Result<()> {
    let tau = 0.1;
    println!("per-mode stationary variance relative to 1/(2 lambda), tau = {tau}");
    let op = SpectralOperator::dirichlet_laplacian(8)?;
    let exact = mode_variances(Scheme::ExactOu, &op, tau, Horizon::Stationary)?;
    let modified = mode_variances(Scheme::Modified, &op, tau, Horizon::Stationary)?;
    let standard = mode_variances(Scheme::Standard, &op, tau, Horizon::Stationary)?;
    for j in 0..op.len() {
        println!(
            "mode {:>2}: modified {:.6}  standard {:.6}",
            j + 1,
            modified.variances[j] / exact.variances[j],
            standard.variances[j] / exact.variances[j]
        );
    }

    println!("\nHellinger distance to the exact invariant law");
    for k in 2..=10 {
        let op = SpectralOperator::dirichlet_laplacian(1 << k)?;
        let exact = mode_variances(Scheme::ExactOu, &op, tau, Horizon::Stationary)?;
        let h = |s| -> spde_euler::Result<f64> {
            hellinger_diag(
                &mode_variances(s, &op, tau, Horizon::Stationary)?.variances,
                &exact.variances,
            )
        };
        println!(
            "J = {:>4}: modified {:.3e}  standard {:.6}",
            op.len(),
            h(Scheme::Modified)?,
            h(Scheme::Standard)?
        );
    }
    Ok(())
}

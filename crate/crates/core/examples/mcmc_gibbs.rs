//! Sampling the Gibbs law `exp(-2V) nu` with the modified Euler step as
//! proposal.
//!
//! ```bash
//! cargo run --release --example mcmc_gibbs
//! ```

use spde_euler::diagnostics::Observable;
use spde_euler::mcmc::{run_chains, ChainConfig};
use spde_euler::{FdOperator, FieldState, ProblemSpec, Representation, SpatialOperator};

fn main() -> spde_euler::Result<()> {
    let op = SpatialOperator::from(FdOperator::laplacian(32)?);
    let p = ProblemSpec::gradient_cos(0.5);
    let x0 = FieldState::zeros(32, Representation::Nodal);
    let cfg = ChainConfig {
        n_steps: 100_000,
        burn_in: 1000,
        batch_len: 1000,
        thin: 0,
    };
    let observables = [Observable::SquaredNorm, Observable::CosMean];
    for tau in [0.01, 0.1, 1.0, 10.0] {
        let pooled = run_chains(&op, &op.factorize(tau)?, &p, &x0, &cfg, 42, 4, &observables)?;
        println!(
            "tau = {tau:>5}: acceptance {:.3}  E|x|^2 = {:.5} +- {:.5}  E mean cos x = {:.5} +- {:.5}",
            pooled.acceptance_rate, pooled.means[0], pooled.stderrs[0], pooled.means[1], pooled.stderrs[1]
        );
    }
    Ok(())
}

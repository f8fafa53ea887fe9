//! Sobolev moments and Feldman-Hajek sums of the stationary laws.
//!
//! ```bash
//! cargo run --release --example mode_diagnostics
//! ```

use spde_euler::diagnostics::{feldman_hajek_indicator, mode_variances, sobolev_moment, Horizon};
use spde_euler::{Scheme, SpectralOperator};

fn main() -> spde_euler::Result<()> {
    let op = SpectralOperator::dirichlet_laplacian(4096)?;
    let tau = 0.01;
    for scheme in [Scheme::ExactOu, Scheme::Modified, Scheme::Standard] {
        let table = mode_variances(scheme, &op, tau, Horizon::Stationary)?;
        for alpha in [0.2, 0.24, 0.26, 0.3, 0.45] {
            let m = sobolev_moment(&table, alpha)?;
            println!(
                "{:<10} alpha {alpha:.2}: partial sum {:>10.4}  doubling ratio {:.3}  {}",
                scheme.name(),
                m.partial_sum,
                m.increment_ratio,
                if m.converges { "converges" } else { "diverges" }
            );
        }
    }
    for n in [1, 10, 100] {
        let fh = feldman_hajek_indicator(&op, tau, n)?;
        println!(
            "N = {n:>3}: modified sum {:.4}  exact sum {:.4}  equivalent {}",
            fh.modified_sum, fh.exact_sum, fh.equivalent
        );
    }
    Ok(())
}

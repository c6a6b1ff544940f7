//! Mixing classes of random stochastic matrices by profile.
//!
//! ```bash
//! cargo run -p ergomix --example random_systems
//! ```

use ergomix::catalog::{self, RandomProfile};
use ergomix::cstar;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for profile in [
        RandomProfile::Generic,
        RandomProfile::Reducible,
        RandomProfile::Periodic,
    ] {
        for seed in 0..3 {
            let sys = catalog::random_system(4, seed, profile)?;
            let m = cstar::analyze_system(&sys, cstar::DEFAULT_CESARO_TOL)?;
            println!(
                "{:<40} fixed dim {} peripheral {} ergodic {:<5} weak mixing {:<5} horizon {:?}",
                sys.label,
                m.fixed_space_dim,
                m.peripheral_eigenvalues.len(),
                m.unique_e_ergodic,
                m.unique_e_weak_mixing,
                m.cesaro_horizon
            );
        }
    }
    Ok(())
}

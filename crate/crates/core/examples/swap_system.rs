//! The two-point swap: ergodic, never weak mixing.
//!
//! ```bash
//! cargo run -p ergomix --example swap_system
//! ```

use ergomix::catalog;
use ergomix::cstar;
use ergomix::numerics::cvec_from_real;
use ergomix::sequences::{Functional, NormedSpace};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let swap = catalog::named_system("swap")?;
    let x = cvec_from_real(&[1.0, 0.0]);
    let phi = Functional::coordinate(NormedSpace::sup(2), 0);
    let grid = [10, 100, 1000, 10_000];

    // |φ(T^k x) − φ(E x)| is 1/2 for every k.
    for (n, d) in grid.iter().zip(cstar::deviation_profile(&swap, &x, &phi, &grid)?) {
        println!("deviation mean at n = {n}: {d}");
    }

    let class = cstar::classify_system(&swap, cstar::DEFAULT_CESARO_TOL)?;
    println!("peripheral spectrum: {:?}", class.peripheral_eigenvalues);
    println!(
        "ergodic: {}, weak mixing: {}",
        class.unique_e_ergodic, class.unique_e_weak_mixing
    );

    let square = cstar::tensor_system(&swap, &swap);
    println!("dim Fix(swap ⊗ swap) = {}", cstar::fixed_point_space(&square).len());
    Ok(())
}

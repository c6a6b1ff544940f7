//! Ergodic averages along subsequences `k_n ≤ C n`.
//!
//! The centered swap orbit alternates sign, so sampling only even times
//! leaves a constant term. The centered orbit of `T = [[1/2, 1/2], [0, 1]]`
//! decays geometrically and every admissible subsequence averages to zero.
//!
//! ```bash
//! cargo run -p ergomix --example blum_hanson
//! ```

use ergomix::catalog;
use ergomix::numerics::cvec_from_real;
use ergomix::sequences;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let grid = [10, 100, 1000];

    let swap = catalog::named_system("swap")?;
    let orbit = catalog::orbit_sequence(&swap, &cvec_from_real(&[1.0, 0.0]), true)?;
    let even: Vec<usize> = (1..=1000).map(|n| 2 * n).collect();
    let r = sequences::blum_hanson_test(&orbit, &even, 2.0, &grid)?;
    println!("swap, k_n = 2n: {:?}", r.profile);

    let t = catalog::named_system("T31")?;
    let orbit = catalog::orbit_sequence(&t, &cvec_from_real(&[1.0, -1.0]), true)?;
    let subs = sequences::admissible_subsequences(1000, 3, 5, 7);
    let worst = subs
        .iter()
        .map(|s| sequences::blum_hanson_test(&orbit, s, 3.0, &grid).map(|r| r.profile[2]))
        .collect::<Result<Vec<_>, _>>()?
        .into_iter()
        .fold(0.0, f64::max);
    println!(
        "T31, {} subsequences: largest average at n = 1000 is {worst:.3e}",
        subs.len()
    );

    match sequences::find_non_ergodic_subsequence(&orbit, &grid, 1e-2, 3, 5, 7)? {
        Some((sub, _)) => println!("non-ergodic subsequence starting {:?}", &sub[..5]),
        None => println!("no non-ergodic subsequence found"),
    }
    Ok(())
}

//! A sequence that mixes weakly but not uniformly.
//!
//! `x_k = e_j` on block `j`, with blocks doubling in length. Every fixed
//! coordinate functional averages to zero, while the block ending at `n`
//! always fills half of the window `1..=n`.
//!
//! ```bash
//! cargo run -p ergomix --example block_counterexample
//! ```

use ergomix::catalog;
use ergomix::sequences::{self, Functional};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let blocks = 8;
    let seq = catalog::block_counterexample(blocks)?;
    let grid = catalog::block_end_grid(blocks);
    println!("{} on horizon {}", seq.label(), seq.horizon());

    let first = Functional::coordinate(seq.space(), 0);
    let weak = sequences::weak_profile(&seq, &first, &grid)?;
    let uniform = sequences::uniform_bounds(&seq, &grid)?;
    println!("{:>5} {:>10} {:>10}", "n", "W(e_0)", "U");
    for ((n, w), u) in grid.iter().zip(&weak).zip(&uniform.lower) {
        println!("{n:>5} {w:>10.6} {u:>10.6}");
    }

    let v = sequences::classify(&seq, &grid, sequences::DEFAULT_TOL)?;
    println!(
        "weak mixing: {}, uniform weak mixing: {}",
        v.weak_mixing, v.uniform_weak_mixing
    );
    Ok(())
}

//! Random pairs of stochastic systems: a tensor product mixes weakly exactly
//! when both factors do.
//!
//! ```bash
//! cargo run -p ergomix --example theorem_suite -- 50
//! ```

use ergomix::catalog;
use ergomix::cstar::{self, MixCReport};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let count = std::env::args().nth(1).map_or(Ok(30), |s| s.parse())?;
    let pairs = catalog::random_pairs(count, 1, 2..=4)?;
    let (mut holds, mut agree, mut tensor_ergodic) = (0, 0, 0);
    for (a, b) in &pairs {
        let r = cstar::theorem_mix_a_check(a, b, cstar::DEFAULT_CESARO_TOL)?;
        holds += usize::from(r.holds);
        agree += usize::from(r.methods_agree);
        if let MixCReport::Checked {
            tensor_ergodic: true, ..
        } = cstar::theorem_mix_c_check(a, b, cstar::DEFAULT_CESARO_TOL)?
        {
            tensor_ergodic += 1;
        }
    }
    println!("{count} pairs: equivalence holds on {holds}, criteria agree on {agree}");
    println!("pairs with a weak-mixing factor whose tensor is ergodic: {tensor_ergodic}");
    Ok(())
}

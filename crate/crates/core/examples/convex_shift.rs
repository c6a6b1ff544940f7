//! Sampled lower bound on the convex shift constant
//! `sup ‖Σ λ_j x_{j+k}‖ / ‖Σ λ_j x_j‖`.
//!
//! ```bash
//! cargo run -p ergomix --example convex_shift
//! ```

use ergomix::catalog;
use ergomix::numerics::cvec_from_real;
use ergomix::sequences;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let t = catalog::named_system("T31")?;
    let decaying = catalog::orbit_sequence_with_horizon(&t, &cvec_from_real(&[1.0, -1.0]), true, 200)?;
    let swap = catalog::named_system("swap")?;
    let alternating = catalog::orbit_sequence_with_horizon(&swap, &cvec_from_real(&[1.0, 0.0]), true, 200)?;

    for seq in [&decaying, &alternating] {
        let est = sequences::convex_shift_bounded_estimate(seq, 5000, 11)?;
        println!(
            "{}: estimate {:.4} from {} samples ({} with zero denominator)",
            seq.label(),
            est.estimate,
            est.evaluated,
            est.skipped_zero_denominator
        );
    }
    Ok(())
}

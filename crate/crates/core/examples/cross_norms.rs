//! Injective and projective norms of two-fold tensors, and elementary-tensor
//! decompositions of the projective unit ball.
//!
//! ```bash
//! cargo run -p ergomix --example cross_norms
//! ```

use ergomix::numerics::cvec_from_real;
use ergomix::tensor_norms::{self, CrossNormTag, Membership, Tensor2};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let x = cvec_from_real(&[3.0, 4.0]);
    let y = cvec_from_real(&[1.0, 0.0, 0.0]);
    let xy = Tensor2::elementary(&x, &y);
    for tag in [CrossNormTag::Injective, CrossNormTag::Projective] {
        println!("{tag:?}(x ⊗ y) = {}", tensor_norms::cross_norm(&xy, tag));
    }

    // The identity has injective norm 1 and projective norm 2.
    let id = Tensor2::identity(2, 2);
    let half = id.scaled(0.5);
    println!(
        "‖I‖_inj = {}, ‖I‖_proj = {}",
        tensor_norms::cross_norm(&id, CrossNormTag::Injective),
        tensor_norms::cross_norm(&id, CrossNormTag::Projective)
    );
    match tensor_norms::elementary_ball_membership(&half, tensor_norms::HULL_TOL) {
        Membership::Member(cert) => {
            println!("I/2 is a convex combination of {} elementary tensors", cert.terms.len());
            println!("reconstruction residual {:.2e}", cert.residual);
        }
        Membership::Refused { nuclear_norm } => println!("I/2 refused, nuclear norm {nuclear_norm}"),
    }
    println!(
        "I itself: member = {}",
        tensor_norms::elementary_ball_membership(&id, tensor_norms::HULL_TOL).is_member()
    );

    for tag in [CrossNormTag::Injective, CrossNormTag::Projective] {
        let check = tensor_norms::condition_i_check(3, 2, tag);
        println!(
            "condition I for {tag:?}: {} ({} samples, max nuclear norm {:.4})",
            check.holds, check.samples_checked, check.max_nuclear_norm
        );
    }
    Ok(())
}

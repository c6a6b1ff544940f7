//! When does the Cesàro projection of a tensor product factor?
//!
//! For `T ⊗ H` the projection is `E_T ⊗ E_H`. For `P ⊗ swap` the tensor
//! system has a two-dimensional fixed space while `Fix(P) ⊗ Fix(swap)` is
//! one-dimensional, so the product of projections misses part of it.
//!
//! ```bash
//! cargo run -p ergomix --example tensor_factorization
//! ```

use ergomix::catalog;
use ergomix::cstar;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    for name in ["T31_H31", "swap_swap", "P33_swap", "T31_swap"] {
        let (a, b) = catalog::system_pair(name)?;
        let f = cstar::e_factorization_check(&a, &b, 1e-10)?;
        println!(
            "{name:<10} factorizes = {:<5} dim Fix(A⊗B) = {} dim Fix(A)⊗Fix(B) = {} max error = {:.2e}",
            f.factorizes, f.tensor_fixed_dim, f.product_fixed_dim, f.max_entry_error
        );
    }

    let p = catalog::p33(0.5, 0.5)?;
    println!("P^2 =\n{}", p.power(2));
    Ok(())
}

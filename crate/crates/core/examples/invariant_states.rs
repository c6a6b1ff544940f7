//! Invariant states of a stochastic matrix: one extreme point per closed
//! class, and no faithful state when some state is transient.
//!
//! ```bash
//! cargo run -p ergomix --example invariant_states
//! ```

use ergomix::catalog::{self, RandomProfile};
use ergomix::cstar;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let systems = [
        catalog::named_system("H31")?,
        catalog::named_system("T31")?,
        catalog::random_system(5, 3, RandomProfile::Reducible)?,
    ];
    for sys in &systems {
        let states = cstar::state_set_probe(sys);
        println!("{}", sys.label);
        println!(
            "  closed classes {:?}, transient {:?}, faithful {}",
            states.closed_classes, states.transient, states.faithful
        );
        for mu in &states.extreme_points {
            let v: Vec<String> = mu.iter().map(|p| format!("{p:.4}")).collect();
            println!("  extreme point ({})", v.join(", "));
        }
    }
    Ok(())
}

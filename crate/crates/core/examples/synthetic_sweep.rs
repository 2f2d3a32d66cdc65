//! Repeated synthetic experiment over several comparison budgets.
//!
//! `cargo run --release --example synthetic_sweep` takes a few seconds; the
//! full-scale configuration is `ExperimentSpec::full()`.

use uncoupled::eval::{run_synthetic, ExperimentSpec};

fn main() -> uncoupled::Result<()> {
    let spec = ExperimentSpec {
        n_u: 5000,
        n_r_values: vec![50, 500, 5000],
        repeats: 10,
        ..ExperimentSpec::desk()
    };
    let table = run_synthetic(&spec)?;
    print!("{}", table.render());
    Ok(())
}

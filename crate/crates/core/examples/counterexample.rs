//! Two joint laws that agree on every uncoupled statistic but not on E[Y | X].

use uncoupled::eval::check_counterexample;
use uncoupled::pairgen::{counterexample_sampler, CounterexampleId};

fn main() -> uncoupled::Result<()> {
    for id in [CounterexampleId::Base, CounterexampleId::Tilde] {
        let d = counterexample_sampler(id, 200_000, 5)?;
        let (x, y) = (d.features().column(0), d.require_targets()?);
        let (mut sum, mut count) = (0.0, 0);
        for (xi, yi) in x.iter().zip(y.iter()) {
            if *xi >= 0.0 {
                sum += yi;
                count += 1;
            }
        }
        println!("{id:?}: mean Y = {:.4}, E[Y | X >= 0] = {:.4}", y.mean(), sum / count as f64);
    }
    for line in check_counterexample(1_000_000, 0)?.lines() {
        println!("{line}");
    }
    Ok(())
}

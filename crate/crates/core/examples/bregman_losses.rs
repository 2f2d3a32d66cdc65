//! Bregman divergences for the two shipped generators.

use uncoupled::{bregman_divergence, BregmanGenerator};

fn main() -> uncoupled::Result<()> {
    for gen in [BregmanGenerator::Squared, BregmanGenerator::BernoulliKl] {
        println!("{} generator, domain {:?}", gen.name(), gen.valid_domain());
        for (t, z) in [(0.2, 0.2), (0.2, 0.5), (0.9, 0.1)] {
            println!("  d({t}, {z}) = {:.6}", bregman_divergence(gen, t, z)?);
        }
    }
    // KL divergence is undefined at the boundary
    match bregman_divergence(BregmanGenerator::BernoulliKl, 1.0, 0.5) {
        Ok(v) => println!("unexpected value {v}"),
        Err(e) => println!("outside the domain: {e}"),
    }
    Ok(())
}

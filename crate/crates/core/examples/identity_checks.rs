//! Monte-Carlo checks behind the estimators: comparison expectations,
//! unbiasedness on a uniform target and the variance-optimal λ.

use uncoupled::eval::{check_lemma1, check_theorem1_variance, check_unbiasedness, Theorem1Setup, UnbiasednessSetup};

fn main() -> uncoupled::Result<()> {
    let lemma = check_lemma1(1_000_000, 0)?;
    println!("largest relative error of the pair identities: {:.5}", lemma.max_rel_err());

    let unbiased = check_unbiasedness(&UnbiasednessSetup::default(), 0)?;
    println!(
        "mean risk {:.5} vs analytic {:.5} (z = {:.2})",
        unbiased.mean_risk,
        unbiased.analytic_risk,
        unbiased.z_score()
    );

    let variance = check_theorem1_variance(&Theorem1Setup::default(), 0)?;
    println!("lambda* = {:.4}", variance.lambda_star);
    for (lambda, v) in &variance.variances {
        println!("  var at {lambda:+.4}: {v:.3e}");
    }
    println!("empirical minimum at {:+.4}", variance.argmin_lambda());
    Ok(())
}

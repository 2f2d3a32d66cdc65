//! Choosing the risk-approximation weights (w1, w2) and λ.

use uncoupled::distributions::{gaussian_distribution, uniform_distribution};
use uncoupled::ra::{err_objective, optimal_lambda, tune_weights, tune_weights_empirical, RaTuning, RaVariances};

fn main() -> uncoupled::Result<()> {
    let tuning = RaTuning::default();

    let uniform = uniform_distribution(0.0, 2.0)?;
    let cfg = tune_weights(&uniform, &tuning)?;
    println!("U[0,2]: w1 {:.4}, w2 {:.4}, lambda {:.4}", cfg.w1, cfg.w2, cfg.lambda);
    println!("  Err at (b/2, a/2) = {:e}", err_objective(&uniform, 1.0, 0.0, &tuning)?);

    // a non-uniform law leaves a residual approximation error
    let normal = gaussian_distribution(0.0, 1.0)?;
    let cfg = tune_weights(&normal, &tuning)?;
    println!(
        "N(0,1): w1 {:+.4}, w2 {:+.4}, residual Err {:.4}",
        cfg.w1,
        cfg.w2,
        err_objective(&normal, cfg.w1, cfg.w2, &tuning)?
    );

    let sample: Vec<f64> = (0..=400).map(|i| 10.0 + i as f64 / 100.0).collect();
    let cfg = tune_weights_empirical(&sample, &tuning)?;
    println!("sample on [10,14]: w1 {:.4}, w2 {:.4}", cfg.w1, cfg.w2);

    let v = RaVariances { sigma2_plus: 0.3, sigma2_minus: 0.1 };
    println!("variance-optimal lambda for these weights: {:.4}", optimal_lambda(cfg.w1, cfg.w2, v)?);
    Ok(())
}

//! Risk-approximation fit on a uniform target, where the approximation is exact.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use uncoupled::distributions::uniform_distribution;
use uncoupled::ra::{ra_fit, ra_fit_optimal_lambda, tune_weights, FitOptions, RaTuning};
use uncoupled::{BregmanGenerator, Matrix, PairwiseSet};

fn main() -> uncoupled::Result<()> {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (n_u, n_r) = (5000, 2000);

    // Y = X with X ~ U[0,1]; only features and comparison outcomes are used
    let unlabeled = Matrix::from_fn(n_u, 1, |_, _| rng.random::<f64>());
    let (mut win, mut lose) = (Vec::new(), Vec::new());
    for _ in 0..n_r {
        let (a, b): (f64, f64) = (rng.random(), rng.random());
        win.push(a.max(b));
        lose.push(a.min(b));
    }
    let pairs = PairwiseSet::new(Matrix::from_vec(n_r, 1, win), Matrix::from_vec(n_r, 1, lose))?;

    let cfg = tune_weights(&uniform_distribution(0.0, 1.0)?, &RaTuning::default())?;
    let opts = FitOptions::default();
    let model = ra_fit(BregmanGenerator::Squared, &unlabeled, &pairs, &cfg, &opts)?;
    println!("slope with lambda {:.3}: {:.4} (truth 1)", cfg.lambda, model.theta()[0]);

    let (model, tuned) = ra_fit_optimal_lambda(BregmanGenerator::Squared, &unlabeled, &pairs, &cfg, &opts)?;
    println!("slope with lambda {:.3}: {:.4}", tuned.lambda, model.theta()[0]);
    Ok(())
}

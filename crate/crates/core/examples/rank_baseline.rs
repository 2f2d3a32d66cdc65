//! Naive baseline: learn a ranker, then map each test rank to a target quantile.

use uncoupled::baselines::{ranker_fit, ranking_error, RankPredictor, DEFAULT_RANKER_REG};
use uncoupled::eval::mse;
use uncoupled::pairgen::{generate_synthetic, sample_pairwise_from_spec, SyntheticSpec};

fn main() -> uncoupled::Result<()> {
    let spec = SyntheticSpec::random(5, 0.1, 7)?;
    let unlabeled = generate_synthetic(&spec, 20_000)?;
    let pairs = sample_pairwise_from_spec(&spec, 2000)?;
    let test = generate_synthetic(&SyntheticSpec::new(spec.theta_true().clone(), 0.1, 8)?, 1000)?;

    let ranker = ranker_fit(&pairs, DEFAULT_RANKER_REG)?;
    println!("training pairs misordered: {:.2}%", 100.0 * ranking_error(&ranker, &pairs)?);

    let predictor = RankPredictor::new(&ranker, unlabeled.features())?;
    let pred = predictor.predict_rows(&spec.target_distribution(), test.features())?;
    println!("test MSE of rank-based prediction: {:.5}", mse(&pred, test.require_targets()?)?);
    Ok(())
}

//! Target-transformation fit on linear-Gaussian synthetic data.

use uncoupled::baselines::lr_fit;
use uncoupled::eval::mse;
use uncoupled::pairgen::{generate_synthetic, sample_pairwise_from_spec, SyntheticSpec};
use uncoupled::tt::{tt_fit, tt_predict_rows, TtConfig, TtFitOptions};
use uncoupled::BregmanGenerator;

fn main() -> uncoupled::Result<()> {
    let spec = SyntheticSpec::random(5, 0.1, 42)?;
    let unlabeled = generate_synthetic(&spec, 20_000)?;
    let pairs = sample_pairwise_from_spec(&spec, 5000)?;
    let test = generate_synthetic(&SyntheticSpec::new(spec.theta_true().clone(), 0.1, 43)?, 1000)?;
    let law = spec.target_distribution();

    let model = tt_fit(
        BregmanGenerator::Squared,
        unlabeled.features(),
        &pairs,
        &TtConfig::default(),
        &TtFitOptions::default(),
    )?;
    let y_test = test.require_targets()?;
    let tt = mse(&tt_predict_rows(&model, &law, test.features())?, y_test)?;

    // supervised reference trained on the true labels of the same features
    let lr = lr_fit(&unlabeled, false)?;
    let lr = mse(&lr.scores(test.features())?, y_test)?;
    println!("test MSE: TT {tt:.5}, LR {lr:.5}");
    println!("direction cosine: {:.5}", model.theta().normalize().dot(spec.theta_true()));
    Ok(())
}

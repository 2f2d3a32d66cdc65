//! Metrics, repeated experiments, and Monte-Carlo checks of the identities
//! the estimators rest on.

mod checks;
mod experiment;
mod table;

pub use checks::{
    check_counterexample, check_lemma1, check_theorem1_variance, check_unbiasedness, CheckLine,
    CounterexampleReport, Lemma1Report, Theorem1Report, Theorem1Setup, UnbiasednessReport,
    UnbiasednessSetup,
};
pub use experiment::{run_benchmark, run_synthetic, BenchmarkSpec, ExperimentSpec, Method};
pub use table::{CellFailure, ResultRow, ResultTable};

use crate::dataset::Vector;
use crate::error::{Error, Result};

/// Mean squared error.
pub fn mse(predictions: &Vector, targets: &Vector) -> Result<f64> {
    if predictions.len() != targets.len() {
        return Err(Error::shape(format!(
            "{} predictions for {} targets",
            predictions.len(),
            targets.len()
        )));
    }
    if predictions.is_empty() {
        return Err(Error::param("mse of empty vectors"));
    }
    Ok((predictions - targets).norm_squared() / predictions.len() as f64)
}

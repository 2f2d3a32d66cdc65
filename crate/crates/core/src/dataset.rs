use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

pub type Matrix = DMatrix<f64>;
pub type Vector = DVector<f64>;

/// Feature matrix (`n × d`) with an optional aligned target vector.
///
/// Targets are only read by the supervised baseline and by evaluation.
/// The uncoupled estimators take the feature matrix alone.
#[derive(Clone, Debug, PartialEq)]
pub struct Dataset {
    features: Matrix,
    targets: Option<Vector>,
    feature_names: Option<Vec<String>>,
}

impl Dataset {
    pub fn new(features: Matrix, targets: Option<Vector>) -> Result<Self> {
        if features.nrows() == 0 || features.ncols() == 0 {
            return Err(Error::shape(format!(
                "dataset must have n ≥ 1 and d ≥ 1, got {}×{}",
                features.nrows(),
                features.ncols()
            )));
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(Error::param("feature matrix contains non-finite values"));
        }
        if let Some(t) = &targets {
            if t.len() != features.nrows() {
                return Err(Error::shape(format!(
                    "{} targets for {} rows",
                    t.len(),
                    features.nrows()
                )));
            }
            if t.iter().any(|v| !v.is_finite()) {
                return Err(Error::param("target vector contains non-finite values"));
            }
        }
        Ok(Dataset {
            features,
            targets,
            feature_names: None,
        })
    }

    pub fn with_feature_names(mut self, names: Vec<String>) -> Result<Self> {
        if names.len() != self.dim() {
            return Err(Error::shape(format!(
                "{} feature names for {} columns",
                names.len(),
                self.dim()
            )));
        }
        self.feature_names = Some(names);
        Ok(self)
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn targets(&self) -> Option<&Vector> {
        self.targets.as_ref()
    }

    pub fn require_targets(&self) -> Result<&Vector> {
        self.targets
            .as_ref()
            .ok_or_else(|| Error::param("operation needs a dataset with targets"))
    }

    pub fn feature_names(&self) -> Option<&[String]> {
        self.feature_names.as_deref()
    }

    pub fn len(&self) -> usize {
        self.features.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.features.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.features.ncols()
    }

    /// Rows selected by `indices`, in that order.
    pub fn select_rows(&self, indices: &[usize]) -> Result<Dataset> {
        let features = self.features.select_rows(indices);
        let targets = self.targets.as_ref().map(|t| t.select_rows(indices));
        let mut out = Dataset::new(features, targets)?;
        out.feature_names = self.feature_names.clone();
        Ok(out)
    }
}

/// Pairwise comparison outcomes: row `i` of `winners` had a target at least
/// as large as row `i` of `losers`.
#[derive(Clone, Debug, PartialEq)]
pub struct PairwiseSet {
    winners: Matrix,
    losers: Matrix,
}

impl PairwiseSet {
    pub fn new(winners: Matrix, losers: Matrix) -> Result<Self> {
        if winners.shape() != losers.shape() {
            return Err(Error::shape(format!(
                "winners {:?} and losers {:?} differ in shape",
                winners.shape(),
                losers.shape()
            )));
        }
        if winners.iter().chain(losers.iter()).any(|v| !v.is_finite()) {
            return Err(Error::param("pairwise set contains non-finite values"));
        }
        Ok(PairwiseSet { winners, losers })
    }

    pub fn winners(&self) -> &Matrix {
        &self.winners
    }

    pub fn losers(&self) -> &Matrix {
        &self.losers
    }

    pub fn len(&self) -> usize {
        self.winners.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.winners.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.winners.ncols()
    }

    /// The same comparisons with every winner and loser exchanged.
    pub fn swapped(&self) -> PairwiseSet {
        PairwiseSet {
            winners: self.losers.clone(),
            losers: self.winners.clone(),
        }
    }
}

/// Free parameters of the risk approximation: the weights on the winner and
/// loser expectations and the mixing parameter `λ`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RiskConfig {
    pub w1: f64,
    pub w2: f64,
    pub lambda: f64,
}

impl RiskConfig {
    pub fn new(w1: f64, w2: f64, lambda: f64) -> Result<Self> {
        if !(w1.is_finite() && w2.is_finite() && lambda.is_finite()) {
            return Err(Error::param("risk weights must be finite"));
        }
        Ok(RiskConfig { w1, w2, lambda })
    }

    /// Weights with `λ = (w1 + w2) / 2`.
    pub fn with_midpoint_lambda(w1: f64, w2: f64) -> Result<Self> {
        Self::new(w1, w2, 0.5 * (w1 + w2))
    }
}

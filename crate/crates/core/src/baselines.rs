//! Reference methods: least squares on the true labels, and a linear
//! pairwise ranker whose scores are turned into predictions through the
//! rank of the test point among the unlabeled data.

use crate::dataset::{Dataset, Matrix, PairwiseSet, Vector};
use crate::distributions::CumulativeDistribution;
use crate::error::{Error, Result};
use crate::model::{design, solve_gram, LinearModel};
use crate::optim::{gradient_descent, Objective, SolverOptions};

/// Ordinary least squares through the normal equations.
pub fn lr_fit(data: &Dataset, intercept: bool) -> Result<LinearModel> {
    let y = data.require_targets()?;
    let x = design(data.features(), intercept);
    let n = x.nrows() as f64;
    let gram = x.tr_mul(&x) / n;
    let rhs = x.tr_mul(y) / n;
    LinearModel::new(solve_gram(gram, &rhs)?, intercept)
}

/// Linear score `r(x) = θ·x`.
#[derive(Clone, Debug, PartialEq)]
pub struct RankerModel {
    pub theta: Vector,
    pub reg_strength: f64,
}

impl RankerModel {
    pub fn score(&self, x: &Matrix) -> Result<Vector> {
        if x.ncols() != self.theta.len() {
            return Err(Error::shape(format!(
                "matrix has {} columns, ranker expects {}",
                x.ncols(),
                self.theta.len()
            )));
        }
        Ok(x * &self.theta)
    }
}

pub const DEFAULT_RANKER_REG: f64 = 1e-4;

struct SquaredHinge {
    // winner minus loser, one row per comparison
    diffs: Matrix,
    reg: f64,
}

impl Objective for SquaredHinge {
    fn value(&self, theta: &Vector) -> f64 {
        let m = &self.diffs * theta;
        m.iter().map(|&v| (1.0 - v).max(0.0).powi(2)).sum::<f64>() / m.len() as f64
            + self.reg * theta.norm_squared()
    }

    fn gradient(&self, theta: &Vector) -> Vector {
        let n = self.diffs.nrows() as f64;
        let c = (&self.diffs * theta).map(|v| -2.0 * (1.0 - v).max(0.0) / n);
        self.diffs.tr_mul(&c) + theta * (2.0 * self.reg)
    }
}

/// Minimizes `(1/n_R)·Σ max(0, 1 − (r(x⁺) − r(x⁻)))² + reg·‖θ‖²`.
pub fn ranker_fit(pairs: &PairwiseSet, reg: f64) -> Result<RankerModel> {
    ranker_fit_with(pairs, reg, &SolverOptions::default())
}

pub fn ranker_fit_with(pairs: &PairwiseSet, reg: f64, opts: &SolverOptions) -> Result<RankerModel> {
    if pairs.is_empty() {
        return Err(Error::param("the ranker needs at least one comparison"));
    }
    if !(reg >= 0.0 && reg.is_finite()) {
        return Err(Error::param(format!("ranker regularization must be ≥ 0, got {reg}")));
    }
    let obj = SquaredHinge {
        diffs: pairs.winners() - pairs.losers(),
        reg,
    };
    let theta = match gradient_descent(&obj, Vector::zeros(pairs.dim()), opts) {
        Ok(m) => m.theta,
        Err(e) => return Err(Error::Numeric(e.to_string())),
    };
    Ok(RankerModel {
        theta,
        reg_strength: reg,
    })
}

/// Fraction of comparisons the scorer gets wrong; ties count as wrong.
pub fn ranking_error(ranker: &RankerModel, pairs: &PairwiseSet) -> Result<f64> {
    let p = ranker.score(pairs.winners())?;
    let m = ranker.score(pairs.losers())?;
    let wrong = p.iter().zip(m.iter()).filter(|(a, b)| a <= b).count();
    Ok(wrong as f64 / pairs.len().max(1) as f64)
}

/// Predicts through the rank of a test point among the unlabeled scores.
///
/// With `n′ = 1 + #{x ∈ D_U : r(x) > r(x_test)}`, the prediction is
/// `F_Y⁻¹(q)` for `q = (n_U − n′)/n_U`, clamped to
/// `[1/(n_U + 1), n_U/(n_U + 1)]`.
#[derive(Clone, Debug)]
pub struct RankPredictor {
    ranker: RankerModel,
    sorted_scores: Vec<f64>,
}

impl RankPredictor {
    pub fn new(ranker: &RankerModel, unlabeled: &Matrix) -> Result<Self> {
        if unlabeled.nrows() == 0 {
            return Err(Error::param("rank prediction needs unlabeled data"));
        }
        let mut sorted_scores: Vec<f64> = ranker.score(unlabeled)?.iter().copied().collect();
        sorted_scores.sort_by(f64::total_cmp);
        Ok(RankPredictor {
            ranker: ranker.clone(),
            sorted_scores,
        })
    }

    /// Quantile level assigned to a raw score.
    pub fn quantile_of_score(&self, score: f64) -> f64 {
        let n = self.sorted_scores.len();
        let above = n - self.sorted_scores.partition_point(|&s| s <= score);
        let n_prime = 1 + above;
        let nf = n as f64;
        let q = (nf - n_prime as f64) / nf;
        q.clamp(1.0 / (nf + 1.0), nf / (nf + 1.0))
    }

    pub fn predict(&self, dist: &dyn CumulativeDistribution, x: &[f64]) -> Result<f64> {
        let x = Matrix::from_row_slice(1, x.len(), x);
        let s = self.ranker.score(&x)?[0];
        dist.inv_cdf(self.quantile_of_score(s))
    }

    pub fn predict_rows(&self, dist: &dyn CumulativeDistribution, x: &Matrix) -> Result<Vector> {
        let scores = self.ranker.score(x)?;
        let mut out = Vector::zeros(scores.len());
        for (o, &s) in out.iter_mut().zip(scores.iter()) {
            *o = dist.inv_cdf(self.quantile_of_score(s))?;
        }
        Ok(out)
    }
}

/// One-off rank prediction; build a [`RankPredictor`] for batches.
pub fn rank_predict(
    ranker: &RankerModel,
    unlabeled: &Matrix,
    dist: &dyn CumulativeDistribution,
    x_test: &[f64],
) -> Result<f64> {
    RankPredictor::new(ranker, unlabeled)?.predict(dist, x_test)
}

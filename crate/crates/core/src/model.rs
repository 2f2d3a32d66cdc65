use std::borrow::Cow;

use nalgebra::Cholesky;

use crate::dataset::{Matrix, Vector};
use crate::error::{Error, Result};

/// Linear hypothesis `h(x) = θ·x`, optionally with a trailing intercept weight.
#[derive(Clone, Debug, PartialEq)]
pub struct LinearModel {
    theta: Vector,
    includes_intercept: bool,
}

impl LinearModel {
    /// `theta` has `d` entries, or `d + 1` when `includes_intercept` is set
    /// (the last entry multiplies a constant-1 feature).
    pub fn new(theta: Vector, includes_intercept: bool) -> Result<Self> {
        if theta.iter().any(|v| !v.is_finite()) {
            return Err(Error::Numeric("model weights are not finite".into()));
        }
        if includes_intercept && theta.is_empty() {
            return Err(Error::shape("intercept model needs at least one weight"));
        }
        Ok(LinearModel {
            theta,
            includes_intercept,
        })
    }

    pub fn zeros(dim: usize, includes_intercept: bool) -> Self {
        let len = dim + usize::from(includes_intercept);
        LinearModel {
            theta: Vector::zeros(len),
            includes_intercept,
        }
    }

    pub fn theta(&self) -> &Vector {
        &self.theta
    }

    pub fn includes_intercept(&self) -> bool {
        self.includes_intercept
    }

    /// Number of raw input features (excluding the intercept column).
    pub fn input_dim(&self) -> usize {
        self.theta.len() - usize::from(self.includes_intercept)
    }

    /// `h(x)` for a single feature vector of length [`Self::input_dim`].
    pub fn predict(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.input_dim() {
            return Err(Error::shape(format!(
                "feature vector has {} entries, model expects {}",
                x.len(),
                self.input_dim()
            )));
        }
        let mut s: f64 = x.iter().zip(self.theta.iter()).map(|(a, b)| a * b).sum();
        if self.includes_intercept {
            s += self.theta[self.theta.len() - 1];
        }
        Ok(s)
    }

    /// `h` applied to every row of `x`.
    pub fn scores(&self, x: &Matrix) -> Result<Vector> {
        if x.ncols() != self.input_dim() {
            return Err(Error::shape(format!(
                "matrix has {} columns, model expects {}",
                x.ncols(),
                self.input_dim()
            )));
        }
        Ok(design(x, self.includes_intercept).as_ref() * &self.theta)
    }
}

/// `x` with a constant-1 column appended when `intercept` is set.
pub(crate) fn design(x: &Matrix, intercept: bool) -> Cow<'_, Matrix> {
    if intercept {
        Cow::Owned(x.clone().insert_column(x.ncols(), 1.0))
    } else {
        Cow::Borrowed(x)
    }
}

pub(crate) const RIDGE: f64 = 1e-8;

/// Solves `G·θ = b`, retrying with `G + ε·I` when `G` is not positive definite.
pub(crate) fn solve_gram(gram: Matrix, rhs: &Vector) -> Result<Vector> {
    if let Some(ch) = Cholesky::new(gram.clone()) {
        let sol = ch.solve(rhs);
        if sol.iter().all(|v| v.is_finite()) {
            return Ok(sol);
        }
    }
    let n = gram.nrows();
    let ridged = gram + Matrix::identity(n, n) * RIDGE;
    Cholesky::new(ridged)
        .map(|ch| ch.solve(rhs))
        .filter(|s| s.iter().all(|v| v.is_finite()))
        .ok_or_else(|| Error::Numeric("normal equations are singular even with ridge".into()))
}

/// Free-function form of [`LinearModel::predict`].
pub fn predict(model: &LinearModel, x: &[f64]) -> Result<f64> {
    model.predict(x)
}

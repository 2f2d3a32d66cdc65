//! Regression from unlabeled features and pairwise comparisons.
//!
//! Two estimators learn a linear model `h(x) = θ·x` without ever seeing a
//! (feature, target) pair: they get unlabeled feature vectors, comparisons
//! saying which of two feature vectors has the larger target, and the
//! marginal law of the target.
//!
//! * [`ra`] approximates the Bregman risk by a linear combination of
//!   expectations over winners and losers.
//! * [`tt`] transforms the target through its CDF, where the risk can be
//!   written with comparisons alone, and maps predictions back.
//!
//! [`baselines`] holds least squares on true labels and a rank-based
//! predictor; [`eval`] runs repeated experiments and the Monte-Carlo checks.

pub mod baselines;
pub mod bregman;
pub mod cli;
pub mod dataio;
pub mod dataset;
pub mod distributions;
pub mod error;
pub mod eval;
pub mod model;
pub mod optim;
pub mod pairgen;
pub mod ra;
pub mod tt;

pub use bregman::{bregman_divergence, BregmanGenerator};
pub use dataset::{Dataset, Matrix, PairwiseSet, RiskConfig, Vector};
pub use distributions::{CumulativeDistribution, TargetDistribution};
pub use error::{Error, Result};
pub use model::{predict, LinearModel};

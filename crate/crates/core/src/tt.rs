//! Target transformation.
//!
//! `F_Y(Y)` is uniform on `[0, 1]`, and for uniform targets the coupled
//! term of the Bregman risk can be written with comparisons alone. So the
//! model is trained to predict `F_Y(Y)` and predictions are mapped back
//! through `F_Y⁻¹`:
//!
//! ```text
//! R̂_CDF(h) = −(1/n_U)·Σ [(λ − F(h(x)))·φ′(F(h(x))) + φ(F(h(x)))]
//!            −(1/n_R)·Σ [((1 − λ)/2)·φ′(F(h(x⁺))) − (λ/2)·φ′(F(h(x⁻)))]
//! ```
//!
//! Training replaces `F_Y ∘ h` by the logistic function `σ ∘ h`, which does
//! not need the target law at all; `F_Y⁻¹ ∘ σ ∘ h` is then the predictor.

use crate::bregman::BregmanGenerator;
use crate::dataset::{Matrix, PairwiseSet, Vector};
use crate::distributions::{CumulativeDistribution, TargetDistribution, QUANTILE_CLAMP};
use crate::error::{Error, Result};
use crate::model::{design, LinearModel};
use crate::optim::{gradient_descent, Objective, SolverOptions};

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct TtConfig {
    pub lambda: f64,
    /// Train on `σ ∘ h` instead of `F_Y ∘ h`.
    pub use_logistic_surrogate: bool,
    /// Build `F_Y` from the target sample itself (a step function).
    pub use_empirical_cdf: bool,
}

impl Default for TtConfig {
    fn default() -> Self {
        TtConfig {
            lambda: 0.5,
            use_logistic_surrogate: true,
            use_empirical_cdf: false,
        }
    }
}

impl TtConfig {
    fn validate(&self) -> Result<()> {
        if !self.lambda.is_finite() {
            return Err(Error::param(format!("TT λ must be finite, got {}", self.lambda)));
        }
        Ok(())
    }
}

/// Numerically stable logistic function.
pub fn logistic(t: f64) -> f64 {
    if t >= 0.0 {
        1.0 / (1.0 + (-t).exp())
    } else {
        let e = t.exp();
        e / (1.0 + e)
    }
}

// keeps φ′ finite for generators defined on the open unit interval
const LINK_EPS: f64 = 1e-12;

struct Terms<'a> {
    gen: BregmanGenerator,
    lambda: f64,
    unlabeled: &'a Matrix,
    winners: &'a Matrix,
    losers: &'a Matrix,
}

impl Terms<'_> {
    fn squash(&self, s: f64) -> (f64, bool) {
        match self.gen {
            BregmanGenerator::Squared => (s, false),
            BregmanGenerator::BernoulliKl => {
                let c = s.clamp(LINK_EPS, 1.0 - LINK_EPS);
                (c, c != s)
            }
        }
    }

    fn value(&self, theta: &Vector, link: impl Fn(f64) -> f64) -> f64 {
        let (g, lambda) = (self.gen, self.lambda);
        let s = |h: f64| self.squash(link(h)).0;
        let hu = self.unlabeled * theta;
        let unl = hu
            .iter()
            .map(|&h| {
                let s = s(h);
                (lambda - s) * g.phi_prime(s) + g.phi(s)
            })
            .sum::<f64>()
            / hu.len() as f64;
        let n_r = self.winners.nrows();
        if n_r == 0 {
            return -unl;
        }
        let hp = self.winners * theta;
        let hm = self.losers * theta;
        let pair = hp
            .iter()
            .zip(hm.iter())
            .map(|(&a, &b)| 0.5 * (1.0 - lambda) * g.phi_prime(s(a)) - 0.5 * lambda * g.phi_prime(s(b)))
            .sum::<f64>()
            / n_r as f64;
        -unl - pair
    }

    /// `link` returns `(s, ds/dh)`.
    fn gradient(&self, theta: &Vector, link: impl Fn(f64) -> (f64, f64)) -> Vector {
        let (g, lambda) = (self.gen, self.lambda);
        let s = |h: f64| {
            let (raw, slope) = link(h);
            let (s, clamped) = self.squash(raw);
            (s, if clamped { 0.0 } else { slope })
        };
        let n_u = self.unlabeled.nrows() as f64;
        let cu = (self.unlabeled * theta).map(|h| {
            let (s, ds) = s(h);
            -(lambda - s) * g.phi_second(s) * ds / n_u
        });
        let mut grad = self.unlabeled.tr_mul(&cu);
        let n_r = self.winners.nrows();
        if n_r > 0 {
            let n_r = n_r as f64;
            let cp = (self.winners * theta).map(|h| {
                let (s, ds) = s(h);
                -0.5 * (1.0 - lambda) * g.phi_second(s) * ds / n_r
            });
            let cm = (self.losers * theta).map(|h| {
                let (s, ds) = s(h);
                0.5 * lambda * g.phi_second(s) * ds / n_r
            });
            grad += self.winners.tr_mul(&cp);
            grad += self.losers.tr_mul(&cm);
        }
        grad
    }
}

struct Surrogate<'a>(Terms<'a>);

impl Objective for Surrogate<'_> {
    fn value(&self, theta: &Vector) -> f64 {
        self.0.value(theta, logistic)
    }

    fn gradient(&self, theta: &Vector) -> Vector {
        self.0.gradient(theta, |h| {
            let s = logistic(h);
            (s, s * (1.0 - s))
        })
    }
}

struct ExactCdf<'a> {
    terms: Terms<'a>,
    dist: &'a dyn TargetDistribution,
}

impl Objective for ExactCdf<'_> {
    fn value(&self, theta: &Vector) -> f64 {
        self.terms.value(theta, |h| self.dist.cdf(h))
    }

    fn gradient(&self, theta: &Vector) -> Vector {
        self.terms.gradient(theta, |h| (self.dist.cdf(h), self.dist.pdf(h)))
    }
}

fn check_dims(model: &LinearModel, unlabeled: &Matrix, pairs: &PairwiseSet) -> Result<()> {
    let d = model.input_dim();
    if unlabeled.ncols() != d || (!pairs.is_empty() && pairs.dim() != d) {
        return Err(Error::shape(format!(
            "model expects {d} features; unlabeled has {}, comparisons have {}",
            unlabeled.ncols(),
            pairs.dim()
        )));
    }
    if unlabeled.nrows() == 0 {
        return Err(Error::param("unlabeled data is empty"));
    }
    Ok(())
}

fn with_terms<T>(
    model: &LinearModel,
    gen: BregmanGenerator,
    lambda: f64,
    unlabeled: &Matrix,
    pairs: &PairwiseSet,
    f: impl FnOnce(&Terms<'_>) -> T,
) -> Result<T> {
    check_dims(model, unlabeled, pairs)?;
    let icpt = model.includes_intercept();
    let (u, w, l) = (
        design(unlabeled, icpt),
        design(pairs.winners(), icpt),
        design(pairs.losers(), icpt),
    );
    Ok(f(&Terms {
        gen,
        lambda,
        unlabeled: &u,
        winners: &w,
        losers: &l,
    }))
}

/// `R̂_CDF` of `model` under the CDF of `cdf`, without the constant.
///
/// For the step-function variant pass an
/// [`EmpiricalCdf`](crate::distributions::EmpiricalCdf) built from the
/// target sample.
pub fn tt_cdf_risk(
    model: &LinearModel,
    gen: BregmanGenerator,
    cdf: &dyn CumulativeDistribution,
    unlabeled: &Matrix,
    pairs: &PairwiseSet,
    cfg: &TtConfig,
) -> Result<f64> {
    cfg.validate()?;
    with_terms(model, gen, cfg.lambda, unlabeled, pairs, |t| {
        t.value(model.theta(), |h| cdf.cdf(h))
    })
}

/// Logistic-surrogate risk with `λ = 1/2`.
pub fn tt_surrogate_risk(
    model: &LinearModel,
    gen: BregmanGenerator,
    unlabeled: &Matrix,
    pairs: &PairwiseSet,
) -> Result<f64> {
    tt_surrogate_risk_with_lambda(model, gen, unlabeled, pairs, 0.5)
}

pub fn tt_surrogate_risk_with_lambda(
    model: &LinearModel,
    gen: BregmanGenerator,
    unlabeled: &Matrix,
    pairs: &PairwiseSet,
    lambda: f64,
) -> Result<f64> {
    with_terms(model, gen, lambda, unlabeled, pairs, |t| {
        Surrogate(Terms { ..*t }).value(model.theta())
    })
}

/// Gradient of [`tt_surrogate_risk`].
pub fn tt_surrogate_gradient(
    model: &LinearModel,
    gen: BregmanGenerator,
    unlabeled: &Matrix,
    pairs: &PairwiseSet,
) -> Result<Vector> {
    with_terms(model, gen, 0.5, unlabeled, pairs, |t| {
        Surrogate(Terms { ..*t }).gradient(model.theta())
    })
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct TtFitOptions {
    pub intercept: bool,
    pub solver: SolverOptions,
}

fn multi_start<O: Objective>(obj: &O, p: usize, solver: &SolverOptions) -> Result<Vector> {
    let starts = [
        Vector::zeros(p),
        Vector::from_element(p, 0.1),
        Vector::from_element(p, -0.1),
    ];
    let mut best: Option<(f64, Vector)> = None;
    for start in starts {
        let m = gradient_descent(obj, start, solver)?;
        if best.as_ref().is_none_or(|(v, _)| m.value < *v) {
            best = Some((m.value, m.theta));
        }
    }
    Ok(best.expect("three starts").1)
}

/// Minimizes the logistic-surrogate risk (with `cfg.lambda`), keeping the
/// best of three fixed starting points.
pub fn tt_fit(
    gen: BregmanGenerator,
    unlabeled: &Matrix,
    pairs: &PairwiseSet,
    cfg: &TtConfig,
    opts: &TtFitOptions,
) -> Result<LinearModel> {
    cfg.validate()?;
    if !cfg.use_logistic_surrogate {
        return Err(Error::param(if cfg.use_empirical_cdf {
            "the empirical CDF is a step function and cannot be trained on directly"
        } else {
            "training on the exact CDF needs a density; use tt_fit_cdf"
        }));
    }
    let zero = LinearModel::zeros(unlabeled.ncols(), opts.intercept);
    let theta = with_terms(&zero, gen, cfg.lambda, unlabeled, pairs, |t| {
        multi_start(&Surrogate(Terms { ..*t }), zero.theta().len(), &opts.solver)
    })??;
    LinearModel::new(theta, opts.intercept)
}

/// Minimizes `R̂_CDF` with the exact `F_Y` of `dist`.
pub fn tt_fit_cdf(
    gen: BregmanGenerator,
    dist: &dyn TargetDistribution,
    unlabeled: &Matrix,
    pairs: &PairwiseSet,
    cfg: &TtConfig,
    opts: &TtFitOptions,
) -> Result<LinearModel> {
    cfg.validate()?;
    let zero = LinearModel::zeros(unlabeled.ncols(), opts.intercept);
    let theta = with_terms(&zero, gen, cfg.lambda, unlabeled, pairs, |t| {
        let obj = ExactCdf {
            terms: Terms { ..*t },
            dist,
        };
        multi_start(&obj, zero.theta().len(), &opts.solver)
    })??;
    LinearModel::new(theta, opts.intercept)
}

/// `F_Y⁻¹(σ(h(x)))`, with `σ` clamped away from 0 and 1.
pub fn tt_predict(model: &LinearModel, dist: &dyn CumulativeDistribution, x: &[f64]) -> Result<f64> {
    let s = logistic(model.predict(x)?).clamp(QUANTILE_CLAMP, 1.0 - QUANTILE_CLAMP);
    dist.inv_cdf(s)
}

/// [`tt_predict`] for every row of `x`.
pub fn tt_predict_rows(model: &LinearModel, dist: &dyn CumulativeDistribution, x: &Matrix) -> Result<Vector> {
    let scores = model.scores(x)?;
    let mut out = Vector::zeros(scores.len());
    for (o, &h) in out.iter_mut().zip(scores.iter()) {
        *o = dist.inv_cdf(logistic(h).clamp(QUANTILE_CLAMP, 1.0 - QUANTILE_CLAMP))?;
    }
    Ok(out)
}

//! Risk approximation.
//!
//! The Bregman risk splits into a term that needs only `P_X`, a constant
//! `E[φ(Y)]`, and the coupled term `E[Y·φ′(h(X))]`. The coupled term is
//! replaced by `w1·E[φ′(h(X⁺))] + w2·E[φ′(h(X⁻))]`, plus `λ` times a
//! combination whose expectation is zero:
//!
//! ```text
//! R̂(h) = −(1/n_U)·Σ [φ(h(x)) − (h(x) − λ)·φ′(h(x))]
//!        −(1/n_R)·Σ [(w1 − λ/2)·φ′(h(x⁺)) + (w2 − λ/2)·φ′(h(x⁻))]
//! ```
//!
//! The weights are chosen by minimizing
//! `Err(w1, w2) = E|Y − 2·w1·F_Y(Y) − 2·w2·(1 − F_Y(Y))|`, which vanishes
//! exactly when `Y` is uniform on `[a, b]` and `(w1, w2) = (b/2, a/2)`.

use crate::bregman::BregmanGenerator;
use crate::dataset::{Matrix, PairwiseSet, RiskConfig, Vector};
use crate::distributions::{empirical_cdf_eval, EmpiricalCdf, TargetDistribution};
use crate::error::{Error, Result};
use crate::model::{design, solve_gram, LinearModel};
use crate::optim::{gradient_descent, Objective, SolverOptions};

/// Settings of the `Err` grid approximation and of the weight search.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RaTuning {
    pub n_split: usize,
    pub quantile_lo: f64,
    pub quantile_hi: f64,
    /// Half-width `B` of the initial search square `[−B, B]²`; `None` uses
    /// `max(|y̲|, |ȳ|)`.
    pub weight_search_bound: Option<f64>,
    pub grid_rounds: usize,
    pub grid_points_per_axis: usize,
}

impl Default for RaTuning {
    fn default() -> Self {
        RaTuning {
            n_split: 1000,
            quantile_lo: 0.01,
            quantile_hi: 0.99,
            weight_search_bound: None,
            grid_rounds: 3,
            grid_points_per_axis: 51,
        }
    }
}

impl RaTuning {
    fn validate(&self) -> Result<()> {
        if !(0.0 < self.quantile_lo && self.quantile_lo < self.quantile_hi && self.quantile_hi < 1.0) {
            return Err(Error::param(format!(
                "need 0 < quantile_lo < quantile_hi < 1, got ({}, {})",
                self.quantile_lo, self.quantile_hi
            )));
        }
        if self.n_split == 0 || self.grid_rounds == 0 || self.grid_points_per_axis < 2 {
            return Err(Error::param("n_split, grid_rounds must be ≥ 1 and grid points ≥ 2"));
        }
        if let Some(b) = self.weight_search_bound {
            if !(b > 0.0 && b.is_finite()) {
                return Err(Error::param(format!("weight search bound must be > 0, got {b}")));
            }
        }
        Ok(())
    }
}

/// Precomputed `(y_i, weight_i, F(y_i))` terms of an `Err` sum; the weight
/// is `f_Y(y_i)·Δy` for the grid form and `1/n` for the empirical form.
struct ErrTerms {
    terms: Vec<(f64, f64, f64)>,
    default_bound: f64,
}

impl ErrTerms {
    fn from_distribution(dist: &dyn TargetDistribution, tuning: &RaTuning) -> Result<Self> {
        tuning.validate()?;
        let lo = dist.inv_cdf(tuning.quantile_lo)?;
        let hi = dist.inv_cdf(tuning.quantile_hi)?;
        if hi.is_nan() || lo.is_nan() || hi <= lo {
            return Err(Error::param(format!(
                "degenerate quantile range [{lo}, {hi}] for the weight objective"
            )));
        }
        let n = tuning.n_split;
        let dy = (hi - lo) / n as f64;
        let terms = (0..=n)
            .map(|i| {
                let y = lo + i as f64 * dy;
                (y, dist.pdf(y) * dy, dist.cdf(y))
            })
            .collect();
        Ok(ErrTerms {
            terms,
            default_bound: lo.abs().max(hi.abs()),
        })
    }

    fn from_targets(targets: &[f64]) -> Result<Self> {
        if targets.len() < 2 {
            return Err(Error::param("the empirical weight objective needs at least 2 targets"));
        }
        let ecdf = EmpiricalCdf::new(targets)?;
        let inv_n = 1.0 / targets.len() as f64;
        // sorted order keeps the float sums independent of the input order
        let terms = ecdf
            .sorted_values()
            .iter()
            .map(|&y| (y, inv_n, empirical_cdf_eval(&ecdf, y)))
            .collect();
        let (lo, hi) = (ecdf.sorted_values()[0], ecdf.sorted_values()[targets.len() - 1]);
        Ok(ErrTerms {
            terms,
            default_bound: lo.abs().max(hi.abs()),
        })
    }

    fn eval(&self, w1: f64, w2: f64) -> f64 {
        self.terms
            .iter()
            .map(|&(y, wt, f)| wt * (y - 2.0 * w1 * f - 2.0 * w2 * (1.0 - f)).abs())
            .sum()
    }

    /// Nested grid search; every round zooms ×5 around the incumbent.
    fn minimize(&self, tuning: &RaTuning) -> (f64, f64) {
        let bound = tuning.weight_search_bound.unwrap_or(self.default_bound);
        let bound = if bound > 0.0 { bound } else { 1.0 };
        let k = tuning.grid_points_per_axis;
        let (mut c1, mut c2, mut half) = (0.0, 0.0, bound);
        for _ in 0..tuning.grid_rounds {
            let mut best = (f64::INFINITY, c1, c2);
            for i in 0..k {
                let w1 = c1 - half + 2.0 * half * i as f64 / (k - 1) as f64;
                for j in 0..k {
                    let w2 = c2 - half + 2.0 * half * j as f64 / (k - 1) as f64;
                    let v = self.eval(w1, w2);
                    if v < best.0 {
                        best = (v, w1, w2);
                    }
                }
            }
            (c1, c2) = (best.1, best.2);
            half /= 5.0;
        }
        (c1, c2)
    }
}

/// Grid approximation of `Err(w1, w2)` between the `quantile_lo` and
/// `quantile_hi` quantiles of `dist`.
pub fn err_objective(dist: &dyn TargetDistribution, w1: f64, w2: f64, tuning: &RaTuning) -> Result<f64> {
    Ok(ErrTerms::from_distribution(dist, tuning)?.eval(w1, w2))
}

/// `Err` with the expectation and the CDF both replaced by their empirical
/// counterparts over `targets`.
pub fn err_objective_empirical(targets: &[f64], w1: f64, w2: f64) -> Result<f64> {
    Ok(ErrTerms::from_targets(targets)?.eval(w1, w2))
}

/// Weights minimizing [`err_objective`], with `λ = (w1 + w2)/2`.
pub fn tune_weights(dist: &dyn TargetDistribution, tuning: &RaTuning) -> Result<RiskConfig> {
    let (w1, w2) = ErrTerms::from_distribution(dist, tuning)?.minimize(tuning);
    RiskConfig::with_midpoint_lambda(w1, w2)
}

/// Weights minimizing [`err_objective_empirical`], with `λ = (w1 + w2)/2`.
pub fn tune_weights_empirical(targets: &[f64], tuning: &RaTuning) -> Result<RiskConfig> {
    tuning.validate()?;
    let (w1, w2) = ErrTerms::from_targets(targets)?.minimize(tuning);
    RiskConfig::with_midpoint_lambda(w1, w2)
}

/// Variances of `φ′(h(X⁺))` and `φ′(h(X⁻))`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct RaVariances {
    pub sigma2_plus: f64,
    pub sigma2_minus: f64,
}

/// The `λ` that minimizes the variance of the empirical risk as
/// `n_U → ∞`: `2·(w1·σ₊² + w2·σ₋²)/(σ₊² + σ₋²)`.
pub fn optimal_lambda(w1: f64, w2: f64, v: RaVariances) -> Result<f64> {
    if v.sigma2_plus < 0.0 || v.sigma2_minus < 0.0 {
        return Err(Error::param("variances must be nonnegative"));
    }
    let total = v.sigma2_plus + v.sigma2_minus;
    if total.is_nan() || total <= 0.0 {
        return Err(Error::Numeric(
            "both comparison variances are zero; λ is undetermined".into(),
        ));
    }
    Ok(2.0 * (w1 * v.sigma2_plus + w2 * v.sigma2_minus) / total)
}

fn sample_variance(values: impl ExactSizeIterator<Item = f64> + Clone) -> f64 {
    let n = values.len() as f64;
    let mean = values.clone().sum::<f64>() / n;
    values.map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0)
}

/// Unbiased sample variances of `φ′(h(x⁺ᵢ))` and `φ′(h(x⁻ᵢ))`.
pub fn estimate_variances(
    model: &LinearModel,
    gen: BregmanGenerator,
    pairs: &PairwiseSet,
) -> Result<RaVariances> {
    if pairs.len() < 2 {
        return Err(Error::param("variance estimation needs at least 2 comparisons"));
    }
    let plus = model.scores(pairs.winners())?.map(|h| gen.phi_prime(h));
    let minus = model.scores(pairs.losers())?.map(|h| gen.phi_prime(h));
    if plus.iter().chain(minus.iter()).any(|v| !v.is_finite()) {
        return Err(Error::domain(format!(
            "model scores leave the domain of the {} generator",
            gen.name()
        )));
    }
    Ok(RaVariances {
        sigma2_plus: sample_variance(plus.iter().copied()),
        sigma2_minus: sample_variance(minus.iter().copied()),
    })
}

/// The empirical approximate risk as a function of `θ`, over design matrices
/// (intercept column already appended when the model has one).
pub(crate) struct RaObjective<'a> {
    gen: BregmanGenerator,
    unlabeled: &'a Matrix,
    winners: &'a Matrix,
    losers: &'a Matrix,
    cfg: RiskConfig,
}

impl RaObjective<'_> {
    fn coefficients(&self) -> (f64, f64) {
        (self.cfg.w1 - 0.5 * self.cfg.lambda, self.cfg.w2 - 0.5 * self.cfg.lambda)
    }
}

impl Objective for RaObjective<'_> {
    fn value(&self, theta: &Vector) -> f64 {
        let g = self.gen;
        let lambda = self.cfg.lambda;
        let (cp, cm) = self.coefficients();
        let hu = self.unlabeled * theta;
        let unl = hu
            .iter()
            .map(|&h| g.phi(h) - (h - lambda) * g.phi_prime(h))
            .sum::<f64>()
            / hu.len() as f64;
        let n_r = self.winners.nrows();
        let pair = if n_r == 0 {
            0.0
        } else {
            let hp = self.winners * theta;
            let hm = self.losers * theta;
            hp.iter()
                .zip(hm.iter())
                .map(|(&a, &b)| cp * g.phi_prime(a) + cm * g.phi_prime(b))
                .sum::<f64>()
                / n_r as f64
        };
        -unl - pair
    }

    fn gradient(&self, theta: &Vector) -> Vector {
        let g = self.gen;
        let lambda = self.cfg.lambda;
        let (cp, cm) = self.coefficients();
        let n_u = self.unlabeled.nrows() as f64;
        let coef_u = (self.unlabeled * theta).map(|h| (h - lambda) * g.phi_second(h) / n_u);
        let mut grad = self.unlabeled.tr_mul(&coef_u);
        let n_r = self.winners.nrows();
        if n_r > 0 {
            let n_r = n_r as f64;
            let coef_p = (self.winners * theta).map(|h| cp * g.phi_second(h) / n_r);
            let coef_m = (self.losers * theta).map(|h| cm * g.phi_second(h) / n_r);
            grad -= self.winners.tr_mul(&coef_p);
            grad -= self.losers.tr_mul(&coef_m);
        }
        grad
    }
}

fn check_dims(model_dim: usize, unlabeled: &Matrix, pairs: &PairwiseSet) -> Result<()> {
    if unlabeled.ncols() != model_dim || (!pairs.is_empty() && pairs.dim() != model_dim) {
        return Err(Error::shape(format!(
            "model expects {model_dim} features; unlabeled has {}, comparisons have {}",
            unlabeled.ncols(),
            pairs.dim()
        )));
    }
    if unlabeled.nrows() == 0 {
        return Err(Error::param("unlabeled data is empty"));
    }
    Ok(())
}

/// Empirical approximate risk of `model`, without the constant `E[φ(Y)]`.
pub fn ra_empirical_risk(
    model: &LinearModel,
    gen: BregmanGenerator,
    unlabeled: &Matrix,
    pairs: &PairwiseSet,
    cfg: &RiskConfig,
) -> Result<f64> {
    check_dims(model.input_dim(), unlabeled, pairs)?;
    let icpt = model.includes_intercept();
    let (u, w, l) = (
        design(unlabeled, icpt),
        design(pairs.winners(), icpt),
        design(pairs.losers(), icpt),
    );
    let obj = RaObjective {
        gen,
        unlabeled: &u,
        winners: &w,
        losers: &l,
        cfg: *cfg,
    };
    let v = obj.value(model.theta());
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::domain(format!(
            "risk is not finite; scores leave the domain of the {} generator",
            gen.name()
        )))
    }
}

/// Gradient of [`ra_empirical_risk`] with respect to the model weights.
pub fn ra_gradient(
    model: &LinearModel,
    gen: BregmanGenerator,
    unlabeled: &Matrix,
    pairs: &PairwiseSet,
    cfg: &RiskConfig,
) -> Result<Vector> {
    check_dims(model.input_dim(), unlabeled, pairs)?;
    let icpt = model.includes_intercept();
    let (u, w, l) = (
        design(unlabeled, icpt),
        design(pairs.winners(), icpt),
        design(pairs.losers(), icpt),
    );
    let obj = RaObjective {
        gen,
        unlabeled: &u,
        winners: &w,
        losers: &l,
        cfg: *cfg,
    };
    Ok(obj.gradient(model.theta()))
}

/// How [`ra_fit`] minimizes the risk.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum RaSolver {
    /// Normal equations for the squared generator, gradient descent otherwise.
    #[default]
    Auto,
    GradientDescent,
}

#[derive(Clone, Debug, Default, PartialEq)]
pub struct FitOptions {
    pub intercept: bool,
    pub solver: SolverOptions,
    pub ra_solver: RaSolver,
    /// Gradient-descent starting point; zeros when absent.
    pub start: Option<Vector>,
}

fn column_means(x: &Matrix) -> Vector {
    if x.nrows() == 0 {
        return Vector::zeros(x.ncols());
    }
    x.row_mean().transpose()
}

/// Minimizes [`ra_empirical_risk`] over linear models.
pub fn ra_fit(
    gen: BregmanGenerator,
    unlabeled: &Matrix,
    pairs: &PairwiseSet,
    cfg: &RiskConfig,
    opts: &FitOptions,
) -> Result<LinearModel> {
    check_dims(unlabeled.ncols(), unlabeled, pairs)?;
    let (u, w, l) = (
        design(unlabeled, opts.intercept),
        design(pairs.winners(), opts.intercept),
        design(pairs.losers(), opts.intercept),
    );
    let p = u.ncols();
    let theta = if gen == BregmanGenerator::Squared && opts.ra_solver == RaSolver::Auto {
        let gram = u.tr_mul(&u) / u.nrows() as f64;
        let (cp, cm) = (cfg.w1 - 0.5 * cfg.lambda, cfg.w2 - 0.5 * cfg.lambda);
        let rhs = column_means(&u) * cfg.lambda + column_means(&w) * cp + column_means(&l) * cm;
        solve_gram(gram, &rhs)?
    } else {
        let obj = RaObjective {
            gen,
            unlabeled: &u,
            winners: &w,
            losers: &l,
            cfg: *cfg,
        };
        let start = match &opts.start {
            Some(s) if s.len() == p => s.clone(),
            Some(s) => {
                return Err(Error::shape(format!(
                    "start has {} entries, expected {p}",
                    s.len()
                )))
            }
            None => Vector::zeros(p),
        };
        gradient_descent(&obj, start, &opts.solver)?.theta
    };
    LinearModel::new(theta, opts.intercept)
}

/// Two-stage fit with the variance-optimal `λ`: fit with `cfg`, estimate the
/// comparison variances at that model, recompute `λ`, refit once.
///
/// When both variances vanish `λ` is left unchanged.
pub fn ra_fit_optimal_lambda(
    gen: BregmanGenerator,
    unlabeled: &Matrix,
    pairs: &PairwiseSet,
    cfg: &RiskConfig,
    opts: &FitOptions,
) -> Result<(LinearModel, RiskConfig)> {
    let first = ra_fit(gen, unlabeled, pairs, cfg, opts)?;
    let v = estimate_variances(&first, gen, pairs)?;
    let lambda = match optimal_lambda(cfg.w1, cfg.w2, v) {
        Ok(l) => l,
        Err(Error::Numeric(_)) => return Ok((first, *cfg)),
        Err(e) => return Err(e),
    };
    let tuned = RiskConfig::new(cfg.w1, cfg.w2, lambda)?;
    Ok((ra_fit(gen, unlabeled, pairs, &tuned, opts)?, tuned))
}

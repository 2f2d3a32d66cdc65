//! Target distributions `P_Y`.
//!
//! The estimators only ever see the target through its density `f_Y`, its
//! CDF `F_Y` and the inverse CDF. Analytic laws (uniform, Gaussian), a
//! Gaussian-kernel density estimate and the empirical CDF all plug in here.

use std::f64::consts::{PI, SQRT_2};

use statrs::function::erf::{erfc, erfc_inv};

use crate::error::{Error, Result};

/// Quantile arguments are pulled into this band before inversion so that
/// unbounded supports never produce infinite quantiles.
pub const QUANTILE_CLAMP: f64 = 1e-9;

const INV_SQRT_2PI: f64 = 0.398_942_280_401_432_7;

/// A CDF together with its (generalized) inverse.
pub trait CumulativeDistribution: Send + Sync {
    fn cdf(&self, y: f64) -> f64;

    /// Quantile function. `u` must lie in `(0, 1)`; it is clamped to
    /// `[QUANTILE_CLAMP, 1 − QUANTILE_CLAMP]` before inversion.
    fn inv_cdf(&self, u: f64) -> Result<f64>;
}

/// A target law with a density.
pub trait TargetDistribution: CumulativeDistribution {
    fn pdf(&self, y: f64) -> f64;

    /// Interval that brackets essentially all of the mass; used for numeric
    /// inversion.
    fn support_bounds(&self) -> (f64, f64);
}

fn clamp_unit(u: f64) -> Result<f64> {
    if u > 0.0 && u < 1.0 {
        Ok(u.clamp(QUANTILE_CLAMP, 1.0 - QUANTILE_CLAMP))
    } else {
        Err(Error::domain(format!("quantile argument {u} is outside (0, 1)")))
    }
}

#[inline]
fn std_normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / SQRT_2)
}

#[inline]
fn std_normal_pdf(z: f64) -> f64 {
    INV_SQRT_2PI * (-0.5 * z * z).exp()
}

fn std_normal_quantile(u: f64) -> f64 {
    -SQRT_2 * erfc_inv(2.0 * u)
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Gaussian {
    mean: f64,
    std: f64,
}

impl Gaussian {
    pub fn mean(&self) -> f64 {
        self.mean
    }

    pub fn std(&self) -> f64 {
        self.std
    }
}

pub fn gaussian_distribution(mean: f64, std: f64) -> Result<Gaussian> {
    if !(std > 0.0 && std.is_finite() && mean.is_finite()) {
        return Err(Error::param(format!(
            "gaussian needs finite mean and std > 0, got ({mean}, {std})"
        )));
    }
    Ok(Gaussian { mean, std })
}

impl CumulativeDistribution for Gaussian {
    fn cdf(&self, y: f64) -> f64 {
        std_normal_cdf((y - self.mean) / self.std)
    }

    fn inv_cdf(&self, u: f64) -> Result<f64> {
        let u = clamp_unit(u)?;
        Ok(self.mean + self.std * std_normal_quantile(u))
    }
}

impl TargetDistribution for Gaussian {
    fn pdf(&self, y: f64) -> f64 {
        std_normal_pdf((y - self.mean) / self.std) / self.std
    }

    fn support_bounds(&self) -> (f64, f64) {
        (self.mean - 10.0 * self.std, self.mean + 10.0 * self.std)
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Uniform {
    a: f64,
    b: f64,
}

pub fn uniform_distribution(a: f64, b: f64) -> Result<Uniform> {
    if !(a < b && a.is_finite() && b.is_finite()) {
        return Err(Error::param(format!("uniform needs a < b, got [{a}, {b}]")));
    }
    Ok(Uniform { a, b })
}

impl CumulativeDistribution for Uniform {
    fn cdf(&self, y: f64) -> f64 {
        ((y - self.a) / (self.b - self.a)).clamp(0.0, 1.0)
    }

    fn inv_cdf(&self, u: f64) -> Result<f64> {
        let u = clamp_unit(u)?;
        Ok(self.a + u * (self.b - self.a))
    }
}

impl TargetDistribution for Uniform {
    fn pdf(&self, y: f64) -> f64 {
        if y >= self.a && y <= self.b {
            1.0 / (self.b - self.a)
        } else {
            0.0
        }
    }

    fn support_bounds(&self) -> (f64, f64) {
        (self.a, self.b)
    }
}

/// Gaussian-kernel density estimate: sample points plus a bandwidth.
#[derive(Clone, Debug, PartialEq)]
pub struct KdeModel {
    sample_points: Vec<f64>,
    bandwidth: f64,
}

impl KdeModel {
    pub fn new(sample_points: Vec<f64>, bandwidth: f64) -> Result<Self> {
        if sample_points.is_empty() {
            return Err(Error::param("kde needs at least one sample point"));
        }
        if sample_points.iter().any(|v| !v.is_finite()) {
            return Err(Error::param("kde sample points must be finite"));
        }
        if !(bandwidth > 0.0 && bandwidth.is_finite()) {
            return Err(Error::param(format!("kde bandwidth must be > 0, got {bandwidth}")));
        }
        Ok(KdeModel {
            sample_points,
            bandwidth,
        })
    }

    pub fn sample_points(&self) -> &[f64] {
        &self.sample_points
    }

    pub fn bandwidth(&self) -> f64 {
        self.bandwidth
    }
}

/// Silverman's rule of thumb, `1.06·std·n^(−1/5)` (sample std).
pub fn silverman_bandwidth(values: &[f64]) -> f64 {
    let n = values.len() as f64;
    let mean = values.iter().sum::<f64>() / n;
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
    1.06 * var.sqrt() * n.powf(-0.2)
}

const CV_FOLDS: usize = 5;

/// Mean held-out log-likelihood over `CV_FOLDS` folds assigned by index
/// modulo the fold count.
fn cv_log_likelihood(values: &[f64], h: f64) -> f64 {
    let mut total = 0.0;
    let mut count = 0usize;
    let log_norm = -(h * (2.0 * PI).sqrt()).ln();
    for fold in 0..CV_FOLDS {
        let train: Vec<f64> = values
            .iter()
            .enumerate()
            .filter(|(i, _)| i % CV_FOLDS != fold)
            .map(|(_, &v)| v)
            .collect();
        let ln_m = (train.len() as f64).ln();
        for (_, &y) in values.iter().enumerate().filter(|(i, _)| i % CV_FOLDS == fold) {
            // log-sum-exp over the kernel exponents
            let exps: Vec<f64> = train
                .iter()
                .map(|&t| {
                    let z = (y - t) / h;
                    -0.5 * z * z
                })
                .collect();
            let m = exps.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            let s: f64 = exps.iter().map(|e| (e - m).exp()).sum();
            total += m + s.ln() - ln_m + log_norm;
            count += 1;
        }
    }
    total / count as f64
}

/// Fits a Gaussian KDE, choosing the bandwidth that maximizes 5-fold
/// cross-validated log-likelihood over `bandwidth_grid`.
///
/// An empty grid means 20 log-spaced values in `[h_s/10, 10·h_s]` around the
/// Silverman bandwidth `h_s`.
pub fn fit_kde(targets: &[f64], bandwidth_grid: &[f64]) -> Result<KdeModel> {
    if targets.len() < CV_FOLDS {
        return Err(Error::param(format!(
            "bandwidth cross-validation needs at least {CV_FOLDS} targets, got {}",
            targets.len()
        )));
    }
    if targets.iter().any(|v| !v.is_finite()) {
        return Err(Error::param("targets must be finite"));
    }
    let grid: Vec<f64> = if bandwidth_grid.is_empty() {
        let hs = silverman_bandwidth(targets);
        if hs.is_nan() || hs <= 0.0 {
            return Err(Error::param("targets have zero spread; no default bandwidth grid"));
        }
        let (lo, hi) = ((hs / 10.0).ln(), (hs * 10.0).ln());
        (0..20).map(|i| (lo + (hi - lo) * i as f64 / 19.0).exp()).collect()
    } else {
        if let Some(bad) = bandwidth_grid.iter().find(|&&h| !(h > 0.0 && h.is_finite())) {
            return Err(Error::param(format!("bandwidth {bad} is not positive")));
        }
        bandwidth_grid.to_vec()
    };
    let mut best = (f64::NEG_INFINITY, grid[0]);
    for &h in &grid {
        let ll = cv_log_likelihood(targets, h);
        if ll > best.0 {
            best = (ll, h);
        }
    }
    KdeModel::new(targets.to_vec(), best.1)
}

/// Distribution view of a fitted KDE.
#[derive(Clone, Debug)]
pub struct KdeDistribution {
    points: Vec<f64>,
    h: f64,
    low: f64,
    high: f64,
}

pub fn kde_distribution(model: &KdeModel) -> KdeDistribution {
    let mut points = model.sample_points.clone();
    points.sort_by(f64::total_cmp);
    let h = model.bandwidth;
    let low = points[0] - 5.0 * h;
    let high = points[points.len() - 1] + 5.0 * h;
    KdeDistribution { points, h, low, high }
}

impl KdeDistribution {
    pub fn bandwidth(&self) -> f64 {
        self.h
    }
}

impl CumulativeDistribution for KdeDistribution {
    fn cdf(&self, y: f64) -> f64 {
        let s: f64 = self.points.iter().map(|&p| std_normal_cdf((y - p) / self.h)).sum();
        (s / self.points.len() as f64).clamp(0.0, 1.0)
    }

    fn inv_cdf(&self, u: f64) -> Result<f64> {
        let u = clamp_unit(u)?;
        let (mut lo, mut hi) = (self.low, self.high);
        while hi - lo > 1e-8 {
            let mid = 0.5 * (lo + hi);
            if self.cdf(mid) < u {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        Ok(0.5 * (lo + hi))
    }
}

impl TargetDistribution for KdeDistribution {
    fn pdf(&self, y: f64) -> f64 {
        let s: f64 = self.points.iter().map(|&p| std_normal_pdf((y - p) / self.h)).sum();
        s / (self.points.len() as f64 * self.h)
    }

    fn support_bounds(&self) -> (f64, f64) {
        (self.low, self.high)
    }
}

/// Step-function CDF `(1/n)·#{y_i ≤ y}` of a target sample.
#[derive(Clone, Debug, PartialEq)]
pub struct EmpiricalCdf {
    sorted_values: Vec<f64>,
}

impl EmpiricalCdf {
    pub fn new(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::param("empirical cdf needs at least one value"));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(Error::param("empirical cdf values must be finite"));
        }
        let mut sorted_values = values.to_vec();
        sorted_values.sort_by(f64::total_cmp);
        Ok(EmpiricalCdf { sorted_values })
    }

    pub fn sorted_values(&self) -> &[f64] {
        &self.sorted_values
    }

    pub fn len(&self) -> usize {
        self.sorted_values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sorted_values.is_empty()
    }
}

pub fn empirical_cdf_eval(ecdf: &EmpiricalCdf, y: f64) -> f64 {
    let k = ecdf.sorted_values.partition_point(|&v| v <= y);
    k as f64 / ecdf.sorted_values.len() as f64
}

impl CumulativeDistribution for EmpiricalCdf {
    fn cdf(&self, y: f64) -> f64 {
        empirical_cdf_eval(self, y)
    }

    /// Smallest sample value `y` with `F̂(y) ≥ u`.
    fn inv_cdf(&self, u: f64) -> Result<f64> {
        let u = clamp_unit(u)?;
        let n = self.sorted_values.len();
        let k = ((u * n as f64).ceil() as usize).clamp(1, n);
        Ok(self.sorted_values[k - 1])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;
    use rand_distr::{Distribution, StandardNormal};

    fn check_cdf_contract(d: &dyn TargetDistribution) {
        let (lo, hi) = d.support_bounds();
        let mut prev = 0.0;
        for i in 0..10_000 {
            let y = lo - 1.0 + (hi - lo + 2.0) * i as f64 / 9_999.0;
            let c = d.cdf(y);
            assert!((0.0..=1.0).contains(&c));
            assert!(c >= prev - 1e-15, "cdf decreased at {y}");
            assert!(d.pdf(y) >= 0.0);
            prev = c;
        }
        for i in 1..=999 {
            let u = i as f64 / 1000.0;
            let y = d.inv_cdf(u).unwrap();
            assert_abs_diff_eq!(d.cdf(y), u, epsilon = 1e-6);
        }
    }

    #[test]
    fn gaussian_basics() {
        let g = gaussian_distribution(0.0, 1.0).unwrap();
        assert_eq!(g.cdf(0.0), 0.5);
        assert_abs_diff_eq!(g.pdf(0.0), 1.0 / (2.0 * PI).sqrt(), epsilon = 1e-15);
        assert_abs_diff_eq!(g.inv_cdf(g.cdf(1.3)).unwrap(), 1.3, epsilon = 1e-9);
        check_cdf_contract(&g);
        assert!(gaussian_distribution(0.0, 0.0).is_err());
        assert!(gaussian_distribution(0.0, -1.0).is_err());
    }

    #[test]
    fn gaussian_quantile_is_accurate() {
        let g = gaussian_distribution(0.3, 2.0).unwrap();
        for i in -800i32..=800 {
            let y = 0.3 + 2.0 * i as f64 / 100.0;
            let u = g.cdf(y);
            if u > QUANTILE_CLAMP && u < 1.0 - QUANTILE_CLAMP {
                // near 1 the spacing of doubles limits how well u pins down y
                let tol = if i.abs() <= 500 { 1e-9 } else { 1e-6 };
                assert_abs_diff_eq!(g.inv_cdf(u).unwrap(), y, epsilon = tol);
            }
        }
        // known value: Φ⁻¹(0.8413447460685429) = 1
        let s = gaussian_distribution(0.0, 1.0).unwrap();
        assert_abs_diff_eq!(s.inv_cdf(0.841_344_746_068_542_9).unwrap(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn uniform_basics() {
        let u = uniform_distribution(0.0, 1.0).unwrap();
        assert_abs_diff_eq!(u.cdf(0.3), 0.3);
        assert_eq!(u.pdf(0.5), 1.0);
        assert_eq!(u.pdf(-0.1), 0.0);
        assert_eq!(u.pdf(1.1), 0.0);
        assert_eq!(u.cdf(-3.0), 0.0);
        assert_eq!(u.cdf(3.0), 1.0);
        let u2 = uniform_distribution(0.0, 2.0).unwrap();
        assert_eq!(u2.inv_cdf(0.5).unwrap(), 1.0);
        check_cdf_contract(&u2);
        assert!(uniform_distribution(1.0, 1.0).is_err());
        assert!(uniform_distribution(2.0, 1.0).is_err());
    }

    #[test]
    fn inv_cdf_rejects_outside_unit_interval() {
        let g = gaussian_distribution(0.0, 1.0).unwrap();
        for u in [0.0, 1.0, -0.5, 1.5, f64::NAN] {
            assert!(matches!(g.inv_cdf(u), Err(Error::Domain(_))));
        }
        let k = kde_distribution(&KdeModel::new(vec![0.0, 1.0], 0.5).unwrap());
        assert!(k.inv_cdf(1.0).is_err());
        // clamped extremes stay finite
        assert!(g.inv_cdf(1e-300).unwrap().is_finite());
    }

    #[test]
    fn single_point_kde_is_a_gaussian_kernel() {
        let k = kde_distribution(&KdeModel::new(vec![0.0], 1.0).unwrap());
        assert_abs_diff_eq!(k.pdf(0.0), 0.398_942_280_401_432_7, epsilon = 1e-15);
    }

    #[test]
    fn identical_points_collapse_to_standard_normal() {
        let k = kde_distribution(&KdeModel::new(vec![0.0, 0.0, 0.0], 1.0).unwrap());
        let g = gaussian_distribution(0.0, 1.0).unwrap();
        for i in -40..=40 {
            let y = i as f64 / 10.0;
            assert_abs_diff_eq!(k.cdf(y), g.cdf(y), epsilon = 1e-15);
            assert_abs_diff_eq!(k.pdf(y), g.pdf(y), epsilon = 1e-15);
        }
    }

    #[test]
    fn symmetric_kde_has_median_zero() {
        for h in [0.1, 0.7, 3.0] {
            let k = kde_distribution(&KdeModel::new(vec![-1.0, 1.0], h).unwrap());
            assert_abs_diff_eq!(k.cdf(0.0), 0.5, epsilon = 1e-9);
        }
    }

    fn sample_targets(n: usize, seed: u64) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        (0..n)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                if rng.random_bool(0.3) { 4.0 + 0.5 * z } else { z }
            })
            .collect()
    }

    #[test]
    fn fitted_kde_integrates_to_one_and_inverts() {
        let values = sample_targets(300, 3);
        let model = fit_kde(&values, &[]).unwrap();
        let k = kde_distribution(&model);
        let (lo, hi) = k.support_bounds();
        // composite Simpson on [min − 5h, max + 5h]
        let n = 20_000;
        let step = (hi - lo) / n as f64;
        let mut s = k.pdf(lo) + k.pdf(hi);
        for i in 1..n {
            let w = if i % 2 == 1 { 4.0 } else { 2.0 };
            s += w * k.pdf(lo + step * i as f64);
        }
        let integral = s * step / 3.0;
        assert!((integral - 1.0).abs() < 1e-3, "integral {integral}");
        check_cdf_contract(&k);
        let min = values.iter().copied().fold(f64::INFINITY, f64::min);
        let max = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        for i in 0..=50 {
            let y = min + (max - min) * i as f64 / 50.0;
            assert_abs_diff_eq!(k.inv_cdf(k.cdf(y)).unwrap(), y, epsilon = 1e-6);
        }
    }

    #[test]
    fn cv_prefers_a_sensible_bandwidth() {
        let values = sample_targets(400, 9);
        let hs = silverman_bandwidth(&values);
        let model = fit_kde(&values, &[]).unwrap();
        assert!(model.bandwidth() > hs / 10.0 && model.bandwidth() < hs * 10.0);
        // an explicit grid containing one absurd value must not pick it
        let model = fit_kde(&values, &[1e-4, hs, 100.0]).unwrap();
        assert_eq!(model.bandwidth(), hs);
    }

    #[test]
    fn fit_kde_parameter_errors() {
        assert!(fit_kde(&[], &[]).is_err());
        assert!(fit_kde(&[1.0, 2.0, 3.0], &[]).is_err());
        assert!(fit_kde(&[1.0, 2.0, 3.0, 4.0, 5.0], &[0.5, -1.0]).is_err());
        assert!(fit_kde(&[2.0; 10], &[]).is_err());
        assert!(KdeModel::new(vec![1.0], 0.0).is_err());
    }

    #[test]
    fn empirical_cdf_values() {
        let e = EmpiricalCdf::new(&[3.0, 1.0, 2.0]).unwrap();
        assert_abs_diff_eq!(empirical_cdf_eval(&e, 2.0), 2.0 / 3.0);
        assert_eq!(empirical_cdf_eval(&e, 0.0), 0.0);
        assert_eq!(empirical_cdf_eval(&e, 3.0), 1.0);
        assert_eq!(e.inv_cdf(0.5).unwrap(), 2.0);
        assert_eq!(e.inv_cdf(0.9).unwrap(), 3.0);
        assert_eq!(e.inv_cdf(1e-12).unwrap(), 1.0);
        assert!(EmpiricalCdf::new(&[]).is_err());
    }

    #[test]
    fn empirical_cdf_is_permutation_invariant() {
        let values = sample_targets(200, 1);
        let mut rev = values.clone();
        rev.reverse();
        let (a, b) = (EmpiricalCdf::new(&values).unwrap(), EmpiricalCdf::new(&rev).unwrap());
        for &y in &values {
            assert_eq!(empirical_cdf_eval(&a, y), empirical_cdf_eval(&b, y));
        }
    }

    fn sup_distance(sample: &[f64], truth: &dyn CumulativeDistribution) -> f64 {
        let e = EmpiricalCdf::new(sample).unwrap();
        let n = e.len() as f64;
        e.sorted_values()
            .iter()
            .enumerate()
            .map(|(i, &y)| {
                let f = truth.cdf(y);
                (f - i as f64 / n).abs().max((f - (i + 1) as f64 / n).abs())
            })
            .fold(0.0, f64::max)
    }

    #[test]
    fn empirical_cdf_converges_with_sample_size() {
        let g = gaussian_distribution(1.0, 2.0).unwrap();
        let mut wins = 0;
        for seed in 0..100 {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut draw = |m: usize| -> Vec<f64> {
                (0..m)
                    .map(|_| {
                        let z: f64 = StandardNormal.sample(&mut rng);
                        1.0 + 2.0 * z
                    })
                    .collect()
            };
            let small = draw(100);
            let large = draw(10_000);
            if sup_distance(&large, &g) < sup_distance(&small, &g) {
                wins += 1;
            }
        }
        assert!(wins >= 95, "{wins} / 100");
    }
}

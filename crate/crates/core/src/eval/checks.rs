use rand::Rng;
use rayon::prelude::*;

use crate::bregman::BregmanGenerator;
use crate::dataset::{Matrix, PairwiseSet, RiskConfig, Vector};
use crate::distributions::CumulativeDistribution;
use crate::error::{Error, Result};
use crate::model::LinearModel;
use crate::pairgen::{
    counterexample_sampler, generate_synthetic_with, random_unit_vector, sample_pairwise_with,
    stream_rng, CounterexampleId, SyntheticSpec,
};
use crate::ra::{estimate_variances, optimal_lambda, ra_empirical_risk};

/// One measured statistic against its tolerance.
#[derive(Clone, Debug, PartialEq)]
pub struct CheckLine {
    pub name: String,
    pub value: f64,
    /// Human-readable acceptance rule, e.g. `< 0.02`.
    pub rule: String,
    pub passed: bool,
}

impl CheckLine {
    fn below(name: &str, value: f64, tol: f64) -> Self {
        CheckLine {
            name: name.into(),
            value,
            rule: format!("< {tol}"),
            passed: value < tol,
        }
    }

    fn at_least(name: &str, value: f64, tol: f64) -> Self {
        CheckLine {
            name: name.into(),
            value,
            rule: format!(">= {tol}"),
            passed: value >= tol,
        }
    }
}

impl std::fmt::Display for CheckLine {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(
            f,
            "{} {} = {:.6} (required {})",
            if self.passed { "PASS" } else { "FAIL" },
            self.name,
            self.value,
            self.rule
        )
    }
}

fn relative_error(a: f64, b: f64) -> f64 {
    (a - b).abs() / b.abs().max(f64::MIN_POSITIVE)
}

/// Monte-Carlo estimates of both sides of
/// `E[φ′(h(X⁺))] = 2·E[F_Y(Y)·φ′(h(X))]` and
/// `E[φ′(h(X⁻))] = 2·E[(1 − F_Y(Y))·φ′(h(X))]`.
#[derive(Clone, Debug, PartialEq)]
pub struct Lemma1Report {
    pub n_samples: usize,
    pub winner_mean: f64,
    pub winner_identity: f64,
    pub loser_mean: f64,
    pub loser_identity: f64,
    pub unlabeled_mean: f64,
    pub rel_err_winner: f64,
    pub rel_err_loser: f64,
    /// `E[φ′(h(X))]` against the average of the winner and loser means.
    pub rel_err_mixture: f64,
}

impl Lemma1Report {
    pub fn lines(&self) -> Vec<CheckLine> {
        vec![
            CheckLine::below("lemma1.winner_rel_err", self.rel_err_winner, 0.02),
            CheckLine::below("lemma1.loser_rel_err", self.rel_err_loser, 0.02),
            CheckLine::below("lemma1.mixture_rel_err", self.rel_err_mixture, 0.02),
        ]
    }

    pub fn max_rel_err(&self) -> f64 {
        self.rel_err_winner.max(self.rel_err_loser).max(self.rel_err_mixture)
    }
}

/// Checks the winner/loser expectation identities under the linear-Gaussian
/// generator (`d = 5`, noise 0.1) for `h(x) = v·x + 1`, with `v` a random
/// unit vector tilted towards the true weights and the squared generator.
pub fn check_lemma1(n_samples: usize, seed: u64) -> Result<Lemma1Report> {
    if n_samples < 2 {
        return Err(Error::param("need at least 2 samples"));
    }
    let gen = BregmanGenerator::Squared;
    let mut rng = stream_rng(seed, 0);
    let theta = random_unit_vector(5, &mut rng);
    let tilt = random_unit_vector(5, &mut rng);
    let spec = SyntheticSpec::new(theta.clone(), 0.1, seed)?;
    let v = (&theta + tilt * 0.5).normalize();
    let mut weights: Vec<f64> = v.iter().copied().collect();
    weights.push(1.0);
    let h = LinearModel::new(Vector::from_vec(weights), true)?;
    let f_y = spec.target_distribution();

    let data = generate_synthetic_with(&spec, n_samples, &mut stream_rng(seed, 1))?;
    let pairs = sample_pairwise_with(&spec, n_samples, &mut stream_rng(seed, 2))?;
    let n = n_samples as f64;
    let d_u = h.scores(data.features())?.map(|s| gen.phi_prime(s));
    let y = data.require_targets()?;
    let unlabeled_mean = d_u.sum() / n;
    let winner_identity = 2.0 * d_u.iter().zip(y.iter()).map(|(d, &t)| f_y.cdf(t) * d).sum::<f64>() / n;
    let loser_identity = 2.0 * d_u.iter().zip(y.iter()).map(|(d, &t)| (1.0 - f_y.cdf(t)) * d).sum::<f64>() / n;
    let winner_mean = h.scores(pairs.winners())?.map(|s| gen.phi_prime(s)).sum() / n;
    let loser_mean = h.scores(pairs.losers())?.map(|s| gen.phi_prime(s)).sum() / n;
    Ok(Lemma1Report {
        n_samples,
        winner_mean,
        winner_identity,
        loser_mean,
        loser_identity,
        unlabeled_mean,
        rel_err_winner: relative_error(winner_mean, winner_identity),
        rel_err_loser: relative_error(loser_mean, loser_identity),
        rel_err_mixture: relative_error(0.5 * (winner_mean + loser_mean), unlabeled_mean),
    })
}

/// Variance study of the approximate risk in `λ`.
///
/// `X ~ U[0, 1]`, `Y = X`, `h(x) = 2x`, `(w1, w2) = (1/2, 0)`, squared
/// generator. `λ*` comes from the comparison variances estimated on
/// `variance_pairs` independent comparisons.
#[derive(Clone, Debug, PartialEq)]
pub struct Theorem1Setup {
    pub n_r: usize,
    pub n_u: usize,
    pub resamples: usize,
    /// Offsets from `λ*` at which the variance is measured; must contain 0.
    pub offsets: Vec<f64>,
    pub variance_pairs: usize,
}

impl Default for Theorem1Setup {
    fn default() -> Self {
        Theorem1Setup {
            n_r: 200,
            n_u: 10_000,
            resamples: 2000,
            offsets: vec![-1.0, -0.5, 0.0, 0.5, 1.0],
            variance_pairs: 200_000,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Theorem1Report {
    pub lambda_star: f64,
    /// `(λ, empirical variance)` in the order of the offsets.
    pub variances: Vec<(f64, f64)>,
}

impl Theorem1Report {
    fn variance_at_offset(&self, offset: f64) -> Option<f64> {
        self.variances
            .iter()
            .find(|(l, _)| (l - self.lambda_star - offset).abs() < 1e-12)
            .map(|&(_, v)| v)
    }

    /// The `λ` with the smallest empirical variance.
    pub fn argmin_lambda(&self) -> f64 {
        self.variances
            .iter()
            .min_by(|a, b| a.1.total_cmp(&b.1))
            .map(|&(l, _)| l)
            .unwrap_or(f64::NAN)
    }

    /// At `λ*` the variance is within 5% of the variance at `λ* ± 0.5` and
    /// strictly below the variance at `λ* ± 1` (offsets that were not
    /// measured are skipped).
    pub fn lines(&self) -> Vec<CheckLine> {
        let Some(at_star) = self.variance_at_offset(0.0) else {
            return vec![CheckLine {
                name: "theorem1.lambda_star_measured".into(),
                value: f64::NAN,
                rule: "offset 0 present".into(),
                passed: false,
            }];
        };
        let mut out = Vec::new();
        for off in [-0.5, 0.5] {
            if let Some(v) = self.variance_at_offset(off) {
                out.push(CheckLine {
                    name: format!("theorem1.var_ratio_at_offset_{off:+}"),
                    value: at_star / v,
                    rule: "<= 1.05".into(),
                    passed: at_star <= 1.05 * v,
                });
            }
        }
        for off in [-1.0, 1.0] {
            if let Some(v) = self.variance_at_offset(off) {
                out.push(CheckLine::below(&format!("theorem1.var_ratio_at_offset_{off:+}"), at_star / v, 1.0));
            }
        }
        out
    }
}

fn uniform_pairs<R: Rng>(rng: &mut R, n: usize) -> PairwiseSet {
    let (mut w, mut l) = (Vec::with_capacity(n), Vec::with_capacity(n));
    for _ in 0..n {
        let (a, b): (f64, f64) = (rng.random(), rng.random());
        w.push(a.max(b));
        l.push(a.min(b));
    }
    PairwiseSet::new(Matrix::from_vec(n, 1, w), Matrix::from_vec(n, 1, l)).expect("finite")
}

fn uniform_column<R: Rng>(rng: &mut R, n: usize) -> Matrix {
    Matrix::from_fn(n, 1, |_, _| rng.random())
}

pub fn check_theorem1_variance(setup: &Theorem1Setup, seed: u64) -> Result<Theorem1Report> {
    if setup.resamples < 2 || setup.n_r == 0 || setup.n_u == 0 || setup.variance_pairs < 2 {
        return Err(Error::param("need resamples ≥ 2, n_r, n_u ≥ 1 and variance_pairs ≥ 2"));
    }
    let gen = BregmanGenerator::Squared;
    let h = LinearModel::new(Vector::from_element(1, 2.0), false)?;
    let (w1, w2) = (0.5, 0.0);
    let v = estimate_variances(&h, gen, &uniform_pairs(&mut stream_rng(seed, 0), setup.variance_pairs))?;
    let lambda_star = optimal_lambda(w1, w2, v)?;
    let lambdas: Vec<f64> = setup.offsets.iter().map(|o| lambda_star + o).collect();
    let risks: Vec<Vec<f64>> = (0..setup.resamples)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream_rng(seed, 1 + r as u64);
            let u = uniform_column(&mut rng, setup.n_u);
            let pairs = uniform_pairs(&mut rng, setup.n_r);
            lambdas
                .iter()
                .map(|&lambda| {
                    let cfg = RiskConfig::new(w1, w2, lambda)?;
                    ra_empirical_risk(&h, gen, &u, &pairs, &cfg)
                })
                .collect::<Result<Vec<f64>>>()
        })
        .collect::<Result<_>>()?;
    let n = setup.resamples as f64;
    let variances = lambdas
        .iter()
        .enumerate()
        .map(|(k, &l)| {
            let mean = risks.iter().map(|r| r[k]).sum::<f64>() / n;
            let var = risks.iter().map(|r| (r[k] - mean).powi(2)).sum::<f64>() / (n - 1.0);
            (l, var)
        })
        .collect();
    Ok(Theorem1Report {
        lambda_star,
        variances,
    })
}

fn ks_two_sample(a: &[f64], b: &[f64]) -> f64 {
    let mut a = a.to_vec();
    let mut b = b.to_vec();
    a.sort_by(f64::total_cmp);
    b.sort_by(f64::total_cmp);
    let (na, nb) = (a.len() as f64, b.len() as f64);
    let (mut i, mut j, mut d) = (0, 0, 0.0f64);
    while i < a.len() && j < b.len() {
        let t = a[i].min(b[j]);
        while i < a.len() && a[i] <= t {
            i += 1;
        }
        while j < b.len() && b[j] <= t {
            j += 1;
        }
        d = d.max((i as f64 / na - j as f64 / nb).abs());
    }
    d
}

/// Statistics of the two joint laws that share every observable marginal
/// but not their regression function.
#[derive(Clone, Debug, PartialEq)]
pub struct CounterexampleReport {
    pub n_samples: usize,
    pub x_marginal_sup: f64,
    pub y_marginal_sup: f64,
    /// Largest deviation from 1/4 of the masses of (winner half, loser half)
    /// cells, halves being `x < 0` and `x ≥ 0`, over both laws.
    pub pair_cell_max_dev: f64,
    pub base_mean_negative: f64,
    pub base_mean_nonnegative: f64,
    /// Max minus min of the base law's conditional mean over 10 equal-width
    /// bins of `x`.
    pub base_bin_spread: f64,
    pub tilde_mean_negative: f64,
    pub tilde_mean_nonnegative: f64,
}

impl CounterexampleReport {
    pub fn lines(&self) -> Vec<CheckLine> {
        vec![
            CheckLine::below("counterexample.x_marginal_sup", self.x_marginal_sup, 0.005),
            CheckLine::below("counterexample.y_marginal_sup", self.y_marginal_sup, 0.005),
            CheckLine::below("counterexample.pair_cell_max_dev", self.pair_cell_max_dev, 0.01),
            CheckLine::below("counterexample.tilde_mean_x_neg_err", (self.tilde_mean_negative - 7.0 / 4.0).abs(), 0.02),
            CheckLine::below("counterexample.tilde_mean_x_pos_err", (self.tilde_mean_nonnegative - 23.0 / 12.0).abs(), 0.02),
            CheckLine::at_least(
                "counterexample.mean_gap_x_pos",
                (self.tilde_mean_nonnegative - self.base_mean_nonnegative).abs(),
                0.05,
            ),
            CheckLine::below("counterexample.base_bin_spread", self.base_bin_spread, 0.03),
        ]
    }
}

fn half_means(x: &[f64], y: &[f64]) -> (f64, f64) {
    let (mut s, mut c) = ([0.0; 2], [0usize; 2]);
    for (&xi, &yi) in x.iter().zip(y) {
        let k = usize::from(xi >= 0.0);
        s[k] += yi;
        c[k] += 1;
    }
    (s[0] / c[0] as f64, s[1] / c[1] as f64)
}

fn pair_cells(x: &[f64], y: &[f64]) -> [f64; 4] {
    let mut counts = [0usize; 4];
    let pairs = x.len() / 2;
    for p in 0..pairs {
        let (a, b) = (2 * p, 2 * p + 1);
        let (w, l) = if y[a] >= y[b] { (a, b) } else { (b, a) };
        counts[2 * usize::from(x[w] >= 0.0) + usize::from(x[l] >= 0.0)] += 1;
    }
    counts.map(|c| c as f64 / pairs as f64)
}

pub fn check_counterexample(n_samples: usize, seed: u64) -> Result<CounterexampleReport> {
    if n_samples < 20 {
        return Err(Error::param("need at least 20 samples"));
    }
    let draw = |id, s| -> Result<(Vec<f64>, Vec<f64>)> {
        let d = counterexample_sampler(id, n_samples, s)?;
        Ok((
            d.features().column(0).iter().copied().collect(),
            d.require_targets()?.iter().copied().collect(),
        ))
    };
    let (bx, by) = draw(CounterexampleId::Base, seed.wrapping_mul(2))?;
    let (tx, ty) = draw(CounterexampleId::Tilde, seed.wrapping_mul(2).wrapping_add(1))?;
    let pair_cell_max_dev = pair_cells(&bx, &by)
        .iter()
        .chain(pair_cells(&tx, &ty).iter())
        .map(|m| (m - 0.25).abs())
        .fold(0.0, f64::max);
    let (base_mean_negative, base_mean_nonnegative) = half_means(&bx, &by);
    let (tilde_mean_negative, tilde_mean_nonnegative) = half_means(&tx, &ty);
    let (mut sums, mut counts) = ([0.0; 10], [0usize; 10]);
    for (&x, &y) in bx.iter().zip(&by) {
        let k = (((x + 1.0) * 5.0) as usize).min(9);
        sums[k] += y;
        counts[k] += 1;
    }
    let bin_means: Vec<f64> = sums.iter().zip(&counts).filter(|(_, &c)| c > 0).map(|(s, &c)| s / c as f64).collect();
    let spread = bin_means.iter().cloned().fold(f64::NEG_INFINITY, f64::max)
        - bin_means.iter().cloned().fold(f64::INFINITY, f64::min);
    Ok(CounterexampleReport {
        n_samples,
        x_marginal_sup: ks_two_sample(&bx, &tx),
        y_marginal_sup: ks_two_sample(&by, &ty),
        pair_cell_max_dev,
        base_mean_negative,
        base_mean_nonnegative,
        base_bin_spread: spread,
        tilde_mean_negative,
        tilde_mean_nonnegative,
    })
}

/// `X ~ U[0, 1]`, `Y = X`, `h(x) = θx`, `(w1, w2, λ) = (1/2, 0, 0)`, squared
/// generator; the approximate risk plus `E[Y²] = 1/3` should average to
/// `(θ − 1)²/3`.
#[derive(Clone, Debug, PartialEq)]
pub struct UnbiasednessSetup {
    pub n_u: usize,
    pub n_r: usize,
    pub resamples: usize,
    pub theta: f64,
}

impl Default for UnbiasednessSetup {
    fn default() -> Self {
        UnbiasednessSetup {
            n_u: 500,
            n_r: 500,
            resamples: 1000,
            theta: 2.0,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct UnbiasednessReport {
    pub mean_risk: f64,
    pub analytic_risk: f64,
    pub standard_error: f64,
}

impl UnbiasednessReport {
    /// Deviation in standard errors.
    pub fn z_score(&self) -> f64 {
        (self.mean_risk - self.analytic_risk).abs() / self.standard_error
    }

    pub fn lines(&self) -> Vec<CheckLine> {
        vec![CheckLine {
            name: "unbiasedness.z_score".into(),
            value: self.z_score(),
            rule: "<= 3".into(),
            passed: self.z_score() <= 3.0,
        }]
    }
}

pub fn check_unbiasedness(setup: &UnbiasednessSetup, seed: u64) -> Result<UnbiasednessReport> {
    if setup.resamples < 2 || setup.n_u == 0 || setup.n_r == 0 {
        return Err(Error::param("need resamples ≥ 2 and n_u, n_r ≥ 1"));
    }
    let gen = BregmanGenerator::Squared;
    let h = LinearModel::new(Vector::from_element(1, setup.theta), false)?;
    let cfg = RiskConfig::new(0.5, 0.0, 0.0)?;
    let risks: Vec<f64> = (0..setup.resamples)
        .into_par_iter()
        .map(|r| {
            let mut rng = stream_rng(seed, r as u64);
            let u = uniform_column(&mut rng, setup.n_u);
            let pairs = uniform_pairs(&mut rng, setup.n_r);
            ra_empirical_risk(&h, gen, &u, &pairs, &cfg).map(|v| v + 1.0 / 3.0)
        })
        .collect::<Result<_>>()?;
    let n = risks.len() as f64;
    let mean = risks.iter().sum::<f64>() / n;
    let var = risks.iter().map(|r| (r - mean).powi(2)).sum::<f64>() / (n - 1.0);
    Ok(UnbiasednessReport {
        mean_risk: mean,
        analytic_risk: (setup.theta - 1.0).powi(2) / 3.0,
        standard_error: (var / n).sqrt(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn ks_distance_hand_cases() {
        assert_eq!(ks_two_sample(&[1.0, 2.0], &[1.0, 2.0]), 0.0);
        assert_eq!(ks_two_sample(&[0.0, 1.0], &[2.0, 3.0]), 1.0);
        assert_abs_diff_eq!(ks_two_sample(&[0.0, 2.0], &[1.0, 3.0]), 0.5);
    }

    #[test]
    fn lemma1_holds_at_a_million_samples() {
        let r = check_lemma1(1_000_000, 3).unwrap();
        assert!(r.lines().iter().all(|l| l.passed), "{r:?}");
    }

    #[test]
    fn lemma1_error_shrinks_with_sample_size() {
        let better = (0..100u64)
            .into_par_iter()
            .filter(|&seed| {
                let small = check_lemma1(10_000, seed).unwrap().max_rel_err();
                let large = check_lemma1(1_000_000, seed).unwrap().max_rel_err();
                large < small
            })
            .count();
        assert!(better >= 95, "{better} of 100 seeds improved");
    }

    #[test]
    fn theorem1_variance_is_smallest_at_lambda_star() {
        let setup = Theorem1Setup {
            resamples: 500,
            ..Default::default()
        };
        let r = check_theorem1_variance(&setup, 1).unwrap();
        assert_abs_diff_eq!(r.lambda_star, 0.5, epsilon = 0.02);
        assert_abs_diff_eq!(r.argmin_lambda(), r.lambda_star, epsilon = 1e-12);
    }

    #[test]
    fn theorem1_variance_curve_is_symmetric_for_equal_variances() {
        // σ₊² = σ₋² here, so λ* = w1 + w2 and the curve is a parabola about it
        let setup = Theorem1Setup {
            resamples: 1000,
            offsets: vec![-0.5, 0.0, 0.5],
            ..Default::default()
        };
        let r = check_theorem1_variance(&setup, 2).unwrap();
        let (lo, mid, hi) = (r.variances[0].1, r.variances[1].1, r.variances[2].1);
        let rise = 0.5 * (lo + hi) - mid;
        assert!(rise > 0.0);
        assert!((lo - hi).abs() < 0.5 * rise, "{r:?}");
    }

    #[test]
    fn theorem1_single_comparison_is_finite() {
        let setup = Theorem1Setup {
            n_r: 1,
            n_u: 50,
            resamples: 500,
            offsets: vec![-1.0, 0.0, 1.0],
            variance_pairs: 10_000,
        };
        let r = check_theorem1_variance(&setup, 3).unwrap();
        assert!(r.variances.iter().all(|(_, v)| v.is_finite()));
    }

    #[test]
    fn counterexample_statistics() {
        let r = check_counterexample(1_000_000, 4).unwrap();
        assert!(r.lines().iter().all(|l| l.passed), "{r:#?}");
        assert_abs_diff_eq!(r.base_mean_nonnegative, 11.0 / 6.0, epsilon = 0.02);
    }

    #[test]
    fn unbiased_on_average() {
        let r = check_unbiasedness(&UnbiasednessSetup::default(), 5).unwrap();
        assert_abs_diff_eq!(r.analytic_risk, 1.0 / 3.0, epsilon = 1e-15);
        assert!(r.z_score() <= 3.0, "{r:?}");
    }
}

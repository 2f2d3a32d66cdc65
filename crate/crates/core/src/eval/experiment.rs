use std::fmt;
use std::str::FromStr;

use rand::seq::SliceRandom;
use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Deserialize;

use super::mse;
use super::table::{CellFailure, ResultRow, ResultTable};
use crate::baselines::{lr_fit, ranker_fit, RankPredictor, DEFAULT_RANKER_REG};
use crate::bregman::BregmanGenerator;
use crate::dataio::standardize;
use crate::dataset::{Dataset, Matrix, PairwiseSet, RiskConfig, Vector};
use crate::distributions::{
    fit_kde, kde_distribution, CumulativeDistribution, EmpiricalCdf, TargetDistribution,
};
use crate::error::{Error, Result};
use crate::pairgen::{
    generate_synthetic_with, make_pairwise, random_unit_vector, sample_pairwise_with, stream_rng,
    SyntheticSpec,
};
use crate::ra::{ra_fit, ra_fit_optimal_lambda, tune_weights, tune_weights_empirical, FitOptions, RaTuning};
use crate::tt::{tt_fit, tt_predict_rows, TtConfig, TtFitOptions};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, PartialOrd, Ord, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum Method {
    Lr,
    Rank,
    Ra,
    Tt,
}

impl Method {
    pub const ALL: [Method; 4] = [Method::Lr, Method::Rank, Method::Ra, Method::Tt];
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Method::Lr => "LR",
            Method::Rank => "RANK",
            Method::Ra => "RA",
            Method::Tt => "TT",
        })
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "lr" => Ok(Method::Lr),
            "rank" => Ok(Method::Rank),
            "ra" => Ok(Method::Ra),
            "tt" => Ok(Method::Tt),
            _ => Err(Error::param(format!("unknown method {s:?} (expected lr, rank, ra, tt)"))),
        }
    }
}

/// Repeated synthetic experiment: `x ~ N(0, I_d)`, `y = θ·x + ε` with a
/// fresh unit `θ` per repeat.
#[derive(Clone, Debug, PartialEq)]
pub struct ExperimentSpec {
    pub methods: Vec<Method>,
    pub n_u: usize,
    pub n_r_values: Vec<usize>,
    pub repeats: usize,
    pub seed: u64,
    pub noise_std: f64,
    pub dim: usize,
    pub test_size: usize,
    pub generator: BregmanGenerator,
    /// Two-stage RA fit with the variance-optimal `λ`.
    pub optimal_lambda: bool,
    /// Use the empirical CDF of the unlabeled targets instead of the known law.
    pub empirical_cdf: bool,
    pub tuning: RaTuning,
    pub ranker_reg: f64,
}

impl ExperimentSpec {
    /// `d = 5`, `n_U = 100 000`, `n_R = 20·2^k` up to 10 240, 100 repeats.
    pub fn full() -> Self {
        ExperimentSpec {
            methods: Method::ALL.to_vec(),
            n_u: 100_000,
            n_r_values: (0..10).map(|k| 20 << k).collect(),
            repeats: 100,
            seed: 0,
            noise_std: 0.1,
            dim: 5,
            test_size: 1000,
            generator: BregmanGenerator::Squared,
            optimal_lambda: false,
            empirical_cdf: false,
            tuning: RaTuning::default(),
            ranker_reg: DEFAULT_RANKER_REG,
        }
    }

    /// `n_U = 20 000`, `n_R ∈ {100, 1 000, 5 000}`, 20 repeats.
    pub fn desk() -> Self {
        ExperimentSpec {
            n_u: 20_000,
            n_r_values: vec![100, 1000, 5000],
            repeats: 20,
            ..Self::full()
        }
    }

    fn validate(&self) -> Result<()> {
        if self.methods.is_empty() || self.n_r_values.is_empty() {
            return Err(Error::param("need at least one method and one n_r value"));
        }
        if self.repeats == 0 || self.n_u == 0 || self.dim == 0 || self.test_size == 0 {
            return Err(Error::param("repeats, n_u, dim and test_size must be positive"));
        }
        if self.n_r_values.contains(&0) {
            return Err(Error::param("n_r values must be positive"));
        }
        if !(self.noise_std >= 0.0 && self.noise_std.is_finite()) {
            return Err(Error::param("noise_std must be ≥ 0"));
        }
        Ok(())
    }
}

/// Repeated train/test evaluation on a labeled dataset.
#[derive(Clone, Debug, PartialEq)]
pub struct BenchmarkSpec {
    pub methods: Vec<Method>,
    pub n_r_values: Vec<usize>,
    pub repeats: usize,
    pub seed: u64,
    pub test_fraction: f64,
    pub intercept: bool,
    pub standardize: bool,
    pub generator: BregmanGenerator,
    pub optimal_lambda: bool,
    pub empirical_cdf: bool,
    pub tuning: RaTuning,
    pub ranker_reg: f64,
}

impl Default for BenchmarkSpec {
    fn default() -> Self {
        BenchmarkSpec {
            methods: Method::ALL.to_vec(),
            n_r_values: vec![5000],
            repeats: 100,
            seed: 0,
            test_fraction: 0.2,
            intercept: false,
            standardize: false,
            generator: BregmanGenerator::Squared,
            optimal_lambda: false,
            empirical_cdf: false,
            tuning: RaTuning::default(),
            ranker_reg: DEFAULT_RANKER_REG,
        }
    }
}

struct Settings {
    generator: BregmanGenerator,
    intercept: bool,
    optimal_lambda: bool,
    empirical_cdf: bool,
    ranker_reg: f64,
}

/// What the uncoupled methods know about `Y`: its CDF, and the RA weights
/// tuned on it.
struct TargetLaw {
    cdf: Box<dyn CumulativeDistribution>,
    ra_cfg: RiskConfig,
}

impl TargetLaw {
    fn analytic<D: TargetDistribution + 'static>(dist: D, tuning: &RaTuning) -> Result<Self> {
        let ra_cfg = tune_weights(&dist, tuning)?;
        Ok(TargetLaw {
            cdf: Box::new(dist),
            ra_cfg,
        })
    }

    fn empirical(targets: &[f64], tuning: &RaTuning) -> Result<Self> {
        Ok(TargetLaw {
            ra_cfg: tune_weights_empirical(targets, tuning)?,
            cdf: Box::new(EmpiricalCdf::new(targets)?),
        })
    }
}

struct Split<'a> {
    train: &'a Dataset,
    test_x: &'a Matrix,
    test_y: &'a Vector,
}

fn score(method: Method, split: &Split<'_>, law: &TargetLaw, pairs: &PairwiseSet, s: &Settings) -> Result<f64> {
    let unlabeled = split.train.features();
    let pred = match method {
        Method::Lr => lr_fit(split.train, s.intercept)?.scores(split.test_x)?,
        Method::Rank => {
            let ranker = ranker_fit(pairs, s.ranker_reg)?;
            RankPredictor::new(&ranker, unlabeled)?.predict_rows(law.cdf.as_ref(), split.test_x)?
        }
        Method::Ra => {
            let opts = FitOptions {
                intercept: s.intercept,
                ..Default::default()
            };
            let model = if s.optimal_lambda {
                ra_fit_optimal_lambda(s.generator, unlabeled, pairs, &law.ra_cfg, &opts)?.0
            } else {
                ra_fit(s.generator, unlabeled, pairs, &law.ra_cfg, &opts)?
            };
            model.scores(split.test_x)?
        }
        Method::Tt => {
            let cfg = TtConfig {
                use_empirical_cdf: s.empirical_cdf,
                ..Default::default()
            };
            let opts = TtFitOptions {
                intercept: s.intercept,
                ..Default::default()
            };
            let model = tt_fit(s.generator, unlabeled, pairs, &cfg, &opts)?;
            tt_predict_rows(&model, law.cdf.as_ref(), split.test_x)?
        }
    };
    mse(&pred, split.test_y)
}

// one independent stream per (repeat, cell); cell 0 holds the per-repeat
// data, cell k + 1 the comparisons for the k-th n_R value
fn cell_rng(seed: u64, repeat: usize, cell: usize) -> ChaCha8Rng {
    stream_rng(seed, ((repeat as u64) << 20) | cell as u64)
}

type CellOutcome = Vec<(Method, std::result::Result<f64, String>)>;

fn aggregate(methods: &[Method], n_r_values: &[usize], per_repeat: Vec<Vec<CellOutcome>>) -> ResultTable {
    let mut table = ResultTable::default();
    for &method in methods {
        for (k, &n_r) in n_r_values.iter().enumerate() {
            let mut ok = Vec::new();
            for (repeat, cells) in per_repeat.iter().enumerate() {
                for (m, outcome) in &cells[k] {
                    if *m != method {
                        continue;
                    }
                    match outcome {
                        Ok(v) => ok.push(*v),
                        Err(message) => table.failures.push(CellFailure {
                            method,
                            n_r,
                            repeat,
                            message: message.clone(),
                        }),
                    }
                }
            }
            table.rows.push(ResultRow::from_samples(method, n_r, &ok));
        }
    }
    table
}

fn all_failed(methods: &[Method], n_cells: usize, err: &Error) -> Vec<CellOutcome> {
    (0..n_cells)
        .map(|_| methods.iter().map(|&m| (m, Err(err.to_string()))).collect())
        .collect()
}

/// Runs every (repeat, `n_R`) cell; the unlabeled data, test data and `θ`
/// of a repeat are shared by all of its `n_R` cells.
pub fn run_synthetic(spec: &ExperimentSpec) -> Result<ResultTable> {
    spec.validate()?;
    let settings = Settings {
        generator: spec.generator,
        intercept: false,
        optimal_lambda: spec.optimal_lambda,
        empirical_cdf: spec.empirical_cdf,
        ranker_reg: spec.ranker_reg,
    };
    let per_repeat: Vec<Vec<CellOutcome>> = (0..spec.repeats)
        .into_par_iter()
        .map(|repeat| {
            let prepared = (|| -> Result<_> {
                let mut rng = cell_rng(spec.seed, repeat, 0);
                let theta = random_unit_vector(spec.dim, &mut rng);
                let gen = SyntheticSpec::new(theta, spec.noise_std, spec.seed)?;
                let train = generate_synthetic_with(&gen, spec.n_u, &mut rng)?;
                let test = generate_synthetic_with(&gen, spec.test_size, &mut rng)?;
                let law = if spec.empirical_cdf {
                    TargetLaw::empirical(train.require_targets()?.as_slice(), &spec.tuning)?
                } else {
                    TargetLaw::analytic(gen.target_distribution(), &spec.tuning)?
                };
                Ok((gen, train, test, law))
            })();
            let (gen, train, test, law) = match prepared {
                Ok(p) => p,
                Err(e) => return all_failed(&spec.methods, spec.n_r_values.len(), &e),
            };
            let split = Split {
                train: &train,
                test_x: test.features(),
                test_y: test.targets().expect("synthetic data is labeled"),
            };
            spec.n_r_values
                .par_iter()
                .enumerate()
                .map(|(k, &n_r)| {
                    let mut rng = cell_rng(spec.seed, repeat, k + 1);
                    match sample_pairwise_with(&gen, n_r, &mut rng) {
                        Ok(pairs) => spec
                            .methods
                            .iter()
                            .map(|&m| (m, score(m, &split, &law, &pairs, &settings).map_err(|e| e.to_string())))
                            .collect(),
                        Err(e) => spec.methods.iter().map(|&m| (m, Err(e.to_string()))).collect(),
                    }
                })
                .collect()
        })
        .collect();
    Ok(aggregate(&spec.methods, &spec.n_r_values, per_repeat))
}

/// The target law seen by the uncoupled methods; it depends only on the
/// multiset of targets, never on their order.
fn benchmark_law(targets: &[f64], spec: &BenchmarkSpec) -> Result<TargetLaw> {
    let mut sorted = targets.to_vec();
    sorted.sort_by(f64::total_cmp);
    if spec.empirical_cdf {
        TargetLaw::empirical(&sorted, &spec.tuning)
    } else {
        let kde = fit_kde(&sorted, &[])?;
        TargetLaw::analytic(kde_distribution(&kde), &spec.tuning)
    }
}

fn sample_index_pairs(rng: &mut ChaCha8Rng, n: usize, count: usize) -> Vec<(usize, usize)> {
    (0..count)
        .map(|_| {
            let i = rng.random_range(0..n);
            let mut j = rng.random_range(0..n - 1);
            if j >= i {
                j += 1;
            }
            (i, j)
        })
        .collect()
}

/// Repeated random train/test splits of `data`. Per repeat the target law
/// is a Gaussian KDE over the training targets and comparisons are drawn by
/// sampling two distinct training rows uniformly and comparing their targets.
pub fn run_benchmark(data: &Dataset, spec: &BenchmarkSpec) -> Result<ResultTable> {
    data.require_targets()?;
    if spec.methods.is_empty() || spec.n_r_values.is_empty() || spec.repeats == 0 {
        return Err(Error::param("need at least one method, one n_r value and one repeat"));
    }
    if spec.n_r_values.contains(&0) {
        return Err(Error::param("n_r values must be positive"));
    }
    if !(spec.test_fraction > 0.0 && spec.test_fraction < 1.0) {
        return Err(Error::param("test_fraction must lie in (0, 1)"));
    }
    let n = data.len();
    let n_test = ((n as f64 * spec.test_fraction).round() as usize).max(1);
    if n < n_test + 5 {
        return Err(Error::param(format!("{n} rows are too few for a train/test split")));
    }
    let settings = Settings {
        generator: spec.generator,
        intercept: spec.intercept,
        optimal_lambda: spec.optimal_lambda,
        empirical_cdf: spec.empirical_cdf,
        ranker_reg: spec.ranker_reg,
    };
    let per_repeat: Vec<Vec<CellOutcome>> = (0..spec.repeats)
        .into_par_iter()
        .map(|repeat| {
            let mut rng = cell_rng(spec.seed, repeat, 0);
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(&mut rng);
            let (test_idx, train_idx) = order.split_at(n_test);
            let prepared = (|| -> Result<_> {
                let mut train = data.select_rows(train_idx)?;
                let test = data.select_rows(test_idx)?;
                let mut test_x = test.features().clone();
                if spec.standardize {
                    let (scaled, record) = standardize(&train)?;
                    test_x = record.apply(&test_x)?;
                    train = scaled;
                }
                Ok((train, test_x, test.targets().expect("labeled").clone()))
            })();
            let (train, test_x, test_y) = match prepared {
                Ok(p) => p,
                Err(e) => return all_failed(&spec.methods, spec.n_r_values.len(), &e),
            };
            let train_y = train.targets().expect("labeled");
            let c = train_y[0];
            if train_y.iter().all(|&v| v == c) {
                // a constant training target leaves every method one answer
                let m = mse(&Vector::from_element(test_y.len(), c), &test_y).expect("nonempty");
                return spec
                    .n_r_values
                    .iter()
                    .map(|_| spec.methods.iter().map(|&meth| (meth, Ok(m))).collect())
                    .collect();
            }
            let law = match benchmark_law(train_y.as_slice(), spec) {
                Ok(l) => l,
                Err(e) => return all_failed(&spec.methods, spec.n_r_values.len(), &e),
            };
            let split = Split {
                train: &train,
                test_x: &test_x,
                test_y: &test_y,
            };
            let x = train.features();
            spec.n_r_values
                .par_iter()
                .enumerate()
                .map(|(k, &n_r)| {
                    let mut rng = cell_rng(spec.seed, repeat, k + 1);
                    let idx = sample_index_pairs(&mut rng, x.nrows(), n_r);
                    let rows: Vec<Vec<f64>> = (0..x.nrows()).map(|i| x.row(i).iter().copied().collect()).collect();
                    let pairs = make_pairwise(
                        idx.iter()
                            .map(|&(i, j)| ((&rows[i][..], train_y[i]), (&rows[j][..], train_y[j]))),
                    );
                    match pairs {
                        Ok(pairs) => spec
                            .methods
                            .iter()
                            .map(|&m| (m, score(m, &split, &law, &pairs, &settings).map_err(|e| e.to_string())))
                            .collect(),
                        Err(e) => spec.methods.iter().map(|&m| (m, Err(e.to_string()))).collect(),
                    }
                })
                .collect()
        })
        .collect();
    Ok(aggregate(&spec.methods, &spec.n_r_values, per_repeat))
}

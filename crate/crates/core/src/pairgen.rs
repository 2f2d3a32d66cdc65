//! Synthetic data, pairwise comparisons, and the indistinguishable pair of
//! joint distributions used to show that uncoupled regression cannot be
//! consistent in general.
//!
//! Every generator is a pure function of its seed. Independent draws from
//! the same [`SyntheticSpec`] (unlabeled rows, comparisons, the true weight
//! vector) come from separate ChaCha streams of that seed.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::dataset::{Dataset, Matrix, PairwiseSet, Vector};
use crate::distributions::{gaussian_distribution, Gaussian};
use crate::error::{Error, Result};

const STREAM_THETA: u64 = 0;
const STREAM_UNLABELED: u64 = 1;
const STREAM_PAIRS: u64 = 2;

pub(crate) fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}

/// Linear-Gaussian generator: `x ~ N(0, I_d)`, `y = θ·x + ε`,
/// `ε ~ N(0, noise_std²)`, with `‖θ‖₂ = 1`.
#[derive(Clone, Debug, PartialEq)]
pub struct SyntheticSpec {
    theta_true: Vector,
    noise_std: f64,
    seed: u64,
}

impl SyntheticSpec {
    pub fn new(theta_true: Vector, noise_std: f64, seed: u64) -> Result<Self> {
        if theta_true.is_empty() {
            return Err(Error::param("theta_true must have at least one entry"));
        }
        if (theta_true.norm() - 1.0).abs() > 1e-9 {
            return Err(Error::param(format!(
                "theta_true must have unit norm, got {}",
                theta_true.norm()
            )));
        }
        if !(noise_std >= 0.0 && noise_std.is_finite()) {
            return Err(Error::param(format!("noise_std must be ≥ 0, got {noise_std}")));
        }
        Ok(SyntheticSpec {
            theta_true,
            noise_std,
            seed,
        })
    }

    /// Draws `θ` uniformly on the unit sphere from `seed`.
    pub fn random(dim: usize, noise_std: f64, seed: u64) -> Result<Self> {
        if dim == 0 {
            return Err(Error::param("dim must be positive"));
        }
        let mut rng = stream_rng(seed, STREAM_THETA);
        let theta = random_unit_vector(dim, &mut rng);
        Self::new(theta, noise_std, seed)
    }

    pub fn dim(&self) -> usize {
        self.theta_true.len()
    }

    pub fn noise_std(&self) -> f64 {
        self.noise_std
    }

    pub fn theta_true(&self) -> &Vector {
        &self.theta_true
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Marginal law of `y`: `N(0, 1 + noise_std²)`.
    pub fn target_distribution(&self) -> Gaussian {
        gaussian_distribution(0.0, (1.0 + self.noise_std * self.noise_std).sqrt())
            .expect("positive std")
    }

    fn draw_row<R: Rng + ?Sized>(&self, rng: &mut R, row: &mut [f64]) -> f64 {
        let mut y = 0.0;
        for (v, t) in row.iter_mut().zip(self.theta_true.iter()) {
            *v = StandardNormal.sample(rng);
            y += *v * t;
        }
        if self.noise_std > 0.0 {
            let e: f64 = StandardNormal.sample(rng);
            y += self.noise_std * e;
        }
        y
    }
}

pub fn random_unit_vector<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> Vector {
    loop {
        let v = Vector::from_fn(dim, |_, _| StandardNormal.sample(rng));
        let n = v.norm();
        if n > 1e-12 {
            return v / n;
        }
    }
}

/// `n` labeled draws from `spec`, using the caller's RNG.
pub fn generate_synthetic_with<R: Rng + ?Sized>(
    spec: &SyntheticSpec,
    n: usize,
    rng: &mut R,
) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::param("n must be positive"));
    }
    let d = spec.dim();
    let mut rows = vec![0.0; n * d];
    let mut targets = Vec::with_capacity(n);
    for chunk in rows.chunks_mut(d) {
        targets.push(spec.draw_row(rng, chunk));
    }
    Dataset::new(Matrix::from_row_slice(n, d, &rows), Some(Vector::from_vec(targets)))
}

/// `n` labeled draws from `spec`, deterministic in `spec.seed`.
pub fn generate_synthetic(spec: &SyntheticSpec, n: usize) -> Result<Dataset> {
    generate_synthetic_with(spec, n, &mut stream_rng(spec.seed, STREAM_UNLABELED))
}

/// Orders each `((x, y), (x′, y′))` into a winner/loser row: `x` wins when
/// `y ≥ y′`, otherwise `x′` wins.
pub fn make_pairwise<'a, I>(pairs: I) -> Result<PairwiseSet>
where
    I: IntoIterator<Item = ((&'a [f64], f64), (&'a [f64], f64))>,
{
    let mut dim = None;
    let mut winners = Vec::new();
    let mut losers = Vec::new();
    let mut n = 0;
    for ((x, y), (xp, yp)) in pairs {
        let d = *dim.get_or_insert(x.len());
        if x.len() != d || xp.len() != d {
            return Err(Error::shape("pair feature vectors differ in length"));
        }
        if !(y.is_finite() && yp.is_finite()) {
            return Err(Error::param("pair targets must be finite"));
        }
        let (w, l) = if y >= yp { (x, xp) } else { (xp, x) };
        winners.extend_from_slice(w);
        losers.extend_from_slice(l);
        n += 1;
    }
    let d = dim.unwrap_or(0);
    PairwiseSet::new(
        Matrix::from_row_slice(n, d, &winners),
        Matrix::from_row_slice(n, d, &losers),
    )
}

/// `n_r` fresh comparisons from `spec`, using the caller's RNG.
pub fn sample_pairwise_with<R: Rng + ?Sized>(
    spec: &SyntheticSpec,
    n_r: usize,
    rng: &mut R,
) -> Result<PairwiseSet> {
    if n_r == 0 {
        return Err(Error::param("n_r must be positive"));
    }
    let d = spec.dim();
    let mut a = vec![0.0; d];
    let mut b = vec![0.0; d];
    let mut winners = Vec::with_capacity(n_r * d);
    let mut losers = Vec::with_capacity(n_r * d);
    for _ in 0..n_r {
        let ya = spec.draw_row(rng, &mut a);
        let yb = spec.draw_row(rng, &mut b);
        let (w, l) = if ya >= yb { (&a, &b) } else { (&b, &a) };
        winners.extend_from_slice(w);
        losers.extend_from_slice(l);
    }
    PairwiseSet::new(
        Matrix::from_row_slice(n_r, d, &winners),
        Matrix::from_row_slice(n_r, d, &losers),
    )
}

/// `n_r` comparisons from `spec`, deterministic in `spec.seed` and
/// independent of [`generate_synthetic`]'s draws.
pub fn sample_pairwise_from_spec(spec: &SyntheticSpec, n_r: usize) -> Result<PairwiseSet> {
    sample_pairwise_with(spec, n_r, &mut stream_rng(spec.seed, STREAM_PAIRS))
}

/// Which of the two joint laws on `[−1, 1] × [0, 4]` to sample.
///
/// Both share the `X` marginal (uniform), the `Y` marginal (uniform on
/// `[0, 2] ∪ [3, 4]`) and the law of comparison pairs, but their regression
/// functions differ: constant `11/6` under `Base`, and `7/4` / `23/12` on
/// `x < 0` / `x ≥ 0` under `Tilde`.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub enum CounterexampleId {
    Base,
    Tilde,
}

// (x_low, x_high, y_low, y_high, mass); every cell has unit area
const Y_CELLS: [(f64, f64); 3] = [(0.0, 1.0), (1.0, 2.0), (3.0, 4.0)];

fn counterexample_cells(id: CounterexampleId) -> [(f64, f64, f64, f64, f64); 6] {
    let masses: [f64; 6] = match id {
        CounterexampleId::Base => [1.0 / 6.0; 6],
        CounterexampleId::Tilde => [
            1.0 / 8.0,
            1.0 / 4.0,
            1.0 / 8.0,
            5.0 / 24.0,
            1.0 / 12.0,
            5.0 / 24.0,
        ],
    };
    let mut cells = [(0.0, 0.0, 0.0, 0.0, 0.0); 6];
    for (i, cell) in cells.iter_mut().enumerate() {
        let (xl, xh) = if i < 3 { (-1.0, 0.0) } else { (0.0, 1.0) };
        let (yl, yh) = Y_CELLS[i % 3];
        *cell = (xl, xh, yl, yh, masses[i]);
    }
    cells
}

/// `n` draws `(x, y)` from the chosen law, one feature column.
pub fn counterexample_sampler(id: CounterexampleId, n: usize, seed: u64) -> Result<Dataset> {
    if n == 0 {
        return Err(Error::param("n must be positive"));
    }
    let cells = counterexample_cells(id);
    let mut cumulative = [0.0; 6];
    let mut acc = 0.0;
    for (c, cell) in cumulative.iter_mut().zip(cells.iter()) {
        acc += cell.4;
        *c = acc;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut xs = Vec::with_capacity(n);
    let mut ys = Vec::with_capacity(n);
    for _ in 0..n {
        let u: f64 = rng.random::<f64>() * acc;
        let k = cumulative.iter().position(|&c| u < c).unwrap_or(5);
        let (xl, xh, yl, yh, _) = cells[k];
        xs.push(xl + (xh - xl) * rng.random::<f64>());
        ys.push(yl + (yh - yl) * rng.random::<f64>());
    }
    Dataset::new(Matrix::from_vec(n, 1, xs), Some(Vector::from_vec(ys)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use proptest::prelude::*;

    fn e1(d: usize) -> Vector {
        let mut v = Vector::zeros(d);
        v[0] = 1.0;
        v
    }

    #[test]
    fn zero_noise_targets_equal_first_feature() {
        let spec = SyntheticSpec::new(e1(5), 0.0, 4).unwrap();
        let ds = generate_synthetic(&spec, 500).unwrap();
        let y = ds.targets().unwrap();
        for i in 0..500 {
            assert_eq!(y[i], ds.features()[(i, 0)]);
        }
    }

    #[test]
    fn target_variance_matches_marginal() {
        let spec = SyntheticSpec::random(5, 0.1, 11).unwrap();
        let y = generate_synthetic(&spec, 1_000_000).unwrap().targets().unwrap().clone();
        let m = y.mean();
        let var = y.iter().map(|v| (v - m).powi(2)).sum::<f64>() / (y.len() - 1) as f64;
        assert!((var / 1.01 - 1.0).abs() < 0.01, "variance {var}");
        assert_abs_diff_eq!(spec.target_distribution().std(), 1.01f64.sqrt());
    }

    #[test]
    fn generation_is_deterministic() {
        let spec = SyntheticSpec::random(3, 0.1, 99).unwrap();
        assert_eq!(spec, SyntheticSpec::random(3, 0.1, 99).unwrap());
        assert_eq!(generate_synthetic(&spec, 50).unwrap(), generate_synthetic(&spec, 50).unwrap());
        assert_eq!(
            sample_pairwise_from_spec(&spec, 50).unwrap(),
            sample_pairwise_from_spec(&spec, 50).unwrap()
        );
        assert_ne!(SyntheticSpec::random(3, 0.1, 100).unwrap(), spec);
    }

    #[test]
    fn spec_validation() {
        assert!(SyntheticSpec::new(Vector::from_vec(vec![1.0, 1.0]), 0.1, 0).is_err());
        assert!(SyntheticSpec::new(e1(2), -0.1, 0).is_err());
        assert!(SyntheticSpec::random(0, 0.1, 0).is_err());
        let s = SyntheticSpec::random(7, 0.1, 5).unwrap();
        assert_abs_diff_eq!(s.theta_true().norm(), 1.0, epsilon = 1e-12);
    }

    #[test]
    fn make_pairwise_orders_by_target() {
        let x1 = [1.0, 2.0];
        let x2 = [3.0, 4.0];
        let p = make_pairwise([((&x1[..], 3.0), (&x2[..], 5.0))]).unwrap();
        assert_eq!(p.winners().row(0).iter().copied().collect::<Vec<_>>(), x2);
        assert_eq!(p.losers().row(0).iter().copied().collect::<Vec<_>>(), x1);
        // ties follow the y ≥ y′ branch: the first argument wins
        let p = make_pairwise([((&x1[..], 4.0), (&x2[..], 4.0))]).unwrap();
        assert_eq!(p.winners().row(0).iter().copied().collect::<Vec<_>>(), x1);
        let p = make_pairwise([((&x2[..], 4.0), (&x1[..], 4.0))]).unwrap();
        assert_eq!(p.winners().row(0).iter().copied().collect::<Vec<_>>(), x2);
    }

    #[test]
    fn make_pairwise_rejects_ragged_rows() {
        let a = [1.0];
        let b = [1.0, 2.0];
        assert!(make_pairwise([((&a[..], 1.0), (&b[..], 0.0))]).is_err());
    }

    proptest! {
        #[test]
        fn make_pairwise_keeps_every_comparison_and_is_order_free(
            rows in proptest::collection::vec(
                (proptest::collection::vec(-5.0f64..5.0, 3), -5.0f64..5.0,
                 proptest::collection::vec(-5.0f64..5.0, 3), -5.0f64..5.0),
                0..30)
        ) {
            let fwd = make_pairwise(rows.iter().map(|(x, y, xp, yp)| ((&x[..], *y), (&xp[..], *yp)))).unwrap();
            let rev = make_pairwise(rows.iter().map(|(x, y, xp, yp)| ((&xp[..], *yp), (&x[..], *y)))).unwrap();
            prop_assert_eq!(fwd.len(), rows.len());
            for (i, (_, y, _, yp)) in rows.iter().enumerate() {
                if y != yp {
                    prop_assert_eq!(fwd.winners().row(i), rev.winners().row(i));
                    prop_assert_eq!(fwd.losers().row(i), rev.losers().row(i));
                } else {
                    prop_assert_eq!(fwd.winners().row(i), rev.losers().row(i));
                }
            }
        }
    }

    #[test]
    fn noiseless_pairs_are_ordered_by_first_coordinate() {
        let spec = SyntheticSpec::new(e1(4), 0.0, 8).unwrap();
        let p = sample_pairwise_from_spec(&spec, 2_000).unwrap();
        assert_eq!(p.len(), 2_000);
        for i in 0..p.len() {
            assert!(p.winners()[(i, 0)] >= p.losers()[(i, 0)]);
        }
    }

    #[test]
    fn winners_score_higher_on_average() {
        let spec = SyntheticSpec::random(5, 0.1, 21).unwrap();
        let p = sample_pairwise_from_spec(&spec, 100_000).unwrap();
        let plus = (p.winners() * spec.theta_true()).mean();
        let minus = (p.losers() * spec.theta_true()).mean();
        assert!(plus > minus);
        // E[θ·X⁺] = 1/√(π·(1 + σ²)) for the linear-Gaussian generator
        let expected = 1.0 / (std::f64::consts::PI * 1.01).sqrt();
        assert!((plus - expected).abs() < 0.01, "{plus} vs {expected}");
    }

    #[test]
    fn counterexample_moments() {
        let n = 1_000_000;
        let base = counterexample_sampler(CounterexampleId::Base, n, 1).unwrap();
        let tilde = counterexample_sampler(CounterexampleId::Tilde, n, 2).unwrap();
        for ds in [&base, &tilde] {
            let x = ds.features().column(0);
            assert!(x.mean().abs() < 0.01);
            assert!(x.iter().all(|v| (-1.0..=1.0).contains(v)));
            let y = ds.targets().unwrap();
            assert!(y.iter().all(|v| (0.0..=2.0).contains(v) || (3.0..=4.0).contains(v)));
        }
        let cond = |ds: &Dataset, lo: f64, hi: f64| {
            let (mut s, mut c) = (0.0, 0usize);
            for (x, y) in ds.features().column(0).iter().zip(ds.targets().unwrap().iter()) {
                if *x >= lo && *x < hi {
                    s += y;
                    c += 1;
                }
            }
            s / c as f64
        };
        for k in 0..4 {
            let lo = -1.0 + 0.5 * k as f64;
            assert!((cond(&base, lo, lo + 0.5) - 11.0 / 6.0).abs() < 0.02);
        }
        assert!((cond(&tilde, -1.0, 0.0) - 7.0 / 4.0).abs() < 0.02);
        assert!((cond(&tilde, 0.0, 1.01) - 23.0 / 12.0).abs() < 0.02);
    }

    #[test]
    fn counterexample_is_seeded() {
        let a = counterexample_sampler(CounterexampleId::Tilde, 100, 3).unwrap();
        assert_eq!(a, counterexample_sampler(CounterexampleId::Tilde, 100, 3).unwrap());
    }
}

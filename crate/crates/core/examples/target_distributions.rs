//! Analytic, kernel-density and empirical target laws.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use uncoupled::distributions::{
    empirical_cdf_eval, fit_kde, gaussian_distribution, kde_distribution, uniform_distribution, EmpiricalCdf,
};
use uncoupled::{CumulativeDistribution, TargetDistribution};

fn main() -> uncoupled::Result<()> {
    let normal = gaussian_distribution(0.0, 1.01f64.sqrt())?;
    let uniform = uniform_distribution(-1.0, 3.0)?;
    for u in [0.05, 0.5, 0.95] {
        println!("u = {u}: normal quantile {:+.5}, uniform quantile {:+.5}", normal.inv_cdf(u)?, uniform.inv_cdf(u)?);
    }

    // skewed sample: the density is estimated, the order of the values is irrelevant
    let mut rng = ChaCha8Rng::seed_from_u64(1);
    let gamma = Gamma::new(2.0, 1.5).unwrap();
    let targets: Vec<f64> = (0..500).map(|_| gamma.sample(&mut rng)).collect();
    let kde = fit_kde(&targets, &[])?;
    println!("KDE bandwidth chosen by 5-fold likelihood: {:.4}", kde.bandwidth());
    let law = kde_distribution(&kde);
    let (lo, hi) = law.support_bounds();
    println!("KDE support [{lo:.3}, {hi:.3}], median {:.4}, pdf at 2: {:.4}", law.inv_cdf(0.5)?, law.pdf(2.0));

    let ecdf = EmpiricalCdf::new(&targets)?;
    for y in [1.0, 3.0, 6.0] {
        println!("F(y <= {y}): ECDF {:.3}, KDE {:.3}", empirical_cdf_eval(&ecdf, y), law.cdf(y));
    }
    Ok(())
}

//! Bregman-divergence losses.
//!
//! A convex generator `φ` defines the loss
//!
//! ```text
//! d_φ(t, z) = φ(t) − φ(z) − (t − z)·φ′(z)
//! ```
//!
//! Two generators are shipped: the squared generator `φ(x) = x²`, whose
//! divergence is the squared error, and the Bernoulli-KL generator
//! `φ(x) = x·ln x + (1 − x)·ln(1 − x)` on `(0, 1)`, whose divergence is the
//! Kullback-Leibler divergence between `Ber(t)` and `Ber(z)`.
//!
//! The generator methods are total: outside the valid domain they return
//! NaN or an infinity instead of an error, so risk evaluations inside an
//! optimizer can reject a step by checking finiteness. [`bregman_divergence`]
//! is the checked entry point.

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Hash)]
pub enum BregmanGenerator {
    /// `φ(x) = x²` on ℝ.
    #[default]
    Squared,
    /// `φ(x) = x·ln x + (1 − x)·ln(1 − x)` on `(0, 1)`.
    BernoulliKl,
}

/// Open or closed real interval.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Interval {
    pub low: f64,
    pub high: f64,
    pub open: bool,
}

impl Interval {
    pub fn contains(&self, x: f64) -> bool {
        if !x.is_finite() && !(self.low.is_infinite() && self.high.is_infinite()) {
            return false;
        }
        if self.open {
            x > self.low && x < self.high
        } else {
            x >= self.low && x <= self.high
        }
    }
}

impl BregmanGenerator {
    pub fn name(self) -> &'static str {
        match self {
            BregmanGenerator::Squared => "squared",
            BregmanGenerator::BernoulliKl => "bernoulli-kl",
        }
    }

    pub fn valid_domain(self) -> Interval {
        match self {
            BregmanGenerator::Squared => Interval {
                low: f64::NEG_INFINITY,
                high: f64::INFINITY,
                open: true,
            },
            BregmanGenerator::BernoulliKl => Interval {
                low: 0.0,
                high: 1.0,
                open: true,
            },
        }
    }

    #[inline]
    pub fn phi(self, x: f64) -> f64 {
        match self {
            BregmanGenerator::Squared => x * x,
            BregmanGenerator::BernoulliKl => {
                if x > 0.0 && x < 1.0 {
                    x * x.ln() + (1.0 - x) * (1.0 - x).ln()
                } else {
                    f64::NAN
                }
            }
        }
    }

    #[inline]
    pub fn phi_prime(self, x: f64) -> f64 {
        match self {
            BregmanGenerator::Squared => 2.0 * x,
            BregmanGenerator::BernoulliKl => {
                if x > 0.0 && x < 1.0 {
                    x.ln() - (1.0 - x).ln()
                } else {
                    f64::NAN
                }
            }
        }
    }

    #[inline]
    pub fn phi_second(self, x: f64) -> f64 {
        match self {
            BregmanGenerator::Squared => 2.0,
            BregmanGenerator::BernoulliKl => {
                if x > 0.0 && x < 1.0 {
                    1.0 / x + 1.0 / (1.0 - x)
                } else {
                    f64::NAN
                }
            }
        }
    }

    fn check(self, what: &str, x: f64) -> Result<()> {
        if self.valid_domain().contains(x) {
            Ok(())
        } else {
            Err(Error::domain(format!(
                "{what} = {x} is outside the domain of the {} generator",
                self.name()
            )))
        }
    }
}

/// `d_φ(t, z) = φ(t) − φ(z) − (t − z)·φ′(z)`.
pub fn bregman_divergence(gen: BregmanGenerator, t: f64, z: f64) -> Result<f64> {
    gen.check("t", t)?;
    gen.check("z", z)?;
    let d = gen.phi(t) - gen.phi(z) - (t - z) * gen.phi_prime(z);
    // Cancellation can leave a tiny negative residue when t ≈ z.
    Ok(d.max(0.0))
}

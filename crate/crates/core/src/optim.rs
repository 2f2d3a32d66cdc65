//! Full-batch gradient descent with a halving backtracking line search.
//!
//! The first trial step of each iteration is the Barzilai-Borwein length
//! `sᵀs / sᵀy` from the previous move; the Armijo test keeps every accepted
//! step a strict decrease.

use crate::dataset::Vector;
use crate::error::{Error, Result};

pub trait Objective {
    /// May return a non-finite value outside the objective's domain; the
    /// line search treats that as a rejected step.
    fn value(&self, theta: &Vector) -> f64;

    fn gradient(&self, theta: &Vector) -> Vector;

    fn value_and_gradient(&self, theta: &Vector) -> (f64, Vector) {
        (self.value(theta), self.gradient(theta))
    }
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SolverOptions {
    pub max_iter: usize,
    /// Stop once `‖∇f‖₂` falls to this value.
    pub grad_tol: f64,
    /// Sufficient-decrease constant of the Armijo condition.
    pub armijo: f64,
    pub initial_step: f64,
    /// Line-search halvings before an iteration is declared stalled.
    pub max_halvings: usize,
}

impl Default for SolverOptions {
    fn default() -> Self {
        SolverOptions {
            max_iter: 10_000,
            grad_tol: 1e-8,
            armijo: 1e-4,
            initial_step: 1.0,
            max_halvings: 60,
        }
    }
}

#[derive(Clone, Debug)]
pub struct Minimum {
    pub theta: Vector,
    pub value: f64,
    pub gradient_norm: f64,
    pub iterations: usize,
    pub converged: bool,
}

pub fn gradient_descent<O: Objective + ?Sized>(
    objective: &O,
    start: Vector,
    opts: &SolverOptions,
) -> Result<Minimum> {
    let mut theta = start;
    let (mut value, mut grad) = objective.value_and_gradient(&theta);
    if !value.is_finite() || grad.iter().any(|g| !g.is_finite()) {
        return Err(Error::Divergence(format!(
            "objective is not finite at the starting point ({value})"
        )));
    }
    let mut step = opts.initial_step;
    let mut iterations = 0;
    let mut gnorm = grad.norm();
    while iterations < opts.max_iter && gnorm > opts.grad_tol {
        iterations += 1;
        let g2 = gnorm * gnorm;
        let mut t = step;
        let mut accepted = None;
        for _ in 0..=opts.max_halvings {
            let candidate = &theta - &grad * t;
            let v = objective.value(&candidate);
            if v.is_finite() && v <= value - opts.armijo * t * g2 {
                accepted = Some((candidate, v));
                break;
            }
            t *= 0.5;
        }
        let Some((next, v)) = accepted else {
            // no decrease at machine resolution: a minimum for practical purposes
            break;
        };
        let g = objective.gradient(&next);
        if g.iter().any(|x| !x.is_finite()) {
            return Err(Error::Divergence("gradient became non-finite".into()));
        }
        let s = &next - &theta;
        let sy = s.dot(&(&g - &grad));
        step = if sy > 0.0 { s.norm_squared() / sy } else { 2.0 * t };
        theta = next;
        value = v;
        grad = g;
        gnorm = grad.norm();
    }
    Ok(Minimum {
        theta,
        value,
        gradient_norm: gnorm,
        iterations,
        converged: gnorm <= opts.grad_tol,
    })
}

/// Central finite-difference gradient; test and diagnostic helper.
pub fn finite_difference_gradient<F: Fn(&Vector) -> f64>(f: F, theta: &Vector, h: f64) -> Vector {
    let mut g = Vector::zeros(theta.len());
    for i in 0..theta.len() {
        let mut plus = theta.clone();
        let mut minus = theta.clone();
        plus[i] += h;
        minus[i] -= h;
        g[i] = (f(&plus) - f(&minus)) / (2.0 * h);
    }
    g
}

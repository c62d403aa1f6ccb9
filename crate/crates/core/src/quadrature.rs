//! Gauss–Hermite expectations under a Gaussian law.
//!
//! Expectations over the lognormal law are taken in the Gaussian variable
//! `u = log x`, so `E[g(log x)] = pi^{-1/2} * sum_i w_i g(mu + sqrt(2) sigma x_i)`
//! with `(x_i, w_i)` the nodes and weights for the weight `exp(-x^2)`.

use gauss_quad::hermite::GaussHermite;
use std::f64::consts::{PI, SQRT_2};

use crate::error::{Error, Result};

/// Number of Gauss–Hermite nodes used for an expectation.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize)]
pub struct QuadratureSpec {
    order: usize,
}

impl QuadratureSpec {
    pub const DEFAULT_ORDER: usize = 40;

    pub fn new(order: usize) -> Result<Self> {
        if order < 2 {
            return Err(Error::InvalidArgument(format!(
                "quadrature order must be at least 2, got {order}"
            )));
        }
        Ok(Self { order })
    }

    pub fn order(&self) -> usize {
        self.order
    }
}

impl Default for QuadratureSpec {
    fn default() -> Self {
        Self {
            order: Self::DEFAULT_ORDER,
        }
    }
}

/// Node/weight table rescaled to the standard normal law.
#[derive(Debug, Clone)]
pub struct NormalRule {
    /// `(z_i, p_i)` with `sum p_i = 1` and `E[g(Z)] ~ sum p_i g(z_i)`.
    points: Vec<(f64, f64)>,
}

impl NormalRule {
    pub fn new(spec: QuadratureSpec) -> Result<Self> {
        let rule = GaussHermite::new(spec.order())
            .map_err(|e| Error::InvalidArgument(format!("gauss-hermite: {e}")))?;
        let norm = PI.sqrt().recip();
        let points = rule.iter().map(|&(x, w)| (SQRT_2 * x, w * norm)).collect();
        Ok(Self { points })
    }

    /// `E[g(U)]` for `U ~ Normal(mu, sigma^2)`.
    pub fn expect<F: FnMut(f64) -> f64>(&self, mu: f64, sigma: f64, mut g: F) -> Result<f64> {
        check_scale(mu, sigma)?;
        Ok(self
            .points
            .iter()
            .map(|&(z, p)| p * g(mu + sigma * z))
            .sum())
    }

    /// Vector-valued variant of [`expect`](Self::expect).
    pub fn expect_n<const N: usize, F>(&self, mu: f64, sigma: f64, mut g: F) -> Result<[f64; N]>
    where
        F: FnMut(f64) -> [f64; N],
    {
        check_scale(mu, sigma)?;
        let mut acc = [0.0; N];
        for &(z, p) in &self.points {
            let v = g(mu + sigma * z);
            for (a, x) in acc.iter_mut().zip(v) {
                *a += p * x;
            }
        }
        Ok(acc)
    }
}

fn check_scale(mu: f64, sigma: f64) -> Result<()> {
    if !mu.is_finite() || !sigma.is_finite() || sigma < f64::MIN_POSITIVE.sqrt() {
        return Err(Error::QuadratureDegenerate(format!(
            "mean {mu}, standard deviation {sigma}"
        )));
    }
    Ok(())
}

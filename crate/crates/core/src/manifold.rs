//! Closed-form information geometry of the lognormal family.
//!
//! The density `p(x) = exp(-(log x - mu)^2 / (2 sigma^2)) / (sqrt(2 pi) sigma x)`
//! is written in natural coordinates `theta1 = mu / sigma^2`,
//! `theta2 = -1 / (2 sigma^2)`. Every closed form below has a quadrature
//! counterpart so the two routes can be compared.

use nalgebra::Matrix2;
use serde::Serialize;
use std::f64::consts::PI;

use crate::error::{Error, Result};
use crate::fd::{self, Stencil};
use crate::quadrature::{NormalRule, QuadratureSpec};

/// Points with `theta2` at or above this value are rejected.
pub const THETA2_GUARD: f64 = -1e-12;

/// 2x2 Fisher metric (or its inverse) in natural coordinates.
pub type MetricMatrix = Matrix2<f64>;

/// `Gamma[i][j][k] = E[(d_i d_j l)(d_k l)]`.
pub type Christoffel = [[[f64; 2]; 2]; 2];

/// A lognormal law in natural coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct NaturalPoint {
    theta1: f64,
    theta2: f64,
}

impl NaturalPoint {
    pub fn new(theta1: f64, theta2: f64) -> Result<Self> {
        if !theta1.is_finite() || !theta2.is_finite() {
            return Err(Error::Domain(format!(
                "non-finite natural coordinates ({theta1}, {theta2})"
            )));
        }
        if theta2 >= THETA2_GUARD {
            return Err(Error::Domain(format!(
                "theta2 = {theta2} must be below {THETA2_GUARD}"
            )));
        }
        Ok(Self { theta1, theta2 })
    }

    /// From the mean and variance of `log x`.
    pub fn from_mu_sigma2(mu: f64, sigma2: f64) -> Result<Self> {
        if !(sigma2 > 0.0) || !sigma2.is_finite() {
            return Err(Error::Domain(format!("variance {sigma2} must be positive")));
        }
        Self::new(mu / sigma2, -0.5 / sigma2)
    }

    pub fn theta1(&self) -> f64 {
        self.theta1
    }

    pub fn theta2(&self) -> f64 {
        self.theta2
    }

    pub fn as_array(&self) -> [f64; 2] {
        [self.theta1, self.theta2]
    }

    /// Mean of `log x`.
    pub fn mu(&self) -> f64 {
        -self.theta1 / (2.0 * self.theta2)
    }

    /// Variance of `log x`.
    pub fn sigma2(&self) -> f64 {
        -0.5 / self.theta2
    }
}

/// Expectation coordinates `(E[log x], E[log^2 x])`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DualPoint {
    eta1: f64,
    eta2: f64,
}

impl DualPoint {
    pub fn new(eta1: f64, eta2: f64) -> Result<Self> {
        if !(eta2 - eta1 * eta1 > 0.0) || !eta1.is_finite() || !eta2.is_finite() {
            return Err(Error::Domain(format!(
                "eta2 - eta1^2 = {} must be positive",
                eta2 - eta1 * eta1
            )));
        }
        Ok(Self { eta1, eta2 })
    }

    pub fn eta1(&self) -> f64 {
        self.eta1
    }

    pub fn eta2(&self) -> f64 {
        self.eta2
    }

    pub fn as_array(&self) -> [f64; 2] {
        [self.eta1, self.eta2]
    }

    /// Inverse of [`dual_coordinates`], through `(mu, sigma^2)`.
    pub fn to_natural(&self) -> Result<NaturalPoint> {
        NaturalPoint::from_mu_sigma2(self.eta1, self.eta2 - self.eta1 * self.eta1)
    }
}

/// Log-density at `x > 0`.
pub fn log_likelihood(x: f64, p: &NaturalPoint) -> Result<f64> {
    if !(x > 0.0) || !x.is_finite() {
        return Err(Error::Domain(format!("sample x = {x} must be positive")));
    }
    Ok(log_likelihood_u(x.ln(), p))
}

/// Log-density expressed in `u = log x`.
pub fn log_likelihood_u(u: f64, p: &NaturalPoint) -> f64 {
    let (t1, t2) = (p.theta1, p.theta2);
    -u + t1 * u + t2 * u * u + t1 * t1 / (4.0 * t2) + 0.5 * (-2.0 * t2).ln() - 0.5 * (2.0 * PI).ln()
}

/// Log-partition function `Phi(theta)`.
pub fn potential(p: &NaturalPoint) -> f64 {
    let (t1, t2) = (p.theta1, p.theta2);
    -t1 * t1 / (4.0 * t2) - 0.5 * (-2.0 * t2).ln() + 0.5 * (2.0 * PI).ln()
}

/// Score vector `(d l / d theta1, d l / d theta2)` at `u = log x`.
pub fn score(u: f64, p: &NaturalPoint) -> [f64; 2] {
    let (t1, t2) = (p.theta1, p.theta2);
    [
        u + t1 / (2.0 * t2),
        u * u - t1 * t1 / (4.0 * t2 * t2) + 1.0 / (2.0 * t2),
    ]
}

/// Hessian of the log-likelihood in `theta`; it does not depend on `x`.
pub fn log_likelihood_hessian(p: &NaturalPoint) -> Matrix2<f64> {
    let (t1, t2) = (p.theta1, p.theta2);
    let off = -t1 / (2.0 * t2 * t2);
    Matrix2::new(
        1.0 / (2.0 * t2),
        off,
        off,
        t1 * t1 / (2.0 * t2.powi(3)) - 1.0 / (2.0 * t2 * t2),
    )
}

/// `eta = grad Phi`, equal to `(mu, mu^2 + sigma^2)`.
pub fn dual_coordinates(p: &NaturalPoint) -> DualPoint {
    let (t1, t2) = (p.theta1, p.theta2);
    DualPoint {
        eta1: -t1 / (2.0 * t2),
        eta2: (t1 * t1 - 2.0 * t2) / (4.0 * t2 * t2),
    }
}

pub fn fisher_metric(p: &NaturalPoint) -> MetricMatrix {
    let (t1, t2) = (p.theta1, p.theta2);
    let off = t1 / (2.0 * t2 * t2);
    Matrix2::new(
        -1.0 / (2.0 * t2),
        off,
        off,
        -(t1 * t1 - t2) / (2.0 * t2.powi(3)),
    )
}

pub fn inverse_metric(p: &NaturalPoint) -> MetricMatrix {
    inverse_metric_raw(p.theta1, p.theta2)
}

/// Inverse metric as a polynomial in `theta`; defined on the whole plane.
pub(crate) fn inverse_metric_raw(t1: f64, t2: f64) -> MetricMatrix {
    let off = 2.0 * t1 * t2;
    Matrix2::new(2.0 * t1 * t1 - 2.0 * t2, off, off, 2.0 * t2 * t2)
}

/// `-E[d_i d_j l]` by Gauss–Hermite quadrature in `u = log x`.
pub fn fisher_metric_oracle(p: &NaturalPoint, q: QuadratureSpec) -> Result<MetricMatrix> {
    let rule = NormalRule::new(q)?;
    let hess = log_likelihood_hessian(p);
    let m: [f64; 3] = rule.expect_n(p.mu(), p.sigma2().sqrt(), |_u| {
        [-hess[(0, 0)], -hess[(0, 1)], -hess[(1, 1)]]
    })?;
    Ok(Matrix2::new(m[0], m[1], m[1], m[2]))
}

/// `E[s s^T]` for the score `s`; equals the Fisher metric by the
/// information identity and exercises the quadrature on degree-4 moments.
pub fn score_covariance(p: &NaturalPoint, q: QuadratureSpec) -> Result<MetricMatrix> {
    let rule = NormalRule::new(q)?;
    let m: [f64; 3] = rule.expect_n(p.mu(), p.sigma2().sqrt(), |u| {
        let s = score(u, p);
        [s[0] * s[0], s[0] * s[1], s[1] * s[1]]
    })?;
    Ok(Matrix2::new(m[0], m[1], m[1], m[2]))
}

pub fn score_mean(p: &NaturalPoint, q: QuadratureSpec) -> Result<[f64; 2]> {
    let rule = NormalRule::new(q)?;
    rule.expect_n(p.mu(), p.sigma2().sqrt(), |u| score(u, p))
}

/// Exponential-connection coefficients `E[(d_i d_j l)(d_k l)]` by quadrature.
pub fn christoffel_e(p: &NaturalPoint, q: QuadratureSpec) -> Result<Christoffel> {
    let rule = NormalRule::new(q)?;
    let hess = log_likelihood_hessian(p);
    let flat: [f64; 8] = rule.expect_n(p.mu(), p.sigma2().sqrt(), |u| {
        let s = score(u, p);
        let mut v = [0.0; 8];
        for i in 0..2 {
            for j in 0..2 {
                for k in 0..2 {
                    v[4 * i + 2 * j + k] = hess[(i, j)] * s[k];
                }
            }
        }
        v
    })?;
    let mut out = [[[0.0; 2]; 2]; 2];
    for i in 0..2 {
        for j in 0..2 {
            for k in 0..2 {
                out[i][j][k] = flat[4 * i + 2 * j + k];
            }
        }
    }
    Ok(out)
}

/// Finite-difference gradient of [`potential`] (4th-order central, scaled step).
pub fn potential_gradient_fd(p: &NaturalPoint, step: f64) -> Result<[f64; 2]> {
    ensure_stencil_fits(p, step, Stencil::Fourth)?;
    Ok(fd::gradient(
        |x: &[f64; 2]| {
            let t2 = x[1];
            -x[0] * x[0] / (4.0 * t2) - 0.5 * (-2.0 * t2).ln() + 0.5 * (2.0 * PI).ln()
        },
        p.as_array(),
        step,
        Stencil::Fourth,
    ))
}

/// Finite-difference Jacobian `d eta / d theta`.
pub fn dual_jacobian_fd(p: &NaturalPoint, step: f64) -> Result<MetricMatrix> {
    ensure_stencil_fits(p, step, Stencil::Fourth)?;
    let j = fd::jacobian(
        |x: &[f64; 2]| {
            let (t1, t2) = (x[0], x[1]);
            [-t1 / (2.0 * t2), (t1 * t1 - 2.0 * t2) / (4.0 * t2 * t2)]
        },
        p.as_array(),
        step,
        Stencil::Fourth,
    );
    Ok(Matrix2::new(j[0][0], j[0][1], j[1][0], j[1][1]))
}

fn ensure_stencil_fits(p: &NaturalPoint, step: f64, stencil: Stencil) -> Result<()> {
    let reach = stencil.reach() as f64 * fd::scaled_step(step, p.theta2);
    if p.theta2 + reach >= THETA2_GUARD {
        return Err(Error::Stencil(format!(
            "theta2 = {} with reach {reach}",
            p.theta2
        )));
    }
    Ok(())
}

/// The 20-point validation grid `{-2,-1,0,1,2} x {-3,-1,-1/2,-0.1}`.
pub fn validation_grid() -> Vec<NaturalPoint> {
    let mut out = Vec::with_capacity(20);
    for t1 in [-2.0, -1.0, 0.0, 1.0, 2.0] {
        for t2 in [-3.0, -1.0, -0.5, -0.1] {
            out.push(NaturalPoint {
                theta1: t1,
                theta2: t2,
            });
        }
    }
    out
}

pub fn is_symmetric_positive_definite(m: &MetricMatrix) -> bool {
    (m[(0, 1)] - m[(1, 0)]).abs() <= 1e-12 * m.amax().max(1.0)
        && m.determinant() > 0.0
        && m.trace() > 0.0
}

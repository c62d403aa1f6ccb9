//! Exponential wavefunction, quantization operators and the Schrödinger-type
//! residual along spectral curves.
//!
//! Everything is expressed in `u = log x`. Time derivatives are taken with
//! respect to the real flow parameter `s` of a [`SpectralCurve`].

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;
use std::io::Write;

use crate::dombrowski::TangentState;
use crate::error::{Error, Result};
use crate::fd::Stencil;
use crate::jacobi::{Generator, JacobiElement, SpectralCurve};
use crate::manifold::{dual_coordinates, potential};

const I: Complex64 = Complex64::new(0.0, 1.0);

/// Largest real exponent accepted before reporting overflow.
pub const MAX_EXPONENT: f64 = 700.0;

/// Uniform grid in `u = log x`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct LogGrid {
    points: Vec<f64>,
    du: f64,
}

impl LogGrid {
    pub const DEFAULT_LO: f64 = -4.0;
    pub const DEFAULT_HI: f64 = 4.0;
    pub const DEFAULT_N: usize = 257;
    /// Smallest size the derivative operators accept.
    pub const MIN_DERIVATIVE_N: usize = 8;

    /// `n` equally spaced points covering `[lo, hi]`; needs `n >= 2`.
    pub fn new(lo: f64, hi: f64, n: usize) -> Result<Self> {
        if n < 2 {
            return Err(Error::GridTooSmall { got: n, need: 2 });
        }
        if !(lo.is_finite() && hi.is_finite() && hi > lo) {
            return Err(Error::InvalidArgument(format!(
                "bad grid bounds [{lo}, {hi}]"
            )));
        }
        let du = (hi - lo) / (n - 1) as f64;
        let points = (0..n).map(|k| lo + k as f64 * du).collect();
        Ok(Self { points, du })
    }

    pub fn points(&self) -> &[f64] {
        &self.points
    }

    pub fn du(&self) -> f64 {
        self.du
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }
}

impl Default for LogGrid {
    fn default() -> Self {
        Self::new(Self::DEFAULT_LO, Self::DEFAULT_HI, Self::DEFAULT_N).expect("default grid")
    }
}

/// Complex samples of a function on a [`LogGrid`].
#[derive(Debug, Clone, PartialEq)]
pub struct WaveSamples {
    pub grid: LogGrid,
    pub values: Vec<Complex64>,
}

impl WaveSamples {
    pub fn from_fn(grid: &LogGrid, f: impl Fn(f64) -> Complex64) -> Self {
        let values = grid.points().iter().map(|&u| f(u)).collect();
        Self {
            grid: grid.clone(),
            values,
        }
    }

    /// `max_k |a_k - b_k|` over indices `range`.
    pub fn max_diff_in(&self, other: &WaveSamples, range: std::ops::Range<usize>) -> f64 {
        range
            .map(|k| (self.values[k] - other.values[k]).norm())
            .fold(0.0, f64::max)
    }
}

/// `z1 = theta1 + i thetadot1`, `z2 = theta2 + i thetadot2`.
pub fn complex_coordinates(s: &TangentState) -> (Complex64, Complex64) {
    let [t1, t2, d1, d2] = s.as_array();
    (Complex64::new(t1, d1), Complex64::new(t2, d2))
}

/// Exponent `(c - i z2 u + i z1 u^2 - Phi) / 2` with `c = -u - i u`.
fn exponent(s: &TangentState, u: f64) -> Complex64 {
    let (z1, z2) = complex_coordinates(s);
    let c = Complex64::new(-u, -u);
    0.5 * (c - I * z2 * u + I * z1 * u * u - potential(s.theta()))
}

pub fn wavefunction_at(s: &TangentState, u: f64) -> Result<Complex64> {
    let e = exponent(s, u);
    if e.re > MAX_EXPONENT || !e.re.is_finite() {
        return Err(Error::Overflow(e.re));
    }
    Ok(e.exp())
}

pub fn wavefunction(s: &TangentState, grid: &LogGrid) -> Result<WaveSamples> {
    let values = grid
        .points()
        .iter()
        .map(|&u| wavefunction_at(s, u))
        .collect::<Result<Vec<_>>>()?;
    Ok(WaveSamples {
        grid: grid.clone(),
        values,
    })
}

// 4th-order first/second derivative weights. Central rows are symmetric
// about the target; boundary rows start one point to the left of it (row 1)
// or at it (row 0).
const D1_CENTRAL: [f64; 5] = [1.0, -8.0, 0.0, 8.0, -1.0];
const D1_EDGE0: [f64; 5] = [-25.0, 48.0, -36.0, 16.0, -3.0];
const D1_EDGE1: [f64; 5] = [-3.0, -10.0, 18.0, -6.0, 1.0];
const D2_CENTRAL: [f64; 5] = [-1.0, 16.0, -30.0, 16.0, -1.0];
const D2_EDGE0: [f64; 6] = [45.0, -154.0, 214.0, -156.0, 61.0, -10.0];
const D2_EDGE1: [f64; 6] = [10.0, -15.0, -4.0, 14.0, -6.0, 1.0];

fn dot(w: &[f64], v: &[Complex64]) -> Complex64 {
    w.iter().zip(v).map(|(a, b)| *a * b).sum()
}

fn dot_rev(w: &[f64], v: &[Complex64]) -> Complex64 {
    w.iter().zip(v.iter().rev()).map(|(a, b)| *a * b).sum()
}

/// `d/du` at 4th order, one-sided at the two points next to each end.
pub fn derivative_u(v: &[Complex64], du: f64) -> Result<Vec<Complex64>> {
    let n = v.len();
    if n < LogGrid::MIN_DERIVATIVE_N {
        return Err(Error::GridTooSmall {
            got: n,
            need: LogGrid::MIN_DERIVATIVE_N,
        });
    }
    let s = 12.0 * du;
    let mut out = vec![Complex64::default(); n];
    out[0] = dot(&D1_EDGE0, &v[0..5]) / s;
    out[1] = dot(&D1_EDGE1, &v[0..5]) / s;
    for k in 2..n - 2 {
        out[k] = dot(&D1_CENTRAL, &v[k - 2..k + 3]) / s;
    }
    out[n - 1] = -dot_rev(&D1_EDGE0, &v[n - 5..n]) / s;
    out[n - 2] = -dot_rev(&D1_EDGE1, &v[n - 5..n]) / s;
    Ok(out)
}

/// `d^2/du^2` at 4th order, one-sided at the two points next to each end.
pub fn second_derivative_u(v: &[Complex64], du: f64) -> Result<Vec<Complex64>> {
    let n = v.len();
    if n < LogGrid::MIN_DERIVATIVE_N {
        return Err(Error::GridTooSmall {
            got: n,
            need: LogGrid::MIN_DERIVATIVE_N,
        });
    }
    let s = 12.0 * du * du;
    let mut out = vec![Complex64::default(); n];
    out[0] = dot(&D2_EDGE0, &v[0..6]) / s;
    out[1] = dot(&D2_EDGE1, &v[0..6]) / s;
    for k in 2..n - 2 {
        out[k] = dot(&D2_CENTRAL, &v[k - 2..k + 3]) / s;
    }
    out[n - 1] = dot_rev(&D2_EDGE0, &v[n - 6..n]) / s;
    out[n - 2] = dot_rev(&D2_EDGE1, &v[n - 6..n]) / s;
    Ok(out)
}

/// Applies the quantized element: `F -> -u^2`, `P -> -i d/du`, `G -> -d^2/du^2`,
/// `Q -> u`, `H -> 2i(u d/du + 1/2)`, `R -> -1/4`.
pub fn apply_quantization(l: &JacobiElement, w: &WaveSamples) -> Result<WaveSamples> {
    let u = w.grid.points();
    let needs_d1 = l.lambda_p != 0.0 || l.lambda_h != 0.0;
    let d1 = if needs_d1 {
        Some(derivative_u(&w.values, w.grid.du())?)
    } else {
        None
    };
    let d2 = if l.lambda_g != 0.0 {
        Some(second_derivative_u(&w.values, w.grid.du())?)
    } else {
        None
    };
    let values = (0..w.values.len())
        .map(|k| {
            let v = w.values[k];
            let mut acc =
                l.lambda_f * (-u[k] * u[k]) * v + l.lambda_q * u[k] * v - 0.25 * l.lambda_r * v;
            if let Some(d1) = &d1 {
                acc += l.lambda_p * (-I * d1[k]);
                acc += l.lambda_h * (2.0 * I * (u[k] * d1[k] + 0.5 * v));
            }
            if let Some(d2) = &d2 {
                acc -= l.lambda_g * d2[k];
            }
            acc
        })
        .collect();
    Ok(WaveSamples {
        grid: w.grid.clone(),
        values,
    })
}

/// Tabulated multiplier `m_L(u)` with `Q(L) Psi = m_L Psi`.
pub fn closed_form_multiplier(g: Generator, s: &TangentState, u: f64) -> Complex64 {
    let (z1, z2) = complex_coordinates(s);
    match g {
        Generator::F => Complex64::from(-u * u),
        Generator::Q => Complex64::from(u),
        Generator::R => Complex64::from(-0.25),
        Generator::P => -z2 + 2.0 * z1 * u,
        Generator::G => {
            let b = -I * z2 + 2.0 * I * z1 * u;
            -(2.0 * I * z1 + b * b)
        }
        Generator::H => 2.0 * u * z2 - 4.0 * z1 * u * u + I,
    }
}

pub fn closed_form_action(
    l: &JacobiElement,
    s: &TangentState,
    grid: &LogGrid,
) -> Result<WaveSamples> {
    let psi = wavefunction(s, grid)?;
    let values = grid
        .points()
        .iter()
        .zip(&psi.values)
        .map(|(&u, &v)| {
            l.terms()
                .map(|(g, c)| c * closed_form_multiplier(g, s, u))
                .sum::<Complex64>()
                * v
        })
        .collect();
    Ok(WaveSamples {
        grid: grid.clone(),
        values,
    })
}

/// Interior indices, where every derivative uses its central stencil.
pub fn interior(grid: &LogGrid) -> std::ops::Range<usize> {
    2..grid.len().saturating_sub(2)
}

/// Largest interior modulus of `Q(L) Psi - (tabulated action)`.
pub fn operator_discrepancy(l: &JacobiElement, s: &TangentState, grid: &LogGrid) -> Result<f64> {
    let applied = apply_quantization(l, &wavefunction(s, grid)?)?;
    let printed = closed_form_action(l, s, grid)?;
    Ok(applied.max_diff_in(&printed, interior(grid)))
}

/// Max error of `P` on `e^{iku}` over the whole grid.
pub fn plane_wave_error(k: f64, grid: &LogGrid) -> Result<f64> {
    let w = WaveSamples::from_fn(grid, |u| (I * k * u).exp());
    let p = apply_quantization(&Generator::P.into(), &w)?;
    Ok(p.values
        .iter()
        .zip(&w.values)
        .map(|(a, b)| (a - k * b).norm())
        .fold(0.0, f64::max))
}

/// Observed order `log2(e(n) / e(2n - 1))` for `P` on `e^{iku}` over `[lo, hi]`.
pub fn plane_wave_order(k: f64, lo: f64, hi: f64, n: usize) -> Result<f64> {
    let coarse = plane_wave_error(k, &LogGrid::new(lo, hi, n)?)?;
    let fine = plane_wave_error(k, &LogGrid::new(lo, hi, 2 * n - 1)?)?;
    Ok((coarse / fine).log2())
}

/// How the right side of the reduced evolution equation is assembled.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct ConventionFlags {
    /// Sign in front of the `u (z2)'` term.
    pub sign_z2_term: i8,
    /// Add `-(i/2) (dPhi/ds) Psi`.
    pub include_potential_drift: bool,
    /// Overall `1/2` in front of the bracket (otherwise 1).
    pub psi_prefactor_half: bool,
    /// Take `d theta / ds` from the curve; otherwise identify it with `thetadot`.
    pub base_rate_from_flow: bool,
}

impl ConventionFlags {
    /// Flags that reproduce the exact chain rule.
    pub fn calibrated() -> Self {
        Self {
            sign_z2_term: 1,
            include_potential_drift: true,
            psi_prefactor_half: true,
            base_rate_from_flow: true,
        }
    }

    /// The reduced equation with its stated signs and no drift term.
    pub fn as_printed() -> Self {
        Self {
            sign_z2_term: -1,
            include_potential_drift: false,
            psi_prefactor_half: true,
            base_rate_from_flow: false,
        }
    }
}

impl Default for ConventionFlags {
    fn default() -> Self {
        Self::calibrated()
    }
}

/// Where the `xi` coefficient comes from.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", content = "gamma", rename_all = "snake_case")]
pub enum XiSource {
    Constant(f64),
    /// Multi-line fraction with denominator `4(beta5 + u)`.
    Primary,
    /// Alternate fraction with denominator `4(beta5 + u Psi)`.
    Alternate,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SchrodingerParams {
    /// `lambda1..lambda5`, coefficients of `F, G, H, P, R`.
    pub lambda: [f64; 5],
    /// `beta1..beta6`, the constants `K_F .. K_R`.
    pub beta: [f64; 6],
    pub xi: XiSource,
    pub flags: ConventionFlags,
}

impl Default for SchrodingerParams {
    fn default() -> Self {
        Self {
            lambda: [0.0; 5],
            beta: [0.0; 6],
            xi: XiSource::Constant(0.0),
            flags: ConventionFlags::default(),
        }
    }
}

impl SchrodingerParams {
    /// `lambda` from `(F, G, H, P, R)`; the `Q` coefficient becomes a constant `xi`.
    pub fn from_element(l: &JacobiElement) -> Self {
        Self {
            lambda: [l.lambda_f, l.lambda_g, l.lambda_h, l.lambda_p, l.lambda_r],
            xi: XiSource::Constant(l.lambda_q),
            ..Self::default()
        }
    }

    pub fn with_flags(mut self, flags: ConventionFlags) -> Self {
        self.flags = flags;
        self
    }

    pub fn with_xi(mut self, xi: XiSource) -> Self {
        self.xi = xi;
        self
    }

    pub fn with_beta(mut self, beta: [f64; 6]) -> Self {
        self.beta = beta;
        self
    }
}

fn curve_sample(c: &SpectralCurve, k: usize) -> Result<(&TangentState, &[f64; 4])> {
    match (c.states.get(k), c.velocities.get(k)) {
        (Some(s), Some(v)) => Ok((s, v)),
        _ => Err(Error::InvalidArgument(format!(
            "sample {k} outside curve of {} samples",
            c.len()
        ))),
    }
}

fn check_pole(d: Complex64) -> Result<()> {
    if d.norm() < 1e-9 {
        Err(Error::Pole(d.norm()))
    } else {
        Ok(())
    }
}

/// Primary `xi` at sample `k`, with `thetaddot` read from
/// the curve velocities.
pub fn xi_coefficient(
    c: &SpectralCurve,
    k: usize,
    u: f64,
    p: &SchrodingerParams,
) -> Result<Complex64> {
    let (s, v) = curve_sample(c, k)?;
    let [t1, t2, d1, d2] = s.as_array();
    let (a1, a2) = (v[2], v[3]);
    let [l1, l2, l3, l4, l5] = p.lambda;
    let [b1, b2, b3, b4, b5, b6] = p.beta;
    let denom = 4.0 * (b5 + u);
    check_pole(Complex64::from(b5 + u))?;
    let u2 = u * u;
    let n1 = -4.0 * I * a1 * u2 - 4.0 * I * u * a2 + 4.0 * l1 * u2 + 8.0 * I * l2 * d1 * t2 + l5
        - 4.0 * I * l3;
    let n2 = 16.0 * l3 * t1 * u2 - 8.0 * l4 * t1 * u
        + 8.0 * l2 * t1 * t2
        + 8.0 * I * l2 * t1
        + 4.0 * I * l4 * d2
        - 8.0 * l2 * d2 * d1;
    let n3 = 2.0 * l2 * d2 * d2 + 8.0 * l2 * d1 + 4.0 * l4 * t2
        - 8.0 * l2 * d1
        - 2.0 * l2 * t2 * t2
        - 8.0 * l2 * t1 * t1
        - 4.0 * d1 * u2
        - 4.0 * d2 * u;
    let n4 = -8.0 * l3 * Complex64::new(t2, d2) * u + 8.0 * l2 * t1 * d2 - 16.0 * I * l2 * t1 * d1
        + 16.0 * I * l3 * d1 * u2
        - 8.0 * I * l4 * d2
        - 4.0 * I * l2 * t2 * d2;
    // the doubled lambda2 beta2 term is kept as displayed
    let n5 = -4.0 * l1 * b1 - 8.0 * l2 * b2 - 4.0 * l3 * b3 - 4.0 * l4 * b4 - 4.0 * l5 * b6;
    let mut xi = (n1 + n2 + n3 + n4) / denom;
    if n5 != 0.0 {
        xi += n5 / (denom * wavefunction_at(s, u)?);
    }
    Ok(xi)
}

/// `xi` from the alternate display with denominator `4(beta5 + u Psi)`.
pub fn xi_coefficient_alternate(
    c: &SpectralCurve,
    k: usize,
    u: f64,
    p: &SchrodingerParams,
) -> Result<Complex64> {
    let (s, _) = curve_sample(c, k)?;
    let [t1, t2, d1, d2] = s.as_array();
    let [_, l2, l3, l4, l5] = p.lambda;
    let l1 = p.lambda[0];
    let [_, b2, b3, b4, b5, b6] = p.beta;
    let psi = wavefunction_at(s, u)?;
    let d = b5 + u * psi;
    check_pole(d)?;
    let denom = 4.0 * d;
    let u2 = u * u;
    let p1 =
        l5 - 4.0 * I * l2 * t2 * d2 - 4.0 * I * l3 + 8.0 * t2 * u - 8.0 * t1 * u2 - 8.0 * l2 * d2;
    let p2 = -2.0 * l2 * t2 * t2 - 8.0 * l2 * t1 * t1 - 8.0 * l3 * Complex64::new(t2, d2)
        + 8.0 * l2 * d1 * d1
        + 2.0 * l2 * d2 * d2
        + 4.0 * l4 * t2;
    let p3 = 4.0 * l1 * u2 - 8.0 * l2 * d1 * d2 + 8.0 * l2 * t2 * t1 + 4.0 * I * l4 * d2
        - 8.0 * I * l3 * d1 * u2;
    let p4 = 8.0 * I * d2 * u + 8.0 * I * l2 * t1 - 8.0 * l4 * t1 * u + 16.0 * l3 * t1 * u2;
    let p5 = 8.0 * I * l2 * t2 * d1 + 8.0 * I * l2 * t1 * d1 - 16.0 * I * l2 * t1 * d1
        + 16.0 * I * l3 * d1 * u2;
    let p6 = -4.0 * l4 * b4 - 4.0 * l5 * b6 - 4.0 * l3 * b3 - 4.0 * l2 * b2;
    Ok((p1 + p2 + p3 + p4 + p5) * psi / denom + p6 / denom)
}

/// `xi` according to `p.xi`.
pub fn xi_value(c: &SpectralCurve, k: usize, u: f64, p: &SchrodingerParams) -> Result<Complex64> {
    match p.xi {
        XiSource::Constant(g) => Ok(Complex64::from(g)),
        XiSource::Primary => xi_coefficient(c, k, u, p),
        XiSource::Alternate => xi_coefficient_alternate(c, k, u, p),
    }
}

/// `-l1 u^2 - l2(2i z1 + (-i z2 + 2i z1 u)^2) + l3(2u z2 - 4 z1 u^2 + i)
///  + l4(-z2 + 2 z1 u) + xi u - l5 / 4`.
pub fn hamiltonian_density(
    s: &TangentState,
    u: f64,
    p: &SchrodingerParams,
    xi: Complex64,
) -> Complex64 {
    let [l1, l2, l3, l4, l5] = p.lambda;
    let m = |g| closed_form_multiplier(g, s, u);
    l1 * m(Generator::F)
        + l2 * m(Generator::G)
        + l3 * m(Generator::H)
        + l4 * m(Generator::P)
        + xi * u
        - 0.25 * l5
}

/// `(dtheta/ds)` per the flags: the curve velocity or `thetadot`.
fn base_rate(s: &TangentState, v: &[f64; 4], flags: &ConventionFlags) -> [f64; 2] {
    if flags.base_rate_from_flow {
        [v[0], v[1]]
    } else {
        s.thetadot()
    }
}

/// Right side of the reduced equation for `i dPsi/ds` at one point.
pub fn reduced_rhs(
    s: &TangentState,
    v: &[f64; 4],
    u: f64,
    psi: Complex64,
    flags: &ConventionFlags,
) -> Complex64 {
    let b = base_rate(s, v, flags);
    let z1p = Complex64::new(b[0], v[2]);
    let z2p = Complex64::new(b[1], v[3]);
    let pref = if flags.psi_prefactor_half { 0.5 } else { 1.0 };
    let mut rhs = pref * (-u * u * z1p + f64::from(flags.sign_z2_term) * u * z2p) * psi;
    if flags.include_potential_drift {
        let eta = dual_coordinates(s.theta()).as_array();
        let dphi = eta[0] * b[0] + eta[1] * b[1];
        rhs -= 0.5 * I * dphi * psi;
    }
    rhs
}

/// Exact `i dPsi/ds` for a state moving with velocity `v`.
pub fn chain_rule_rate(s: &TangentState, v: &[f64; 4], u: f64) -> Result<Complex64> {
    let psi = wavefunction_at(s, u)?;
    Ok(reduced_rhs(s, v, u, psi, &ConventionFlags::calibrated()))
}

/// `1/2 H Psi + 1/2 (l1 b1 + l2 b2 + l3 b3 + l4 b4 + xi b5 + l5 b6)`.
pub fn full_rhs(
    hamiltonian: Complex64,
    psi: Complex64,
    xi: Complex64,
    p: &SchrodingerParams,
) -> Complex64 {
    let [l1, l2, l3, l4, l5] = p.lambda;
    let [b1, b2, b3, b4, b5, b6] = p.beta;
    0.5 * hamiltonian * psi + 0.5 * (l1 * b1 + l2 * b2 + l3 * b3 + l4 * b4 + xi * b5 + l5 * b6)
}

/// Residuals on (curve sample) x (grid point).
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ResidualField {
    pub flags: ConventionFlags,
    pub xi: XiSource,
    /// Curve indices at which residuals are evaluated.
    pub samples: Vec<usize>,
    pub s: Vec<f64>,
    pub u: Vec<f64>,
    /// `|i dPsi/ds - reduced rhs|`, row per sample.
    pub reduced: Vec<Vec<f64>>,
    /// `|i dPsi/ds - full rhs|`, row per sample.
    pub full: Vec<Vec<f64>>,
    #[serde(skip)]
    pub hamiltonian: Vec<Vec<Complex64>>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ResidualSummary {
    pub max_reduced: f64,
    pub mean_reduced: f64,
    pub max_full: f64,
    pub mean_full: f64,
    pub points: usize,
    pub flags: ConventionFlags,
}

fn max_mean(rows: &[Vec<f64>]) -> (f64, f64, usize) {
    let n: usize = rows.iter().map(Vec::len).sum();
    let max = rows.iter().flatten().copied().fold(0.0, f64::max);
    let sum: f64 = rows.iter().flatten().sum();
    (max, if n == 0 { 0.0 } else { sum / n as f64 }, n)
}

impl ResidualField {
    pub fn max_reduced(&self) -> f64 {
        max_mean(&self.reduced).0
    }

    pub fn max_full(&self) -> f64 {
        max_mean(&self.full).0
    }

    pub fn summary(&self) -> ResidualSummary {
        let (max_reduced, mean_reduced, points) = max_mean(&self.reduced);
        let (max_full, mean_full, _) = max_mean(&self.full);
        ResidualSummary {
            max_reduced,
            mean_reduced,
            max_full,
            mean_full,
            points,
            flags: self.flags,
        }
    }

    /// CSV with columns `s, u, abs_residual_eq23, abs_residual_eq21, hamiltonian_re, hamiltonian_im`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(
            w,
            "s,u,abs_residual_eq23,abs_residual_eq21,hamiltonian_re,hamiltonian_im"
        )?;
        for (r, s) in self.s.iter().enumerate() {
            for (c, u) in self.u.iter().enumerate() {
                let h = self.hamiltonian[r][c];
                writeln!(
                    w,
                    "{s:.12e},{u:.12e},{:.12e},{:.12e},{:.12e},{:.12e}",
                    self.reduced[r][c], self.full[r][c], h.re, h.im
                )?;
            }
        }
        Ok(())
    }
}

/// Stencil for `d/ds` along the curve: 6th order where it fits, otherwise
/// the widest that fits the curve.
fn curve_stencil(n: usize) -> Result<Stencil> {
    if n < 3 {
        return Err(Error::GridTooSmall { got: n, need: 3 });
    }
    Ok(Stencil::widest_within((n - 1) / 2).unwrap_or(Stencil::Second))
}

/// Residual fields of `i dPsi/ds` against both right-hand sides.
///
/// The left side is a central difference in `s` of the sampled
/// wavefunction; residuals are reported only where the stencil fits.
pub fn schrodinger_residual(
    c: &SpectralCurve,
    grid: &LogGrid,
    p: &SchrodingerParams,
) -> Result<ResidualField> {
    let n = c.len();
    let stencil = curve_stencil(n)?;
    let reach = stencil.reach();
    let h = c.step();
    if !(h > 0.0) {
        return Err(Error::InvalidArgument("curve step must be positive".into()));
    }
    let waves = c
        .states
        .par_iter()
        .map(|s| wavefunction(s, grid))
        .collect::<Result<Vec<_>>>()?;
    let samples: Vec<usize> = (reach..n - reach).collect();
    let rows = samples
        .par_iter()
        .map(|&k| {
            let (s, v) = curve_sample(c, k)?;
            let mut red = Vec::with_capacity(grid.len());
            let mut full = Vec::with_capacity(grid.len());
            let mut ham = Vec::with_capacity(grid.len());
            for (j, &u) in grid.points().iter().enumerate() {
                let d: Complex64 = stencil
                    .taps()
                    .iter()
                    .map(|&(o, w)| w * waves[(k as i64 + o as i64) as usize].values[j])
                    .sum::<Complex64>()
                    / h;
                let lhs = I * d;
                let psi = waves[k].values[j];
                red.push((lhs - reduced_rhs(s, v, u, psi, &p.flags)).norm());
                let xi = xi_value(c, k, u, p)?;
                let hd = hamiltonian_density(s, u, p, xi);
                full.push((lhs - full_rhs(hd, psi, xi, p)).norm());
                ham.push(hd);
            }
            Ok((red, full, ham))
        })
        .collect::<Result<Vec<_>>>()?;
    let mut field = ResidualField {
        flags: p.flags,
        xi: p.xi,
        s: samples.iter().map(|&k| c.params[k]).collect(),
        samples,
        u: grid.points().to_vec(),
        reduced: Vec::with_capacity(rows.len()),
        full: Vec::with_capacity(rows.len()),
        hamiltonian: Vec::with_capacity(rows.len()),
    };
    for (r, f, hm) in rows {
        field.reduced.push(r);
        field.full.push(f);
        field.hamiltonian.push(hm);
    }
    Ok(field)
}

/// Result of searching sign x prefactor with drift and flow base rate on.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Calibration {
    pub flags: ConventionFlags,
    pub residual: f64,
    /// Every candidate tried with its worst residual.
    pub candidates: Vec<(ConventionFlags, f64)>,
}

/// Chooses `sign_z2_term` and `psi_prefactor_half` minimizing the worst
/// reduced residual over `curves`.
pub fn calibrate(curves: &[SpectralCurve], grid: &LogGrid) -> Result<Calibration> {
    if curves.is_empty() {
        return Err(Error::InvalidArgument("no curves to calibrate on".into()));
    }
    let mut candidates = Vec::new();
    for sign in [1i8, -1] {
        for half in [true, false] {
            let flags = ConventionFlags {
                sign_z2_term: sign,
                psi_prefactor_half: half,
                include_potential_drift: true,
                base_rate_from_flow: true,
            };
            let p = SchrodingerParams::default().with_flags(flags);
            let mut worst = 0.0f64;
            for c in curves {
                worst = worst.max(schrodinger_residual(c, grid, &p)?.max_reduced());
            }
            candidates.push((flags, worst));
        }
    }
    let (flags, residual) = candidates
        .iter()
        .copied()
        .min_by(|a, b| a.1.total_cmp(&b.1))
        .expect("four candidates");
    Ok(Calibration {
        flags,
        residual,
        candidates,
    })
}

/// Spread of `H(state_k, u)` along a curve.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EnergyVariation {
    pub u: f64,
    pub s: Vec<f64>,
    pub re: Vec<f64>,
    pub im: Vec<f64>,
    /// Largest `|H_j - H_k|` over all sample pairs.
    pub spread: f64,
}

pub fn energy_variation(
    c: &SpectralCurve,
    u: f64,
    p: &SchrodingerParams,
) -> Result<EnergyVariation> {
    if c.is_empty() {
        return Err(Error::InvalidArgument("empty curve".into()));
    }
    let values = (0..c.len())
        .map(|k| {
            let xi = xi_value(c, k, u, p)?;
            Ok(hamiltonian_density(&c.states[k], u, p, xi))
        })
        .collect::<Result<Vec<Complex64>>>()?;
    let mut spread = 0.0f64;
    for a in &values {
        for b in &values {
            spread = spread.max((a - b).norm());
        }
    }
    Ok(EnergyVariation {
        u,
        s: c.params.clone(),
        re: values.iter().map(|v| v.re).collect(),
        im: values.iter().map(|v| v.im).collect(),
        spread,
    })
}

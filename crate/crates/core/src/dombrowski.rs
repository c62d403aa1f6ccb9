//! The almost-Hermitian triple `(g, J, omega)` that the Fisher metric induces
//! on the tangent bundle, in the natural chart `(theta, thetadot)` and the
//! mixed chart `(eta, thetadot)`.
//!
//! Both charts use the convention `omega(X, Y) = g(JX, Y)`, i.e. the matrix
//! `omega = J^T g`. The literal product `g J` is reported separately; it is
//! `-omega` for both charts.

use nalgebra::{Matrix2, Matrix4, SymmetricEigen, Vector4};
use num_complex::Complex64;
use serde::Serialize;
use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::fd::Stencil;
use crate::manifold::{self, DualPoint, NaturalPoint, THETA2_GUARD};

/// A point `(theta, thetadot)` of the tangent bundle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TangentState {
    theta: NaturalPoint,
    thetadot: [f64; 2],
}

impl TangentState {
    pub fn new(theta1: f64, theta2: f64, thetadot1: f64, thetadot2: f64) -> Result<Self> {
        let theta = NaturalPoint::new(theta1, theta2)?;
        Self::from_parts(theta, [thetadot1, thetadot2])
    }

    pub fn from_parts(theta: NaturalPoint, thetadot: [f64; 2]) -> Result<Self> {
        if !thetadot.iter().all(|v| v.is_finite()) {
            return Err(Error::Domain(format!(
                "non-finite fiber coordinates {thetadot:?}"
            )));
        }
        Ok(Self { theta, thetadot })
    }

    pub fn from_vector(x: &Vector4<f64>) -> Result<Self> {
        Self::new(x[0], x[1], x[2], x[3])
    }

    pub fn theta(&self) -> &NaturalPoint {
        &self.theta
    }

    pub fn thetadot(&self) -> [f64; 2] {
        self.thetadot
    }

    pub fn to_vector(&self) -> Vector4<f64> {
        Vector4::new(
            self.theta.theta1(),
            self.theta.theta2(),
            self.thetadot[0],
            self.thetadot[1],
        )
    }

    pub fn as_array(&self) -> [f64; 4] {
        let v = self.to_vector();
        [v[0], v[1], v[2], v[3]]
    }
}

/// Which chart a [`KahlerStructure`] is expressed in.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Chart {
    /// `(theta1, theta2, thetadot1, thetadot2)`
    Natural,
    /// `(eta1, eta2, thetadot1, thetadot2)`
    Mixed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KahlerStructure {
    pub g: Matrix4<f64>,
    pub j: Matrix4<f64>,
    pub omega: Matrix4<f64>,
    pub chart: Chart,
}

fn blocks(a: &Matrix2<f64>, b: &Matrix2<f64>, c: &Matrix2<f64>, d: &Matrix2<f64>) -> Matrix4<f64> {
    let mut m = Matrix4::zeros();
    m.fixed_view_mut::<2, 2>(0, 0).copy_from(a);
    m.fixed_view_mut::<2, 2>(0, 2).copy_from(b);
    m.fixed_view_mut::<2, 2>(2, 0).copy_from(c);
    m.fixed_view_mut::<2, 2>(2, 2).copy_from(d);
    m
}

/// Constant complex structure of the natural chart.
pub fn natural_complex_structure() -> Matrix4<f64> {
    let i2 = Matrix2::identity();
    let z = Matrix2::zeros();
    blocks(&z, &(-i2), &i2, &z)
}

/// Fundamental form of the natural chart: `[[0, h], [-h, 0]]`.
pub fn omega_natural(theta: &NaturalPoint) -> Matrix4<f64> {
    omega_natural_raw(theta.theta1(), theta.theta2())
}

fn omega_natural_raw(t1: f64, t2: f64) -> Matrix4<f64> {
    let off = t1 / (2.0 * t2 * t2);
    let h = Matrix2::new(
        -1.0 / (2.0 * t2),
        off,
        off,
        -(t1 * t1 - t2) / (2.0 * t2.powi(3)),
    );
    blocks(&Matrix2::zeros(), &h, &(-h), &Matrix2::zeros())
}

/// Canonical (Darboux) form `[[0, I], [-I, 0]]` of the mixed chart.
pub fn omega_canonical() -> Matrix4<f64> {
    let i2 = Matrix2::identity();
    blocks(&Matrix2::zeros(), &i2, &(-i2), &Matrix2::zeros())
}

pub fn kahler_natural(s: &TangentState) -> KahlerStructure {
    let h = manifold::fisher_metric(s.theta());
    let z = Matrix2::zeros();
    KahlerStructure {
        g: blocks(&h, &z, &z, &h),
        j: natural_complex_structure(),
        omega: omega_natural(s.theta()),
        chart: Chart::Natural,
    }
}

pub fn kahler_mixed(s: &TangentState) -> KahlerStructure {
    let h = manifold::fisher_metric(s.theta());
    let hinv = manifold::inverse_metric(s.theta());
    let z = Matrix2::zeros();
    KahlerStructure {
        g: blocks(&hinv, &z, &z, &h),
        j: blocks(&z, &(-h), &hinv, &z),
        omega: omega_canonical(),
        chart: Chart::Mixed,
    }
}

/// Structure in the requested chart.
pub fn kahler(s: &TangentState, chart: Chart) -> KahlerStructure {
    match chart {
        Chart::Natural => kahler_natural(s),
        Chart::Mixed => kahler_mixed(s),
    }
}

/// Residuals of the almost-Hermitian axioms for one structure.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct VerificationReport {
    pub chart: Chart,
    /// `max |J^2 + I|`
    pub complex_structure: f64,
    /// `max |J^T g J - g|`
    pub hermitian: f64,
    /// `max |omega - J^T g|`, the compatibility `omega(X, Y) = g(JX, Y)`
    pub compatibility: f64,
    /// `max |omega - g J|`; informational, not part of the verdict
    pub literal_product: f64,
    /// `max |omega + omega^T|`
    pub antisymmetry: f64,
    /// `max |g - g^T|`
    pub g_symmetry: f64,
    pub det_omega: f64,
    pub min_eigenvalue_g: f64,
    pub tolerance: f64,
    pub pass: bool,
}

impl VerificationReport {
    /// Residuals keyed by name, in a stable order.
    pub fn named(&self) -> BTreeMap<&'static str, f64> {
        BTreeMap::from([
            ("antisymmetry", self.antisymmetry),
            ("compatibility", self.compatibility),
            ("complex_structure", self.complex_structure),
            ("det_omega", self.det_omega),
            ("g_symmetry", self.g_symmetry),
            ("hermitian", self.hermitian),
            ("literal_product", self.literal_product),
            ("min_eigenvalue_g", self.min_eigenvalue_g),
        ])
    }

    /// Largest of the residuals that enter the verdict.
    pub fn max_residual(&self) -> f64 {
        self.complex_structure
            .max(self.hermitian)
            .max(self.compatibility)
            .max(self.antisymmetry)
            .max(self.g_symmetry)
    }
}

pub fn verify_structure(k: &KahlerStructure, tol: f64) -> VerificationReport {
    let id = Matrix4::<f64>::identity();
    let complex_structure = (k.j * k.j + id).amax();
    let hermitian = (k.j.transpose() * k.g * k.j - k.g).amax();
    let compatibility = (k.omega - k.j.transpose() * k.g).amax();
    let literal_product = (k.omega - k.g * k.j).amax();
    let antisymmetry = (k.omega + k.omega.transpose()).amax();
    let g_symmetry = (k.g - k.g.transpose()).amax();
    let det_omega = k.omega.determinant();
    let sym = (k.g + k.g.transpose()) * 0.5;
    let min_eigenvalue_g = SymmetricEigen::new(sym).eigenvalues.min();
    let mut report = VerificationReport {
        chart: k.chart,
        complex_structure,
        hermitian,
        compatibility,
        literal_product,
        antisymmetry,
        g_symmetry,
        det_omega,
        min_eigenvalue_g,
        tolerance: tol,
        pass: false,
    };
    report.pass = report.max_residual() <= tol && det_omega != 0.0 && min_eigenvalue_g > 0.0;
    report
}

/// `det omega` in the natural chart, `det(h)^2 = 1 / (16 theta2^6)`.
pub fn det_omega_natural(theta: &NaturalPoint) -> f64 {
    1.0 / (16.0 * theta.theta2().powi(6))
}

/// The value `1 / (4 theta2^6)` quoted for `det omega` in the source
/// derivation. It differs from [`det_omega_natural`] by a factor of 4.
pub fn det_omega_quoted(theta: &NaturalPoint) -> f64 {
    1.0 / (4.0 * theta.theta2().powi(6))
}

/// Chart coordinates of `s`: `(theta, thetadot)` or `(eta, thetadot)`.
pub fn chart_coordinates(s: &TangentState, chart: Chart) -> [f64; 4] {
    match chart {
        Chart::Natural => s.as_array(),
        Chart::Mixed => {
            let eta = manifold::dual_coordinates(s.theta());
            [eta.eta1(), eta.eta2(), s.thetadot()[0], s.thetadot()[1]]
        }
    }
}

/// `omega` as a field over chart coordinates.
fn omega_field(chart: Chart, x: &[f64; 4]) -> Result<Matrix4<f64>> {
    match chart {
        Chart::Natural => {
            if x[1] >= THETA2_GUARD {
                return Err(Error::Stencil(format!("theta2 = {}", x[1])));
            }
            Ok(omega_natural_raw(x[0], x[1]))
        }
        Chart::Mixed => {
            DualPoint::new(x[0], x[1]).map_err(|e| Error::Stencil(e.to_string()))?;
            Ok(omega_canonical())
        }
    }
}

fn stencil_fits(chart: Chart, x: &[f64; 4], h: f64, reach: usize) -> bool {
    let r = reach as f64 * h;
    match chart {
        Chart::Natural => x[1] + r < THETA2_GUARD,
        Chart::Mixed => {
            // worst case of eta2 - eta1^2 over the box
            let e1 = x[0].abs() + r;
            x[1] - r - e1 * e1 > 0.0
        }
    }
}

const CLOSEDNESS_STENCIL: Stencil = Stencil::Sixth;

/// `max_{i<j<k} |d_k w_ij + d_i w_jk + d_j w_ki|` by central differences.
///
/// If the stencil would leave the manifold the step is shrunk once so that
/// it fits; if it still does not fit, [`Error::Stencil`] is returned.
pub fn closedness_residual(s: &TangentState, step: f64, chart: Chart) -> Result<f64> {
    if !(step > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "step {step} must be positive"
        )));
    }
    let x = chart_coordinates(s, chart);
    let reach = CLOSEDNESS_STENCIL.reach();
    let mut h = step;
    if !stencil_fits(chart, &x, h, reach) {
        h = match chart {
            Chart::Natural => x[1].abs() / (2.0 * reach as f64),
            Chart::Mixed => (x[1] - x[0] * x[0]) / (8.0 * reach as f64 * (1.0 + x[0].abs())),
        };
        if !stencil_fits(chart, &x, h, reach) {
            return Err(Error::Stencil(format!(
                "cannot fit a {reach}-step stencil at {x:?}"
            )));
        }
    }
    // d omega / d x_c for each coordinate c
    let mut partials = [Matrix4::<f64>::zeros(); 4];
    for (c, slot) in partials.iter_mut().enumerate() {
        let mut acc = Matrix4::zeros();
        for &(k, w) in CLOSEDNESS_STENCIL.taps() {
            let mut y = x;
            y[c] += k as f64 * h;
            acc += omega_field(chart, &y)? * w;
        }
        *slot = acc / h;
    }
    let mut worst = 0.0f64;
    for i in 0..4 {
        for j in (i + 1)..4 {
            for k in (j + 1)..4 {
                let cyc = partials[k][(i, j)] + partials[i][(j, k)] + partials[j][(k, i)];
                worst = worst.max(cyc.abs());
            }
        }
    }
    Ok(worst)
}

/// Jacobian of `(eta, thetadot) -> (theta, thetadot)`: `blockdiag(h^-1, I)`.
pub fn mixed_to_natural_jacobian(theta: &NaturalPoint) -> Matrix4<f64> {
    let hinv = manifold::inverse_metric(theta);
    blocks(
        &hinv,
        &Matrix2::zeros(),
        &Matrix2::zeros(),
        &Matrix2::identity(),
    )
}

/// Same Jacobian from finite differences of the map `eta -> theta`.
pub fn mixed_to_natural_jacobian_fd(theta: &NaturalPoint, step: f64) -> Result<Matrix4<f64>> {
    let eta = manifold::dual_coordinates(theta);
    // keep the stencil inside eta2 > eta1^2
    let var = eta.eta2() - eta.eta1() * eta.eta1();
    let h = step.min(var / (8.0 * (1.0 + eta.eta1().abs())));
    let mut out = Matrix4::identity();
    for c in 0..2 {
        let d = Stencil::Fourth.try_derivative(
            |t| -> Result<f64> {
                let mut e = eta.as_array();
                e[c] += t;
                let th = DualPoint::new(e[0], e[1])?.to_natural()?;
                Ok(th.theta1())
            },
            h,
        )?;
        let d2 = Stencil::Fourth.try_derivative(
            |t| -> Result<f64> {
                let mut e = eta.as_array();
                e[c] += t;
                let th = DualPoint::new(e[0], e[1])?.to_natural()?;
                Ok(th.theta2())
            },
            h,
        )?;
        out[(0, c)] = d;
        out[(1, c)] = d2;
    }
    Ok(out)
}

/// How the fiber coordinate enters the Siegel–Jacobi image.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize)]
pub enum SiegelConvention {
    /// `(z1, z2) -> (-i z2, i z1)`
    #[default]
    Rotated,
    /// `(z1, z2) -> (-i z2, z1)`
    Plain,
}

/// Complex coordinates of a tangent state and its Siegel–Jacobi image.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ComplexCoordinates {
    pub z1: Complex64,
    pub z2: Complex64,
    /// Upper half-plane component.
    pub w1: Complex64,
    pub w2: Complex64,
}

pub fn to_siegel_jacobi(s: &TangentState, convention: SiegelConvention) -> ComplexCoordinates {
    let [t1, t2, d1, d2] = s.as_array();
    let z1 = Complex64::new(t1, d1);
    let z2 = Complex64::new(t2, d2);
    let i = Complex64::i();
    let w2 = match convention {
        SiegelConvention::Rotated => i * z1,
        SiegelConvention::Plain => z1,
    };
    ComplexCoordinates {
        z1,
        z2,
        w1: -i * z2,
        w2,
    }
}

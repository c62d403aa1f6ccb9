//! Kähler functions on the tangent bundle and holomorphic isometry checks.
//!
//! Functions are evaluated over the natural chart `x = (theta1, theta2,
//! thetadot1, thetadot2)`. Because the exponential connection is flat in
//! natural coordinates, the Kähler condition reduces to the Christoffel-free
//! second-order system evaluated by [`kahler_pde_residual`].

use nalgebra::{Matrix4, Vector4};
use serde::Serialize;
use std::fmt;
use std::sync::Arc;

use crate::dombrowski::{kahler_natural, natural_complex_structure, TangentState};
use crate::error::{Error, Result};
use crate::fd::{self, Stencil};
use crate::manifold::THETA2_GUARD;

/// Member of the six-parameter quadratic family of Kähler functions.
///
/// `alpha9` multiplies a `theta2^2 / 2` term with no `thetadot2^2` partner;
/// [`family_member`] always sets it to zero.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct KahlerCandidate {
    pub alpha: [f64; 6],
    pub alpha9: f64,
}

pub fn family_member(alpha: [f64; 6]) -> KahlerCandidate {
    KahlerCandidate { alpha, alpha9: 0.0 }
}

impl KahlerCandidate {
    /// Family member with the stray `alpha9` term switched on.
    pub fn with_alpha9(alpha: [f64; 6], alpha9: f64) -> Self {
        Self { alpha, alpha9 }
    }

    pub fn eval(&self, x: &[f64; 4]) -> f64 {
        let [a1, a2, a3, a4, a5, a6] = self.alpha;
        let [t1, t2, d1, d2] = *x;
        0.5 * a1 * t1 * t1
            + (a2 * t2 - a4 * d2 + a5) * t1
            + 0.5 * self.alpha9 * t2 * t2
            + (d1 * a4 + a6) * t2
            + 0.5 * a1 * d1 * d1
            + (a3 + a2 * d2) * d1
    }
}

const PAIRS: [(usize, usize); 4] = [(0, 0), (0, 1), (1, 0), (1, 1)];

fn check_stencil(x: &[f64; 4], step: f64) -> Result<()> {
    if !(step > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "step {step} must be positive"
        )));
    }
    if x[1] + step >= THETA2_GUARD {
        return Err(Error::Stencil(format!(
            "theta2 = {} with step {step}",
            x[1]
        )));
    }
    Ok(())
}

/// Left-hand sides of the flat Kähler system, in order:
///
/// 1-4. `f_{theta_i theta_j} - f_{thetadot_i thetadot_j}` for `(i, j)` in
///      `(1,1), (1,2), (2,1), (2,2)`;
/// 5-8. `f_{theta_i thetadot_j} + f_{theta_j thetadot_i}` for the same pairs.
pub fn kahler_pde_residual<F>(f: &F, s: &TangentState, step: f64) -> Result<[f64; 8]>
where
    F: Fn(&[f64; 4]) -> f64 + ?Sized,
{
    let x = s.as_array();
    check_stencil(&x, step)?;
    let d = |a: usize, b: usize| fd::second_partial(f, &x, a, b, step);
    let mut out = [0.0; 8];
    for (n, &(i, j)) in PAIRS.iter().enumerate() {
        out[n] = d(i, j) - d(i + 2, j + 2);
        out[n + 4] = d(i, j + 2) + d(j, i + 2);
    }
    Ok(out)
}

/// Same system with the mixed lines in antisymmetric form,
/// `f_{theta_i thetadot_j} - f_{theta_j thetadot_i}`. The diagonal pairs are
/// identically zero for any smooth `f`.
pub fn kahler_pde_residual_antisymmetric<F>(f: &F, s: &TangentState, step: f64) -> Result<[f64; 8]>
where
    F: Fn(&[f64; 4]) -> f64 + ?Sized,
{
    let x = s.as_array();
    check_stencil(&x, step)?;
    let d = |a: usize, b: usize| fd::second_partial(f, &x, a, b, step);
    let mut out = [0.0; 8];
    for (n, &(i, j)) in PAIRS.iter().enumerate() {
        out[n] = d(i, j) - d(i + 2, j + 2);
        out[n + 4] = d(i, j + 2) - d(j, i + 2);
    }
    Ok(out)
}

type MapFn = dyn Fn(&[f64; 4]) -> [f64; 4] + Send + Sync;
type JacFn = dyn Fn(&[f64; 4]) -> Matrix4<f64> + Send + Sync;

/// A self-map of the tangent bundle given by its four components.
#[derive(Clone)]
pub struct BundleMap {
    name: String,
    map: Arc<MapFn>,
    jacobian: Option<Arc<JacFn>>,
}

impl fmt::Debug for BundleMap {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("BundleMap")
            .field("name", &self.name)
            .field("analytic_jacobian", &self.jacobian.is_some())
            .finish()
    }
}

/// Default step for finite-difference Jacobians of bundle maps.
pub const JACOBIAN_STEP: f64 = 1e-5;

impl BundleMap {
    pub fn new<F>(name: impl Into<String>, map: F) -> Self
    where
        F: Fn(&[f64; 4]) -> [f64; 4] + Send + Sync + 'static,
    {
        Self {
            name: name.into(),
            map: Arc::new(map),
            jacobian: None,
        }
    }

    /// Attach an analytic Jacobian, used instead of finite differences.
    pub fn with_jacobian<J>(mut self, jac: J) -> Self
    where
        J: Fn(&[f64; 4]) -> Matrix4<f64> + Send + Sync + 'static,
    {
        self.jacobian = Some(Arc::new(jac));
        self
    }

    pub fn identity() -> Self {
        Self::new("identity", |x| *x).with_jacobian(|_| Matrix4::identity())
    }

    /// `(theta + k12, thetadot + k34)`.
    pub fn translation(k: [f64; 4]) -> Self {
        Self::new(format!("translation{k:?}"), move |x| {
            [x[0] + k[0], x[1] + k[1], x[2] + k[2], x[3] + k[3]]
        })
        .with_jacobian(|_| Matrix4::identity())
    }

    /// `(thetadot1, theta2, theta1, thetadot2)`.
    pub fn swap() -> Self {
        Self::new("swap", |x| [x[2], x[1], x[0], x[3]])
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn apply(&self, x: &[f64; 4]) -> [f64; 4] {
        (self.map)(x)
    }

    /// `D[r][c] = d phi^r / d x_c`, analytic if available.
    pub fn jacobian(&self, x: &[f64; 4], step: f64) -> Matrix4<f64> {
        if let Some(j) = &self.jacobian {
            return j(x);
        }
        let j = fd::jacobian(|y: &[f64; 4]| (self.map)(y), *x, step, Stencil::Fourth);
        Matrix4::from_fn(|r, c| j[r][c])
    }
}

/// Largest modulus of the Wirtinger derivatives
/// `d/dzbar_k (phi^1 + i phi^3)` and `d/dzbar_k (phi^2 + i phi^4)`, with
/// `d/dzbar_k = (d/dtheta_k + i d/dthetadot_k) / 2`.
pub fn holomorphy_residual(m: &BundleMap, s: &TangentState, step: f64) -> Result<f64> {
    let x = s.as_array();
    check_stencil(&x, step)?;
    let d = m.jacobian(&x, step);
    let mut worst = 0.0f64;
    for (a, b) in [(0usize, 2usize), (1, 3)] {
        for k in 0..2 {
            let re = d[(a, k)] - d[(b, k + 2)];
            let im = d[(b, k)] + d[(a, k + 2)];
            worst = worst.max(0.5 * re.hypot(im));
        }
    }
    Ok(worst)
}

/// `max(|D^T g(phi(s)) D - g(s)|, |D J - J D|)` with `g` the natural-chart metric.
pub fn isometry_residual(m: &BundleMap, s: &TangentState, step: f64) -> Result<f64> {
    let x = s.as_array();
    check_stencil(&x, step)?;
    let image = m.apply(&x);
    let target = TangentState::new(image[0], image[1], image[2], image[3])
        .map_err(|e| Error::ImageDomain(format!("{} maps {x:?} to {image:?}: {e}", m.name())))?;
    let d = m.jacobian(&x, step);
    let g_src = kahler_natural(s).g;
    let g_dst = kahler_natural(&target).g;
    let j = natural_complex_structure();
    let metric = (d.transpose() * g_dst * d - g_src).amax();
    let complex = (d * j - j * d).amax();
    Ok(metric.max(complex))
}

/// Outcome for one translation vector.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TranslationOutcome {
    pub k: [f64; 4],
    pub holomorphy: f64,
    /// `None` when no state had a valid image.
    pub isometry: Option<f64>,
    pub states_checked: usize,
    pub states_skipped: usize,
    pub holomorphic: bool,
    pub isometric: bool,
    pub note: Option<String>,
}

impl TranslationOutcome {
    pub fn pass(&self) -> bool {
        self.holomorphic && self.isometric
    }

    /// True when only the fiber coordinates move.
    pub fn is_fiber_translation(&self) -> bool {
        self.k[0] == 0.0 && self.k[1] == 0.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct TranslationReport {
    pub tolerance: f64,
    pub outcomes: Vec<TranslationOutcome>,
}

impl TranslationReport {
    pub fn all_pass(&self) -> bool {
        self.outcomes.iter().all(TranslationOutcome::pass)
    }

    pub fn max_holomorphy(&self) -> f64 {
        self.outcomes
            .iter()
            .map(|o| o.holomorphy)
            .fold(0.0, f64::max)
    }

    /// Largest isometry residual over maps matching `pred`.
    pub fn max_isometry_where(&self, pred: impl Fn(&TranslationOutcome) -> bool) -> f64 {
        self.outcomes
            .iter()
            .filter(|o| pred(o))
            .filter_map(|o| o.isometry)
            .fold(0.0, f64::max)
    }
}

pub const TRANSLATION_TOL: f64 = 1e-8;

/// Checks every translation in `ks` for holomorphy and isometry over `states`.
/// States whose image leaves the manifold are skipped and counted.
pub fn reproduce_translation_claim(
    states: &[TangentState],
    ks: &[[f64; 4]],
    step: f64,
    tol: f64,
) -> Result<TranslationReport> {
    if states.is_empty() || ks.is_empty() {
        return Err(Error::InvalidArgument(
            "empty state or translation grid".into(),
        ));
    }
    let mut outcomes = Vec::with_capacity(ks.len());
    for &k in ks {
        let map = BundleMap::translation(k);
        let mut holo = 0.0f64;
        let mut iso: Option<f64> = None;
        let mut skipped = 0;
        for s in states {
            holo = holo.max(holomorphy_residual(&map, s, step)?);
            match isometry_residual(&map, s, step) {
                Ok(r) => iso = Some(iso.map_or(r, |m| m.max(r))),
                Err(Error::ImageDomain(_)) => skipped += 1,
                Err(e) => return Err(e),
            }
        }
        let holomorphic = holo <= tol;
        let isometric = iso.is_some_and(|r| r <= tol);
        let note = match iso {
            None => Some("no state in the grid has an image inside the manifold".to_string()),
            Some(r) if !isometric => Some(format!(
                "translation by {k:?} moves the base point; the metric depends on theta, so the pullback differs by {r:.3e}"
            )),
            _ => None,
        };
        outcomes.push(TranslationOutcome {
            k,
            holomorphy: holo,
            isometry: iso,
            states_checked: states.len() - skipped,
            states_skipped: skipped,
            holomorphic,
            isometric,
            note,
        });
    }
    Ok(TranslationReport {
        tolerance: tol,
        outcomes,
    })
}

/// Analytic `f(x)` as a 4-vector helper for callers holding a [`Vector4`].
pub fn eval_at<F: Fn(&[f64; 4]) -> f64 + ?Sized>(f: &F, x: &Vector4<f64>) -> f64 {
    f(&[x[0], x[1], x[2], x[3]])
}

//! Verification suites and their machine-readable verdicts.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use nalgebra::Matrix2;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::dombrowski::{self, Chart, TangentState};
use crate::error::{Error, Result};
use crate::jacobi::{self, Generator, JacobiElement};
use crate::kahler_functions::{self as kf, family_member, KahlerCandidate};
use crate::manifold;
use crate::quadrature::QuadratureSpec;
use crate::schrodinger::{self as sch, ConventionFlags, LogGrid, SchrodingerParams};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize)]
#[serde(rename_all = "SCREAMING_SNAKE_CASE")]
pub enum Status {
    Pass,
    Fail,
    /// Measured but not asserted; never affects the exit code.
    Reported,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Verdict {
    pub claim: String,
    pub status: Status,
    pub residual: f64,
    pub tolerance: f64,
    /// What the claim asserts, in one line.
    pub subject: String,
    pub notes: String,
}

impl Verdict {
    /// PASS iff `residual <= tolerance` (and finite).
    pub fn check(claim: &str, subject: &str, residual: f64, tolerance: f64) -> Self {
        let status = if residual.is_finite() && residual <= tolerance {
            Status::Pass
        } else {
            Status::Fail
        };
        Self {
            claim: claim.into(),
            status,
            residual: finite_or_max(residual),
            tolerance,
            subject: subject.into(),
            notes: String::new(),
        }
    }

    /// A claim that `value` lies in `[lo, hi]`; the residual is the distance
    /// outside the interval and the tolerance is zero.
    pub fn within(claim: &str, subject: &str, value: f64, lo: f64, hi: f64) -> Self {
        let violation = if value.is_nan() {
            f64::INFINITY
        } else {
            (lo - value).max(value - hi).max(0.0)
        };
        Self::check(claim, subject, violation, 0.0)
            .with_notes(format!("measured {value:.6e}, required [{lo}, {hi}]"))
    }

    /// A claim that `value > bound`.
    pub fn exceeds(claim: &str, subject: &str, value: f64, bound: f64) -> Self {
        let mut v = Self::check(claim, subject, (bound - value).max(0.0), 0.0);
        if !(value > bound) {
            v.status = Status::Fail;
        }
        v.with_notes(format!("measured {value:.6e}, required > {bound}"))
    }

    pub fn reported(claim: &str, subject: &str, residual: f64, tolerance: f64) -> Self {
        Self {
            status: Status::Reported,
            ..Self::check(claim, subject, residual, tolerance)
        }
    }

    pub fn failed(claim: &str, subject: &str, notes: impl Into<String>) -> Self {
        Self {
            claim: claim.into(),
            status: Status::Fail,
            residual: f64::MAX,
            tolerance: 0.0,
            subject: subject.into(),
            notes: notes.into(),
        }
    }

    pub fn with_notes(mut self, notes: impl Into<String>) -> Self {
        let notes = notes.into();
        if self.notes.is_empty() {
            self.notes = notes;
        } else if !notes.is_empty() {
            self.notes = format!("{}; {notes}", self.notes);
        }
        self
    }
}

/// JSON has no infinities; clamp so documents stay parseable.
fn finite_or_max(x: f64) -> f64 {
    if x.is_finite() {
        x
    } else {
        f64::MAX
    }
}

/// Claim ids that `report-all` must always contain.
pub const REQUIRED_CLAIMS: [&str; 21] = [
    "energy.variation",
    "eq22.deriv",
    "eq22.mult",
    "family.pde",
    "flow.conservation",
    "flow.symplectic",
    "lem1",
    "pro2.domega",
    "pro2.mixed",
    "pro2.natural",
    "pro4.xi",
    "pro40.F",
    "pro40.G",
    "pro40.H",
    "pro40.P",
    "pro40.Q",
    "pro40.R",
    "pro400.holomorphy",
    "pro400.isometry",
    "th1.residual",
    "th2.hamiltonian",
];

/// Named verification suites.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    Metric,
    KahlerCheck,
    PdeCheck,
    IsometryCheck,
    Fields,
    Flow,
    Schrodinger,
    ReportAll,
}

impl Suite {
    pub const ALL: [Suite; 8] = [
        Suite::Metric,
        Suite::KahlerCheck,
        Suite::PdeCheck,
        Suite::IsometryCheck,
        Suite::Fields,
        Suite::Flow,
        Suite::Schrodinger,
        Suite::ReportAll,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Metric => "metric",
            Suite::KahlerCheck => "kahler-check",
            Suite::PdeCheck => "pde-check",
            Suite::IsometryCheck => "isometry-check",
            Suite::Fields => "fields",
            Suite::Flow => "flow",
            Suite::Schrodinger => "schrodinger",
            Suite::ReportAll => "report-all",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::InvalidArgument(format!("unknown suite {s:?}")))
    }
}

/// Every knob the suites read. Serialized verbatim as the config echo.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Settings {
    pub seed: u64,
    pub random_states: usize,
    pub family_alphas: usize,
    pub family_states: usize,
    pub quadrature_order: usize,
    pub fd_step: f64,
    pub closedness_step: f64,
    pub pde_step: f64,
    pub flow_length: f64,
    pub flow_step: f64,
    pub order_step: f64,
    pub symplectic_fd_step: f64,
    pub grid_lo: f64,
    pub grid_hi: f64,
    pub grid_n: usize,
    pub energy_length: f64,
    pub energy_u: f64,
    /// Per-claim overrides of the default tolerances.
    pub tolerances: BTreeMap<String, f64>,
}

impl Default for Settings {
    fn default() -> Self {
        Self {
            seed: 42,
            random_states: 100,
            family_alphas: 20,
            family_states: 50,
            quadrature_order: QuadratureSpec::DEFAULT_ORDER,
            fd_step: 1e-4,
            closedness_step: 1e-4,
            pde_step: 1e-3,
            flow_length: 0.1,
            flow_step: 1e-3,
            order_step: 1e-2,
            symplectic_fd_step: 1e-4,
            grid_lo: LogGrid::DEFAULT_LO,
            grid_hi: LogGrid::DEFAULT_HI,
            grid_n: LogGrid::DEFAULT_N,
            energy_length: 0.3,
            energy_u: 1.0,
            tolerances: BTreeMap::new(),
        }
    }
}

impl Settings {
    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("fd_step", self.fd_step),
            ("closedness_step", self.closedness_step),
            ("pde_step", self.pde_step),
            ("flow_length", self.flow_length),
            ("flow_step", self.flow_step),
            ("order_step", self.order_step),
            ("symplectic_fd_step", self.symplectic_fd_step),
            ("energy_length", self.energy_length),
        ];
        for (name, v) in positive {
            if !(v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        for (claim, v) in &self.tolerances {
            if !(*v > 0.0 && v.is_finite()) {
                return Err(Error::InvalidArgument(format!(
                    "tolerance for {claim} must be positive, got {v}"
                )));
            }
        }
        if self.random_states == 0 || self.family_alphas == 0 || self.family_states == 0 {
            return Err(Error::InvalidArgument(
                "sample counts must be positive".into(),
            ));
        }
        QuadratureSpec::new(self.quadrature_order)?;
        self.grid()?;
        Ok(())
    }

    pub fn tol(&self, claim: &str, default: f64) -> f64 {
        self.tolerances.get(claim).copied().unwrap_or(default)
    }

    pub fn grid(&self) -> Result<LogGrid> {
        LogGrid::new(self.grid_lo, self.grid_hi, self.grid_n)
    }

    fn quadrature(&self) -> Result<QuadratureSpec> {
        QuadratureSpec::new(self.quadrature_order)
    }

    /// Deterministic stream for the check named `salt`.
    fn rng(&self, salt: &str) -> ChaCha8Rng {
        let mut seed = [0u8; 32];
        seed[..8].copy_from_slice(&self.seed.to_le_bytes());
        for (i, b) in salt.bytes().enumerate() {
            seed[8 + i % 24] ^= b;
        }
        ChaCha8Rng::from_seed(seed)
    }
}

/// Tangent states with `theta1, thetadot in [-2, 2]` and `theta2 in [-3, -0.25]`.
pub fn random_states(rng: &mut impl Rng, n: usize) -> Vec<TangentState> {
    (0..n)
        .map(|_| {
            TangentState::new(
                rng.gen_range(-2.0..=2.0),
                rng.gen_range(-3.0..=-0.25),
                rng.gen_range(-2.0..=2.0),
                rng.gen_range(-2.0..=2.0),
            )
            .expect("sampled inside the domain")
        })
        .collect()
}

fn st(a: f64, b: f64, c: f64, d: f64) -> TangentState {
    TangentState::new(a, b, c, d).expect("fixed reference state")
}

fn max_entry(m: &Matrix2<f64>) -> f64 {
    m.amax()
}

type CheckFn = fn(&Settings) -> Result<Vec<Verdict>>;

struct Check {
    claims: &'static [&'static str],
    subject: &'static str,
    run: CheckFn,
}

fn check_fisher(cfg: &Settings) -> Result<Vec<Verdict>> {
    let q = cfg.quadrature()?;
    let mut hess_route = 0.0f64;
    let mut score_route = 0.0f64;
    let mut inverse = 0.0f64;
    let mut christoffel = 0.0f64;
    for p in manifold::validation_grid() {
        let h = manifold::fisher_metric(&p);
        hess_route = hess_route.max(max_entry(&(manifold::fisher_metric_oracle(&p, q)? - h)));
        score_route = score_route.max(max_entry(&(manifold::score_covariance(&p, q)? - h)));
        inverse = inverse.max(max_entry(
            &(h * manifold::inverse_metric(&p) - Matrix2::identity()),
        ));
        for a in manifold::christoffel_e(&p, q)?.iter().flatten().flatten() {
            christoffel = christoffel.max(a.abs());
        }
    }
    Ok(vec![
        Verdict::check(
            "fisher.oracle",
            "closed-form Fisher metric equals minus the expected Hessian",
            hess_route,
            cfg.tol("fisher.oracle", 1e-8),
        )
        .with_notes(format!(
            "score-covariance route deviates by {score_route:.3e}"
        )),
        Verdict::check(
            "fisher.inverse",
            "closed-form inverse metric times the metric is the identity",
            inverse,
            cfg.tol("fisher.inverse", 1e-12),
        ),
        Verdict::check(
            "lem1",
            "exponential-connection Christoffel symbols vanish in natural coordinates",
            christoffel,
            cfg.tol("lem1", 1e-8),
        ),
    ])
}

fn check_dual(cfg: &Settings) -> Result<Vec<Verdict>> {
    let mut grad = 0.0f64;
    let mut jac = 0.0f64;
    for p in manifold::validation_grid() {
        let eta = manifold::dual_coordinates(&p).as_array();
        let g = manifold::potential_gradient_fd(&p, cfg.fd_step)?;
        grad = grad.max((g[0] - eta[0]).abs()).max((g[1] - eta[1]).abs());
        jac = jac.max(max_entry(
            &(manifold::dual_jacobian_fd(&p, cfg.fd_step)? - manifold::fisher_metric(&p)),
        ));
    }
    Ok(vec![Verdict::check(
        "dual.gradient",
        "dual coordinates are the potential's gradient and their Jacobian is the metric",
        grad.max(jac),
        cfg.tol("dual.gradient", 1e-6),
    )
    .with_notes(format!(
        "gradient {grad:.3e}, Jacobian {jac:.3e}"
    ))])
}

fn check_kahler(cfg: &Settings) -> Result<Vec<Verdict>> {
    let states = random_states(&mut cfg.rng("kahler"), cfg.random_states);
    let mut out = Vec::new();
    for (claim, chart) in [
        ("pro2.natural", Chart::Natural),
        ("pro2.mixed", Chart::Mixed),
    ] {
        let tol = cfg.tol(claim, 1e-10);
        let mut worst = BTreeMap::<&str, f64>::new();
        for s in &states {
            let rep = dombrowski::verify_structure(&dombrowski::kahler(s, chart), tol);
            for (k, v) in rep.named() {
                let e = worst.entry(k).or_insert(0.0);
                *e = e.max(v);
            }
        }
        let asserted = [
            "complex_structure",
            "hermitian",
            "compatibility",
            "antisymmetry",
            "g_symmetry",
        ];
        let residual = asserted
            .iter()
            .map(|k| worst.get(k).copied().unwrap_or(f64::MAX))
            .fold(0.0, f64::max);
        let literal = worst.get("literal_product").copied().unwrap_or(0.0);
        out.push(
            Verdict::check(claim, "(g, J, omega) is almost Hermitian with omega(X, Y) = g(JX, Y)", residual, tol)
                .with_notes(format!(
                    "|J^2+I| {:.2e}, |J^T g J - g| {:.2e}, |omega - J^T g| {:.2e}, |omega + omega^T| {:.2e}; \
                     literal product |omega - g J| = {literal:.3e} (equals 2|omega|, sign convention)",
                    worst["complex_structure"], worst["hermitian"], worst["compatibility"], worst["antisymmetry"]
                )),
        );
    }
    let mut closed = 0.0f64;
    for s in &states {
        for chart in [Chart::Natural, Chart::Mixed] {
            closed = closed.max(dombrowski::closedness_residual(
                s,
                cfg.closedness_step,
                chart,
            )?);
        }
    }
    out.push(Verdict::check(
        "pro2.domega",
        "the fundamental 2-form is closed",
        closed,
        cfg.tol("pro2.domega", 1e-6),
    ));
    let mut quoted = 0.0f64;
    let mut exact = 0.0f64;
    for s in &states {
        let det = dombrowski::kahler_natural(s).omega.determinant();
        let h_det = manifold::fisher_metric(s.theta()).determinant();
        quoted = quoted.max((det / dombrowski::det_omega_quoted(s.theta()) - 1.0).abs());
        exact = exact.max((det / (h_det * h_det) - 1.0).abs());
    }
    out.push(
        Verdict::reported(
            "pro2.det_omega",
            "determinant of omega in natural coordinates against the quoted 1/(4 theta2^6)",
            quoted,
            cfg.tol("pro2.det_omega", 1e-10),
        )
        .with_notes(format!(
            "det omega = det(h)^2 = 1/(16 theta2^6) to relative {exact:.2e}; the quoted value is 4x too large"
        )),
    );
    Ok(out)
}

fn check_family(cfg: &Settings) -> Result<Vec<Verdict>> {
    let mut rng = cfg.rng("family");
    let states = random_states(&mut rng, cfg.family_states);
    let alphas: Vec<[f64; 6]> = (0..cfg.family_alphas)
        .map(|_| std::array::from_fn(|_| rng.gen_range(-2.0..=2.0)))
        .collect();
    let mut worst = 0.0f64;
    for a in &alphas {
        let f = family_member(*a);
        for s in &states {
            let r = kf::kahler_pde_residual(&|x: &[f64; 4]| f.eval(x), s, cfg.pde_step)?;
            worst = r.iter().fold(worst, |m, v| m.max(v.abs()));
        }
    }
    let anomalous = KahlerCandidate::with_alpha9([0.0; 6], 1.0);
    let r = kf::kahler_pde_residual(&|x: &[f64; 4]| anomalous.eval(x), &states[0], cfg.pde_step)?;
    Ok(vec![Verdict::check(
        "family.pde",
        "every member of the six-parameter family solves the Kähler system",
        worst,
        cfg.tol("family.pde", 1e-7),
    )
    .with_notes(format!(
        "{} members x {} states; a theta2^2/2 term leaves line-4 residual {:.9}",
        alphas.len(),
        states.len(),
        r[3]
    ))])
}

fn check_isometry(cfg: &Settings) -> Result<Vec<Verdict>> {
    let states = random_states(&mut cfg.rng("isometry"), 20);
    let ks = [
        [0.0, 0.0, 0.0, 0.0],
        [0.0, 0.0, 1.5, -2.0],
        [0.0, 0.0, -0.3, 0.7],
        [1.0, 0.0, 0.0, 0.0],
        [0.0, -0.5, 0.0, 0.0],
        [1.0, 1.0, 0.0, 0.0],
    ];
    let tol = cfg.tol("pro400.holomorphy", 1e-10);
    let rep = kf::reproduce_translation_claim(&states, &ks, kf::JACOBIAN_STEP, tol)?;
    let fiber = rep.max_isometry_where(|o| o.is_fiber_translation());
    let base = rep.max_isometry_where(|o| !o.is_fiber_translation());
    let skipped: usize = rep.outcomes.iter().map(|o| o.states_skipped).sum();
    Ok(vec![
        Verdict::check(
            "pro400.holomorphy",
            "translations of the tangent bundle are holomorphic",
            rep.max_holomorphy(),
            tol,
        ),
        Verdict::check(
            "pro400.fiber_translations",
            "identity and fiber translations are holomorphic isometries",
            fiber,
            cfg.tol("pro400.fiber_translations", 1e-10),
        ),
        Verdict::reported(
            "pro400.isometry",
            "translations are isometries of the lifted metric",
            base,
            cfg.tol("pro400.isometry", 1e-10),
        )
        .with_notes(format!(
            "base-point translations change theta, and the metric depends on theta, so the pullback differs; \
             fiber translations residual {fiber:.2e}; {skipped} state/map pairs skipped because the image left the manifold"
        )),
    ])
}

fn check_fields(cfg: &Settings) -> Result<Vec<Verdict>> {
    let states = random_states(&mut cfg.rng("fields"), cfg.random_states);
    Ok(Generator::ALL
        .into_iter()
        .map(|g| {
            let claim = format!("pro40.{g}");
            let l = JacobiElement::basis(g);
            let obs = jacobi::psi(l);
            let worst = states
                .iter()
                .map(|s| {
                    let a = jacobi::hamiltonian_field(&obs, s);
                    let b = jacobi::closed_form_field(&l, s);
                    (0..4).map(|k| (a[k] - b[k]).abs()).fold(0.0, f64::max)
                })
                .fold(0.0, f64::max);
            Verdict::check(
                &claim,
                &format!("symplectic gradient of psi({g}) equals its tabulated field"),
                worst,
                cfg.tol(&claim, 1e-10),
            )
        })
        .collect())
}

fn check_flow(cfg: &Settings) -> Result<Vec<Verdict>> {
    let (len, h) = (cfg.flow_length, cfg.flow_step);
    let p_start = st(1.0, -1.0, 0.0, 0.0);
    let g_start = st(1.0, -1.0, 0.0, 1.0);
    let drift_p = jacobi::conservation_report(&jacobi::integrate_flow(
        Generator::P.into(),
        p_start,
        len,
        h,
    )?)?;
    let drift_g = jacobi::conservation_report(&jacobi::integrate_flow(
        Generator::G.into(),
        g_start,
        len,
        h,
    )?)?;
    let (ratio, coarse, fine) =
        jacobi::rk4_order_ratio(Generator::G.into(), g_start, len, cfg.order_step)?;
    let mut symp = 0.0f64;
    for g in [
        Generator::F,
        Generator::Q,
        Generator::P,
        Generator::G,
        Generator::H,
    ] {
        let c = jacobi::integrate_flow(g.into(), p_start, len, h)?;
        symp = symp.max(jacobi::symplecticity_residual(&c, cfg.symplectic_fd_step)?);
    }
    let q_end = jacobi::integrate_flow(Generator::Q.into(), p_start, 1.0, h)?;
    let h_end = jacobi::integrate_flow(Generator::H.into(), p_start, 0.5, h)?;
    let dist = |c: &jacobi::SpectralCurve, want: [f64; 4]| {
        let x = c.last().expect("nonempty").as_array();
        (0..4).map(|k| (x[k] - want[k]).abs()).fold(0.0, f64::max)
    };
    let endpoints = dist(&q_end, [1.0, -1.0, 2.0, -2.0]).max(dist(&h_end, [1.0, -1.0, -2.0, 1.0]));
    Ok(vec![
        Verdict::check(
            "flow.conservation",
            "the generator's observable is conserved along its RK4 flow",
            drift_p.max(drift_g),
            cfg.tol("flow.conservation", 1e-8),
        )
        .with_notes(format!("P drift {drift_p:.3e}, G drift {drift_g:.3e}")),
        Verdict::within(
            "flow.rk4_order",
            "observable drift shrinks about 16x when the step halves",
            ratio,
            12.0,
            20.0,
        )
        .with_notes(format!(
            "G flow, step {} drift {coarse:.3e}, half step {fine:.3e}",
            cfg.order_step
        )),
        Verdict::check(
            "flow.symplectic",
            "the time-s flow map preserves omega",
            symp,
            cfg.tol("flow.symplectic", 1e-5),
        ),
        Verdict::check(
            "flow.endpoints",
            "affine Q and H flows reach their exact endpoints",
            endpoints,
            cfg.tol("flow.endpoints", 1e-10),
        ),
    ])
}

fn check_quantization(cfg: &Settings) -> Result<Vec<Verdict>> {
    let grid = cfg.grid()?;
    let s = st(0.0, -0.5, 0.0, 0.0);
    let disc = |g: Generator| sch::operator_discrepancy(&g.into(), &s, &grid);
    let mult = [Generator::F, Generator::Q, Generator::R]
        .into_iter()
        .map(disc)
        .collect::<Result<Vec<_>>>()?;
    let deriv = [Generator::P, Generator::G, Generator::H]
        .into_iter()
        .map(disc)
        .collect::<Result<Vec<_>>>()?;
    let order = sch::plane_wave_order(1.0, cfg.grid_lo, cfg.grid_hi, 33)?;
    Ok(vec![
        Verdict::check(
            "eq22.mult",
            "multiplication operators reproduce their tabulated actions",
            mult.iter().copied().fold(0.0, f64::max),
            cfg.tol("eq22.mult", 1e-10),
        ),
        Verdict::reported(
            "eq22.deriv",
            "derivative operators against their tabulated actions",
            deriv.iter().copied().fold(0.0, f64::max),
            cfg.tol("eq22.deriv", 1e-10),
        )
        .with_notes(format!(
            "P {:.4e}, G {:.4e}, H {:.4e}; the tabulated forms drop the 1/2 from the exponent and the d c/du = -1-i term",
            deriv[0], deriv[1], deriv[2]
        )),
        Verdict::within(
            "eq22.convergence",
            "P on a plane wave converges at fourth order in du",
            order,
            3.5,
            4.5,
        ),
    ])
}

fn check_xi(cfg: &Settings) -> Result<Vec<Verdict>> {
    let c = jacobi::integrate_flow(
        Generator::Q.into(),
        st(1.0, -1.0, 0.0, 0.0),
        cfg.flow_length,
        cfg.flow_step,
    )?;
    let p = SchrodingerParams {
        lambda: [1.0; 5],
        ..SchrodingerParams::default()
    };
    let mut worst = 0.0f64;
    for k in (0..c.len()).step_by(10) {
        for u in [-2.0, -1.0, -0.5, 0.5, 1.0, 2.0] {
            let a = sch::xi_coefficient(&c, k, u, &p)?;
            let b = sch::xi_coefficient_alternate(&c, k, u, &p)?;
            worst = worst.max((a - b).norm());
        }
    }
    Ok(vec![Verdict::reported(
        "pro4.xi",
        "the two displayed xi formulas agree",
        worst,
        cfg.tol("pro4.xi", 1e-10),
    )
    .with_notes(
        "all lambda = 1, beta = 0, Q flow from (1,-1,0,0); max |xi_primary - xi_alternate|",
    )])
}

fn check_hamiltonian(cfg: &Settings) -> Result<Vec<Verdict>> {
    let mut rng = cfg.rng("hamiltonian");
    let states = random_states(&mut rng, cfg.random_states);
    let mut worst = 0.0f64;
    for s in &states {
        let u: f64 = rng.gen_range(-2.0..=2.0);
        let xi = Complex64::new(rng.gen_range(-1.0..=1.0), rng.gen_range(-1.0..=1.0));
        let la: [f64; 5] = std::array::from_fn(|_| rng.gen_range(-1.0..=1.0));
        let lb: [f64; 5] = std::array::from_fn(|_| rng.gen_range(-1.0..=1.0));
        let (a, b): (f64, f64) = (rng.gen_range(-2.0..=2.0), rng.gen_range(-2.0..=2.0));
        let lin = |l: [f64; 5]| {
            let p = SchrodingerParams {
                lambda: l,
                ..SchrodingerParams::default()
            };
            sch::hamiltonian_density(s, u, &p, xi) - xi * u
        };
        let mix = std::array::from_fn(|k| a * la[k] + b * lb[k]);
        worst = worst.max((lin(mix) - a * lin(la) - b * lin(lb)).norm());
    }
    Ok(vec![Verdict::check(
        "th2.hamiltonian",
        "the Hamiltonian density is linear in the lambda coefficients at fixed xi",
        worst,
        cfg.tol("th2.hamiltonian", 1e-12),
    )])
}

fn check_evolution(cfg: &Settings) -> Result<Vec<Verdict>> {
    let grid = cfg.grid()?;
    let start = st(1.0, -1.0, 0.0, 0.0);
    let curves = [Generator::F, Generator::Q, Generator::H]
        .into_iter()
        .map(|g| jacobi::integrate_flow(g.into(), start, cfg.flow_length, cfg.flow_step))
        .collect::<Result<Vec<_>>>()?;
    let calibrated = SchrodingerParams::default();
    let mut cal = 0.0f64;
    for c in &curves {
        cal = cal.max(sch::schrodinger_residual(c, &grid, &calibrated)?.max_reduced());
    }
    let literal_params = SchrodingerParams::from_element(&Generator::Q.into())
        .with_flags(ConventionFlags::as_printed());
    let mut literal = 0.0f64;
    let mut full = 0.0f64;
    for c in &curves {
        let f = sch::schrodinger_residual(c, &grid, &literal_params)?;
        literal = literal.max(f.max_reduced());
        full = full.max(f.max_full());
    }
    let p_curve =
        jacobi::integrate_flow(Generator::P.into(), start, cfg.energy_length, cfg.flow_step)?;
    let ev = sch::energy_variation(
        &p_curve,
        cfg.energy_u,
        &SchrodingerParams::from_element(&Generator::P.into()),
    )?;
    let flags_json = |f: &ConventionFlags| serde_json::to_string(f).expect("flags serialize");
    Ok(vec![
        Verdict::check(
            "eq23.calibrated",
            "i dPsi/ds matches the chain-rule right side along theta-constant flows",
            cal,
            cfg.tol("eq23.calibrated", 1e-6),
        )
        .with_notes(format!(
            "F, Q, H flows; flags {}",
            flags_json(&calibrated.flags)
        )),
        Verdict::reported(
            "th1.residual",
            "evolution equation residual with the displayed conventions",
            literal,
            cfg.tol("th1.residual", 1e-6),
        )
        .with_notes(format!(
            "flags {}; residual of the full right side with constant xi = 1: {full:.4e}",
            flags_json(&literal_params.flags)
        )),
        Verdict::exceeds(
            "energy.variation",
            "the Hamiltonian density is not constant along the P flow",
            ev.spread,
            0.1,
        )
        .with_notes(format!(
            "u = {}, s in [0, {}] (the flow leaves the manifold near s = 0.366)",
            cfg.energy_u, cfg.energy_length
        )),
    ])
}

const CHECKS: &[(Suite, Check)] = &[
    (
        Suite::Metric,
        Check {
            claims: &["fisher.oracle", "fisher.inverse", "lem1"],
            subject: "Fisher metric and connection",
            run: check_fisher,
        },
    ),
    (
        Suite::Metric,
        Check {
            claims: &["dual.gradient"],
            subject: "dual coordinates",
            run: check_dual,
        },
    ),
    (
        Suite::KahlerCheck,
        Check {
            claims: &[
                "pro2.natural",
                "pro2.mixed",
                "pro2.domega",
                "pro2.det_omega",
            ],
            subject: "Kähler structure",
            run: check_kahler,
        },
    ),
    (
        Suite::PdeCheck,
        Check {
            claims: &["family.pde"],
            subject: "Kähler function family",
            run: check_family,
        },
    ),
    (
        Suite::IsometryCheck,
        Check {
            claims: &[
                "pro400.holomorphy",
                "pro400.fiber_translations",
                "pro400.isometry",
            ],
            subject: "translations",
            run: check_isometry,
        },
    ),
    (
        Suite::Fields,
        Check {
            claims: &[
                "pro40.F", "pro40.G", "pro40.H", "pro40.P", "pro40.Q", "pro40.R",
            ],
            subject: "Hamiltonian fields",
            run: check_fields,
        },
    ),
    (
        Suite::Flow,
        Check {
            claims: &[
                "flow.conservation",
                "flow.rk4_order",
                "flow.symplectic",
                "flow.endpoints",
            ],
            subject: "flows",
            run: check_flow,
        },
    ),
    (
        Suite::Schrodinger,
        Check {
            claims: &["eq22.mult", "eq22.deriv", "eq22.convergence"],
            subject: "quantization",
            run: check_quantization,
        },
    ),
    (
        Suite::Schrodinger,
        Check {
            claims: &["pro4.xi"],
            subject: "xi coefficient",
            run: check_xi,
        },
    ),
    (
        Suite::Schrodinger,
        Check {
            claims: &["th2.hamiltonian"],
            subject: "Hamiltonian density",
            run: check_hamiltonian,
        },
    ),
    (
        Suite::Schrodinger,
        Check {
            claims: &["eq23.calibrated", "th1.residual", "energy.variation"],
            subject: "evolution residual",
            run: check_evolution,
        },
    ),
];

/// Runs the suite's checks in parallel and returns canonically sorted verdicts.
///
/// A check that errors yields FAIL verdicts for all its claims. For
/// `report-all`, any registry id that is still missing becomes a FAIL.
pub fn run_suite(suite: Suite, cfg: &Settings) -> Result<Vec<Verdict>> {
    cfg.validate()?;
    let selected: Vec<&Check> = CHECKS
        .iter()
        .filter(|(s, _)| suite == Suite::ReportAll || *s == suite)
        .map(|(_, c)| c)
        .collect();
    let mut verdicts: Vec<Verdict> = selected
        .par_iter()
        .flat_map_iter(|c| match (c.run)(cfg) {
            Ok(v) => v,
            Err(e) => c
                .claims
                .iter()
                .map(|id| Verdict::failed(id, c.subject, format!("check aborted: {e}")))
                .collect(),
        })
        .collect();
    if suite == Suite::ReportAll {
        for id in missing_claims(&verdicts) {
            verdicts.push(Verdict::failed(
                id,
                "registry completeness",
                "claim missing from report",
            ));
        }
    }
    verdicts.sort_by(|a, b| a.claim.cmp(&b.claim));
    Ok(verdicts)
}

pub fn missing_claims(verdicts: &[Verdict]) -> Vec<&'static str> {
    REQUIRED_CLAIMS
        .iter()
        .copied()
        .filter(|id| !verdicts.iter().any(|v| v.claim == *id))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Summary {
    pub pass: usize,
    pub fail: usize,
    pub reported: usize,
    pub ok: bool,
}

impl Summary {
    pub fn of(verdicts: &[Verdict]) -> Self {
        let count = |s| verdicts.iter().filter(|v| v.status == s).count();
        let fail = count(Status::Fail);
        Self {
            pass: count(Status::Pass),
            fail,
            reported: count(Status::Reported),
            ok: fail == 0,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct VerdictDocument<'a, C: Serialize> {
    pub schema_version: u32,
    pub version: &'static str,
    pub command: String,
    pub seed: u64,
    pub config: &'a C,
    pub verdicts: &'a [Verdict],
    pub summary: Summary,
}

/// Pretty JSON with stable field order; `config` is echoed verbatim.
pub fn emit_verdicts<C: Serialize>(
    command: &str,
    seed: u64,
    config: &C,
    verdicts: &[Verdict],
) -> Result<String> {
    if verdicts.is_empty() {
        return Err(Error::InvalidArgument("no verdicts to emit".into()));
    }
    let doc = VerdictDocument {
        schema_version: SCHEMA_VERSION,
        version: env!("CARGO_PKG_VERSION"),
        command: command.into(),
        seed,
        config,
        verdicts,
        summary: Summary::of(verdicts),
    };
    let mut s =
        serde_json::to_string_pretty(&doc).map_err(|e| Error::InvalidArgument(e.to_string()))?;
    s.push('\n');
    Ok(s)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn quick() -> Settings {
        Settings {
            random_states: 10,
            family_alphas: 3,
            family_states: 5,
            grid_n: 65,
            ..Settings::default()
        }
    }

    #[test]
    fn verdict_constructors() {
        assert_eq!(Verdict::check("a", "", 1e-9, 1e-8).status, Status::Pass);
        assert_eq!(Verdict::check("a", "", 1e-7, 1e-8).status, Status::Fail);
        assert_eq!(Verdict::check("a", "", f64::NAN, 1e-8).status, Status::Fail);
        assert_eq!(
            Verdict::within("a", "", 15.0, 12.0, 20.0).status,
            Status::Pass
        );
        let v = Verdict::within("a", "", 25.0, 12.0, 20.0);
        assert_eq!(v.status, Status::Fail);
        assert_eq!(v.residual, 5.0);
        assert_eq!(Verdict::exceeds("a", "", 0.1, 0.1).status, Status::Fail);
        assert_eq!(Verdict::exceeds("a", "", 0.2, 0.1).status, Status::Pass);
        assert_eq!(
            Verdict::reported("a", "", 1.0, 1e-8).status,
            Status::Reported
        );
    }

    #[test]
    fn suite_names_round_trip() {
        for s in Suite::ALL {
            assert_eq!(s.name().parse::<Suite>().unwrap(), s);
        }
        assert!("nope".parse::<Suite>().is_err());
    }

    #[test]
    fn settings_validation() {
        assert!(Settings::default().validate().is_ok());
        let mut bad = Settings::default();
        bad.tolerances.insert("lem1".into(), -1.0);
        assert!(bad.validate().is_err());
        assert!(Settings {
            flow_step: 0.0,
            ..Settings::default()
        }
        .validate()
        .is_err());
        assert!(Settings {
            grid_n: 1,
            ..Settings::default()
        }
        .validate()
        .is_err());
    }

    #[test]
    fn report_all_is_complete_and_deterministic() {
        let cfg = quick();
        let a = run_suite(Suite::ReportAll, &cfg).unwrap();
        assert!(missing_claims(&a).is_empty());
        let b = run_suite(Suite::ReportAll, &cfg).unwrap();
        assert_eq!(
            emit_verdicts("report-all", cfg.seed, &cfg, &a).unwrap(),
            emit_verdicts("report-all", cfg.seed, &cfg, &b).unwrap()
        );
        let mut sorted = a.clone();
        sorted.sort_by(|x, y| x.claim.cmp(&y.claim));
        assert_eq!(a, sorted);
        for v in &a {
            if v.status == Status::Pass {
                assert!(v.residual <= v.tolerance, "{v:?}");
            }
        }
    }

    #[test]
    fn expected_statuses() {
        let v = run_suite(Suite::ReportAll, &quick()).unwrap();
        let status = |id: &str| v.iter().find(|x| x.claim == id).unwrap().status;
        for id in [
            "pro2.natural",
            "pro2.mixed",
            "lem1",
            "pro40.P",
            "family.pde",
            "flow.rk4_order",
            "eq23.calibrated",
        ] {
            assert_eq!(status(id), Status::Pass, "{id}");
        }
        for id in [
            "pro400.isometry",
            "eq22.deriv",
            "th1.residual",
            "pro2.det_omega",
            "pro4.xi",
        ] {
            assert_eq!(status(id), Status::Reported, "{id}");
        }
        assert!(Summary::of(&v).ok, "{v:#?}");
    }

    #[test]
    fn suites_are_subsets() {
        let v = run_suite(Suite::Fields, &quick()).unwrap();
        assert_eq!(v.len(), 6);
        assert!(v.iter().all(|x| x.status == Status::Pass));
    }

    #[test]
    fn empty_emission_is_an_error() {
        assert!(emit_verdicts("x", 0, &(), &[]).is_err());
    }

    #[test]
    fn tolerance_overrides_apply() {
        let mut cfg = quick();
        cfg.tolerances.insert("pro40.G".into(), 1e-300);
        let v = run_suite(Suite::Fields, &cfg).unwrap();
        let g = v.iter().find(|x| x.claim == "pro40.G").unwrap();
        assert_eq!(g.tolerance, 1e-300);
    }
}

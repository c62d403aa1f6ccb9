//! Jacobi algebra elements, their observables, Hamiltonian fields and flows.

use std::fmt;
use std::io::Write;
use std::ops::{Add, Mul, Neg, Sub};
use std::str::FromStr;

use serde::Serialize;

use crate::dombrowski::{omega_natural, TangentState};
use crate::error::{Error, Result};
use crate::fd::{self, Stencil};
use crate::manifold::{inverse_metric, THETA2_GUARD};

/// Basis element of the Jacobi algebra.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum Generator {
    F,
    G,
    H,
    P,
    Q,
    R,
}

impl Generator {
    pub const ALL: [Generator; 6] = [
        Generator::F,
        Generator::G,
        Generator::H,
        Generator::P,
        Generator::Q,
        Generator::R,
    ];
}

impl fmt::Display for Generator {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

impl FromStr for Generator {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.trim().to_ascii_uppercase().as_str() {
            "F" => Ok(Generator::F),
            "G" => Ok(Generator::G),
            "H" => Ok(Generator::H),
            "P" => Ok(Generator::P),
            "Q" => Ok(Generator::Q),
            "R" => Ok(Generator::R),
            other => Err(Error::InvalidArgument(format!(
                "unknown generator {other:?}"
            ))),
        }
    }
}

/// `sum lambda_L * L` over the basis `{F, G, H, P, Q, R}`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct JacobiElement {
    pub lambda_f: f64,
    pub lambda_g: f64,
    pub lambda_h: f64,
    pub lambda_p: f64,
    pub lambda_q: f64,
    pub lambda_r: f64,
}

impl JacobiElement {
    pub fn zero() -> Self {
        Self::default()
    }

    pub fn basis(g: Generator) -> Self {
        let mut e = Self::zero();
        *e.coeff_mut(g) = 1.0;
        e
    }

    /// Coefficients in `Generator::ALL` order.
    pub fn from_coefficients(c: [f64; 6]) -> Result<Self> {
        if !c.iter().all(|v| v.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "non-finite coefficients {c:?}"
            )));
        }
        Ok(Self {
            lambda_f: c[0],
            lambda_g: c[1],
            lambda_h: c[2],
            lambda_p: c[3],
            lambda_q: c[4],
            lambda_r: c[5],
        })
    }

    pub fn coefficients(&self) -> [f64; 6] {
        [
            self.lambda_f,
            self.lambda_g,
            self.lambda_h,
            self.lambda_p,
            self.lambda_q,
            self.lambda_r,
        ]
    }

    pub fn coeff(&self, g: Generator) -> f64 {
        match g {
            Generator::F => self.lambda_f,
            Generator::G => self.lambda_g,
            Generator::H => self.lambda_h,
            Generator::P => self.lambda_p,
            Generator::Q => self.lambda_q,
            Generator::R => self.lambda_r,
        }
    }

    pub fn coeff_mut(&mut self, g: Generator) -> &mut f64 {
        match g {
            Generator::F => &mut self.lambda_f,
            Generator::G => &mut self.lambda_g,
            Generator::H => &mut self.lambda_h,
            Generator::P => &mut self.lambda_p,
            Generator::Q => &mut self.lambda_q,
            Generator::R => &mut self.lambda_r,
        }
    }

    /// Nonzero terms as `(generator, coefficient)`.
    pub fn terms(&self) -> impl Iterator<Item = (Generator, f64)> + '_ {
        Generator::ALL
            .into_iter()
            .map(|g| (g, self.coeff(g)))
            .filter(|&(_, c)| c != 0.0)
    }
}

impl From<Generator> for JacobiElement {
    fn from(g: Generator) -> Self {
        Self::basis(g)
    }
}

impl Add for JacobiElement {
    type Output = Self;
    fn add(self, o: Self) -> Self {
        let (a, b) = (self.coefficients(), o.coefficients());
        Self::from_coefficients(std::array::from_fn(|i| a[i] + b[i])).unwrap_or_default()
    }
}

impl Sub for JacobiElement {
    type Output = Self;
    fn sub(self, o: Self) -> Self {
        self + (-o)
    }
}

impl Neg for JacobiElement {
    type Output = Self;
    fn neg(self) -> Self {
        -1.0 * self
    }
}

impl Mul<JacobiElement> for f64 {
    type Output = JacobiElement;
    fn mul(self, e: JacobiElement) -> JacobiElement {
        let c = e.coefficients();
        JacobiElement::from_coefficients(c.map(|v| self * v)).unwrap_or_default()
    }
}

impl fmt::Display for JacobiElement {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.terms().map(|(g, c)| format!("{g}:{c}")).collect();
        if parts.is_empty() {
            f.write_str("0")
        } else {
            f.write_str(&parts.join(","))
        }
    }
}

/// Parses either a bare generator (`"Q"`) or a comma list (`"G:1,P:-0.5"`).
impl FromStr for JacobiElement {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut e = Self::zero();
        for part in s.split(',').filter(|p| !p.trim().is_empty()) {
            let (g, c) = match part.split_once(':') {
                Some((g, c)) => {
                    let c: f64 = c.trim().parse().map_err(|_| {
                        Error::InvalidArgument(format!("bad coefficient in {part:?}"))
                    })?;
                    (g.parse::<Generator>()?, c)
                }
                None => (part.parse::<Generator>()?, 1.0),
            };
            *e.coeff_mut(g) += c;
        }
        Self::from_coefficients(e.coefficients())
    }
}

/// A smooth function on the tangent bundle with an analytic gradient
/// ordered as `(theta1, theta2, thetadot1, thetadot2)`.
pub trait Observable: Send + Sync {
    fn value(&self, s: &TangentState) -> f64;
    fn gradient(&self, s: &TangentState) -> [f64; 4];
}

/// Image of a Jacobi element under the linear map to observables.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct PsiObservable {
    pub element: JacobiElement,
}

pub fn psi(l: JacobiElement) -> PsiObservable {
    PsiObservable { element: l }
}

fn psi_basis_value(g: Generator, x: &[f64; 4]) -> f64 {
    let [t1, t2, d1, d2] = *x;
    match g {
        Generator::F => 0.0,
        Generator::P => t2 + d1,
        Generator::G => 0.5 * t2 * t2 + t2 + d1 + 0.5 * d2 * d2,
        Generator::Q => t2,
        Generator::H => t1,
        Generator::R => -0.25,
    }
}

fn psi_basis_gradient(g: Generator, x: &[f64; 4]) -> [f64; 4] {
    let [_, t2, _, d2] = *x;
    match g {
        Generator::F | Generator::R => [0.0; 4],
        Generator::P => [0.0, 1.0, 1.0, 0.0],
        Generator::G => [0.0, t2 + 1.0, 1.0, d2],
        Generator::Q => [0.0, 1.0, 0.0, 0.0],
        Generator::H => [1.0, 0.0, 0.0, 0.0],
    }
}

impl PsiObservable {
    /// Value at raw coordinates; no domain check.
    pub fn value_at(&self, x: &[f64; 4]) -> f64 {
        self.element
            .terms()
            .map(|(g, c)| c * psi_basis_value(g, x))
            .sum()
    }
}

impl Observable for PsiObservable {
    fn value(&self, s: &TangentState) -> f64 {
        self.value_at(&s.as_array())
    }

    fn gradient(&self, s: &TangentState) -> [f64; 4] {
        let x = s.as_array();
        let mut out = [0.0; 4];
        for (g, c) in self.element.terms() {
            let d = psi_basis_gradient(g, &x);
            for k in 0..4 {
                out[k] += c * d[k];
            }
        }
        out
    }
}

/// `X_f = h^{ij} df/dthetadot_i d/dtheta_j - h^{ij} df/dtheta_i d/dthetadot_j`.
pub fn hamiltonian_field<O: Observable + ?Sized>(f: &O, s: &TangentState) -> [f64; 4] {
    let hinv = inverse_metric(s.theta());
    let d = f.gradient(s);
    let mut out = [0.0; 4];
    for j in 0..2 {
        for i in 0..2 {
            out[j] += hinv[(i, j)] * d[i + 2];
            out[j + 2] -= hinv[(i, j)] * d[i];
        }
    }
    out
}

fn closed_form_basis(g: Generator, x: &[f64; 4]) -> [f64; 4] {
    let [t1, t2, _, d2] = *x;
    match g {
        Generator::F | Generator::R => [0.0; 4],
        Generator::P => [
            2.0 * t1 * t1 - 2.0 * t2,
            2.0 * t1 * t2,
            -2.0 * t1 * t2,
            -2.0 * t2 * t2,
        ],
        Generator::G => [
            2.0 * t1 * t1 - 2.0 * t2 + 2.0 * t1 * t2 * d2,
            2.0 * t1 * t2 + 2.0 * t2 * t2 * d2,
            -2.0 * t1 * t2 * (t2 + 1.0),
            -2.0 * t2 * t2 * (t2 + 1.0),
        ],
        Generator::H => [0.0, 0.0, -2.0 * t1 * t1 + 2.0 * t2, -2.0 * t1 * t2],
        Generator::Q => [0.0, 0.0, -2.0 * t1 * t2, -2.0 * t2 * t2],
    }
}

/// Linear combination of the tabulated basis fields.
pub fn closed_form_field(l: &JacobiElement, s: &TangentState) -> [f64; 4] {
    let x = s.as_array();
    let mut out = [0.0; 4];
    for (g, c) in l.terms() {
        let v = closed_form_basis(g, &x);
        for k in 0..4 {
            out[k] += c * v[k];
        }
    }
    out
}

/// Sampled integral curve of `X_{psi(generator)}`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SpectralCurve {
    pub generator: JacobiElement,
    pub params: Vec<f64>,
    pub states: Vec<TangentState>,
    pub velocities: Vec<[f64; 4]>,
}

impl SpectralCurve {
    pub fn len(&self) -> usize {
        self.params.len()
    }

    pub fn is_empty(&self) -> bool {
        self.params.is_empty()
    }

    /// Grid spacing (zero for a single-sample curve).
    pub fn step(&self) -> f64 {
        if self.params.len() < 2 {
            0.0
        } else {
            self.params[1] - self.params[0]
        }
    }

    pub fn last(&self) -> Option<&TangentState> {
        self.states.last()
    }

    pub fn observable_values(&self) -> Vec<f64> {
        let obs = psi(self.generator);
        self.states.iter().map(|s| obs.value(s)).collect()
    }

    /// CSV with columns `s, theta1, theta2, thetadot1, thetadot2, v1..v4, observable_value`.
    pub fn write_csv<W: Write>(&self, mut w: W) -> std::io::Result<()> {
        writeln!(
            w,
            "s,theta1,theta2,thetadot1,thetadot2,v1,v2,v3,v4,observable_value"
        )?;
        let obs = psi(self.generator);
        for ((s, st), v) in self.params.iter().zip(&self.states).zip(&self.velocities) {
            let x = st.as_array();
            writeln!(
                w,
                "{s:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e},{:.12e}",
                x[0],
                x[1],
                x[2],
                x[3],
                v[0],
                v[1],
                v[2],
                v[3],
                obs.value(st)
            )?;
        }
        Ok(())
    }
}

fn field_raw(l: &PsiObservable, x: &[f64; 4]) -> Option<[f64; 4]> {
    if !(x[1] < THETA2_GUARD) || !x.iter().all(|v| v.is_finite()) {
        return None;
    }
    TangentState::new(x[0], x[1], x[2], x[3])
        .ok()
        .map(|s| hamiltonian_field(l, &s))
}

fn rk4_step(obs: &PsiObservable, x: &[f64; 4], h: f64) -> Option<[f64; 4]> {
    let axpy =
        |a: &[f64; 4], k: &[f64; 4], c: f64| std::array::from_fn::<f64, 4, _>(|i| a[i] + c * k[i]);
    let k1 = field_raw(obs, x)?;
    let k2 = field_raw(obs, &axpy(x, &k1, 0.5 * h))?;
    let k3 = field_raw(obs, &axpy(x, &k2, 0.5 * h))?;
    let k4 = field_raw(obs, &axpy(x, &k3, h))?;
    Some(std::array::from_fn(|i| {
        x[i] + h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])
    }))
}

/// Number of uniform steps covering `[0, s_end]` with spacing at most `step`.
fn step_count(s_end: f64, step: f64) -> Result<usize> {
    if !(step > 0.0) || !step.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "step {step} must be positive"
        )));
    }
    if !(s_end >= 0.0) || !s_end.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "s_end {s_end} must be finite and non-negative"
        )));
    }
    let n = (s_end / step - 1e-9).ceil().max(0.0);
    if n > 1e8 {
        return Err(Error::InvalidArgument(format!("{n} steps requested")));
    }
    Ok(n as usize)
}

/// Classical RK4 on a uniform grid from `0` to `s_end`.
///
/// The grid spacing is `s_end / ceil(s_end / step)`, i.e. `step` itself when
/// it divides `s_end`.
pub fn integrate_flow(
    gen: JacobiElement,
    start: TangentState,
    s_end: f64,
    step: f64,
) -> Result<SpectralCurve> {
    let n = step_count(s_end, step)?;
    let h = if n == 0 { 0.0 } else { s_end / n as f64 };
    let obs = psi(gen);
    let mut params = Vec::with_capacity(n + 1);
    let mut states = Vec::with_capacity(n + 1);
    let mut velocities = Vec::with_capacity(n + 1);
    let mut x = start.as_array();
    params.push(0.0);
    states.push(start);
    velocities.push(hamiltonian_field(&obs, &start));
    for k in 1..=n {
        let s = k as f64 * h;
        x = rk4_step(&obs, &x, h).ok_or(Error::DomainExit { s })?;
        let st = TangentState::new(x[0], x[1], x[2], x[3]).map_err(|_| Error::DomainExit { s })?;
        params.push(s);
        velocities.push(hamiltonian_field(&obs, &st));
        states.push(st);
    }
    Ok(SpectralCurve {
        generator: gen,
        params,
        states,
        velocities,
    })
}

/// `max_k |psi(gen)(state_k) - psi(gen)(state_0)|`.
pub fn conservation_report(c: &SpectralCurve) -> Result<f64> {
    let vals = c.observable_values();
    let first = *vals
        .first()
        .ok_or_else(|| Error::InvalidArgument("empty curve".into()))?;
    Ok(vals.iter().map(|v| (v - first).abs()).fold(0.0, f64::max))
}

/// Ratio `drift(step) / drift(step / 2)` for the flow of `gen`.
pub fn rk4_order_ratio(
    gen: JacobiElement,
    start: TangentState,
    s_end: f64,
    step: f64,
) -> Result<(f64, f64, f64)> {
    let coarse = conservation_report(&integrate_flow(gen, start, s_end, step)?)?;
    let fine = conservation_report(&integrate_flow(gen, start, s_end, 0.5 * step)?)?;
    Ok((coarse / fine, coarse, fine))
}

/// `|Phi^T omega(end) Phi - omega(start)|_max` for the time-`T` flow map of
/// the curve's generator, with `T` the curve length and `Phi` its Jacobian
/// by 4th-order central differences of step `step`.
pub fn symplecticity_residual(c: &SpectralCurve, step: f64) -> Result<f64> {
    let (start, end) = match (c.states.first(), c.states.last()) {
        (Some(a), Some(b)) => (*a, *b),
        _ => return Err(Error::InvalidArgument("empty curve".into())),
    };
    if !(step > 0.0) {
        return Err(Error::InvalidArgument(format!(
            "step {step} must be positive"
        )));
    }
    let x0 = start.as_array();
    let reach = Stencil::Fourth.reach() as f64 * fd::scaled_step(step, x0[1]);
    if x0[1] + reach >= THETA2_GUARD {
        return Err(Error::Stencil(format!(
            "theta2 = {} too close to the boundary",
            x0[1]
        )));
    }
    let obs = psi(c.generator);
    let n = c.len().saturating_sub(1);
    let h = c.step();
    let flow = |x: &[f64; 4]| {
        let mut y = *x;
        for _ in 0..n {
            match rk4_step(&obs, &y, h) {
                Some(z) => y = z,
                None => return [f64::NAN; 4],
            }
        }
        y
    };
    let jac = fd::jacobian(flow, x0, step, Stencil::Fourth);
    if !jac.iter().flatten().all(|v| v.is_finite()) {
        return Err(Error::Stencil("perturbed flow left the manifold".into()));
    }
    let phi = nalgebra::Matrix4::from_fn(|r, col| jac[r][col]);
    let pulled = phi.transpose() * omega_natural(end.theta()) * phi;
    Ok((pulled - omega_natural(start.theta())).amax())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    fn st(a: f64, b: f64, c: f64, d: f64) -> TangentState {
        TangentState::new(a, b, c, d).unwrap()
    }

    fn close(a: [f64; 4], b: [f64; 4], tol: f64) -> bool {
        a.iter().zip(&b).all(|(x, y)| (x - y).abs() <= tol)
    }

    use Generator::*;

    #[test]
    fn psi_examples() {
        assert_eq!(psi(Q.into()).value(&st(1.0, -1.0, 0.0, 0.0)), -1.0);
        assert_eq!(psi(G.into()).value(&st(1.0, -1.0, 0.0, 1.0)), 0.0);
        assert_eq!(psi(F.into()).value(&st(3.0, -0.2, 7.0, 1.0)), 0.0);
        assert_eq!(psi(R.into()).value(&st(3.0, -0.2, 7.0, 1.0)), -0.25);
    }

    #[test]
    fn field_examples() {
        let s = st(1.0, -1.0, 0.0, 0.0);
        assert!(close(
            hamiltonian_field(&psi(Q.into()), &s),
            [0.0, 0.0, 2.0, -2.0],
            1e-14
        ));
        assert!(close(
            hamiltonian_field(&psi(P.into()), &s),
            [4.0, -2.0, 2.0, -2.0],
            1e-14
        ));
        assert_eq!(
            hamiltonian_field(&psi(F.into()), &st(0.3, -2.0, 1.0, 4.0)),
            [0.0; 4]
        );
    }

    #[test]
    fn closed_form_examples() {
        assert!(close(
            closed_form_field(&G.into(), &st(1.0, -1.0, 0.0, 1.0)),
            [2.0, 0.0, 0.0, 0.0],
            1e-14
        ));
        assert!(close(
            closed_form_field(&H.into(), &st(1.0, -1.0, 0.3, 0.8)),
            [0.0, 0.0, -4.0, 2.0],
            1e-14
        ));
        assert_eq!(
            closed_form_field(&R.into(), &st(1.0, -1.0, 0.3, 0.8)),
            [0.0; 4]
        );
    }

    #[test]
    fn element_parsing_and_algebra() {
        let e: JacobiElement = "G:1, P:-0.5".parse().unwrap();
        assert_eq!(e.lambda_g, 1.0);
        assert_eq!(e.lambda_p, -0.5);
        assert_eq!("q".parse::<JacobiElement>().unwrap(), Q.into());
        assert!("X".parse::<JacobiElement>().is_err());
        assert!("G:abc".parse::<JacobiElement>().is_err());
        let sum = JacobiElement::from(G) + 2.0 * JacobiElement::from(H) - JacobiElement::from(G);
        assert_eq!(sum, 2.0 * JacobiElement::from(H));
        assert_eq!(sum.to_string(), "H:2");
        assert_eq!(JacobiElement::zero().to_string(), "0");
    }

    #[test]
    fn linear_flows() {
        let c = integrate_flow(Q.into(), st(1.0, -1.0, 0.0, 0.0), 1.0, 1e-2).unwrap();
        assert!(close(
            c.last().unwrap().as_array(),
            [1.0, -1.0, 2.0, -2.0],
            1e-12
        ));
        assert_eq!(conservation_report(&c).unwrap(), 0.0);
        let c = integrate_flow(H.into(), st(1.0, -1.0, 0.0, 0.0), 0.5, 1e-2).unwrap();
        assert!(close(
            c.last().unwrap().as_array(),
            [1.0, -1.0, -2.0, 1.0],
            1e-12
        ));
        let start = st(0.4, -0.7, 1.0, 2.0);
        let c = integrate_flow(F.into(), start, 0.3, 1e-2).unwrap();
        assert!(c.states.iter().all(|s| *s == start));
        assert_eq!(c.len(), 31);
    }

    #[test]
    fn grid_is_uniform_and_covers_the_interval() {
        let c = integrate_flow(Q.into(), st(1.0, -1.0, 0.0, 0.0), 0.25, 0.1).unwrap();
        assert_eq!(c.len(), 4);
        assert_abs_diff_eq!(*c.params.last().unwrap(), 0.25, epsilon = 1e-15);
        let zero = integrate_flow(Q.into(), st(1.0, -1.0, 0.0, 0.0), 0.0, 0.1).unwrap();
        assert_eq!(zero.len(), 1);
        assert!(integrate_flow(Q.into(), st(1.0, -1.0, 0.0, 0.0), 1.0, 0.0).is_err());
        assert!(integrate_flow(Q.into(), st(1.0, -1.0, 0.0, 0.0), -1.0, 0.1).is_err());
    }

    #[test]
    fn velocities_match_the_field() {
        let c = integrate_flow(G.into(), st(1.0, -1.0, 0.0, 1.0), 0.1, 1e-2).unwrap();
        let obs = psi(G.into());
        for (s, v) in c.states.iter().zip(&c.velocities) {
            assert_eq!(hamiltonian_field(&obs, s), *v);
        }
    }

    #[test]
    fn domain_exit_is_reported() {
        // the P flow from (1,-1,0,0) blows up near s = (sqrt 3 - 1) / 2
        match integrate_flow(P.into(), st(1.0, -1.0, 0.0, 0.0), 1.0, 1e-3) {
            Err(Error::DomainExit { s }) => assert!(s > 0.3 && s < 0.4, "{s}"),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn conservation_examples() {
        let c = integrate_flow(P.into(), st(1.0, -1.0, 0.0, 0.0), 0.1, 1e-3).unwrap();
        assert!(conservation_report(&c).unwrap() <= 1e-8);
        let c = integrate_flow(G.into(), st(1.0, -1.0, 0.0, 1.0), 0.1, 1e-3).unwrap();
        assert!(conservation_report(&c).unwrap() <= 1e-8);
    }

    #[test]
    fn symplecticity_examples() {
        let c = integrate_flow(F.into(), st(1.0, -1.0, 0.0, 0.0), 0.1, 1e-3).unwrap();
        assert!(symplecticity_residual(&c, 1e-4).unwrap() <= 1e-9);
        for g in [Q, P, G, H] {
            let c = integrate_flow(g.into(), st(1.0, -1.0, 0.0, 0.0), 0.1, 1e-3).unwrap();
            let r = symplecticity_residual(&c, 1e-4).unwrap();
            assert!(r <= 1e-5, "{g}: {r}");
        }
    }

    #[test]
    fn csv_export() {
        let c = integrate_flow(Q.into(), st(1.0, -1.0, 0.0, 0.0), 0.1, 0.05).unwrap();
        let mut buf = Vec::new();
        c.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<_> = text.lines().collect();
        assert_eq!(lines.len(), 4);
        assert!(lines[0].starts_with("s,theta1"));
        assert_eq!(lines[1].split(',').count(), 10);
    }
}

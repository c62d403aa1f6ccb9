//! Central finite-difference stencils.
//!
//! Every derivative in the crate that is not available in closed form goes
//! through [`Stencil::derivative`], so the truncation order is explicit at the
//! call site.

/// Central first-derivative stencils of increasing order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stencil {
    /// 3-point, `O(h^2)`.
    Second,
    /// 5-point, `O(h^4)`.
    Fourth,
    /// 7-point, `O(h^6)`.
    Sixth,
}

const SECOND: &[(i32, f64)] = &[(-1, -0.5), (1, 0.5)];
const FOURTH: &[(i32, f64)] = &[
    (-2, 1.0 / 12.0),
    (-1, -8.0 / 12.0),
    (1, 8.0 / 12.0),
    (2, -1.0 / 12.0),
];
const SIXTH: &[(i32, f64)] = &[
    (-3, -1.0 / 60.0),
    (-2, 9.0 / 60.0),
    (-1, -45.0 / 60.0),
    (1, 45.0 / 60.0),
    (2, -9.0 / 60.0),
    (3, 1.0 / 60.0),
];

impl Stencil {
    /// `(offset, weight)` pairs; the derivative is `sum(w * f(x + offset*h)) / h`.
    pub fn taps(self) -> &'static [(i32, f64)] {
        match self {
            Stencil::Second => SECOND,
            Stencil::Fourth => FOURTH,
            Stencil::Sixth => SIXTH,
        }
    }

    /// Largest offset, in steps, that the stencil samples.
    pub fn reach(self) -> usize {
        match self {
            Stencil::Second => 1,
            Stencil::Fourth => 2,
            Stencil::Sixth => 3,
        }
    }

    /// Widest stencil whose reach does not exceed `reach`.
    pub fn widest_within(reach: usize) -> Option<Stencil> {
        match reach {
            0 => None,
            1 => Some(Stencil::Second),
            2 => Some(Stencil::Fourth),
            _ => Some(Stencil::Sixth),
        }
    }

    /// Derivative at `t = 0` of the scalar function `g`.
    pub fn derivative<F: FnMut(f64) -> f64>(self, mut g: F, h: f64) -> f64 {
        self.taps()
            .iter()
            .map(|&(k, w)| w * g(k as f64 * h))
            .sum::<f64>()
            / h
    }

    /// Same as [`derivative`](Self::derivative) for a fallible function.
    pub fn try_derivative<E, F>(self, mut g: F, h: f64) -> Result<f64, E>
    where
        F: FnMut(f64) -> Result<f64, E>,
    {
        let mut acc = 0.0;
        for &(k, w) in self.taps() {
            acc += w * g(k as f64 * h)?;
        }
        Ok(acc / h)
    }
}

/// Step for coordinate `x`: `base * max(1, |x|)`.
pub fn scaled_step(base: f64, x: f64) -> f64 {
    base * x.abs().max(1.0)
}

/// Gradient of `f` at `x` by central differences with scaled steps.
pub fn gradient<const N: usize, F>(f: F, x: [f64; N], base_step: f64, stencil: Stencil) -> [f64; N]
where
    F: Fn(&[f64; N]) -> f64,
{
    let mut out = [0.0; N];
    for (i, slot) in out.iter_mut().enumerate() {
        let h = scaled_step(base_step, x[i]);
        *slot = stencil.derivative(
            |t| {
                let mut y = x;
                y[i] += t;
                f(&y)
            },
            h,
        );
    }
    out
}

/// Jacobian `J[r][c] = d f_r / d x_c` of a vector map.
pub fn jacobian<const N: usize, const M: usize, F>(
    f: F,
    x: [f64; N],
    base_step: f64,
    stencil: Stencil,
) -> [[f64; N]; M]
where
    F: Fn(&[f64; N]) -> [f64; M],
{
    let mut out = [[0.0; N]; M];
    for c in 0..N {
        let h = scaled_step(base_step, x[c]);
        let mut col = [0.0; M];
        for &(k, w) in stencil.taps() {
            let mut y = x;
            y[c] += k as f64 * h;
            let v = f(&y);
            for r in 0..M {
                col[r] += w * v[r];
            }
        }
        for r in 0..M {
            out[r][c] = col[r] / h;
        }
    }
    out
}

/// Second partial `d^2 f / dx_i dx_j` by the standard 3-point / 4-point
/// central second differences (exact on quadratics up to rounding).
pub fn second_partial<const N: usize, F>(f: &F, x: &[f64; N], i: usize, j: usize, h: f64) -> f64
where
    F: Fn(&[f64; N]) -> f64 + ?Sized,
{
    let shifted = |di: f64, dj: f64| {
        let mut y = *x;
        y[i] += di;
        y[j] += dj;
        f(&y)
    };
    if i == j {
        (shifted(h, 0.0) - 2.0 * f(x) + shifted(-h, 0.0)) / (h * h)
    } else {
        (shifted(h, h) - shifted(h, -h) - shifted(-h, h) + shifted(-h, -h)) / (4.0 * h * h)
    }
}

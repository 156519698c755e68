//! Adaptive quadrature for the limiting densities.

use std::f64::consts::FRAC_PI_2;

const MAX_DEPTH: u32 = 48;

/// Adaptive Simpson integration of `f` over `[a, b]` to absolute tolerance `tol`.
pub fn adaptive_simpson<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    adaptive_simpson_depth(f, a, b, tol, MAX_DEPTH)
}

/// [`adaptive_simpson`] with at most `max_depth` bisections along any path.
pub fn adaptive_simpson_depth<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    tol: f64,
    max_depth: u32,
) -> f64 {
    if a == b {
        return 0.0;
    }
    let fa = f(a);
    let fb = f(b);
    let m = 0.5 * (a + b);
    let fm = f(m);
    let whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
    simpson_step(f, a, b, fa, fm, fb, whole, tol, max_depth)
}

#[allow(clippy::too_many_arguments)]
fn simpson_step<F: Fn(f64) -> f64>(
    f: &F,
    a: f64,
    b: f64,
    fa: f64,
    fm: f64,
    fb: f64,
    whole: f64,
    tol: f64,
    depth: u32,
) -> f64 {
    let m = 0.5 * (a + b);
    let lm = 0.5 * (a + m);
    let rm = 0.5 * (m + b);
    let flm = f(lm);
    let frm = f(rm);
    let left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
    let right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
    let delta = left + right - whole;
    if depth == 0 || delta.abs() <= 15.0 * tol {
        return left + right + delta / 15.0;
    }
    simpson_step(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1)
        + simpson_step(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1)
}

/// Maps `theta in [-pi/2, pi/2]` onto `[a, b]` via `x = c + h sin(theta)`.
///
/// Densities with square-root behaviour at both edges become smooth in
/// `theta`, and a `1/sqrt` edge singularity becomes bounded.
#[derive(Debug, Clone, Copy)]
pub struct SineMap {
    pub center: f64,
    pub half_width: f64,
}

impl SineMap {
    pub fn new(a: f64, b: f64) -> Self {
        Self {
            center: 0.5 * (a + b),
            half_width: 0.5 * (b - a),
        }
    }

    /// Measured from the nearer endpoint, `h (1 - cos)` written as
    /// `2h sin^2(./2)`, so points close to an edge keep full relative accuracy.
    pub fn x(&self, theta: f64) -> f64 {
        let h = self.half_width;
        let x = if theta < 0.0 {
            let s = (0.5 * (theta + FRAC_PI_2)).sin();
            self.lo() + 2.0 * h * s * s
        } else {
            let s = (0.5 * (FRAC_PI_2 - theta)).sin();
            self.hi() - 2.0 * h * s * s
        };
        x.clamp(self.lo(), self.hi())
    }

    pub fn jacobian(&self, theta: f64) -> f64 {
        self.half_width * theta.cos()
    }

    /// Inverse map, clamped to the interval.
    pub fn theta(&self, x: f64) -> f64 {
        if self.half_width == 0.0 {
            return 0.0;
        }
        ((x - self.center) / self.half_width)
            .clamp(-1.0, 1.0)
            .asin()
    }

    pub fn lo(&self) -> f64 {
        self.center - self.half_width
    }

    pub fn hi(&self) -> f64 {
        self.center + self.half_width
    }
}

/// `int_a^b f(x) dx` after the sine substitution.
pub fn integrate_band<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64, tol: f64) -> f64 {
    let map = SineMap::new(a, b);
    let g = |theta: f64| f(map.x(theta)) * map.jacobian(theta);
    adaptive_simpson(&g, -FRAC_PI_2, FRAC_PI_2, tol)
}

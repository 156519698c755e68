//! Effective Medium Approximation.
//!
//! The resolvent `g(z) = <1/(z - lambda)>` of the limiting law solves
//!
//! ```text
//! g^3 + ((t - 1)/z) g^2 - g + 1/z = 0,    t = rZ/d,
//! ```
//!
//! with `g ~ 1/z` at infinity. The density is `-Im g(x + i eps) / pi`.
//! For `t < 1` the law also carries an atom of mass `1 - t` at the origin.

use std::cell::RefCell;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::quad::integrate_band;
use super::series::{nc_fixed_point, GeometricTerm, IntPoly};
use crate::error::{Error, Result};

/// Default imaginary offset for Stieltjes inversion.
pub const DEFAULT_EPSILON: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EmaParams {
    t: f64,
}

impl EmaParams {
    pub fn new(t: f64) -> Result<Self> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "EMA parameter t = {t} must be positive"
            )));
        }
        Ok(Self { t })
    }

    /// `t = rZ/d`.
    pub fn from_ensemble(rank: usize, z: f64, d: usize) -> Result<Self> {
        Self::new(rank as f64 * z / d as f64)
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    /// Mass of the point at the origin, `max(0, 1 - t)`.
    pub fn atom_mass(&self) -> f64 {
        (1.0 - self.t).max(0.0)
    }

    /// Intervals where the density is positive.
    ///
    /// Multiplying the cubic by `z` gives real coefficients for real `x`; the
    /// density is positive exactly where that cubic has complex roots, i.e.
    /// where its discriminant is negative. The discriminant is quadratic in
    /// `y = x^2`: `4y^2 + (s^2 - 18s - 27) y - 4 s^3` with `s = t - 1`.
    pub fn support(&self) -> Vec<(f64, f64)> {
        let s = self.t - 1.0;
        let b = s * s - 18.0 * s - 27.0;
        let disc = b * b + 64.0 * s * s * s;
        if disc < 0.0 {
            return Vec::new();
        }
        let root = disc.sqrt();
        let y_hi = (-b + root) / 8.0;
        let y_lo = (-b - root) / 8.0;
        if y_hi <= 0.0 {
            return Vec::new();
        }
        let hi = y_hi.sqrt();
        if y_lo > 0.0 {
            let lo = y_lo.sqrt();
            vec![(-hi, -lo), (lo, hi)]
        } else {
            vec![(-hi, hi)]
        }
    }

    /// Support intervals, split at the origin. At `t = 1` the density grows
    /// like `|x|^(-1/3)` there, which quadrature handles only at an endpoint.
    pub fn integration_bands(&self) -> Vec<(f64, f64)> {
        let mut out = Vec::new();
        for (lo, hi) in self.support() {
            if lo < 0.0 && hi > 0.0 {
                out.push((lo, 0.0));
                out.push((0.0, hi));
            } else {
                out.push((lo, hi));
            }
        }
        out
    }

    /// Largest `|x|` in the support.
    pub fn edge(&self) -> f64 {
        self.support().iter().map(|&(_, b)| b).fold(0.0, f64::max)
    }
}

/// Modulus of the monic cubic evaluated at `g`.
pub fn cubic_residual(g: Complex64, z: Complex64, t: f64) -> f64 {
    (g * g * g + (t - 1.0) / z * g * g - g + 1.0 / z).norm()
}

/// All three roots of `g^3 + b g^2 + c g + d = 0`.
///
/// Cardano supplies the largest root, which is polished and deflated out;
/// the remaining pair comes from a stable quadratic. Near `z = 0` the
/// coefficients are huge and Cardano alone loses the small roots entirely.
fn cubic_roots(b: Complex64, c: Complex64, d: Complex64) -> [Complex64; 3] {
    let newton = |mut r: Complex64, steps: usize| {
        for _ in 0..steps {
            let f = ((r + b) * r + c) * r + d;
            let df = (3.0 * r + 2.0 * b) * r + c;
            let step = f / df;
            if !step.re.is_finite() || !step.im.is_finite() {
                break;
            }
            r -= step;
            if step.norm() <= 1e-16 * r.norm() {
                break;
            }
        }
        r
    };
    // Depressed cubic y^3 + p y + q with g = y - b/3.
    let shift = b / 3.0;
    let p = c - b * b / 3.0;
    let q = 2.0 * b * b * b / 27.0 - b * c / 3.0 + d;
    let sq = ((q / 2.0).powi(2) + (p / 3.0).powi(3)).sqrt();
    let cand1 = -q / 2.0 + sq;
    let cand2 = -q / 2.0 - sq;
    let big = if cand1.norm() >= cand2.norm() {
        cand1
    } else {
        cand2
    };
    let u = big.powf(1.0 / 3.0);
    let omega = Complex64::new(-0.5, 3f64.sqrt() / 2.0);
    let mut largest = Complex64::new(0.0, 0.0);
    let mut w = Complex64::new(1.0, 0.0);
    for _ in 0..3 {
        let uk = u * w;
        let vk = if uk.norm() > 0.0 {
            -p / (3.0 * uk)
        } else {
            Complex64::new(0.0, 0.0)
        };
        let r = uk + vk - shift;
        if r.norm() > largest.norm() {
            largest = r;
        }
        w *= omega;
    }
    if largest.norm() == 0.0 {
        return [largest; 3];
    }
    let r1 = newton(largest, 50);
    // Remaining roots: sum -b - r1, product -d / r1.
    let sum = -b - r1;
    let prod = -d / r1;
    let disc = (sum * sum - 4.0 * prod).sqrt();
    let plus = sum + disc;
    let minus = sum - disc;
    let wide = 0.5
        * if plus.norm() >= minus.norm() {
            plus
        } else {
            minus
        };
    let (r2, r3) = if wide.norm() > 0.0 {
        (wide, prod / wide)
    } else {
        (wide, wide)
    };
    [r1, newton(r2, 8), newton(r3, 8)]
}

fn ema_roots(z: Complex64, t: f64) -> [Complex64; 3] {
    let inv = 1.0 / z;
    cubic_roots((t - 1.0) * inv, Complex64::new(-1.0, 0.0), inv)
}

/// Index of the root nearest `target`, and whether the runner-up is clearly
/// farther away.
fn nearest(roots: &[Complex64; 3], target: Complex64) -> (usize, bool) {
    let mut dist: Vec<(f64, usize)> = roots
        .iter()
        .enumerate()
        .map(|(k, r)| ((r - target).norm(), k))
        .collect();
    dist.sort_by(|a, b| a.0.total_cmp(&b.0));
    (dist[0].1, dist[1].0 > 3.0 * dist[0].0)
}

const START_HEIGHT: f64 = 1e4;
const STEP_RATIO: f64 = 0.5;
const MAX_HALVINGS: u32 = 30;

/// Physical root of the EMA cubic at `z`, `Im z > 0`.
///
/// The branch is fixed at a far point `x + iH` (where it is the root nearest
/// `1/z`) and followed down the vertical line `Re z = x` to the target,
/// shrinking the step whenever the nearest-root match is not clear-cut.
pub fn ema_resolvent(z: Complex64, p: &EmaParams) -> Result<Complex64> {
    if !(z.im > 0.0) || !z.re.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "resolvent needs Im z > 0, got {z}"
        )));
    }
    let t = p.t;
    let start = START_HEIGHT.max(10.0 * z.re.abs()).max(10.0 * (t + 1.0));
    if z.im >= start || z.norm() >= 1e3 * (t + 1.0) {
        let roots = ema_roots(z, t);
        let (k, _) = nearest(&roots, 1.0 / z);
        return check_branch(z, &roots, k);
    }
    let x = z.re;
    let mut y = start;
    let mut g = {
        let z0 = Complex64::new(x, y);
        let roots = ema_roots(z0, t);
        roots[nearest(&roots, 1.0 / z0).0]
    };
    let mut ratio = STEP_RATIO;
    let mut halvings = 0;
    loop {
        let next_y = (y * ratio).max(z.im);
        let zn = Complex64::new(x, next_y);
        let roots = ema_roots(zn, t);
        let (k, clear) = nearest(&roots, g);
        if !clear && halvings < MAX_HALVINGS && next_y < y {
            ratio = ratio.sqrt();
            halvings += 1;
            continue;
        }
        g = roots[k];
        y = next_y;
        if y <= z.im {
            return check_branch(z, &roots, k);
        }
        if clear {
            ratio = (ratio * ratio).max(STEP_RATIO);
            halvings = halvings.saturating_sub(1);
        }
    }
}

fn check_branch(z: Complex64, roots: &[Complex64; 3], k: usize) -> Result<Complex64> {
    let chosen = roots[k];
    let scale = chosen.norm().max(1.0);
    let admissible = |r: &Complex64| r.im <= 1e-12 * scale;
    let ambiguous = roots
        .iter()
        .enumerate()
        .any(|(j, r)| j != k && admissible(r) && (r - chosen).norm() < 1e-10);
    if ambiguous {
        return Err(Error::NumericalBranch {
            re: z.re,
            im: z.im,
            roots: roots.iter().map(|r| (r.re, r.im)).collect(),
        });
    }
    Ok(chosen)
}

/// `rho(x) = -Im g(x + i eps) / pi`, clipped at zero.
pub fn ema_density(x: f64, p: &EmaParams, epsilon: f64) -> Result<f64> {
    if !(1e-12..=1e-3).contains(&epsilon) {
        return Err(Error::InvalidArgument(format!(
            "epsilon {epsilon} outside [1e-12, 1e-3]"
        )));
    }
    let g = ema_resolvent(Complex64::new(x, epsilon), p)?;
    Ok((-g.im / std::f64::consts::PI).max(0.0))
}

/// Continuous part of the density: the `eps`-smoothed atom at the origin is
/// removed when `t < 1`.
pub fn ema_continuous_density(x: f64, p: &EmaParams, epsilon: f64) -> Result<f64> {
    let rho = ema_density(x, p, epsilon)?;
    let atom = p.atom_mass();
    let lorentz = atom * epsilon / (std::f64::consts::PI * (x * x + epsilon * epsilon));
    Ok((rho - lorentz).max(0.0))
}

/// Maximum order accepted by [`ema_moments`].
pub const MAX_EMA_ORDER: usize = 64;

/// `mu_{2k}(t)` for `k = 0..=k_max` as exact integer polynomials in `t`,
/// from the non-crossing fixed point `f = 1 + a(x f)`, `a(x) = t x^2/(1 - x^2)`.
pub fn ema_moments(k_max: usize) -> Result<Vec<IntPoly>> {
    if k_max > MAX_EMA_ORDER {
        return Err(Error::Resource(format!(
            "EMA series limited to k <= {MAX_EMA_ORDER}"
        )));
    }
    let term = GeometricTerm {
        weight: IntPoly::monomial(1, 1),
        ratio: IntPoly::monomial(1, 0),
    };
    Ok(nc_fixed_point(&[term], IntPoly::monomial(1, 0), k_max)
        .coeffs()
        .to_vec())
}

/// Even moments `mu_{2k}` for `k = 0..=k_max` read off the resolvent itself:
/// Cauchy integrals of `g(z) z^{2k}` over a circle enclosing the support,
/// using `g(conj z) = conj g(z)` for the lower half.
pub fn resolvent_moments(p: &EmaParams, k_max: usize, n_nodes: usize) -> Result<Vec<f64>> {
    let radius = 1.5 * p.edge().max(1.0);
    // Nodes at angles (j + 1/2) pi / n_nodes in the upper half plane.
    let nodes: Vec<(Complex64, Complex64)> = (0..n_nodes)
        .map(|j| {
            let theta = (j as f64 + 0.5) * std::f64::consts::PI / n_nodes as f64;
            let z = Complex64::from_polar(radius, theta);
            ema_resolvent(z, p).map(|g| (z, g))
        })
        .collect::<Result<_>>()?;
    let mut out = Vec::with_capacity(k_max + 1);
    for k in 0..=k_max {
        let m = 2 * k as i32;
        // (1/2 pi i) contour integral of g z^m dz = mean over the circle of g z^{m+1};
        // the lower-half nodes are conjugates, so take twice the real part.
        let sum: f64 = nodes.iter().map(|(z, g)| (g * z.powi(m + 1)).re).sum();
        out.push(sum / n_nodes as f64);
    }
    Ok(out)
}

/// `int rho` over each band of the support, continuous part only.
pub fn ema_continuous_mass(p: &EmaParams, epsilon: f64, tol: f64) -> Result<f64> {
    integrate_moment(p, 0, epsilon, tol)
}

/// `int x^k rho_c(x) dx` over the support (continuous part).
pub fn integrate_moment(p: &EmaParams, k: i32, epsilon: f64, tol: f64) -> Result<f64> {
    let failure: RefCell<Option<Error>> = RefCell::new(None);
    let f = |x: f64| match ema_continuous_density(x, p, epsilon) {
        Ok(v) => v * x.powi(k),
        Err(e) => {
            failure.borrow_mut().get_or_insert(e);
            0.0
        }
    };
    let total = p
        .integration_bands()
        .into_iter()
        .map(|(a, b)| integrate_band(&f, a, b, tol))
        .sum();
    if let Some(e) = failure.into_inner() {
        return Err(e);
    }
    Ok(total)
}

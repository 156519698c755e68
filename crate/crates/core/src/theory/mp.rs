//! Marchenko–Pastur law of the block Laplacian.
//!
//! Continuous part `sqrt((b - x)(x - a)) / (4 pi x)` on `[a, b]` with
//! `a = (sqrt t - sqrt 2)^2`, `b = (sqrt t + sqrt 2)^2`. That part carries
//! mass `min(1, t/2)`; for `t < 2` the law is completed by an atom of mass
//! `1 - t/2` at the origin.

use serde::{Deserialize, Serialize};

use super::quad::integrate_band;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MpParams {
    t: f64,
    a: f64,
    b: f64,
}

impl MpParams {
    pub fn new(t: f64) -> Result<Self> {
        if !(t > 0.0 && t.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "Marchenko–Pastur parameter t = {t} must be positive"
            )));
        }
        let (st, s2) = (t.sqrt(), std::f64::consts::SQRT_2);
        Ok(Self {
            t,
            a: (st - s2).powi(2),
            b: (st + s2).powi(2),
        })
    }

    pub fn t(&self) -> f64 {
        self.t
    }

    /// Lower edge `a`.
    pub fn lower(&self) -> f64 {
        self.a
    }

    /// Upper edge `b`.
    pub fn upper(&self) -> f64 {
        self.b
    }

    pub fn atom_mass(&self) -> f64 {
        (1.0 - 0.5 * self.t).max(0.0)
    }
}

/// Continuous density; zero outside `[a, b]`. At `x = 0` with `a = 0` the
/// value diverges like `1/sqrt(x)` and `+inf` is returned.
pub fn mp_density(x: f64, p: &MpParams) -> f64 {
    if x < p.a || x > p.b {
        return 0.0;
    }
    if x == 0.0 {
        return f64::INFINITY;
    }
    ((p.b - x) * (x - p.a)).max(0.0).sqrt() / (4.0 * std::f64::consts::PI * x)
}

pub fn mp_atom_mass(p: &MpParams) -> f64 {
    p.atom_mass()
}

/// `int x^k rho(x) dx` over `[a, b]` for the continuous part.
pub fn mp_continuous_moment(p: &MpParams, k: i32, tol: f64) -> f64 {
    let f = |x: f64| {
        if x <= 0.0 {
            0.0
        } else {
            mp_density(x, p) * x.powi(k)
        }
    };
    integrate_band(&f, p.a, p.b, tol)
}

pub const MAX_MP_ORDER: usize = 32;

/// Moments `mu_0..=mu_{k_max}` of the full law. The atom contributes only to
/// `mu_0`, which is 1 by construction.
pub fn mp_moments(p: &MpParams, k_max: usize) -> Result<Vec<f64>> {
    if k_max > MAX_MP_ORDER {
        return Err(Error::Resource(format!(
            "Marchenko–Pastur moments limited to k <= {MAX_MP_ORDER}"
        )));
    }
    let mut out = vec![1.0];
    for k in 1..=k_max {
        let scale = p.b.powi(k as i32).max(1.0);
        out.push(mp_continuous_moment(p, k as i32, 1e-13 * scale));
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn edges_at_t_two() {
        let p = MpParams::new(2.0).unwrap();
        assert!(p.lower().abs() < 1e-15);
        assert!((p.upper() - 8.0).abs() < 1e-12);
        assert_eq!(p.atom_mass(), 0.0);
    }

    #[test]
    fn masses() {
        for (t, atom) in [(4.0, 0.0), (1.0, 0.5), (2.0, 0.0), (0.5, 0.75), (9.0, 0.0)] {
            let p = MpParams::new(t).unwrap();
            assert!((p.atom_mass() - atom).abs() < 1e-15);
            let cont = mp_continuous_moment(&p, 0, 1e-12);
            assert!((cont + atom - 1.0).abs() < 1e-6, "t={t}: {cont}");
            // int sqrt((b-x)(x-a))/x dx = pi ((a+b)/2 - sqrt(ab))
            let closed = ((p.lower() + p.upper()) / 2.0 - (p.lower() * p.upper()).sqrt()) / 4.0;
            assert!((cont - closed).abs() < 1e-6);
        }
    }

    /// Midpoint Riemann sum of `x rho(x)` on a fine grid.
    fn riemann_mean(p: &MpParams, n: usize) -> f64 {
        let h = (p.upper() - p.lower()) / n as f64;
        (0..n)
            .map(|k| {
                let x = p.lower() + (k as f64 + 0.5) * h;
                x * mp_density(x, p) * h
            })
            .sum()
    }

    #[test]
    fn first_moment_against_riemann_oracle() {
        let p = MpParams::new(4.0).unwrap();
        let m = mp_moments(&p, 3).unwrap();
        assert_eq!(m[0], 1.0);
        assert!((m[1] - riemann_mean(&p, 2_000_000)).abs() < 1e-5);
        assert!((m[1] - 4.0).abs() < 1e-9);
    }

    #[test]
    fn mean_collapses_for_small_t() {
        let p = MpParams::new(1e-6).unwrap();
        assert!(mp_moments(&p, 1).unwrap()[1] < 1e-5);
        assert!(mp_moments(&p, 33).is_err());
    }

    #[test]
    fn density_outside_support_is_zero() {
        let p = MpParams::new(4.0).unwrap();
        assert_eq!(mp_density(p.lower() - 1e-9, &p), 0.0);
        assert_eq!(mp_density(p.upper() + 1e-9, &p), 0.0);
        assert!(mp_density(4.0, &p) > 0.0);
        assert_eq!(mp_density(0.0, &MpParams::new(2.0).unwrap()), f64::INFINITY);
    }
}

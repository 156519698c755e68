//! Moment series for rank-`r` blocks whose vectors have different norms.

use serde::{Deserialize, Serialize};

use super::series::{nc_fixed_point, GeometricTerm};
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneralRadiiParams {
    pub z: f64,
    pub d: usize,
    pub radii: Vec<f64>,
}

impl GeneralRadiiParams {
    pub fn new(z: f64, d: usize, radii: Vec<f64>) -> Result<Self> {
        if d == 0 || !(z >= 0.0 && z.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "invalid Z = {z} or d = {d}"
            )));
        }
        if radii.is_empty() || radii.iter().any(|r| !(*r > 0.0 && r.is_finite())) {
            return Err(Error::InvalidArgument(
                "radii must be a nonempty list of positive reals".into(),
            ));
        }
        Ok(Self { z, d, radii })
    }
}

pub const MAX_RADII_ORDER: usize = 64;

/// `mu_{2k}`, `k = 0..=k_max`, from
/// `f = 1 + (Z/d) sum_a x^2 f^2 R_a^4 / (1 - x^2 f^2 R_a^4)`.
pub fn general_radii_moments(p: &GeneralRadiiParams, k_max: usize) -> Result<Vec<f64>> {
    if k_max > MAX_RADII_ORDER {
        return Err(Error::Resource(format!(
            "radii series limited to k <= {MAX_RADII_ORDER}"
        )));
    }
    let weight = p.z / p.d as f64;
    let terms: Vec<GeometricTerm<f64>> = p
        .radii
        .iter()
        .map(|r| GeometricTerm {
            weight,
            ratio: r.powi(4),
        })
        .collect();
    Ok(nc_fixed_point(&terms, 1.0, k_max).coeffs().to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::theory::ema::ema_moments;
    use crate::theory::series::Series;

    /// Plain fixed-point iteration `f <- 1 + a(y f^2)` on truncated series,
    /// composing `a` as the geometric sum `sum_m (c u)^m`.
    fn iterate_oracle(weight: f64, ratios: &[f64], k_max: usize) -> Vec<f64> {
        let n = k_max + 1;
        let mut f = Series::from_coeffs({
            let mut c = vec![0.0; n];
            c[0] = 1.0;
            c
        });
        for _ in 0..n + 2 {
            let f2 = f.mul_truncated(&f);
            // u = y f^2
            let mut uc = vec![0.0; n];
            uc[1..].copy_from_slice(&f2.coeffs()[..n - 1]);
            let u = Series::from_coeffs(uc);
            let mut next = vec![0.0; n];
            next[0] = 1.0;
            for &c in ratios {
                let cu = Series::from_coeffs(u.coeffs().iter().map(|x| c * x).collect());
                let mut power = cu.clone();
                for _ in 1..n {
                    for (k, v) in power.coeffs().iter().enumerate() {
                        next[k] += weight * v;
                    }
                    power = power.mul_truncated(&cu);
                }
            }
            f = Series::from_coeffs(next);
        }
        f.coeffs().to_vec()
    }

    #[test]
    fn unit_radii_reduce_to_ema() {
        let (z, d, r) = (6.0, 4usize, 3usize);
        let p = GeneralRadiiParams::new(z, d, vec![1.0; r]).unwrap();
        let got = general_radii_moments(&p, 10).unwrap();
        let t = r as f64 * z / d as f64;
        for (k, poly) in ema_moments(10).unwrap().iter().enumerate() {
            let want = poly.eval(t);
            assert!(
                (got[k] - want).abs() <= 1e-12 * want.abs().max(1.0),
                "k={k}"
            );
        }
    }

    #[test]
    fn second_moment_is_weighted_fourth_powers() {
        let p = GeneralRadiiParams::new(3.0, 5, vec![0.5, 1.2, 2.0]).unwrap();
        let m = general_radii_moments(&p, 2).unwrap();
        let s: f64 = p.radii.iter().map(|r| r.powi(4)).sum();
        assert!((m[1] - 0.6 * s).abs() < 1e-12);
    }

    #[test]
    fn two_radii_golden_values() {
        // Z/d = 1, radii {1, 2}: mu_2 = 1 + 16, mu_4 = (1 + 256) + 2 * 17^2.
        let p = GeneralRadiiParams::new(4.0, 4, vec![1.0, 2.0]).unwrap();
        let m = general_radii_moments(&p, 6).unwrap();
        let oracle = iterate_oracle(1.0, &[1.0, 16.0], 6);
        for k in 0..=6 {
            assert!(
                (m[k] - oracle[k]).abs() <= 1e-9 * oracle[k].abs().max(1.0),
                "k={k}"
            );
        }
        assert_eq!(m[1], 17.0);
        assert_eq!(m[2], 835.0);
    }

    #[test]
    fn rejects_bad_parameters() {
        assert!(GeneralRadiiParams::new(1.0, 0, vec![1.0]).is_err());
        assert!(GeneralRadiiParams::new(1.0, 2, vec![]).is_err());
        assert!(GeneralRadiiParams::new(1.0, 2, vec![0.0]).is_err());
        let p = GeneralRadiiParams::new(1.0, 2, vec![1.0]).unwrap();
        assert!(general_radii_moments(&p, 65).is_err());
    }
}

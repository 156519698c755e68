//! Exact ratios between expectations under different block measures.
//!
//! For any word, `<tr word>_measure = F(d) <tr word>_gauss` where `F` is a
//! product over the distinct blocks of a gamma-function ratio depending only
//! on the total power `r_k` of block `k`. Vector cases compare rank-one
//! blocks with sphere/ball vectors against Gaussian vectors; matrix cases
//! compare fixed/bounded trace against the Gaussian symmetric measure.

use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum RatioCase {
    VectorBall,
    VectorSphere,
    MatrixBounded,
    MatrixFixed,
}

impl RatioCase {
    pub fn is_vector(self) -> bool {
        matches!(self, Self::VectorBall | Self::VectorSphere)
    }
}

/// `F(d) = prod_k f(d, r_k)`:
///
/// - sphere: `d^r Gamma(d/2) / (2^r Gamma(d/2 + r))`
/// - ball: `d^r Gamma(d/2 + 1) / (2^r Gamma(d/2 + r + 1))`
/// - fixed trace: `d^r Gamma(D) / (4^{r/2} Gamma(D + r/2))`, `D = d(d+1)/4`
/// - bounded trace: as fixed trace with `D + 1`.
pub fn measure_ratio_factor(case: RatioCase, d: usize, ranks: &[u32]) -> Result<f64> {
    if d == 0 {
        return Err(Error::InvalidArgument("dimension must be positive".into()));
    }
    if ranks.is_empty() || ranks.contains(&0) {
        return Err(Error::InvalidArgument(
            "ranks must be a nonempty list of positive integers".into(),
        ));
    }
    if case.is_vector() && ranks.iter().any(|r| r % 2 != 0) {
        return Err(Error::InvalidArgument(
            "vector-case ranks must be even".into(),
        ));
    }
    let df = d as f64;
    let log: f64 = ranks
        .iter()
        .map(|&r| {
            let r = r as f64;
            match case {
                RatioCase::VectorSphere => {
                    let h = df / 2.0;
                    r * df.ln() - r * 2f64.ln() + ln_gamma(h) - ln_gamma(h + r)
                }
                RatioCase::VectorBall => {
                    let h = df / 2.0 + 1.0;
                    r * df.ln() - r * 2f64.ln() + ln_gamma(h) - ln_gamma(h + r)
                }
                RatioCase::MatrixFixed | RatioCase::MatrixBounded => {
                    let mut big = df * (df + 1.0) / 4.0;
                    if case == RatioCase::MatrixBounded {
                        big += 1.0;
                    }
                    r * df.ln() - r * 2f64.ln() + ln_gamma(big) - ln_gamma(big + r / 2.0)
                }
            }
        })
        .sum();
    Ok(log.exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn sphere_square_at_d4() {
        let f = measure_ratio_factor(RatioCase::VectorSphere, 4, &[2]).unwrap();
        assert!((f - 2.0 / 3.0).abs() < 1e-14);
    }

    #[test]
    fn matrix_fixed_single_power_at_d2() {
        // 2 Gamma(3/2) / (2 Gamma(2)) = Gamma(3/2) = sqrt(pi)/2
        let f = measure_ratio_factor(RatioCase::MatrixFixed, 2, &[1]).unwrap();
        assert!((f - std::f64::consts::PI.sqrt() / 2.0).abs() < 1e-13);
        assert!((f - 0.8862).abs() < 1e-4);
    }

    #[test]
    fn closed_forms_for_trace_of_square() {
        for d in 1..20usize {
            let df = d as f64;
            // <|v|^4>: sphere R^4, gauss R^4 (d + 2)/d, ball R^4 d/(d + 4)
            let s = measure_ratio_factor(RatioCase::VectorSphere, d, &[2]).unwrap();
            assert!((s - df / (df + 2.0)).abs() < 1e-12);
            let b = measure_ratio_factor(RatioCase::VectorBall, d, &[2]).unwrap();
            assert!((b - df * df / ((df + 2.0) * (df + 4.0))).abs() < 1e-12);
            // tr X^2: fixed d R^2, gauss (d + 1) R^2
            let m = measure_ratio_factor(RatioCase::MatrixFixed, d, &[2]).unwrap();
            assert!((m - df / (df + 1.0)).abs() < 1e-12);
        }
    }

    #[test]
    fn product_over_blocks() {
        let one = measure_ratio_factor(RatioCase::VectorBall, 6, &[4]).unwrap();
        let two = measure_ratio_factor(RatioCase::VectorBall, 6, &[4, 4]).unwrap();
        assert!((two - one * one).abs() < 1e-14);
    }

    #[test]
    fn large_dimension_limit() {
        let f = measure_ratio_factor(RatioCase::VectorSphere, 10_000, &[2]).unwrap();
        assert!((f - 1.0).abs() < 1e-3);
    }

    #[test]
    fn monotone_approach_to_one() {
        let cases = [
            RatioCase::VectorBall,
            RatioCase::VectorSphere,
            RatioCase::MatrixBounded,
            RatioCase::MatrixFixed,
        ];
        for case in cases {
            for ranks in [vec![2u32], vec![4], vec![2, 4], vec![6, 2, 2]] {
                let mut prev = 0.0;
                for d in 2..=2048 {
                    let f = measure_ratio_factor(case, d, &ranks).unwrap();
                    assert!(
                        f <= 1.0 + 1e-12 && f >= prev - 1e-12,
                        "{case:?} {ranks:?} d={d}"
                    );
                    prev = f;
                }
                assert!(prev > 0.95, "{case:?} {ranks:?} {prev}");
            }
        }
    }

    #[test]
    fn precondition_violations() {
        assert!(measure_ratio_factor(RatioCase::VectorSphere, 4, &[]).is_err());
        assert!(measure_ratio_factor(RatioCase::VectorSphere, 4, &[3]).is_err());
        assert!(measure_ratio_factor(RatioCase::MatrixFixed, 4, &[0]).is_err());
        assert!(measure_ratio_factor(RatioCase::MatrixFixed, 0, &[2]).is_err());
    }
}

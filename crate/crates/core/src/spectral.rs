//! Eigenvalues, empirical moments and histograms, and the Kolmogorov–Smirnov
//! distance to a theoretical law.

use faer::{Mat, Side};

use crate::assembly::BlockSparseMatrix;
use crate::error::{Error, Result};
use crate::stats::Accumulator;

/// Largest `N * d` diagonalized by default.
pub const DEFAULT_DENSE_LIMIT: usize = 5000;

/// A cumulative distribution function with explicit left limits, so laws with
/// atoms can be compared against step functions.
pub trait Cdf {
    /// `P(X <= x)`.
    fn cdf(&self, x: f64) -> f64;
    /// `P(X < x)`.
    fn cdf_left(&self, x: f64) -> f64;
}

impl<F: Fn(f64) -> f64> Cdf for F {
    fn cdf(&self, x: f64) -> f64 {
        self(x)
    }
    fn cdf_left(&self, x: f64) -> f64 {
        self(x)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum {
    eigenvalues: Vec<f64>,
    n_vertices: usize,
    block_dim: usize,
}

impl Spectrum {
    /// Sorts the values; `n_vertices * block_dim` must equal their count.
    pub fn new(mut eigenvalues: Vec<f64>, n_vertices: usize, block_dim: usize) -> Result<Self> {
        if eigenvalues.len() != n_vertices * block_dim {
            return Err(Error::DimensionMismatch {
                expected: n_vertices * block_dim,
                got: eigenvalues.len(),
            });
        }
        if eigenvalues.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite eigenvalue".into()));
        }
        eigenvalues.sort_by(f64::total_cmp);
        Ok(Self {
            eigenvalues,
            n_vertices,
            block_dim,
        })
    }

    /// A spectrum not tied to a block structure (`d = 1`).
    pub fn from_values(values: Vec<f64>) -> Result<Self> {
        let n = values.len();
        Self::new(values, n, 1)
    }

    pub fn eigenvalues(&self) -> &[f64] {
        &self.eigenvalues
    }

    pub fn len(&self) -> usize {
        self.eigenvalues.len()
    }

    pub fn is_empty(&self) -> bool {
        self.eigenvalues.is_empty()
    }

    pub fn n_vertices(&self) -> usize {
        self.n_vertices
    }

    pub fn block_dim(&self) -> usize {
        self.block_dim
    }

    /// Replaces every `|lambda| <= tol` by exactly zero.
    pub fn snap_zeros(&mut self, tol: f64) {
        for v in &mut self.eigenvalues {
            if v.abs() <= tol {
                *v = 0.0;
            }
        }
    }

    /// Fraction of eigenvalues with `|lambda| <= tol`.
    pub fn zero_fraction(&self, tol: f64) -> f64 {
        if self.is_empty() {
            return 0.0;
        }
        self.eigenvalues.iter().filter(|v| v.abs() <= tol).count() as f64 / self.len() as f64
    }

    pub fn spectral_radius(&self) -> f64 {
        self.eigenvalues.iter().fold(0.0, |m, v| m.max(v.abs()))
    }
}

pub fn eigenvalues(a: &BlockSparseMatrix) -> Result<Spectrum> {
    eigenvalues_with_limit(a, DEFAULT_DENSE_LIMIT)
}

pub fn eigenvalues_with_limit(a: &BlockSparseMatrix, dense_limit: usize) -> Result<Spectrum> {
    let n = a.size();
    if n > dense_limit {
        return Err(Error::Resource(format!(
            "matrix size {n} exceeds the dense limit {dense_limit}"
        )));
    }
    if n == 0 {
        return Spectrum::new(Vec::new(), a.n_vertices(), a.block_dim());
    }
    // Internal parallelism would make rounding depend on the thread count;
    // callers parallelize across realizations instead.
    static SEQUENTIAL: std::sync::Once = std::sync::Once::new();
    SEQUENTIAL.call_once(|| faer::set_global_parallelism(faer::Par::Seq));
    let dense = a.to_dense();
    let m = Mat::<f64>::from_fn(n, n, |i, j| dense[(i, j)]);
    let values = m
        .self_adjoint_eigenvalues(Side::Lower)
        .map_err(|e| Error::Resource(format!("eigensolver failed: {e:?}")))?;
    Spectrum::new(values, a.n_vertices(), a.block_dim())
}

/// Moments `mu_0..=mu_{p_max}`, with standard errors when averaged over
/// independent realizations.
#[derive(Debug, Clone, PartialEq)]
pub struct EmpiricalMoments {
    pub moments: Vec<f64>,
    pub stderr: Option<Vec<f64>>,
}

impl EmpiricalMoments {
    pub fn p_max(&self) -> usize {
        self.moments.len() - 1
    }

    pub fn get(&self, p: usize) -> f64 {
        self.moments[p]
    }

    pub fn stderr_of(&self, p: usize) -> f64 {
        self.stderr.as_ref().map_or(0.0, |s| s[p])
    }

    /// Pointwise mean across realizations with the standard error of the mean.
    pub fn average(samples: &[EmpiricalMoments]) -> Result<Self> {
        let first = samples
            .first()
            .ok_or_else(|| Error::InvalidArgument("no realizations".into()))?;
        let len = first.moments.len();
        if let Some(s) = samples.iter().find(|s| s.moments.len() != len) {
            return Err(Error::DimensionMismatch {
                expected: len,
                got: s.moments.len(),
            });
        }
        let accs: Vec<Accumulator> = (0..len)
            .map(|p| samples.iter().map(|s| s.moments[p]).collect())
            .collect();
        Ok(Self {
            moments: accs.iter().map(Accumulator::mean).collect(),
            stderr: Some(accs.iter().map(Accumulator::stderr).collect()),
        })
    }
}

pub fn empirical_moments(s: &Spectrum, p_max: usize) -> EmpiricalMoments {
    let n = s.len().max(1) as f64;
    let mut sums = vec![0.0; p_max + 1];
    for &v in s.eigenvalues() {
        let mut pow = 1.0;
        for acc in sums.iter_mut() {
            *acc += pow;
            pow *= v;
        }
    }
    let mut moments: Vec<f64> = sums.into_iter().map(|x| x / n).collect();
    moments[0] = 1.0;
    EmpiricalMoments {
        moments,
        stderr: None,
    }
}

/// Normalized histogram over `[lo, hi]` as `(bin_center, density)` pairs.
/// Values outside the range are dropped; the top edge is inclusive.
pub fn esd_histogram(s: &Spectrum, n_bins: usize, range: (f64, f64)) -> Result<Vec<(f64, f64)>> {
    let (lo, hi) = range;
    if n_bins == 0 || !(hi > lo) || !lo.is_finite() || !hi.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "histogram needs n_bins >= 1 and lo < hi, got {n_bins}, [{lo}, {hi}]"
        )));
    }
    let width = (hi - lo) / n_bins as f64;
    let mut counts = vec![0usize; n_bins];
    for &v in s.eigenvalues() {
        if v < lo || v > hi {
            continue;
        }
        let k = (((v - lo) / width) as usize).min(n_bins - 1);
        counts[k] += 1;
    }
    let norm = s.len().max(1) as f64 * width;
    Ok(counts
        .into_iter()
        .enumerate()
        .map(|(k, c)| (lo + (k as f64 + 0.5) * width, c as f64 / norm))
        .collect())
}

/// Tolerance for rounding noise in the monotonicity check.
const CDF_SLACK: f64 = 1e-12;

/// `sup_x |F_emp(x) - F(x)|`, evaluated at the sample points from both sides.
/// Ties are grouped so atoms in the law are compared against the full jump.
pub fn ks_distance<C: Cdf + ?Sized>(s: &Spectrum, cdf: &C) -> Result<f64> {
    let xs = s.eigenvalues();
    let n = xs.len();
    if n == 0 {
        return Err(Error::InvalidArgument("empty spectrum".into()));
    }
    let nf = n as f64;
    let mut dist: f64 = 0.0;
    let mut prev = 0.0;
    let mut k = 0;
    while k < n {
        let x = xs[k];
        let mut end = k + 1;
        while end < n && xs[end] == x {
            end += 1;
        }
        let left = cdf.cdf_left(x);
        let right = cdf.cdf(x);
        let valid = |v: f64| v.is_finite() && (-CDF_SLACK..=1.0 + CDF_SLACK).contains(&v);
        if !valid(left) || !valid(right) || left < prev - CDF_SLACK || right < left - CDF_SLACK {
            return Err(Error::InvalidCdf(format!(
                "not a monotone cdf at x = {x}: left {left}, right {right}, previous {prev}"
            )));
        }
        prev = right;
        dist = dist
            .max((left - k as f64 / nf).abs())
            .max((right - end as f64 / nf).abs());
        k = end;
    }
    Ok(dist.min(1.0))
}

pub fn spectrum_csv(s: &Spectrum) -> String {
    let mut out = String::from("eigenvalue\n");
    for v in s.eigenvalues() {
        out.push_str(&format!("{v:?}\n"));
    }
    out
}

pub fn moments_csv(m: &EmpiricalMoments) -> String {
    let mut out = String::from("p,mu,stderr\n");
    for (p, mu) in m.moments.iter().enumerate() {
        out.push_str(&format!("{p},{mu:?},{:?}\n", m.stderr_of(p)));
    }
    out
}

pub fn histogram_csv(h: &[(f64, f64)]) -> String {
    let mut out = String::from("x,density\n");
    for (x, y) in h {
        out.push_str(&format!("{x:?},{y:?}\n"));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::assembly::{assemble_adjacency, MatrixKind};
    use crate::blocks::{BlockMeasure, MeasureFamily, SymmetricBlock};
    use crate::graph::{sample_edges, EdgeSet, GraphSpec};
    use crate::rng::seed_stream;
    use rand::Rng;

    fn uniform_cdf(x: f64) -> f64 {
        x.clamp(0.0, 1.0)
    }

    #[test]
    fn zero_matrix_spectrum() {
        let z = BlockSparseMatrix::zeros(2, 2, MatrixKind::Adjacency);
        assert_eq!(eigenvalues(&z).unwrap().eigenvalues(), &[0.0; 4]);
    }

    #[test]
    fn single_edge_spectrum() {
        let e = EdgeSet::from_pairs(2, [(0, 1)]).unwrap();
        let m = BlockMeasure::new(MeasureFamily::RankOneSphere, 3, 1.0).unwrap();
        let a = assemble_adjacency(&e, &m, &mut seed_stream(1, 0)).unwrap();
        let s = eigenvalues(&a).unwrap();
        for (x, y) in s.eigenvalues().iter().zip([-1.0, 0.0, 0.0, 0.0, 0.0, 1.0]) {
            assert!((x - y).abs() < 1e-8);
        }
    }

    #[test]
    fn complete_graph_scalar_spectrum() {
        let e = EdgeSet::complete(3);
        let a = BlockSparseMatrix::from_edge_blocks(
            &e,
            vec![SymmetricBlock::identity(1); 3],
            MatrixKind::Adjacency,
        )
        .unwrap();
        let s = eigenvalues(&a).unwrap();
        for (x, y) in s.eigenvalues().iter().zip([-1.0, -1.0, 2.0]) {
            assert!((x - y).abs() < 1e-12);
        }
    }

    #[test]
    fn dense_limit_is_enforced() {
        let z = BlockSparseMatrix::zeros(10, 3, MatrixKind::Adjacency);
        assert!(matches!(
            eigenvalues_with_limit(&z, 29),
            Err(Error::Resource(_))
        ));
        assert!(eigenvalues_with_limit(&z, 30).is_ok());
    }

    #[test]
    fn trace_and_square_trace_match_eigenvalues() {
        let mut rng = seed_stream(2, 0);
        let e = sample_edges(&GraphSpec::erdos_renyi(80, 4.0), &mut rng).unwrap();
        let m = BlockMeasure::new(MeasureFamily::FullGauss, 3, 1.0).unwrap();
        for kind in [MatrixKind::Adjacency, MatrixKind::Laplacian] {
            let a = crate::assembly::assemble(kind, &e, &m, &mut rng).unwrap();
            let s = eigenvalues(&a).unwrap();
            let sum: f64 = s.eigenvalues().iter().sum();
            assert!(
                (sum - a.trace()).abs() <= 1e-8 * s.len() as f64 * s.spectral_radius().max(1.0)
            );
            let mu2 = empirical_moments(&s, 2).get(2);
            let block = a.trace_of_square() / a.size() as f64;
            assert!((mu2 - block).abs() <= 1e-8 * block);
        }
    }

    #[test]
    fn moments_of_small_spectrum() {
        let s = Spectrum::from_values(vec![-1.0, 0.0, 0.0, 0.0, 0.0, 1.0]).unwrap();
        let m = empirical_moments(&s, 5);
        assert_eq!(m.get(0), 1.0);
        assert!((m.get(2) - 1.0 / 3.0).abs() < 1e-15);
        assert!((m.get(4) - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(m.get(1), 0.0);
        assert_eq!(m.get(3), 0.0);
        assert_eq!(m.get(5), 0.0);
    }

    #[test]
    fn averaged_moments_carry_stderr() {
        let a = EmpiricalMoments {
            moments: vec![1.0, 0.0, 2.0],
            stderr: None,
        };
        let b = EmpiricalMoments {
            moments: vec![1.0, 0.0, 4.0],
            stderr: None,
        };
        let avg = EmpiricalMoments::average(&[a, b]).unwrap();
        assert_eq!(avg.get(2), 3.0);
        assert!((avg.stderr_of(2) - 1.0).abs() < 1e-12);
        assert_eq!(avg.stderr_of(0), 0.0);
    }

    #[test]
    fn histogram_examples() {
        let s = Spectrum::from_values(vec![0.0]).unwrap();
        assert_eq!(esd_histogram(&s, 1, (-1.0, 1.0)).unwrap(), vec![(0.0, 0.5)]);
        let far = esd_histogram(&s, 4, (5.0, 6.0)).unwrap();
        assert!(far.iter().all(|&(_, y)| y == 0.0));
        assert!(esd_histogram(&s, 0, (0.0, 1.0)).is_err());

        let mut rng = seed_stream(3, 0);
        let n = 20000;
        let vals: Vec<f64> = (0..n).map(|_| rng.random::<f64>()).collect();
        let s = Spectrum::from_values(vals).unwrap();
        let h = esd_histogram(&s, 10, (0.0, 1.0)).unwrap();
        let per_bin = n as f64 / 10.0;
        let total: f64 = h.iter().map(|&(_, y)| y * 0.1).sum();
        assert!((total - 1.0).abs() < 1e-12);
        for &(_, y) in &h {
            assert!((y - 1.0).abs() < 5.0 / per_bin.sqrt());
        }
    }

    #[test]
    fn ks_at_quantiles_is_half_step() {
        let n = 200;
        let vals: Vec<f64> = (1..=n).map(|k| (k as f64 - 0.5) / n as f64).collect();
        let s = Spectrum::from_values(vals).unwrap();
        let d = ks_distance(&s, &uniform_cdf).unwrap();
        assert!((d - 0.5 / n as f64).abs() < 1e-12);
    }

    #[test]
    fn ks_below_support_is_one() {
        let s = Spectrum::from_values(vec![-3.0, -2.5, -2.0]).unwrap();
        assert!((ks_distance(&s, &uniform_cdf).unwrap() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn ks_rejects_decreasing_cdf() {
        let s = Spectrum::from_values(vec![0.1, 0.2, 0.3]).unwrap();
        let bad = |x: f64| 1.0 - x;
        assert!(matches!(ks_distance(&s, &bad), Err(Error::InvalidCdf(_))));
        let out_of_range = |x: f64| 2.0 * x;
        assert!(matches!(
            ks_distance(&Spectrum::from_values(vec![0.9]).unwrap(), &out_of_range),
            Err(Error::InvalidCdf(_))
        ));
    }

    #[test]
    fn ks_of_samples_from_the_law_itself() {
        // Kolmogorov critical value at 95%: 1.358/sqrt(n) < 1.63/sqrt(n).
        let n = 10_000;
        let mut pass = 0;
        let trials = 40;
        for k in 0..trials {
            let mut rng = seed_stream(4, k);
            let s = Spectrum::from_values((0..n).map(|_| rng.random::<f64>()).collect()).unwrap();
            if ks_distance(&s, &uniform_cdf).unwrap() < 1.63 / (n as f64).sqrt() {
                pass += 1;
            }
        }
        assert!(pass as f64 >= 0.95 * trials as f64);
    }

    #[test]
    fn ks_handles_atoms() {
        struct Atom;
        impl Cdf for Atom {
            fn cdf(&self, x: f64) -> f64 {
                if x >= 0.0 {
                    0.5 + 0.5 * x.clamp(0.0, 1.0)
                } else {
                    0.0
                }
            }
            fn cdf_left(&self, x: f64) -> f64 {
                if x > 0.0 {
                    0.5 + 0.5 * x.clamp(0.0, 1.0)
                } else {
                    0.0
                }
            }
        }
        let vals = vec![0.0, 0.0, 0.25, 0.75];
        let s = Spectrum::from_values(vals).unwrap();
        let d = ks_distance(&s, &Atom).unwrap();
        assert!((d - 0.125).abs() < 1e-12, "{d}");
    }

    #[test]
    fn csv_emitters() {
        let s = Spectrum::from_values(vec![1.0, -0.5]).unwrap();
        assert_eq!(spectrum_csv(&s), "eigenvalue\n-0.5\n1.0\n");
        let m = empirical_moments(&s, 1);
        assert_eq!(moments_csv(&m), "p,mu,stderr\n0,1.0,0.0\n1,0.25,0.0\n");
        assert_eq!(histogram_csv(&[(0.5, 2.0)]), "x,density\n0.5,2.0\n");
    }
}

//! Random `d x d` real symmetric blocks.
//!
//! Finite-rank families are sums of outer products `sum_a |v_a><v_a|` of
//! random vectors; full-rank families are rotation-invariant laws on the
//! space of symmetric matrices. All samplers are constructive: no rejection
//! and no normalization constants are needed.

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng::derived_stream;
use crate::stats::{Accumulator, Estimate};
use crate::walks::Word;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum MeasureFamily {
    /// `|v><v|`, `v` uniform on the sphere of radius `R`.
    RankOneSphere,
    /// `|v><v|`, `v` uniform in the ball of radius `R`.
    RankOneBall,
    /// `|v><v|`, `v` with i.i.d. centered Gaussian components of variance `R^2/d`.
    RankOneGauss,
    /// `|v><v|`, `v` uniform in the cube `[-R, R]^d`.
    RankOneCube,
    /// `sum_a |v_a><v_a|` over an orthogonal set of `r` vectors of norm `R`.
    RankROrthogonal,
    /// `sum_a |v_a><v_a|` over `r` independent sphere vectors of norms `R_a`.
    RankRIndependent,
    /// Uniform on the shell `(1/d) tr X^2 = R^2`.
    FullFixedTrace,
    /// Uniform in the ball `(1/d) tr X^2 <= R^2`.
    FullBoundedTrace,
    /// Density proportional to `exp(-(d / 4R^2) tr X^2)`.
    FullGauss,
}

impl MeasureFamily {
    pub const ALL: [MeasureFamily; 9] = [
        MeasureFamily::RankOneSphere,
        MeasureFamily::RankOneBall,
        MeasureFamily::RankOneGauss,
        MeasureFamily::RankOneCube,
        MeasureFamily::RankROrthogonal,
        MeasureFamily::RankRIndependent,
        MeasureFamily::FullFixedTrace,
        MeasureFamily::FullBoundedTrace,
        MeasureFamily::FullGauss,
    ];

    pub fn is_full_rank(self) -> bool {
        matches!(
            self,
            Self::FullFixedTrace | Self::FullBoundedTrace | Self::FullGauss
        )
    }

    pub fn is_rank_one(self) -> bool {
        matches!(
            self,
            Self::RankOneSphere | Self::RankOneBall | Self::RankOneGauss | Self::RankOneCube
        )
    }

    pub fn name(self) -> &'static str {
        match self {
            Self::RankOneSphere => "rank-one-sphere",
            Self::RankOneBall => "rank-one-ball",
            Self::RankOneGauss => "rank-one-gauss",
            Self::RankOneCube => "rank-one-cube",
            Self::RankROrthogonal => "rank-r-orthogonal",
            Self::RankRIndependent => "rank-r-independent",
            Self::FullFixedTrace => "full-fixed-trace",
            Self::FullBoundedTrace => "full-bounded-trace",
            Self::FullGauss => "full-gauss",
        }
    }
}

impl std::str::FromStr for MeasureFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        MeasureFamily::ALL
            .into_iter()
            .find(|f| f.name() == s)
            .ok_or_else(|| Error::InvalidMeasure(format!("unknown measure family `{s}`")))
    }
}

/// Parametrized block distribution.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockMeasure {
    d: usize,
    family: MeasureFamily,
    rank: usize,
    radius: f64,
    radii: Vec<f64>,
}

impl BlockMeasure {
    /// Rank-one or full-rank family with radius `R`. The rank is implied.
    pub fn new(family: MeasureFamily, d: usize, radius: f64) -> Result<Self> {
        let rank = if family.is_full_rank() { d } else { 1 };
        Self::with_rank(family, d, rank, radius)
    }

    /// Rank-`r` family with all radii equal to `R`.
    pub fn with_rank(family: MeasureFamily, d: usize, rank: usize, radius: f64) -> Result<Self> {
        let m = Self {
            d,
            family,
            rank,
            radius,
            radii: vec![radius; rank],
        };
        m.validate()?;
        Ok(m)
    }

    /// Independent-vector rank-`r` blocks with individual norms `R_a`.
    pub fn with_radii(d: usize, radii: Vec<f64>) -> Result<Self> {
        let rank = radii.len();
        let radius = radii.first().copied().unwrap_or(1.0);
        let m = Self {
            d,
            family: MeasureFamily::RankRIndependent,
            rank,
            radius,
            radii,
        };
        m.validate()?;
        Ok(m)
    }

    pub fn validate(&self) -> Result<()> {
        if self.d == 0 {
            return Err(Error::InvalidMeasure(
                "block dimension must be positive".into(),
            ));
        }
        if self.rank == 0 || self.rank > self.d {
            return Err(Error::InvalidMeasure(format!(
                "rank {} must lie in 1..={}",
                self.rank, self.d
            )));
        }
        if self.family.is_rank_one() && self.rank != 1 {
            return Err(Error::InvalidMeasure(format!(
                "{} has rank 1",
                self.family.name()
            )));
        }
        if self.family.is_full_rank() && self.rank != self.d {
            return Err(Error::InvalidMeasure(format!(
                "{} has rank d",
                self.family.name()
            )));
        }
        if !(self.radius > 0.0 && self.radius.is_finite()) {
            return Err(Error::InvalidMeasure(format!(
                "radius {} must be positive",
                self.radius
            )));
        }
        if self.radii.len() != self.rank || self.radii.iter().any(|r| !(*r > 0.0 && r.is_finite()))
        {
            return Err(Error::InvalidMeasure(
                "radii must be positive, one per vector".into(),
            ));
        }
        Ok(())
    }

    pub fn dim(&self) -> usize {
        self.d
    }

    pub fn family(&self) -> MeasureFamily {
        self.family
    }

    pub fn rank(&self) -> usize {
        self.rank
    }

    pub fn radius(&self) -> f64 {
        self.radius
    }

    pub fn radii(&self) -> &[f64] {
        &self.radii
    }

    /// Same family and radii in another dimension.
    pub fn at_dim(&self, d: usize) -> Result<Self> {
        let rank = if self.family.is_full_rank() {
            d
        } else {
            self.rank
        };
        let mut m = self.clone();
        m.d = d;
        m.rank = rank;
        if self.family.is_full_rank() {
            m.radii = vec![self.radius; d];
        }
        m.validate()?;
        Ok(m)
    }
}

/// A sampled block. Finite-rank samples keep their generating vectors as the
/// columns of `factor` so that `entries = factor * factor^T`.
#[derive(Debug, Clone, PartialEq)]
pub struct SymmetricBlock {
    entries: DMatrix<f64>,
    factor: Option<DMatrix<f64>>,
}

impl SymmetricBlock {
    /// Wraps a dense matrix; fails unless it is exactly symmetric.
    pub fn from_dense(entries: DMatrix<f64>) -> Result<Self> {
        if !entries.is_square() {
            return Err(Error::DimensionMismatch {
                expected: entries.nrows(),
                got: entries.ncols(),
            });
        }
        if entries != entries.transpose() {
            return Err(Error::InvalidArgument("block is not symmetric".into()));
        }
        Ok(Self {
            entries,
            factor: None,
        })
    }

    /// `sum_a |v_a><v_a|` over the columns of `factor`, exactly symmetric.
    pub fn from_factor(factor: DMatrix<f64>) -> Self {
        let d = factor.nrows();
        let mut entries = DMatrix::zeros(d, d);
        for i in 0..d {
            for j in i..d {
                let mut s = 0.0;
                for a in 0..factor.ncols() {
                    s += factor[(i, a)] * factor[(j, a)];
                }
                entries[(i, j)] = s;
                entries[(j, i)] = s;
            }
        }
        Self {
            entries,
            factor: Some(factor),
        }
    }

    pub fn identity(d: usize) -> Self {
        Self {
            entries: DMatrix::identity(d, d),
            factor: None,
        }
    }

    pub fn zeros(d: usize) -> Self {
        Self {
            entries: DMatrix::zeros(d, d),
            factor: None,
        }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &DMatrix<f64> {
        &self.entries
    }

    pub fn factor(&self) -> Option<&DMatrix<f64>> {
        self.factor.as_ref()
    }

    pub fn trace(&self) -> f64 {
        self.entries.trace()
    }
}

fn gaussian_vector<R: Rng + ?Sized>(d: usize, sd: f64, rng: &mut R) -> Vec<f64> {
    (0..d)
        .map(|_| {
            let g: f64 = StandardNormal.sample(rng);
            sd * g
        })
        .collect()
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

fn sphere_vector<R: Rng + ?Sized>(d: usize, radius: f64, rng: &mut R) -> Vec<f64> {
    loop {
        let g = gaussian_vector(d, 1.0, rng);
        let n = norm(&g);
        if n > 0.0 {
            return g.into_iter().map(|x| radius * x / n).collect();
        }
    }
}

/// Symmetric Gaussian draw with diagonal variance `2R^2/d` and off-diagonal
/// variance `R^2/d`, i.e. density proportional to `exp(-(d / 4R^2) tr X^2)`.
fn gaussian_symmetric<R: Rng + ?Sized>(d: usize, radius: f64, rng: &mut R) -> DMatrix<f64> {
    let off = radius / (d as f64).sqrt();
    let diag = off * std::f64::consts::SQRT_2;
    let mut x = DMatrix::zeros(d, d);
    for i in 0..d {
        let g: f64 = StandardNormal.sample(rng);
        x[(i, i)] = diag * g;
        for j in i + 1..d {
            let g: f64 = StandardNormal.sample(rng);
            x[(i, j)] = off * g;
            x[(j, i)] = off * g;
        }
    }
    x
}

fn frobenius_sq(x: &DMatrix<f64>) -> f64 {
    x.iter().map(|v| v * v).sum()
}

pub fn sample_block<R: Rng + ?Sized>(m: &BlockMeasure, rng: &mut R) -> SymmetricBlock {
    let d = m.d;
    let radius = m.radius;
    let column = |v: Vec<f64>| DMatrix::from_vec(d, 1, v);
    match m.family {
        MeasureFamily::RankOneSphere => {
            SymmetricBlock::from_factor(column(sphere_vector(d, radius, rng)))
        }
        MeasureFamily::RankOneBall => {
            let u: f64 = rng.random();
            let r = radius * u.powf(1.0 / d as f64);
            SymmetricBlock::from_factor(column(sphere_vector(d, r, rng)))
        }
        MeasureFamily::RankOneGauss => {
            SymmetricBlock::from_factor(column(gaussian_vector(d, radius / (d as f64).sqrt(), rng)))
        }
        MeasureFamily::RankOneCube => {
            let v = (0..d).map(|_| rng.random_range(-radius..radius)).collect();
            SymmetricBlock::from_factor(column(v))
        }
        MeasureFamily::RankROrthogonal => {
            let mut basis: Vec<Vec<f64>> = Vec::with_capacity(m.rank);
            while basis.len() < m.rank {
                let mut g = gaussian_vector(d, 1.0, rng);
                // Two projection sweeps keep orthogonality at roundoff level.
                for _ in 0..2 {
                    for b in &basis {
                        let dot: f64 = g.iter().zip(b).map(|(x, y)| x * y).sum();
                        g.iter_mut().zip(b).for_each(|(x, y)| *x -= dot * y);
                    }
                }
                let n = norm(&g);
                if n > 1e-12 {
                    basis.push(g.into_iter().map(|x| x / n).collect());
                }
            }
            let factor = DMatrix::from_fn(d, m.rank, |i, a| radius * basis[a][i]);
            SymmetricBlock::from_factor(factor)
        }
        MeasureFamily::RankRIndependent => {
            let cols: Vec<Vec<f64>> = m.radii.iter().map(|&r| sphere_vector(d, r, rng)).collect();
            SymmetricBlock::from_factor(DMatrix::from_fn(d, m.rank, |i, a| cols[a][i]))
        }
        MeasureFamily::FullGauss => SymmetricBlock {
            entries: gaussian_symmetric(d, radius, rng),
            factor: None,
        },
        MeasureFamily::FullFixedTrace | MeasureFamily::FullBoundedTrace => {
            let mut x = gaussian_symmetric(d, radius, rng);
            let mut target = d as f64 * radius * radius;
            if m.family == MeasureFamily::FullBoundedTrace {
                let u: f64 = rng.random();
                let n_coords = (d * (d + 1) / 2) as f64;
                target *= u.powf(2.0 / n_coords);
            }
            let scale = (target / frobenius_sq(&x)).sqrt();
            x *= scale;
            SymmetricBlock {
                entries: x,
                factor: None,
            }
        }
    }
}

fn matrix_power(x: &DMatrix<f64>, e: u32) -> DMatrix<f64> {
    let mut out = x.clone();
    for _ in 1..e {
        out = &out * x;
    }
    out
}

/// `tr` of the word with `blocks[k]` standing for label `k + 1`.
///
/// When every block carries its low-rank factor the trace is evaluated on
/// `r x r` Gram matrices: with `X = V V^T`, `X^e = V (V^T V)^{e-1} V^T`, so
/// the cyclic product collapses to products of `V_a^T V_b`.
pub fn word_trace(word: &Word, blocks: &[SymmetricBlock]) -> Result<f64> {
    let s = word.distinct_blocks();
    if blocks.len() < s {
        return Err(Error::DimensionMismatch {
            expected: s,
            got: blocks.len(),
        });
    }
    let letters = word.letters();
    let factors: Option<Vec<&DMatrix<f64>>> = blocks[..s].iter().map(|b| b.factor()).collect();
    if let Some(f) = factors {
        let gram: Vec<DMatrix<f64>> = f.iter().map(|v| v.transpose() * *v).collect();
        let m = letters.len();
        if m == 1 {
            let g = &gram[letters[0].label as usize - 1];
            return Ok(matrix_power(g, letters[0].exp).trace());
        }
        let mut acc: Option<DMatrix<f64>> = None;
        for k in 0..m {
            let a = letters[k].label as usize - 1;
            let b = letters[(k + 1) % m].label as usize - 1;
            let cross = if a == b {
                gram[a].clone()
            } else {
                f[a].transpose() * f[b]
            };
            let step = if letters[k].exp > 1 {
                matrix_power(&gram[a], letters[k].exp - 1) * cross
            } else {
                cross
            };
            acc = Some(match acc {
                None => step,
                Some(p) => p * step,
            });
        }
        return Ok(acc.expect("nonempty word").trace());
    }
    let mut acc: Option<DMatrix<f64>> = None;
    for l in letters {
        let pw = matrix_power(blocks[l.label as usize - 1].entries(), l.exp);
        acc = Some(match acc {
            None => pw,
            Some(p) => p * pw,
        });
    }
    Ok(acc.expect("nonempty word").trace())
}

/// Monte-Carlo estimate of `<tr word>` with `s` independent blocks per sample.
pub fn word_expectation_mc<R: Rng + ?Sized>(
    m: &BlockMeasure,
    word: &Word,
    n_samples: usize,
    rng: &mut R,
) -> Result<Estimate> {
    if word.letters().is_empty() {
        return Err(Error::InvalidWord("empty word".into()));
    }
    if n_samples < 2 {
        return Err(Error::InvalidArgument(
            "at least two samples are needed for an error bar".into(),
        ));
    }
    let s = word.distinct_blocks();
    let mut acc = Accumulator::new();
    let mut blocks = Vec::with_capacity(s);
    for _ in 0..n_samples {
        blocks.clear();
        blocks.extend((0..s).map(|_| sample_block(m, rng)));
        acc.push(word_trace(word, &blocks)?);
    }
    Ok(Estimate::from(&acc))
}

/// `<tr X_1^2 X_2^2 X_1^2 X_2^2> / R^16` for rank-one sphere blocks, one row
/// per dimension. Each dimension uses its own stream derived from `seed`.
pub fn crossing_decay_probe(
    d_list: &[usize],
    n_samples: usize,
    seed: u64,
) -> Result<Vec<(usize, Estimate)>> {
    let word: Word = "1^2 2^2 1^2 2^2".parse()?;
    d_list
        .iter()
        .enumerate()
        .map(|(k, &d)| {
            if d < 2 {
                return Err(Error::InvalidArgument(format!(
                    "crossing probe needs d >= 2, got {d}"
                )));
            }
            let m = BlockMeasure::new(MeasureFamily::RankOneSphere, d, 1.0)?;
            let mut rng = derived_stream(seed, 0xC805, k as u64);
            Ok((d, word_expectation_mc(&m, &word, n_samples, &mut rng)?))
        })
        .collect()
}

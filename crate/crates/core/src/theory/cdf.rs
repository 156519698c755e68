//! Tabulated cumulative distribution functions of the limiting laws.
//!
//! The continuous part is integrated band by band on a grid that is uniform
//! in the sine-substituted variable, so nodes cluster at the edges where the
//! density varies fastest. Between nodes the CDF is interpolated linearly in
//! that variable. A point mass at the origin is kept separate so left and
//! right limits at the atom are exact.

use super::ema::{ema_continuous_density, EmaParams, DEFAULT_EPSILON};
use super::mp::{mp_density, MpParams};
use super::quad::{adaptive_simpson_depth, SineMap};
use crate::error::Result;
use crate::spectral::Cdf;

/// Grid cells per band.
const CELLS: usize = 2048;
/// Absolute tolerance of the adaptive rule, per cell.
const CELL_TOL: f64 = 1e-8 / CELLS as f64;
/// Bisection cap per cell; keeps integrable edge singularities cheap.
const CELL_DEPTH: u32 = 16;

#[derive(Debug, Clone)]
struct Band {
    map: SineMap,
    /// Cumulative continuous mass at the cell boundaries, starting at 0.
    cumulative: Vec<f64>,
}

impl Band {
    fn build<F: Fn(f64) -> f64>(lo: f64, hi: f64, density: &F) -> Self {
        let map = SineMap::new(lo, hi);
        let h = std::f64::consts::PI / CELLS as f64;
        let g = |theta: f64| density(map.x(theta)) * map.jacobian(theta);
        let mut cumulative = Vec::with_capacity(CELLS + 1);
        let mut acc = 0.0;
        cumulative.push(0.0);
        for k in 0..CELLS {
            let a = -std::f64::consts::FRAC_PI_2 + k as f64 * h;
            acc += adaptive_simpson_depth(&g, a, a + h, CELL_TOL, CELL_DEPTH).max(0.0);
            cumulative.push(acc);
        }
        Self { map, cumulative }
    }

    fn mass(&self) -> f64 {
        *self.cumulative.last().expect("nonempty")
    }

    fn mass_below(&self, x: f64) -> f64 {
        if x <= self.map.lo() {
            return 0.0;
        }
        if x >= self.map.hi() {
            return self.mass();
        }
        let pos =
            (self.map.theta(x) + std::f64::consts::FRAC_PI_2) / std::f64::consts::PI * CELLS as f64;
        let k = (pos.floor() as usize).min(CELLS - 1);
        let frac = pos - k as f64;
        self.cumulative[k] + frac * (self.cumulative[k + 1] - self.cumulative[k])
    }
}

/// Law = continuous bands + optional atom at the origin.
#[derive(Debug, Clone)]
pub struct TheoreticalCdf {
    bands: Vec<Band>,
    atom: f64,
    label: String,
}

impl TheoreticalCdf {
    /// EMA law with parameter `t`, density from Stieltjes inversion at the
    /// default epsilon; atom of mass `1 - t` at 0 when `t < 1`.
    pub fn ema(p: &EmaParams) -> Result<Self> {
        let mut bands = Vec::new();
        for (lo, hi) in p.integration_bands() {
            // Probe once so branch failures surface as errors, not zeros.
            ema_continuous_density(0.5 * (lo + hi), p, DEFAULT_EPSILON)?;
            let density = |x: f64| ema_continuous_density(x, p, DEFAULT_EPSILON).unwrap_or(0.0);
            bands.push(Band::build(lo, hi, &density));
        }
        Ok(Self {
            bands,
            atom: p.atom_mass(),
            label: format!("ema(t={})", p.t()),
        })
    }

    /// Marchenko–Pastur law with parameter `t`, atom `max(0, 1 - t/2)` at 0.
    pub fn marchenko_pastur(p: &MpParams) -> Self {
        let density = |x: f64| if x <= 0.0 { 0.0 } else { mp_density(x, p) };
        let bands = vec![Band::build(p.lower(), p.upper(), &density)];
        Self {
            bands,
            atom: p.atom_mass(),
            label: format!("mp(t={})", p.t()),
        }
    }

    pub fn atom_mass(&self) -> f64 {
        self.atom
    }

    pub fn continuous_mass(&self) -> f64 {
        self.bands.iter().map(Band::mass).sum()
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    fn continuous_below(&self, x: f64) -> f64 {
        self.bands.iter().map(|b| b.mass_below(x)).sum()
    }
}

impl Cdf for TheoreticalCdf {
    fn cdf(&self, x: f64) -> f64 {
        let atom = if x >= 0.0 { self.atom } else { 0.0 };
        (self.continuous_below(x) + atom).min(1.0)
    }

    fn cdf_left(&self, x: f64) -> f64 {
        let atom = if x > 0.0 { self.atom } else { 0.0 };
        (self.continuous_below(x) + atom).min(1.0)
    }
}

//! Closed-form limits: EMA, Marchenko–Pastur, measure-ratio factors and the
//! non-crossing moment series.

pub mod cdf;
pub mod ema;
pub mod mp;
pub mod quad;
pub mod radii;
pub mod ratio;
pub mod series;

pub use cdf::TheoreticalCdf;
pub use ema::{ema_density, ema_moments, ema_resolvent, EmaParams};
pub use mp::{mp_atom_mass, mp_density, mp_moments, MpParams};
pub use radii::{general_radii_moments, GeneralRadiiParams};
pub use ratio::{measure_ratio_factor, RatioCase};

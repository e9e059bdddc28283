//! Spherical-harmonic analysis on the unit sphere: harmonic bases, Fourier
//! coefficients, the fractional seminorm by direct integration and by
//! eigenvalue sums, and the second variation of the deficit.

pub mod basis;
pub mod fuglede;
pub mod seminorm;
pub mod spectrum;

pub use basis::{harmonics_at, multiplicity, HarmonicBasis, GRAM_TOLERANCE};
pub use fuglede::fuglede_identity_residual;
pub use seminorm::{eigenvalue_csv, eigenvalue_table, second_variation, seminorm_direct, seminorm_spectral};
pub use spectrum::{analyze, Coefficient, Spectrum};

use crate::error::{Error, Result};
use crate::geom::{dot, norm, sub};
use crate::sets::GraphSet;

/// Default maximal degree of spectral analyses.
pub const DEFAULT_MAX_DEGREE: usize = 12;

/// Volume-normalizes `e` and removes its barycenter by subtracting degree-one
/// modes from `u`, iterating until `|Bar(E)| <= 1e-13`.
pub fn normalize_and_center(e: &GraphSet) -> Result<GraphSet> {
    if e.has_splits() {
        return Err(Error::NotApplicable("centering needs an unsplit graph set".into()));
    }
    let mut cur = e.volume_normalize();
    for _ in 0..50 {
        let bar = sub(cur.barycenter(), cur.center());
        if norm(bar) <= 1e-13 {
            return Ok(cur);
        }
        let u: Vec<f64> = cur
            .u()
            .iter()
            .zip(cur.grid().nodes())
            .map(|(&v, &x)| v - dot(bar, x))
            .collect();
        cur = cur.with_u(u)?.volume_normalize();
    }
    Err(Error::NonConvergence {
        iterations: 50,
        residual: norm(sub(cur.barycenter(), cur.center())),
    })
}

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use riesz_core::kernel::mu;
use riesz_core::sets::SphereGrid;
use riesz_core::spectral::{seminorm_direct, HarmonicBasis};

use crate::config::ExperimentConfig;
use crate::error::{CliError, Result};

/// Largest degree with a direct seminorm estimate.
pub const DIRECT_MAX_DEGREE: usize = 6;
/// Largest degree of the table.
pub const MAX_DEGREE: usize = 64;

/// One degree of the eigenvalue table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralRow {
    pub k: usize,
    pub mu: f64,
    /// `[y_k]^2` of a unit-norm harmonic of degree `k`, by direct pair sums.
    pub direct: Option<f64>,
    /// `direct / mu - 1`.
    pub relative_gap: Option<f64>,
}

/// Rows `k = 0..=k_max`, with direct estimates for `1 <= k <= 6` on the
/// configured grid.
pub fn spectral_table(cfg: &ExperimentConfig) -> Result<Vec<SpectralRow>> {
    cfg.validate()?;
    if cfg.k_max > MAX_DEGREE {
        return Err(CliError::Config(format!("k_max must be at most {MAX_DEGREE}")));
    }
    let p = cfg.params()?;
    let direct_max = cfg.k_max.min(DIRECT_MAX_DEGREE);
    let basis = if direct_max >= 1 {
        Some(HarmonicBasis::new(Arc::new(SphereGrid::for_dim(cfg.dim, cfg.grid)?), direct_max)?)
    } else {
        None
    };
    (0..=cfg.k_max)
        .map(|k| {
            let m = mu(k, &p);
            let direct = match &basis {
                Some(b) if (1..=direct_max).contains(&k) => {
                    let y = b.function(k, 1).expect("degree within the basis");
                    Some(seminorm_direct(b.grid(), y, &p)?)
                }
                _ => None,
            };
            Ok(SpectralRow {
                k,
                mu: m,
                direct,
                relative_gap: direct.map(|d| d / m - 1.0),
            })
        })
        .collect()
}

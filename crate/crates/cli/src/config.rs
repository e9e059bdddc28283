use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use riesz_core::KernelParams;

use crate::error::{CliError, Result};

/// Sets a command runs on.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum SetFamily {
    /// `u = s y_{degree,index}` for every `s` in `amplitudes`.
    Harmonic {
        degree: usize,
        index: usize,
        amplitudes: Vec<f64>,
    },
    /// A set stored in the voxel file format.
    VoxelFile { path: PathBuf },
}

/// Numerical tolerances; all must be positive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    /// Slack added to the energy error bound before a Riesz violation is
    /// reported.
    pub riesz: f64,
    /// Deficits below this are treated as zero and left out of ratios and
    /// fits.
    pub deficit_floor: f64,
    /// Barycenter residual of the reduction.
    pub barycenter: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        Self {
            riesz: 1e-9,
            deficit_floor: 1e-12,
            barycenter: 1e-4,
        }
    }
}

/// Everything a command needs; read from JSON or TOML and overridden by
/// command-line flags.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub dim: usize,
    pub alpha: f64,
    pub family: SetFamily,
    /// Sphere grid resolution.
    pub grid: usize,
    /// Voxel spacing of generated voxel sets.
    pub voxel_spacing: f64,
    /// Largest harmonic degree of the spectral table.
    pub k_max: usize,
    /// Largest harmonic degree of random perturbations.
    pub perturbation_degree: usize,
    pub seed: u64,
    /// Random graph sets of the battery, or instances per verified
    /// inequality.
    pub samples: usize,
    /// Random voxel sets of the battery.
    pub voxel_samples: usize,
    /// Test functions of the pushforward check.
    pub test_functions: usize,
    pub eps: f64,
    pub xi: f64,
    pub tolerances: Tolerances,
    pub out: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            dim: 3,
            alpha: 2.0,
            family: SetFamily::Harmonic {
                degree: 2,
                index: 1,
                amplitudes: log_grid(1e-3, 5e-2, 14),
            },
            grid: 32,
            voxel_spacing: 1.0 / 24.0,
            k_max: 12,
            perturbation_degree: 4,
            seed: 0,
            samples: 100,
            voxel_samples: 20,
            test_functions: 20,
            eps: 0.2,
            xi: 0.5,
            tolerances: Tolerances::default(),
            out: None,
        }
    }
}

/// `count` log-spaced values from `lo` to `hi`.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count == 1 {
        return vec![lo];
    }
    let r = (hi / lo).ln();
    (0..count)
        .map(|i| match i {
            0 => lo,
            i if i == count - 1 => hi,
            i => lo * (r * i as f64 / (count - 1) as f64).exp(),
        })
        .collect()
}

/// Values given on the command line; `None` keeps the configured value.
#[derive(Debug, Clone, Default)]
pub struct Overrides {
    pub dim: Option<usize>,
    pub alpha: Option<f64>,
    pub grid: Option<usize>,
    pub k_max: Option<usize>,
    pub seed: Option<u64>,
    pub samples: Option<usize>,
    pub eps: Option<f64>,
    pub out: Option<PathBuf>,
}

impl ExperimentConfig {
    /// Reads a config file; `.toml` files are TOML, everything else JSON.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let parse_err = |message: String| CliError::Parse {
            path: path.to_path_buf(),
            message,
        };
        let cfg: Self = if path.extension().is_some_and(|e| e == "toml") {
            toml::from_str(&text).map_err(|e| parse_err(e.to_string()))?
        } else {
            serde_json::from_str(&text).map_err(|e| parse_err(e.to_string()))?
        };
        Ok(cfg)
    }

    pub fn apply(&mut self, o: &Overrides) {
        macro_rules! set {
            ($($f:ident),*) => {$(if let Some(v) = o.$f.clone() { self.$f = v; })*};
        }
        set!(dim, alpha, grid, k_max, seed, samples, eps);
        if let Some(p) = &o.out {
            self.out = Some(p.clone());
        }
    }

    pub fn params(&self) -> Result<KernelParams> {
        Ok(KernelParams::new(self.dim, self.alpha)?)
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(CliError::Config(m.to_string()));
        self.params()?;
        if !matches!(self.dim, 2 | 3) {
            return bad("dim must be 2 or 3");
        }
        let t = &self.tolerances;
        if ![t.riesz, t.deficit_floor, t.barycenter].iter().all(|&v| v > 0.0 && v.is_finite()) {
            return bad("tolerances must be positive");
        }
        if !(self.voxel_spacing > 0.0 && self.voxel_spacing < 0.5) {
            return bad("voxel_spacing must lie in (0, 0.5)");
        }
        if !(self.eps > 0.0 && self.eps < 1.0) {
            return bad("eps must lie in (0, 1)");
        }
        if !(self.xi > 0.0) {
            return bad("xi must be positive");
        }
        if self.grid < 4 {
            return bad("grid must be at least 4");
        }
        if self.k_max > 64 {
            return bad("k_max must be at most 64");
        }
        if let SetFamily::Harmonic { degree, amplitudes, .. } = &self.family {
            if *degree < 2 {
                return bad("harmonic family needs degree >= 2");
            }
            if amplitudes.iter().any(|a| !(a.is_finite() && *a >= 0.0)) {
                return bad("amplitudes must be finite and nonnegative");
            }
            if amplitudes.windows(2).any(|w| w[0] >= w[1]) {
                return bad("amplitudes must be sorted ascending");
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_is_valid_and_round_trips_both_formats() {
        let cfg = ExperimentConfig::default();
        cfg.validate().unwrap();
        let json = serde_json::to_string(&cfg).unwrap();
        assert_eq!(serde_json::from_str::<ExperimentConfig>(&json).unwrap(), cfg);
        let text = toml::to_string(&cfg).unwrap();
        assert_eq!(toml::from_str::<ExperimentConfig>(&text).unwrap(), cfg);
    }

    #[test]
    fn partial_toml_keeps_defaults() {
        let cfg: ExperimentConfig = toml::from_str(
            "dim = 2\nalpha = 1.5\n[family]\nkind = \"harmonic\"\ndegree = 3\nindex = 1\namplitudes = [0.01, 0.02]\n",
        )
        .unwrap();
        assert_eq!(cfg.dim, 2);
        assert_eq!(cfg.samples, 100);
        cfg.validate().unwrap();
    }

    #[test]
    fn invalid_values_are_rejected() {
        let mut cfg = ExperimentConfig::default();
        cfg.tolerances.riesz = 0.0;
        assert!(cfg.validate().is_err());
        let cfg = ExperimentConfig {
            family: SetFamily::Harmonic {
                degree: 2,
                index: 1,
                amplitudes: vec![0.02, 0.01],
            },
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
        let cfg = ExperimentConfig {
            alpha: 3.5,
            ..Default::default()
        };
        assert!(cfg.validate().is_err());
        assert!(serde_json::from_str::<ExperimentConfig>("{\"dimm\": 3}").is_err());
    }

    #[test]
    fn overrides_replace_fields() {
        let mut cfg = ExperimentConfig::default();
        cfg.apply(&Overrides {
            seed: Some(9),
            eps: Some(0.3),
            ..Default::default()
        });
        assert_eq!((cfg.seed, cfg.eps, cfg.dim), (9, 0.3, 3));
    }

    #[test]
    fn log_grid_endpoints() {
        let g = log_grid(1e-3, 5e-2, 5);
        assert_eq!((g[0], g[4]), (1e-3, 5e-2));
        assert!(g.windows(2).all(|w| w[0] < w[1]));
    }
}

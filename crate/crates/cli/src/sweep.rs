use std::sync::Arc;

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, StudentsT};

use riesz_core::energy::deficit_graph;
use riesz_core::sets::{AsymmetryOptions, FraenkelAsymmetry, GraphSet, SphereGrid};
use riesz_core::spectral::{analyze, normalize_and_center, second_variation, HarmonicBasis};

use crate::config::{ExperimentConfig, SetFamily};
use crate::error::{CliError, Result};

/// One amplitude of a sharpness sweep.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub amplitude: f64,
    pub deficit: f64,
    pub deficit_error: f64,
    pub asymmetry: f64,
    /// `delta / sqrt(D)`; empty when `D` is below the deficit floor.
    pub ratio: Option<f64>,
    /// Second-variation prediction `s^2 Q(y)` of the deficit.
    pub predictor: f64,
    /// `D / s^2`; empty for `s = 0`.
    pub deficit_over_s2: Option<f64>,
    pub in_fit: bool,
}

/// Least-squares line `y = intercept + slope x` with a 95% interval.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SlopeFit {
    pub slope: f64,
    pub intercept: f64,
    pub std_error: f64,
    pub ci95: (f64, f64),
    pub points: usize,
}

/// Ordinary least squares of `ys` on `xs`; needs at least 4 points.
pub fn fit_line(xs: &[f64], ys: &[f64]) -> Result<SlopeFit> {
    let n = xs.len();
    if n < 4 || ys.len() != n {
        return Err(CliError::DegenerateFit(format!("{n} points, need at least 4")));
    }
    let nf = n as f64;
    let mx = xs.iter().sum::<f64>() / nf;
    let my = ys.iter().sum::<f64>() / nf;
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(CliError::DegenerateFit("all abscissae equal".into()));
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let rss: f64 = xs.iter().zip(ys).map(|(x, y)| (y - intercept - slope * x).powi(2)).sum();
    let std_error = (rss / (nf - 2.0) / sxx).sqrt();
    let t = StudentsT::new(0.0, 1.0, nf - 2.0)
        .map_err(|e| CliError::DegenerateFit(e.to_string()))?
        .inverse_cdf(0.975);
    Ok(SlopeFit {
        slope,
        intercept,
        std_error,
        ci95: (slope - t * std_error, slope + t * std_error),
        points: n,
    })
}

/// Rows and the fitted exponent of `delta ~ D^slope`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepReport {
    pub degree: usize,
    pub index: usize,
    pub rows: Vec<SweepRow>,
    pub fit: SlopeFit,
    /// `Q(y)`, the limit of `D / s^2` as `s -> 0`.
    pub predictor_limit: f64,
    /// `|D/s^2 / Q(y) - 1|` at the smallest fitted amplitude.
    pub limit_relative_error: f64,
}

/// Indices of the middle 80% of `n` sorted amplitudes.
pub fn fit_window(n: usize) -> std::ops::Range<usize> {
    let cut = n / 10;
    cut..n - cut
}

/// Normalizes, centers and measures `u = s y_{k,i}` for every amplitude.
pub fn run_sweep(cfg: &ExperimentConfig) -> Result<SweepReport> {
    cfg.validate()?;
    let SetFamily::Harmonic {
        degree,
        index,
        amplitudes,
    } = &cfg.family
    else {
        return Err(CliError::Config("sharpness-sweep needs a harmonic family".into()));
    };
    let p = cfg.params()?;
    let grid = Arc::new(SphereGrid::for_dim(cfg.dim, cfg.grid)?);
    let basis = HarmonicBasis::new(grid.clone(), *degree)?;
    let y = basis
        .function(*degree, *index)
        .ok_or_else(|| CliError::Config(format!("no harmonic with degree {degree} and index {index}")))?
        .to_vec();
    let limit = second_variation(&analyze(&y, &basis)?, &p);
    let window = fit_window(amplitudes.len());
    let floor = cfg.tolerances.deficit_floor;
    let mut rows = Vec::with_capacity(amplitudes.len());
    for (i, &s) in amplitudes.iter().enumerate() {
        let (deficit, deficit_error, asymmetry) = if s == 0.0 {
            (0.0, 0.0, 0.0)
        } else {
            let e = GraphSet::new(grid.clone(), y.iter().map(|v| s * v).collect())?;
            let e = normalize_and_center(&e)?;
            let d = deficit_graph(&e, &p)?;
            let a = e.fraenkel_asymmetry(&AsymmetryOptions::default())?;
            (d.value, d.error_bound, a.delta)
        };
        let usable = deficit > floor && asymmetry > 0.0;
        rows.push(SweepRow {
            amplitude: s,
            deficit,
            deficit_error,
            asymmetry,
            ratio: usable.then(|| asymmetry / deficit.sqrt()),
            predictor: s * s * limit,
            deficit_over_s2: (s > 0.0).then(|| deficit / (s * s)),
            in_fit: usable && window.contains(&i),
        });
    }
    let (xs, ys): (Vec<f64>, Vec<f64>) = rows
        .iter()
        .filter(|r| r.in_fit)
        .map(|r| (r.deficit.ln(), r.asymmetry.ln()))
        .unzip();
    let fit = fit_line(&xs, &ys)?;
    let first = rows
        .iter()
        .find(|r| r.in_fit)
        .and_then(|r| r.deficit_over_s2)
        .unwrap_or(f64::NAN);
    Ok(SweepReport {
        degree: *degree,
        index: *index,
        rows,
        fit,
        predictor_limit: limit,
        limit_relative_error: (first / limit - 1.0).abs(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line_is_recovered() {
        let xs: Vec<f64> = (0..8).map(|i| i as f64).collect();
        let ys: Vec<f64> = xs.iter().map(|x| 0.5 * x - 2.0).collect();
        let f = fit_line(&xs, &ys).unwrap();
        assert!((f.slope - 0.5).abs() < 1e-12 && (f.intercept + 2.0).abs() < 1e-12);
        assert!(f.std_error < 1e-12);
    }

    #[test]
    fn interval_matches_a_hand_computation() {
        // x = 0..4, y = (0, 1, 1, 3): slope 0.9, residual sum 0.7
        let f = fit_line(&[0.0, 1.0, 2.0, 3.0], &[0.0, 1.0, 1.0, 3.0]).unwrap();
        assert!((f.slope - 0.9).abs() < 1e-12);
        let se = (0.7f64 / 2.0 / 5.0).sqrt();
        assert!((f.std_error - se).abs() < 1e-12);
        // t_{0.975, 2} = 4.302653
        assert!((f.ci95.1 - (0.9 + 4.302653 * se)).abs() < 1e-5);
    }

    #[test]
    fn too_few_points_is_degenerate() {
        assert!(matches!(fit_line(&[1.0, 2.0, 3.0], &[1.0, 2.0, 3.0]), Err(CliError::DegenerateFit(_))));
    }

    #[test]
    fn window_drops_a_tenth_at_each_end() {
        assert_eq!(fit_window(14), 1..13);
        assert_eq!(fit_window(20), 2..18);
        assert_eq!(fit_window(5), 0..5);
    }

    #[test]
    fn zero_amplitude_row_is_excluded() {
        let mut amps = vec![0.0];
        amps.extend(crate::config::log_grid(2e-3, 4e-2, 6));
        let cfg = ExperimentConfig {
            dim: 2,
            alpha: 1.5,
            grid: 256,
            family: SetFamily::Harmonic {
                degree: 2,
                index: 1,
                amplitudes: amps,
            },
            ..Default::default()
        };
        let r = run_sweep(&cfg).unwrap();
        let z = &r.rows[0];
        assert_eq!((z.deficit, z.asymmetry, z.in_fit), (0.0, 0.0, false));
        assert!(z.ratio.is_none() && z.deficit_over_s2.is_none());
        assert!((r.fit.slope - 0.5).abs() < 0.05, "{:?}", r.fit);
    }
}

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::energy::{deficit_graph, deficit_voxel, EnergyEstimate, VoxelEnergyOptions};
use crate::error::{Error, Result};
use crate::geom::{Point, ORIGIN};
use crate::kernel::{sparse_deficit_bound, unit_ball_volume, KernelParams};
use crate::sets::{AsymmetryOptions, FraenkelAsymmetry, GraphSet, SphereGrid, TwoSidedGraphSet, VoxelSet};

use super::barycenter::{adjust_barycenter, BarycenterOptions};
use super::consolidate::symm_diff_ratio;
use super::transport::build_radial_transport;
use super::truncate::{truncate_to_annulus, TruncationSummary};

/// Settings of [`reduce_pipeline`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReductionOptions {
    pub eps: f64,
    /// Sphere grid resolution; `None` picks 24 in 3D and 128 in 2D.
    pub grid_resolution: Option<usize>,
    /// Width `xi` of the sparse regime `delta >= 2 (w_N - xi)`.
    pub xi: f64,
    pub barycenter: BarycenterOptions,
}

impl Default for ReductionOptions {
    fn default() -> Self {
        Self {
            eps: 0.2,
            grid_resolution: None,
            xi: 0.5,
            barycenter: BarycenterOptions::default(),
        }
    }
}

/// Which route the pipeline took.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Branch {
    NearlySpherical,
    LargeAsymmetry,
}

/// One recorded inequality `lhs <= rhs + tolerance`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    pub lhs: f64,
    pub rhs: f64,
    pub tolerance: f64,
    pub passed: bool,
}

impl Check {
    fn new(name: &str, lhs: f64, rhs: f64, tolerance: f64) -> Self {
        Self {
            name: name.to_string(),
            lhs,
            rhs,
            tolerance,
            passed: lhs <= rhs + tolerance,
        }
    }

    /// Slack `rhs + tolerance - lhs`; positive when the check passes.
    pub fn margin(&self) -> f64 {
        self.rhs + self.tolerance - self.lhs
    }
}

/// Measurements of the intermediate sets of a completed reduction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageSummary {
    pub truncation: TruncationSummary,
    /// `D(E')` and `delta(E')`.
    pub truncated_deficit: EnergyEstimate,
    pub truncated_asymmetry: f64,
    /// `D(E'')` and `delta(E'')`, from a voxelization of `E''`.
    pub rearranged_deficit: EnergyEstimate,
    pub rearranged_asymmetry: f64,
    /// `D(E_z)` and `|E_z Δ B_z|`.
    pub consolidated_deficit: EnergyEstimate,
    pub consolidated_symm_diff: f64,
    pub split_cells: usize,
    pub transport_mismatch: f64,
    pub z: Point,
    pub iterations: usize,
    pub barycenter_residual: f64,
    pub boundary_products: Vec<f64>,
}

/// Record of one run of [`reduce_pipeline`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReductionReport {
    pub dim: usize,
    pub alpha: f64,
    pub eps: f64,
    pub spacing: f64,
    pub input_deficit: EnergyEstimate,
    pub input_asymmetry: f64,
    pub asymmetry_center: Point,
    /// Asymmetry of the voxelized unit ball at the input spacing, the
    /// resolution floor of all asymmetry comparisons.
    pub asymmetry_floor: f64,
    pub branch: Branch,
    pub stages: Option<StageSummary>,
    pub checks: Vec<Check>,
    pub passed: bool,
}

/// The report together with the sets of every stage (absent on the
/// large-asymmetry branch).
#[derive(Debug, Clone)]
pub struct Reduction {
    pub report: ReductionReport,
    pub truncated: Option<VoxelSet>,
    pub two_sided: Option<TwoSidedGraphSet>,
    pub consolidated: Option<GraphSet>,
    /// `E_z - z`, centered at the origin.
    pub normalized: Option<GraphSet>,
}

fn asymmetry(v: &VoxelSet) -> Result<(f64, Point)> {
    let a = v.fraenkel_asymmetry(&AsymmetryOptions::default())?;
    Ok((a.delta, a.center))
}

/// Runs truncation, radial rearrangement, consolidation and the barycenter
/// search on `e`, recording every stage inequality.
///
/// When the annulus cannot absorb the mass outside it, the run takes the
/// large-asymmetry branch instead and records `delta(E) <= 2 w_N` and, in
/// the sparse regime, the lower bound on the deficit.
pub fn reduce_pipeline(e: &VoxelSet, p: &KernelParams, opts: &ReductionOptions) -> Result<Reduction> {
    if e.dim() != p.dim() {
        return Err(Error::Inconsistent("set and kernel dimensions differ".into()));
    }
    let dim = e.dim();
    let omega = unit_ball_volume(dim)?;
    let vopts = VoxelEnergyOptions::default();
    let d_e = deficit_voxel(e, p, &vopts)?;
    let (delta_e, c) = asymmetry(e)?;
    let floor = asymmetry(&VoxelSet::volume_matched_ball(dim, ORIGIN, 1.0, e.spacing())?)?.0;
    let mut report = ReductionReport {
        dim,
        alpha: p.alpha(),
        eps: opts.eps,
        spacing: e.spacing(),
        input_deficit: d_e,
        input_asymmetry: delta_e,
        asymmetry_center: c,
        asymmetry_floor: floor,
        branch: Branch::NearlySpherical,
        stages: None,
        checks: Vec::new(),
        passed: false,
    };

    let trunc = match truncate_to_annulus(e, c, opts.eps) {
        Ok(t) => t,
        Err(Error::NotApplicable(_)) => {
            report.branch = Branch::LargeAsymmetry;
            report.checks.push(Check::new("asymmetry_at_most_twice_ball", delta_e, 2.0 * omega, floor));
            if delta_e >= 2.0 * (omega - opts.xi) {
                report.checks.push(Check::new(
                    "sparse_deficit_bound",
                    sparse_deficit_bound(p),
                    d_e.value,
                    d_e.error_bound,
                ));
            }
            report.passed = report.checks.iter().all(|k| k.passed);
            return Ok(Reduction {
                report,
                truncated: None,
                two_sided: None,
                consolidated: None,
                normalized: None,
            });
        }
        Err(err) => return Err(err),
    };
    let e1 = trunc.set;
    let moved = trunc.summary.moved_out + trunc.summary.filled_in;
    let (d_e1, delta_e1) = if moved == 0 {
        (d_e, delta_e)
    } else {
        (deficit_voxel(&e1, p, &vopts)?, asymmetry(&e1)?.0)
    };

    let res = opts.grid_resolution.unwrap_or(if dim == 3 { 24 } else { 128 });
    let grid = Arc::new(SphereGrid::for_dim(dim, res)?);
    let fit = adjust_barycenter(&e1, &grid, c, opts.eps, &opts.barycenter)?;
    let fixed = fit.fixed_point;
    let z = fixed.z;

    let mut e2 = e1.padded((opts.eps / e1.spacing()).ceil() as usize + 1).cleared();
    e2.fill(|x| fixed.two_sided.contains(x));
    let d_e2 = deficit_voxel(&e2, p, &vopts)?;
    let delta_e2 = asymmetry(&e2)?.0;

    let ez = fixed.set;
    let d_ez = deficit_graph(&ez, p)?;
    let sd_ez = ez.symm_diff_ball(z)?;
    let ratio = symm_diff_ratio(&fixed.two_sided, &ez)?;
    let transport = build_radial_transport(&fixed.two_sided, &ez)?;
    let normalized = ez.clone().with_center(ORIGIN);

    let tol = |a: &EnergyEstimate, b: &EnergyEstimate| a.error_bound + b.error_bound;
    let move_tol = moved as f64 * e.cell_volume();
    report.checks = vec![
        Check::new("truncation_deficit", d_e1.value, d_e.value, tol(&d_e1, &d_e)),
        Check::new("truncation_asymmetry", (delta_e1 - delta_e).abs(), 0.0, 2.0 * move_tol + floor),
        Check::new("rearrangement_deficit", d_e2.value, d_e1.value, tol(&d_e2, &d_e1)),
        Check::new("rearrangement_asymmetry", 0.5 * delta_e1, delta_e2, floor),
        Check::new("consolidation_deficit", d_ez.value, 2.0 * d_e1.value, tol(&d_ez, &d_e1)),
        Check::new("consolidation_asymmetry", delta_e1 / 6.0, sd_ez, floor),
        Check::new("consolidation_ratio", 0.5, ratio, 1e-12),
        Check::new("transport_measure", transport.max_measure_mismatch(), 1e-10, 0.0),
        Check::new("final_deficit", d_ez.value, 2.0 * d_e.value, tol(&d_ez, &d_e)),
        Check::new("final_asymmetry", delta_e / 6.0, normalized.symm_diff_ball(ORIGIN)?, floor),
        Check::new("barycenter", fit.residual, opts.barycenter.tolerance, 0.0),
        Check::new(
            "boundary_field",
            fit.boundary_products.iter().copied().fold(f64::NEG_INFINITY, f64::max),
            0.0,
            0.0,
        ),
    ];
    report.passed = report.checks.iter().all(|k| k.passed);
    report.stages = Some(StageSummary {
        truncation: trunc.summary,
        truncated_deficit: d_e1,
        truncated_asymmetry: delta_e1,
        rearranged_deficit: d_e2,
        rearranged_asymmetry: delta_e2,
        consolidated_deficit: d_ez,
        consolidated_symm_diff: sd_ez,
        split_cells: ez.splits().iter().filter(|s| s.is_some()).count(),
        transport_mismatch: transport.max_measure_mismatch(),
        z,
        iterations: fit.iterations,
        barycenter_residual: fit.residual,
        boundary_products: fit.boundary_products,
    });
    Ok(Reduction {
        report,
        truncated: Some(e1),
        two_sided: Some(fixed.two_sided),
        consolidated: Some(ez),
        normalized: Some(normalized),
    })
}

impl ReductionReport {
    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn check(&self, name: &str) -> Option<&Check> {
        self.checks.iter().find(|k| k.name == name)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::norm;
    use crate::spectral::harmonics_at;

    fn params() -> KernelParams {
        KernelParams::new(3, 2.0).unwrap()
    }

    fn opts() -> ReductionOptions {
        ReductionOptions {
            grid_resolution: Some(16),
            ..Default::default()
        }
    }

    #[test]
    fn ball_gives_a_trivial_report() {
        let b = VoxelSet::ball(3, ORIGIN, 1.0, 1.0 / 32.0).unwrap();
        let r = reduce_pipeline(&b, &params(), &opts()).unwrap();
        let rep = &r.report;
        assert_eq!(rep.branch, Branch::NearlySpherical);
        assert!(rep.passed, "{:#?}", rep.checks);
        let s = rep.stages.as_ref().unwrap();
        assert_eq!(s.truncation.moved_out + s.truncation.filled_in, 0);
        assert_eq!(s.iterations, 0);
        assert!(norm(s.z) < 1e-9);
        assert!(rep.input_deficit.value.abs() <= rep.input_deficit.error_bound);
        assert!(r.normalized.unwrap().sup_norm() < 3.0 / 32.0);
    }

    #[test]
    fn zonal_perturbation_satisfies_every_check() {
        let g = Arc::new(SphereGrid::for_dim(3, 16).unwrap());
        let e = GraphSet::from_fn(g, |x| 0.1 * harmonics_at(3, 2, x)[8])
            .unwrap()
            .volume_normalize();
        let v = VoxelSet::from_graph(&e, 1.0 / 32.0).unwrap();
        let r = reduce_pipeline(&v, &params(), &opts()).unwrap();
        let rep = &r.report;
        assert_eq!(rep.branch, Branch::NearlySpherical);
        assert!(rep.passed, "{:#?}", rep.checks);
        assert!(rep.stages.as_ref().unwrap().truncation.moved_out > 0);
        let fin = rep.check("final_deficit").unwrap();
        assert!(fin.lhs <= fin.rhs + fin.tolerance);
        assert!(rep.check("barycenter").unwrap().lhs <= 1e-4);
        let json = rep.to_json().unwrap();
        let back: ReductionReport = serde_json::from_str(&json).unwrap();
        assert_eq!(&back, rep);
    }

    #[test]
    fn far_half_balls_take_the_large_branch() {
        let h = 1.0 / 24.0;
        let r = 0.5f64.powf(1.0 / 3.0);
        let (a, b) = ([-3.0, 0.0, 0.0], [3.0, 0.0, 0.0]);
        let mut v = VoxelSet::lattice_around(3, ORIGIN, 3.0 + r + 2.0 * h, h).unwrap();
        v.fill(|x| crate::geom::dist(x, a) < r || crate::geom::dist(x, b) < r);
        let r = reduce_pipeline(&v, &params(), &opts()).unwrap();
        assert_eq!(r.report.branch, Branch::LargeAsymmetry);
        assert!(r.report.passed);
        assert!(r.report.input_asymmetry > unit_ball_volume(3).unwrap());
        assert!(r.truncated.is_none());
    }

    #[test]
    fn dimension_mismatch_is_rejected() {
        let b = VoxelSet::ball(2, ORIGIN, 1.0, 1.0 / 16.0).unwrap();
        assert!(matches!(
            reduce_pipeline(&b, &params(), &opts()),
            Err(Error::Inconsistent(_))
        ));
    }
}

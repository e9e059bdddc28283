use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use riesz_core::energy::{deficit_voxel, mutual_energy_voxel, VoxelEnergyOptions};
use riesz_core::geom::{dist, dot, Point, ORIGIN};
use riesz_core::kernel::{sparse_deficit_bound, tau1, tau2, unit_ball_volume, KernelParams, ReferenceConstants};
use riesz_core::reduction::{build_radial_transport, consolidate, RadialTransport};
use riesz_core::sets::{capture_bound, AsymmetryOptions, FraenkelAsymmetry, SphereGrid, TwoSidedGraphSet};

use crate::config::ExperimentConfig;
use crate::error::Result;
use crate::families::{random_capture_instance, random_disjoint_pair, scattered_balls};

/// Relative tolerance of the pushforward identity.
pub const PUSHFORWARD_TOLERANCE: f64 = 0.01;
/// Target points sampled for the pushforward oracle.
pub const PUSHFORWARD_SAMPLES: usize = 200_000;
/// Gauss–Legendre points per axis of the transport integrals.
const TRANSPORT_RULE: usize = 8;
/// Finer rule of the quadrature error estimate.
const FINE_RULE: usize = 12;

/// Outcome of one inequality over its instances; margins are relative
/// slack, positive when the inequality holds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CheckSummary {
    pub name: String,
    pub instances: usize,
    pub failures: usize,
    pub worst_margin: f64,
    pub passed: bool,
    pub margins: Vec<f64>,
}

impl CheckSummary {
    fn from_margins(name: &str, margins: Vec<f64>) -> Self {
        let failures = margins.iter().filter(|&&m| !(m > 0.0)).count();
        Self {
            name: name.to_string(),
            instances: margins.len(),
            failures,
            worst_margin: margins.iter().copied().fold(f64::INFINITY, f64::min),
            passed: failures == 0 && !margins.is_empty(),
            margins,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub checks: Vec<CheckSummary>,
    pub passed: bool,
}

impl VerifyReport {
    pub fn check(&self, name: &str) -> Option<&CheckSummary> {
        self.checks.iter().find(|c| c.name == name)
    }
}

/// `F_I(G, H) <= |G| tau1(|H|)` for random disjoint voxel sets, with the
/// energy error bound added to the left side.
pub fn tau1_margins(rng: &mut impl Rng, p: &KernelParams, h: f64, count: usize) -> Result<Vec<f64>> {
    (0..count)
        .map(|_| {
            let (g, hs) = random_disjoint_pair(rng, p.dim(), h)?;
            let m = mutual_energy_voxel(&g, &hs, p, &VoxelEnergyOptions::default())?;
            let rhs = g.measure() * tau1(hs.measure(), p)?;
            Ok((rhs - m.value - m.error_bound) / rhs)
        })
        .collect()
}

/// Potential of a random voxel set at a random point against the potential
/// at the center of the equal-measure ball.
pub fn capture_margins(rng: &mut impl Rng, p: &KernelParams, h: f64, count: usize) -> Result<Vec<f64>> {
    (0..count)
        .map(|_| {
            let (v, x) = random_capture_instance(rng, p.dim(), h)?;
            let c = capture_bound(&v, x, p)?;
            Ok(c.margin() / c.ball_potential)
        })
        .collect()
}

/// Transport between the shells of a random two-sided set and its
/// consolidation.
pub fn random_transport(rng: &mut impl Rng, dim: usize) -> Result<RadialTransport> {
    let grid = Arc::new(SphereGrid::for_dim(dim, 8)?);
    let up: Vec<f64> = (0..grid.len()).map(|_| rng.random_range(0.0..0.15)).collect();
    let um: Vec<f64> = (0..grid.len())
        .map(|_| if rng.random_bool(0.7) { rng.random_range(0.0..0.15) } else { 0.0 })
        .collect();
    let mut center = ORIGIN;
    center.iter_mut().take(dim).for_each(|c| *c = rng.random_range(-0.05..0.05));
    let t = TwoSidedGraphSet::new(grid, um, up)?.with_center(center);
    let g = consolidate(&t)?;
    Ok(build_radial_transport(&t, &g)?)
}

/// `|F_I(G, H) - F_I(G, K)| <= tau2(|G|) int_H 1 ∧ |y - Phi(y)|` with `G` a
/// union of disjoint balls, whose potential is `sum r^a psi(|y - c| / r)`.
/// The quadrature error, estimated from a finer rule, is charged to the
/// left side.
pub fn transport_estimate_margins(
    rng: &mut impl Rng,
    rc: &ReferenceConstants,
    count: usize,
) -> Result<Vec<f64>> {
    let p = rc.params;
    let dim = p.dim();
    let omega = unit_ball_volume(dim)?;
    (0..count)
        .map(|_| {
            let tr = random_transport(rng, dim)?;
            let mut balls: Vec<(Point, f64)> = Vec::new();
            while balls.len() < 3 {
                let mut c = ORIGIN;
                c.iter_mut().take(dim).for_each(|v| *v = rng.random_range(-1.8..1.8));
                let r = rng.random_range(0.1..0.6);
                if balls.iter().all(|b| dist(b.0, c) > b.1 + r) {
                    balls.push((c, r));
                }
            }
            let v_g = |y: Point| {
                balls
                    .iter()
                    .map(|&(c, r)| r.powf(p.alpha()) * rc.psi(dist(y, c) / r))
                    .sum::<f64>()
            };
            let mass: f64 = balls.iter().map(|b| omega * b.1.powi(dim as i32)).sum();
            let ih = tr.source_integral(TRANSPORT_RULE, v_g);
            let ik = tr.target_integral(TRANSPORT_RULE, v_g);
            let fine = (tr.source_integral(FINE_RULE, v_g) - ih).abs()
                + (tr.target_integral(FINE_RULE, v_g) - ik).abs();
            let rhs = tau2(mass, &p)? * tr.displacement_integral(TRANSPORT_RULE);
            Ok((rhs - (ih - ik).abs() - fine) / rhs)
        })
        .collect()
}

/// Smooth positive test function `1.5 + sin(a.y + b) + c |y|^2`.
fn test_function(rng: &mut impl Rng) -> impl Fn(Point) -> f64 {
    let a: Point = std::array::from_fn(|_| rng.random_range(-2.0..2.0));
    let b = rng.random_range(0.0..std::f64::consts::TAU);
    let c = rng.random_range(0.0..0.5);
    move |y: Point| 1.5 + (dot(a, y) + b).sin() + c * dot(y, y)
}

/// `int_H f(Phi(y)) dy` by quadrature against `int_K f` by uniform sampling
/// of `K`, relative to [`PUSHFORWARD_TOLERANCE`].
pub fn pushforward_margins(rng: &mut impl Rng, dim: usize, count: usize) -> Result<Vec<f64>> {
    let tr = random_transport(rng, dim)?;
    let pts = tr.sample_target(rng, PUSHFORWARD_SAMPLES)?;
    let vol = tr.measure();
    Ok((0..count)
        .map(|_| {
            let f = test_function(rng);
            let sampled = vol * pts.iter().map(|&z| f(z)).sum::<f64>() / pts.len() as f64;
            let pushed = tr.pushforward_integral(TRANSPORT_RULE, &f);
            PUSHFORWARD_TOLERANCE - ((pushed - sampled) / sampled).abs()
        })
        .collect())
}

/// Spacing, balls per axis and ball spacing of the scattered sparse set.
fn sparse_layout(dim: usize) -> (f64, usize, f64) {
    if dim == 2 {
        (1.0 / 32.0, 4, 2.5)
    } else {
        (1.0 / 8.0, 3, 2.5)
    }
}

/// Deficit of equal balls scattered far apart against the sparse bound,
/// when the asymmetry places the set in the regime `delta >= 2 (w - xi)`.
pub fn sparse_margins(p: &KernelParams, xi: f64) -> Result<Vec<f64>> {
    let (h, per_axis, spacing) = sparse_layout(p.dim());
    let v = scattered_balls(p.dim(), h, per_axis, spacing)?;
    let omega = unit_ball_volume(p.dim())?;
    let delta = v.fraenkel_asymmetry(&AsymmetryOptions::default())?.delta;
    if delta < 2.0 * (omega - xi) {
        return Ok(Vec::new());
    }
    let d = deficit_voxel(&v, p, &VoxelEnergyOptions::default())?;
    let bound = sparse_deficit_bound(p);
    Ok(vec![(d.value - d.error_bound - bound) / bound])
}

/// Runs every certification with `samples` instances each.
pub fn run_verify(cfg: &ExperimentConfig) -> Result<VerifyReport> {
    cfg.validate()?;
    let p = cfg.params()?;
    let rc = ReferenceConstants::new(p)?;
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let h = if cfg.dim == 2 { 1.0 / 64.0 } else { 1.0 / 16.0 };
    let checks = vec![
        CheckSummary::from_margins("tau1", tau1_margins(&mut rng, &p, h, cfg.samples)?),
        CheckSummary::from_margins("ball_capture", capture_margins(&mut rng, &p, h, cfg.samples)?),
        CheckSummary::from_margins(
            "transport_estimate",
            transport_estimate_margins(&mut rng, &rc, cfg.samples)?,
        ),
        CheckSummary::from_margins("pushforward", pushforward_margins(&mut rng, cfg.dim, cfg.test_functions)?),
        CheckSummary::from_margins("sparse_deficit", sparse_margins(&p, cfg.xi)?),
    ];
    Ok(VerifyReport {
        passed: checks.iter().all(|c| c.passed),
        checks,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn summary_counts_nonpositive_margins() {
        let s = CheckSummary::from_margins("x", vec![0.5, 0.0, 0.2]);
        assert_eq!((s.failures, s.passed, s.worst_margin), (1, false, 0.0));
        assert!(!CheckSummary::from_margins("y", vec![]).passed);
    }

    #[test]
    fn planar_checks_pass() {
        let p = KernelParams::new(2, 1.5).unwrap();
        let rc = ReferenceConstants::new(p).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for m in tau1_margins(&mut rng, &p, 1.0 / 32.0, 3).unwrap() {
            assert!(m > 0.0);
        }
        for m in capture_margins(&mut rng, &p, 1.0 / 32.0, 3).unwrap() {
            assert!(m > 0.0);
        }
        for m in transport_estimate_margins(&mut rng, &rc, 3).unwrap() {
            assert!(m > 0.0);
        }
        for m in pushforward_margins(&mut rng, 2, 3).unwrap() {
            assert!(m > 0.0);
        }
    }

    #[test]
    fn sparse_set_is_in_the_regime_and_exceeds_the_bound() {
        let p = KernelParams::new(2, 1.5).unwrap();
        let m = sparse_margins(&p, 0.5).unwrap();
        assert_eq!(m.len(), 1);
        assert!(m[0] > 0.0);
    }
}

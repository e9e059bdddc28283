//! Seeded generators of the random sets used by the batteries.

use std::sync::Arc;

use rand::Rng;

use riesz_core::geom::{dist, Point, ORIGIN};
use riesz_core::kernel::unit_ball_volume;
use riesz_core::sets::{GraphSet, SphereGrid, VoxelSet};
use riesz_core::spectral::harmonics_at;
use riesz_core::Result;

/// Degree of the `j`-th entry of [`harmonics_at`].
fn degree_of(dim: usize, j: usize) -> usize {
    if dim == 2 {
        j.div_ceil(2)
    } else {
        (j as f64).sqrt().floor() as usize
    }
}

fn random_point(rng: &mut impl Rng, dim: usize, r: f64) -> Point {
    let mut p = ORIGIN;
    for c in p.iter_mut().take(dim) {
        *c = rng.random_range(-r..r);
    }
    p
}

/// Random combination of harmonics of degrees `1..=degree` with
/// coefficients damped by `1/(1+k)`, scaled to `sup_u = amplitude`.
pub fn random_perturbation(rng: &mut impl Rng, grid: &SphereGrid, degree: usize, amplitude: f64) -> Vec<f64> {
    let dim = grid.dim();
    let count = harmonics_at(dim, degree, grid.node(0)).len();
    let coef: Vec<f64> = (0..count)
        .map(|j| match degree_of(dim, j) {
            0 => 0.0,
            k => rng.random_range(-1.0..1.0) / (1.0 + k as f64),
        })
        .collect();
    let raw: Vec<f64> = grid
        .nodes()
        .iter()
        .map(|&x| harmonics_at(dim, degree, x).iter().zip(&coef).map(|(a, b)| a * b).sum())
        .collect();
    let m = raw.iter().fold(0.0f64, |a, x| a.max(x.abs()));
    if m == 0.0 {
        return raw;
    }
    raw.iter().map(|x| amplitude * x / m).collect()
}

/// Volume-normalized graph set with `sup |u|` drawn from `(0.01, max_sup)`.
pub fn random_graph_set(rng: &mut impl Rng, grid: &Arc<SphereGrid>, degree: usize, max_sup: f64) -> Result<GraphSet> {
    // normalization rescales 1 + u, so leave room below the cap
    let amp = rng.random_range(0.01..0.9 * max_sup);
    let u = random_perturbation(rng, grid, degree, amp);
    Ok(GraphSet::new(grid.clone(), u)?.volume_normalize())
}

/// Fills a lattice with `inside(x / scale)`, adjusting `scale` until the
/// measure is within `rel` of `omega_N`.
fn volume_matched(
    dim: usize,
    h: f64,
    extent: f64,
    rel: f64,
    inside: impl Fn(Point) -> bool,
) -> Result<VoxelSet> {
    let omega = unit_ball_volume(dim)?;
    let mut scale = 1.0;
    let mut best: Option<VoxelSet> = None;
    for _ in 0..8 {
        let mut v = VoxelSet::lattice_around(dim, ORIGIN, scale * extent + 2.0 * h, h)?;
        v.fill(|x| {
            let mut y = x;
            y.iter_mut().for_each(|c| *c /= scale);
            inside(y)
        });
        let m = v.measure();
        let err = (m / omega - 1.0).abs();
        let done = err <= rel;
        if best.as_ref().is_none_or(|b| err < (b.measure() / omega - 1.0).abs()) {
            best = Some(v);
        }
        if done || m == 0.0 {
            break;
        }
        scale *= (omega / m).powf(1.0 / dim as f64);
    }
    Ok(best.expect("at least one attempt"))
}

/// Union of one to three random balls scaled to volume `omega_N`.
pub fn random_voxel_set(rng: &mut impl Rng, dim: usize, h: f64) -> Result<VoxelSet> {
    let count = rng.random_range(1..=3);
    let balls: Vec<(Point, f64)> = (0..count)
        .map(|_| (random_point(rng, dim, 0.6), rng.random_range(0.35..1.0)))
        .collect();
    let extent = balls.iter().map(|(c, r)| dist(*c, ORIGIN) + r).fold(0.0, f64::max);
    volume_matched(dim, h, extent, 2e-3, |x| balls.iter().any(|(c, r)| dist(x, *c) < *r))
}

/// Voxelization of a nearly spherical set: a random perturbation with
/// `sup |u| = amplitude` around a random center within `shift`, optionally
/// with a satellite blob outside `B(1 + eps^2)` paid for by a hole inside
/// `B(1 - eps^2)`.
pub fn admissible_voxel_input(
    rng: &mut impl Rng,
    grid: &Arc<SphereGrid>,
    h: f64,
    amplitude: f64,
    shift: f64,
    satellite: bool,
) -> Result<VoxelSet> {
    let dim = grid.dim();
    let u = random_perturbation(rng, grid, 4, amplitude);
    let center = random_point(rng, dim, shift);
    let e = GraphSet::new(grid.clone(), u)?.volume_normalize().with_center(center);
    let mut v = VoxelSet::from_graph(&e, h)?.padded((0.3 / h).ceil() as usize);
    if satellite {
        let mut dir = random_point(rng, dim, 1.0);
        let n = dist(dir, ORIGIN).max(1e-9);
        dir.iter_mut().for_each(|c| *c *= 1.16 / n);
        let sat: Point = std::array::from_fn(|k| center[k] + dir[k]);
        let hole: Point = std::array::from_fn(|k| center[k] - 0.35 * dir[k] / 1.16);
        let mut added = 0;
        for k in 0..v.len() {
            if !v.get(k) && dist(v.center_of(k), sat) < 0.07 {
                v.set(k, true);
                added += 1;
            }
        }
        let mut inner: Vec<usize> = v.occupied().collect();
        inner.sort_by(|&a, &b| {
            dist(v.center_of(a), hole)
                .total_cmp(&dist(v.center_of(b), hole))
                .then(a.cmp(&b))
        });
        for &k in inner.iter().take(added) {
            v.set(k, false);
        }
    }
    Ok(v)
}

/// `count` equal balls of total volume `omega_N` on a cubic lattice with
/// the given spacing.
pub fn scattered_balls(dim: usize, h: f64, per_axis: usize, spacing: f64) -> Result<VoxelSet> {
    let omega = unit_ball_volume(dim)?;
    let count = per_axis.pow(dim as u32);
    let total = (omega / h.powi(dim as i32)).round() as usize;
    let half = 0.5 * spacing * (per_axis - 1) as f64;
    let centers: Vec<Point> = (0..count)
        .map(|i| {
            let mut p = ORIGIN;
            let mut r = i;
            for c in p.iter_mut().take(dim) {
                *c = (r % per_axis) as f64 * spacing - half;
                r /= per_axis;
            }
            p
        })
        .collect();
    let mut v = VoxelSet::lattice_around(dim, ORIGIN, half + spacing, h)?;
    for (i, &c) in centers.iter().enumerate() {
        // the `target` cells nearest each center; the first balls take the remainder
        let target = total / count + usize::from(i < total % count);
        let reach = (2.0 * (target as f64 / omega).powf(1.0 / dim as f64) * h).max(2.0 * h);
        let mut near: Vec<usize> = (0..v.len()).filter(|&k| dist(v.center_of(k), c) < reach).collect();
        near.sort_by(|&a, &b| dist(v.center_of(a), c).total_cmp(&dist(v.center_of(b), c)).then(a.cmp(&b)));
        for &k in near.iter().take(target) {
            v.set(k, true);
        }
    }
    Ok(v)
}

/// Disjoint voxel sets `G` and `H` on one lattice, each a union of random
/// balls inside `[-1.5, 1.5]^N`.
pub fn random_disjoint_pair(rng: &mut impl Rng, dim: usize, h: f64) -> Result<(VoxelSet, VoxelSet)> {
    loop {
        let blobs: Vec<(Point, f64, bool)> = (0..6)
            .map(|i| (random_point(rng, dim, 1.0), rng.random_range(0.1..0.4), i % 2 == 0))
            .collect();
        let mut g = VoxelSet::lattice_around(dim, ORIGIN, 1.5, h)?;
        let mut hs = g.clone();
        g.fill(|x| blobs.iter().any(|b| b.2 && dist(x, b.0) < b.1));
        hs.fill(|x| !g.contains(x) && blobs.iter().any(|b| !b.2 && dist(x, b.0) < b.1));
        if g.count() > 0 && hs.count() > 0 {
            return Ok((g, hs));
        }
    }
}

/// Random voxel set `H` (a few blobs and scattered cells) and a random
/// point, for the ball-capture bound.
pub fn random_capture_instance(rng: &mut impl Rng, dim: usize, h: f64) -> Result<(VoxelSet, Point)> {
    let mut v = VoxelSet::lattice_around(dim, ORIGIN, 1.0, h)?;
    let blobs: Vec<(Point, f64)> = (0..rng.random_range(1..4))
        .map(|_| (random_point(rng, dim, 0.8), rng.random_range(0.1..0.4)))
        .collect();
    v.fill(|x| blobs.iter().any(|b| dist(x, b.0) < b.1));
    for _ in 0..rng.random_range(0..50) {
        let k = rng.random_range(0..v.len());
        v.set(k, true);
    }
    Ok((v, random_point(rng, dim, 0.9)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn graph_sets_respect_the_cap() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        for dim in [2, 3] {
            let g = Arc::new(SphereGrid::for_dim(dim, 16).unwrap());
            for _ in 0..10 {
                let e = random_graph_set(&mut rng, &g, 4, 0.3).unwrap();
                assert!(e.sup_norm() <= 0.3);
                assert!((e.volume() / unit_ball_volume(dim).unwrap() - 1.0).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn perturbations_have_no_constant_term() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let g = SphereGrid::for_dim(3, 16).unwrap();
        let u = random_perturbation(&mut rng, &g, 4, 0.1);
        let mean: f64 = u.iter().zip(g.weights()).map(|(a, w)| a * w).sum();
        assert!(mean.abs() < 1e-10);
        assert!((u.iter().fold(0.0f64, |a, x| a.max(x.abs())) - 0.1).abs() < 1e-12);
    }

    #[test]
    fn voxel_sets_have_unit_ball_volume() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for dim in [2, 3] {
            let v = random_voxel_set(&mut rng, dim, 1.0 / 16.0).unwrap();
            assert!((v.measure() / unit_ball_volume(dim).unwrap() - 1.0).abs() <= 5e-3);
        }
    }

    #[test]
    fn satellite_input_keeps_its_volume() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let g = Arc::new(SphereGrid::for_dim(3, 12).unwrap());
        let plain = admissible_voxel_input(&mut rng.clone(), &g, 1.0 / 24.0, 0.03, 0.05, false).unwrap();
        let sat = admissible_voxel_input(&mut rng, &g, 1.0 / 24.0, 0.03, 0.05, true).unwrap();
        assert_eq!(plain.count(), sat.count());
        assert_ne!(plain.bits(), sat.bits());
    }

    #[test]
    fn scattered_balls_have_the_requested_volume() {
        let v = scattered_balls(2, 1.0 / 16.0, 3, 2.5).unwrap();
        let omega = unit_ball_volume(2).unwrap();
        assert!((v.measure() / omega - 1.0).abs() < 0.01);
    }

    #[test]
    fn pairs_are_disjoint() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let (g, h) = random_disjoint_pair(&mut rng, 3, 1.0 / 12.0).unwrap();
        assert!(g.occupied().all(|k| !h.get(k)));
    }
}

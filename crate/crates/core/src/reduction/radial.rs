use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geom::Point;
use crate::sets::{SphereGrid, TwoSidedGraphSet, VoxelSet};

/// Rays per cell and tangent axis in [`radial_rearrange`].
pub const RAYS_PER_AXIS: usize = 4;

/// `int_1^inf t^(N-1) chi_E dt` and `int_0^1 t^(N-1) chi_(E^c) dt` along one ray.
fn ray_moments(v: &VoxelSet, center: Point, dir: Point) -> (f64, f64) {
    let n = v.dim() as i32;
    let nf = n as f64;
    let mut outer = 0.0;
    let mut inner_occupied = 0.0;
    for (a, b) in v.ray_intervals(center, dir) {
        if b > 1.0 {
            outer += (b.powi(n) - a.max(1.0).powi(n)) / nf;
        }
        if a < 1.0 {
            inner_occupied += (b.min(1.0).powi(n) - a.powi(n)) / nf;
        }
    }
    (outer, (1.0 / nf - inner_occupied).max(0.0))
}

/// Two-sided graph around `center` with, in every cell, the same cone
/// volume of `v` outside and of its complement inside the unit sphere.
///
/// Per cell, `u+` solves `((1 + u+)^N - 1)/N = I+` and `u-` solves
/// `(1 - (1 - u-)^N)/N = I-`, where `I+-` are the mean ray moments over
/// `RAYS_PER_AXIS^(N-1)` equal-area rays of the cell. Values `>= eps` give
/// [`Error::EpsilonRegime`].
pub fn radial_rearrange(
    v: &VoxelSet,
    grid: Arc<SphereGrid>,
    center: Point,
    eps: f64,
) -> Result<TwoSidedGraphSet> {
    if grid.dim() != v.dim() {
        return Err(Error::Inconsistent("grid and voxel dimensions differ".into()));
    }
    let nf = v.dim() as f64;
    let mut u_plus = Vec::with_capacity(grid.len());
    let mut u_minus = Vec::with_capacity(grid.len());
    for j in 0..grid.len() {
        let rays = grid.cell_samples(j, 0.0, 1.0, RAYS_PER_AXIS);
        let (mut ip, mut im) = (0.0, 0.0);
        for &d in &rays {
            let (o, i) = ray_moments(v, center, d);
            ip += o;
            im += i;
        }
        ip /= rays.len() as f64;
        im /= rays.len() as f64;
        let up = (1.0 + nf * ip).powf(1.0 / nf) - 1.0;
        let um = 1.0 - (1.0 - nf * im).max(0.0).powf(1.0 / nf);
        if up >= eps || um >= eps {
            return Err(Error::EpsilonRegime(format!(
                "cell {j}: u+ = {up:.4}, u- = {um:.4}, eps = {eps}"
            )));
        }
        u_plus.push(up);
        u_minus.push(um);
    }
    Ok(TwoSidedGraphSet::new(grid, u_minus, u_plus)?.with_center(center))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::{dist, ORIGIN};
    use approx::assert_relative_eq;

    #[test]
    fn ball_gives_zero_graphs() {
        let g2 = Arc::new(SphereGrid::for_dim(2, 32).unwrap());
        let b = VoxelSet::ball(2, ORIGIN, 1.0, 1.0 / 256.0).unwrap();
        let t = radial_rearrange(&b, g2, ORIGIN, 0.1).unwrap();
        assert!(t.sup_norm() < 2.0 / 256.0, "{}", t.sup_norm());
    }

    #[test]
    fn shell_arrangement_is_reproduced_ray_by_ray() {
        // ball of radius 1.05 with the shell 0.5 < r < 0.6 removed: outside
        // moment (1.05^N - 1)/N, inside complement (0.6^N - 0.5^N)/N
        let h = 1.0 / 400.0;
        let mut v = VoxelSet::lattice_around(2, ORIGIN, 1.1, h).unwrap();
        v.fill(|p| {
            let r = dist(p, ORIGIN);
            r < 1.05 && !(0.5..0.6).contains(&r)
        });
        let g = Arc::new(SphereGrid::for_dim(2, 16).unwrap());
        let t = radial_rearrange(&v, g, ORIGIN, 0.2).unwrap();
        let um_want = 1.0 - (1.0 - (0.6f64.powi(2) - 0.25)).sqrt();
        for j in 0..16 {
            assert!((t.u_plus()[j] - 0.05).abs() < 2.0 * h, "{}", t.u_plus()[j]);
            assert!((t.u_minus()[j] - um_want).abs() < 2.0 * h, "{}", t.u_minus()[j]);
        }
        let vol = t.volume();
        assert_relative_eq!(vol, v.measure(), max_relative = 5e-3);
    }

    #[test]
    fn volume_is_kept() {
        let g = Arc::new(SphereGrid::for_dim(3, 16).unwrap());
        let e = crate::sets::GraphSet::from_fn(g.clone(), |x| 0.06 * x[0] * x[1] + 0.03 * x[2]).unwrap();
        let v = VoxelSet::from_graph(&e, 1.0 / 48.0).unwrap();
        let t = radial_rearrange(&v, g, ORIGIN, 0.2).unwrap();
        assert_relative_eq!(t.volume(), v.measure(), max_relative = 2e-3);
    }

    #[test]
    fn large_values_are_rejected() {
        let g = Arc::new(SphereGrid::for_dim(2, 8).unwrap());
        let v = VoxelSet::ball(2, ORIGIN, 1.3, 0.05).unwrap();
        assert!(matches!(
            radial_rearrange(&v, g, ORIGIN, 0.2),
            Err(Error::EpsilonRegime(_))
        ));
    }
}

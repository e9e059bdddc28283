use serde::Serialize;

use crate::error::{Error, Result};
use crate::geom::{dist, Point};
use crate::kernel::{unit_ball_volume, KernelParams};
use crate::quad::GaussLegendre;

use super::voxel::VoxelSet;

/// Radially symmetric decreasing profile: `values[k]` holds on the shell
/// between `radii[k-1]` and `radii[k]`.
#[derive(Debug, Clone, Serialize)]
pub struct RadialProfile {
    pub radii: Vec<f64>,
    pub values: Vec<f64>,
    pub cell_volume: f64,
}

impl RadialProfile {
    /// Value at distance `r` from the origin.
    pub fn eval(&self, r: f64) -> f64 {
        let k = self.radii.partition_point(|&x| x < r);
        self.values.get(k).copied().unwrap_or(0.0)
    }

    /// `sum values * cell_volume`, the L1 norm.
    pub fn l1_norm(&self) -> f64 {
        self.values.iter().sum::<f64>() * self.cell_volume
    }
}

/// Layer-cake rearrangement of nonnegative cell values: the sorted values
/// are laid out on shells of one cell volume each.
pub fn sd_rearrangement(values: &[f64], cell_volume: f64, dim: usize) -> Result<RadialProfile> {
    if let Some(v) = values.iter().find(|v| !(**v >= 0.0)) {
        return Err(Error::Domain(format!("rearrangement of negative value {v}")));
    }
    let w = unit_ball_volume(dim)?;
    let mut sorted: Vec<f64> = values.iter().copied().filter(|&v| v > 0.0).collect();
    sorted.sort_by(|a, b| b.total_cmp(a));
    let radii = (1..=sorted.len())
        .map(|k| (k as f64 * cell_volume / w).powf(1.0 / dim as f64))
        .collect();
    Ok(RadialProfile {
        radii,
        values: sorted,
        cell_volume,
    })
}

/// Rearrangement of a voxel indicator.
pub fn sd_rearrangement_voxel(v: &VoxelSet) -> Result<RadialProfile> {
    let values: Vec<f64> = v.bits().iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
    sd_rearrangement(&values, v.cell_volume(), v.dim())
}

/// Both sides of the ball-capture bound at a point.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct CaptureBound {
    /// Potential of `H` at `x`, by cell-center sums.
    pub potential: f64,
    /// Potential of the union of cells of `H` at `x`, integrated.
    pub integrated_potential: f64,
    /// Same cell-center sum over the `|H|/h^N` lattice cells nearest `x`.
    pub rearranged_sum: f64,
    /// Potential at the center of the ball of measure `|H|`.
    pub ball_potential: f64,
}

impl CaptureBound {
    /// `ball_potential - integrated_potential`; nonnegative for every set.
    pub fn margin(&self) -> f64 {
        self.ball_potential - self.integrated_potential
    }
}

/// Subdivision depth of cells near the evaluation point.
const REFINE_DEPTH: usize = 14;

/// `int_Q |y - x|^(a-N) dy` over the cube `Q` of half-width `half`: a tensor
/// Gauss–Legendre rule when `x` is well separated from `Q`, otherwise the
/// sum over the `2^N` children.
fn cube_potential(center: Point, half: f64, x: Point, p: &KernelParams, depth: usize) -> f64 {
    let dim = p.dim();
    let d = dist(center, x);
    if d >= 4.0 * half * (dim as f64).sqrt() {
        let rule = GaussLegendre::cached(if d >= 16.0 * half { 2 } else { 4 });
        let m = rule.len();
        let mut total = 0.0;
        for idx in 0..m.pow(dim as u32) {
            let mut y = center;
            let mut w = 1.0;
            let mut r = idx;
            for c in y.iter_mut().take(dim) {
                *c += half * rule.nodes[r % m];
                w *= rule.weights[r % m];
                r /= m;
            }
            total += w * p.kernel(dist(y, x));
        }
        return total * half.powi(dim as i32);
    }
    if depth == 0 {
        return (2.0 * half).powi(dim as i32) * p.kernel(d.max(half));
    }
    (0..1usize << dim)
        .map(|k| {
            let mut c = center;
            for (a, v) in c.iter_mut().enumerate().take(dim) {
                *v += if k >> a & 1 == 1 { 0.5 * half } else { -0.5 * half };
            }
            cube_potential(c, 0.5 * half, x, p, depth - 1)
        })
        .sum()
}

/// Potential at `x` of the union of occupied cells of `v`.
pub fn cells_potential(v: &VoxelSet, x: Point, p: &KernelParams) -> f64 {
    let half = 0.5 * v.spacing();
    v.occupied()
        .map(|i| cube_potential(v.center_of(i), half, x, p, REFINE_DEPTH))
        .sum()
}

/// Evaluates the potential of `h` at `x` against the potential at the
/// center of an equal-measure ball.
pub fn capture_bound(h: &VoxelSet, x: Point, p: &KernelParams) -> Result<CaptureBound> {
    let n = h.count();
    if n == 0 {
        return Err(Error::EmptySet);
    }
    let cell = h.cell_volume();
    let mut all: Vec<f64> = (0..h.len()).map(|i| p.kernel(dist(h.center_of(i), x))).collect();
    let potential = cell * h.occupied().map(|i| all[i]).sum::<f64>();
    all.sort_by(|a, b| b.total_cmp(a));
    let rearranged_sum = cell * all[..n].iter().sum::<f64>();
    let m = n as f64 * cell;
    let r = (m / unit_ball_volume(h.dim())?).powf(1.0 / p.n());
    let ball_potential = p.n() * unit_ball_volume(h.dim())? / p.alpha() * r.powf(p.alpha());
    Ok(CaptureBound {
        potential,
        integrated_potential: cells_potential(h, x, p),
        rearranged_sum,
        ball_potential,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geom::ORIGIN;
    use proptest::prelude::*;

    #[test]
    fn indicator_profile_has_equal_measure_radius() {
        let mut v = VoxelSet::empty(2, ORIGIN, 0.1, [20, 20, 1]).unwrap();
        for i in [3, 50, 77, 123, 301] {
            v.set(i, true);
        }
        let prof = sd_rearrangement_voxel(&v).unwrap();
        let m = v.measure();
        let r = (m / std::f64::consts::PI).sqrt();
        assert!((prof.radii.last().unwrap() - r).abs() < 1e-12);
        assert_eq!(prof.eval(0.5 * r), 1.0);
        assert_eq!(prof.eval(1.01 * r), 0.0);
    }

    #[test]
    fn radial_input_is_a_fixed_point() {
        let v = VoxelSet::ball(2, ORIGIN, 1.0, 1.0 / 32.0).unwrap();
        let values: Vec<f64> = (0..v.len())
            .map(|i| {
                let r = crate::geom::norm(v.center_of(i));
                (1.0 - r).max(0.0)
            })
            .collect();
        let prof = sd_rearrangement(&values, v.cell_volume(), 2).unwrap();
        for r in [0.1, 0.4, 0.8] {
            assert!((prof.eval(r) - (1.0 - r)).abs() < 0.05);
        }
    }

    #[test]
    fn negative_values_rejected() {
        assert!(sd_rearrangement(&[1.0, -0.5], 1.0, 2).is_err());
    }

    proptest! {
        #[test]
        fn rearrangement_preserves_l1(values in proptest::collection::vec(0.0f64..10.0, 1..200)) {
            let prof = sd_rearrangement(&values, 0.01, 3).unwrap();
            let mut a: Vec<f64> = values.iter().copied().filter(|&v| v > 0.0).collect();
            a.sort_by(|x, y| y.total_cmp(x));
            prop_assert_eq!(&prof.values, &a);
            prop_assert!(prof.values.windows(2).all(|w| w[0] >= w[1]));
        }

        #[test]
        fn capture_bound_holds(seed in 0u64..1000, frac in 0.05f64..0.6) {
            use rand::{Rng, SeedableRng};
            let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
            let p = KernelParams::new(2, 1.5).unwrap();
            let mut h = VoxelSet::empty(2, [-1.0, -1.0, 0.0], 0.05, [40, 40, 1]).unwrap();
            for i in 0..h.len() {
                h.set(i, rng.random::<f64>() < frac);
            }
            let x = [rng.random_range(-0.8..0.8) + 0.0123, rng.random_range(-0.8..0.8) + 0.0071, 0.0];
            let c = capture_bound(&h, x, &p).unwrap();
            prop_assert!(c.potential <= c.rearranged_sum + 1e-12);
            prop_assert!(c.potential <= c.ball_potential * 1.05);
            prop_assert!(c.margin() >= -1e-6 * c.ball_potential, "{c:?}");
        }
    }

    #[test]
    fn far_cell_potential_is_the_point_value() {
        let p = KernelParams::new(3, 2.0).unwrap();
        let mut v = VoxelSet::empty(3, ORIGIN, 0.1, [1, 1, 1]).unwrap();
        v.set(0, true);
        let x = [3.0, 0.0, 0.0];
        let want = 1e-3 * p.kernel(dist(v.center_of(0), x));
        assert!((cells_potential(&v, x, &p) - want).abs() < 1e-6 * want);
    }

    #[test]
    fn cube_potential_at_its_center_matches_the_closed_form() {
        // N = 2, a = 1: int over [-1,1]^2 of 1/|y| is 8 asinh(1)
        let p = KernelParams::new(2, 1.0 + 1e-12).unwrap();
        let want = 8.0 * 1f64.asinh();
        let got = cube_potential(ORIGIN, 1.0, [0.0, 0.0, 0.0], &p, REFINE_DEPTH);
        assert!((got - want).abs() < 1e-4 * want, "{got} vs {want}");
    }

    #[test]
    fn voxel_ball_nearly_attains_the_bound_at_its_center() {
        let p = KernelParams::new(3, 2.0).unwrap();
        let b = VoxelSet::ball(3, ORIGIN, 0.5, 1.0 / 32.0).unwrap();
        let c = capture_bound(&b, [1e-3, 2e-3, 0.0], &p).unwrap();
        assert!(c.margin() >= 0.0);
        assert!(c.margin() < 0.02 * c.ball_potential, "{c:?}");
    }
}

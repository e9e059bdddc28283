use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{add, dot, norm, scale, sub, Point};
use crate::sets::{GraphSet, SphereGrid, TwoSidedGraphSet, VoxelSet};

use super::consolidate::consolidate;
use super::radial::radial_rearrange;

/// Parameters of the damped fixed-point search for `Bar(E_z) = z`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BarycenterOptions {
    pub damping: f64,
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for BarycenterOptions {
    fn default() -> Self {
        Self {
            damping: 0.5,
            tolerance: 1e-4,
            max_iterations: 200,
        }
    }
}

/// The nearly spherical set built around a center `z`, with the two-sided
/// set it consolidates.
#[derive(Debug, Clone)]
pub struct Recentered {
    pub z: Point,
    pub two_sided: TwoSidedGraphSet,
    pub set: GraphSet,
}

impl Recentered {
    /// `Bar(E_z) - z`.
    pub fn offset(&self) -> Point {
        sub(self.set.barycenter(), self.z)
    }
}

/// `E_z`: the consolidation of the radial rearrangement of `v` around `z`.
pub fn recenter(v: &VoxelSet, grid: &Arc<SphereGrid>, z: Point, eps: f64) -> Result<Recentered> {
    let two_sided = radial_rearrange(v, grid.clone(), z, eps)?;
    let set = consolidate(&two_sided)?;
    Ok(Recentered { z, two_sided, set })
}

/// Result of [`adjust_barycenter`].
#[derive(Debug, Clone)]
pub struct BarycenterFit {
    pub fixed_point: Recentered,
    pub iterations: usize,
    pub residual: f64,
    /// `(Bar(z) - z) . (z - c)` at the `2N` points `c +- (eps/2) e_i`.
    pub boundary_products: Vec<f64>,
}

/// Finds `z` with `|Bar(E_z) - z| <= tolerance` by the damped iteration
/// `z <- z + damping (Bar(E_z) - z)` started at `center`, projected onto
/// `|z - center| <= eps/2`, and evaluates the sign of the field on the
/// boundary of that ball.
pub fn adjust_barycenter(
    v: &VoxelSet,
    grid: &Arc<SphereGrid>,
    center: Point,
    eps: f64,
    opts: &BarycenterOptions,
) -> Result<BarycenterFit> {
    let radius = 0.5 * eps;
    let mut z = center;
    let mut best: Option<(f64, Recentered)> = None;
    for it in 0..=opts.max_iterations {
        let cur = recenter(v, grid, z, eps)?;
        let d = cur.offset();
        let residual = norm(d);
        if residual <= opts.tolerance {
            let boundary_products = boundary_field(v, grid, center, eps)?;
            return Ok(BarycenterFit {
                fixed_point: cur,
                iterations: it,
                residual,
                boundary_products,
            });
        }
        if best.as_ref().is_none_or(|(r, _)| residual < *r) {
            best = Some((residual, cur));
        }
        let mut next = add(z, scale(d, opts.damping));
        let off = sub(next, center);
        if norm(off) > radius {
            next = add(center, scale(off, radius / norm(off)));
        }
        z = next;
    }
    Err(Error::NonConvergence {
        iterations: opts.max_iterations,
        residual: best.map_or(f64::INFINITY, |(r, _)| r),
    })
}

/// `(Bar(z) - z) . (z - c)` for `z = c +- (eps/2) e_i`.
pub fn boundary_field(v: &VoxelSet, grid: &Arc<SphereGrid>, center: Point, eps: f64) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(2 * v.dim());
    for axis in 0..v.dim() {
        for sign in [1.0, -1.0] {
            let mut e = [0.0; 3];
            e[axis] = sign * 0.5 * eps;
            let r = recenter(v, grid, add(center, e), eps)?;
            out.push(dot(r.offset(), e));
        }
    }
    Ok(out)
}

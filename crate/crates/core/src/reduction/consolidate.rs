use crate::error::Result;
use crate::sets::{CellSplit, GraphSet, TwoSidedGraphSet};

/// `((1 + u+)^N - 1, 1 - (1 - u-)^N)`: cone volumes (times `N`) per unit
/// area outside and missing inside the sphere.
pub(crate) fn shell_moments(up: f64, um: f64, n: i32) -> (f64, f64) {
    ((1.0 + up).powi(n) - 1.0, 1.0 - (1.0 - um).powi(n))
}

/// Fraction of a cell that carries `u+` when both sides are present:
/// `lambda B = (1 - lambda) A`, which keeps the cell's volume.
pub fn split_fraction(up: f64, um: f64, n: usize) -> f64 {
    let (a, b) = shell_moments(up, um, n as i32);
    a / (a + b)
}

/// Signed graph set with the same volume as `t` and at least half of its
/// symmetric difference with the unit ball, cell by cell.
///
/// A node with one side empty keeps `u = u+` or `u = -u-`; a node with both
/// is split along the azimuth into a part of fraction [`split_fraction`]
/// with `u+` and a part with `-u-`.
pub fn consolidate(t: &TwoSidedGraphSet) -> Result<GraphSet> {
    let n = t.dim();
    let mut u = Vec::with_capacity(t.grid().len());
    let mut splits = Vec::with_capacity(t.grid().len());
    for (&up, &um) in t.u_plus().iter().zip(t.u_minus()) {
        if um == 0.0 {
            u.push(up);
            splits.push(None);
        } else if up == 0.0 {
            u.push(-um);
            splits.push(None);
        } else {
            u.push(up);
            splits.push(Some(CellSplit {
                lambda: split_fraction(up, um, n),
                u_second: -um,
            }));
        }
    }
    Ok(GraphSet::with_splits(t.grid().clone(), u, splits)?.with_center(t.center()))
}

/// `|E_z Δ B_z| / |E'' Δ B_z|` for a consolidation `g` of `t`; at least 1/2.
pub fn symm_diff_ratio(t: &TwoSidedGraphSet, g: &GraphSet) -> Result<f64> {
    let full = t.symm_diff_unit_ball();
    if full == 0.0 {
        return Ok(1.0);
    }
    Ok(g.symm_diff_ball(g.center())? / full)
}

use serde::{Deserialize, Serialize};

use crate::energy::graph::VOLUME_TOLERANCE;
use crate::error::{Error, Result};
use crate::geom::{dist, Point};
use crate::kernel::unit_ball_volume;
use crate::sets::VoxelSet;

/// Output of [`truncate_to_annulus`].
#[derive(Debug, Clone)]
pub struct Truncation {
    pub set: VoxelSet,
    pub summary: TruncationSummary,
}

/// Bookkeeping of the two mass moves.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TruncationSummary {
    /// Cells outside `B(1 + eps^2)` moved into the outer receiving shell.
    pub moved_out: usize,
    /// Cells of `B(1 - eps^2)` filled from the inner donor shell.
    pub filled_in: usize,
    /// Free cells of the outer receiving shell.
    pub outer_capacity: usize,
    /// Occupied cells of the inner donor shell.
    pub inner_capacity: usize,
}

/// Moves the mass of `v` into the annulus `B_c(1 + eps^2) \ B_c(1 - eps^2)`
/// around `center`, keeping the cell count.
///
/// Cells outside `B_c(1 + eps^2)` go to free cells of
/// `B_c(1 + eps^2/2) \ B_c(1 + eps^2/3)`; free cells of `B_c(1 - eps^2)` are
/// then filled by emptying cells of `B_c(1 - eps^2/3) \ B_c(1 - eps^2/2)`.
/// Within each shell cells are taken by increasing distance from the radius
/// `1 +- eps^2/3`, ties by index. A shell without room gives
/// [`Error::NotApplicable`].
pub fn truncate_to_annulus(v: &VoxelSet, center: Point, eps: f64) -> Result<Truncation> {
    if !(eps > 0.0 && eps < 1.0) {
        return Err(Error::Domain(format!("eps must lie in (0, 1), got {eps}")));
    }
    let omega = unit_ball_volume(v.dim())?;
    let vol = v.measure();
    if !((vol / omega - 1.0).abs() <= VOLUME_TOLERANCE) {
        return Err(Error::Precondition(format!(
            "volume {vol} differs from the unit ball volume {omega}"
        )));
    }
    let e2 = eps * eps;
    let mut out = cover(v, center, 1.0 + 0.5 * e2);
    let radius = |out: &VoxelSet, idx: usize| dist(out.center_of(idx), center);

    let outside: Vec<usize> = out
        .occupied()
        .filter(|&i| radius(&out, i) >= 1.0 + e2)
        .collect();
    let receivers = shell(&out, center, 1.0 + e2 / 3.0, 1.0 + e2 / 2.0, false);
    let outer_capacity = receivers.len();
    if receivers.len() < outside.len() {
        return Err(Error::NotApplicable(format!(
            "{} cells outside the annulus, room for {}",
            outside.len(),
            receivers.len()
        )));
    }
    for &i in &outside {
        out.set(i, false);
    }
    for &i in receivers.iter().take(outside.len()) {
        out.set(i, true);
    }

    let holes: Vec<usize> = (0..out.len())
        .filter(|&i| !out.get(i) && radius(&out, i) < 1.0 - e2)
        .collect();
    let donors = shell(&out, center, 1.0 - e2 / 2.0, 1.0 - e2 / 3.0, true);
    let inner_capacity = donors.len();
    if donors.len() < holes.len() {
        return Err(Error::NotApplicable(format!(
            "{} empty cells inside the annulus, {} donors",
            holes.len(),
            donors.len()
        )));
    }
    for &i in &holes {
        out.set(i, true);
    }
    for &i in donors.iter().take(holes.len()) {
        out.set(i, false);
    }

    Ok(Truncation {
        set: out,
        summary: TruncationSummary {
            moved_out: outside.len(),
            filled_in: holes.len(),
            outer_capacity,
            inner_capacity,
        },
    })
}

/// `v` on a lattice reaching at least `reach` from `center` in every axis.
fn cover(v: &VoxelSet, center: Point, reach: f64) -> VoxelSet {
    let h = v.spacing();
    let mut pad = 0.0f64;
    for a in 0..v.dim() {
        let lo = v.origin()[a];
        let hi = lo + v.dims()[a] as f64 * h;
        pad = pad.max(lo - (center[a] - reach)).max(center[a] + reach - hi);
    }
    if pad > 0.0 {
        v.padded((pad / h).ceil() as usize + 1)
    } else {
        v.clone()
    }
}

/// Cells with center radius in `[r0, r1)` and the given occupancy, sorted by
/// distance from the radius next to the sphere (`r1` when `occupied`, else
/// `r0`) and then by index.
fn shell(v: &VoxelSet, center: Point, r0: f64, r1: f64, occupied: bool) -> Vec<usize> {
    let target = if occupied { r1 } else { r0 };
    let mut cells: Vec<(f64, usize)> = (0..v.len())
        .filter(|&i| v.get(i) == occupied)
        .filter_map(|i| {
            let r = dist(v.center_of(i), center);
            (r >= r0 && r < r1).then_some(((r - target).abs(), i))
        })
        .collect();
    cells.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
    cells.into_iter().map(|(_, i)| i).collect()
}

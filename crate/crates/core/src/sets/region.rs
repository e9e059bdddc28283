use crate::geom::{Point, ORIGIN};

use super::graph::{GraphSet, TwoSidedGraphSet};
use super::voxel::VoxelSet;

/// A bounded set queried by membership.
pub trait Region {
    fn dim(&self) -> usize;
    fn contains(&self, x: Point) -> bool;
    fn volume(&self) -> f64;
    /// Axis-aligned box `(lo, hi)` containing the set.
    fn bounding_box(&self) -> (Point, Point);
}

fn centered_box(dim: usize, center: Point, r: f64) -> (Point, Point) {
    let mut lo = ORIGIN;
    let mut hi = ORIGIN;
    for a in 0..dim {
        lo[a] = center[a] - r;
        hi[a] = center[a] + r;
    }
    (lo, hi)
}

impl Region for GraphSet {
    fn dim(&self) -> usize {
        GraphSet::dim(self)
    }
    fn contains(&self, x: Point) -> bool {
        GraphSet::contains(self, x)
    }
    fn volume(&self) -> f64 {
        GraphSet::volume(self)
    }
    fn bounding_box(&self) -> (Point, Point) {
        centered_box(self.dim(), self.center(), 1.0 + self.sup_norm())
    }
}

impl Region for TwoSidedGraphSet {
    fn dim(&self) -> usize {
        TwoSidedGraphSet::dim(self)
    }
    fn contains(&self, x: Point) -> bool {
        TwoSidedGraphSet::contains(self, x)
    }
    fn volume(&self) -> f64 {
        TwoSidedGraphSet::volume(self)
    }
    fn bounding_box(&self) -> (Point, Point) {
        centered_box(self.dim(), self.center(), 1.0 + self.sup_norm())
    }
}

impl Region for VoxelSet {
    fn dim(&self) -> usize {
        VoxelSet::dim(self)
    }
    fn contains(&self, x: Point) -> bool {
        VoxelSet::contains(self, x)
    }
    fn volume(&self) -> f64 {
        self.measure()
    }
    fn bounding_box(&self) -> (Point, Point) {
        let h = self.spacing();
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for idx in self.occupied() {
            let c = self.center_of(idx);
            for a in 0..self.dim() {
                lo[a] = lo[a].min(c[a] - 0.5 * h);
                hi[a] = hi[a].max(c[a] + 0.5 * h);
            }
        }
        for a in self.dim()..3 {
            lo[a] = 0.0;
            hi[a] = 0.0;
        }
        (lo, hi)
    }
}

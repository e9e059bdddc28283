use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{add, dot, norm, scale, sub, Point, ORIGIN};
use crate::kernel::unit_ball_volume;

use super::grid::SphereGrid;

/// Division of a grid cell into two sub-cells along the azimuth.
///
/// The first sub-cell takes the fraction `lambda` of the cell and carries
/// the node's own radial value; the second takes the rest with `u_second`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CellSplit {
    pub lambda: f64,
    pub u_second: f64,
}

/// One quadrature cell of a graph set.
#[derive(Debug, Clone, Copy)]
pub struct Cell {
    pub node: Point,
    pub weight: f64,
    pub u: f64,
    pub parent: usize,
}

/// Star-shaped set `{center + (1 + r) x : x on the sphere, -1 <= r <= u(x)}`.
#[derive(Debug, Clone)]
pub struct GraphSet {
    grid: Arc<SphereGrid>,
    u: Vec<f64>,
    splits: Vec<Option<CellSplit>>,
    center: Point,
}

impl GraphSet {
    pub fn new(grid: Arc<SphereGrid>, u: Vec<f64>) -> Result<Self> {
        if u.len() != grid.len() {
            return Err(Error::Inconsistent(format!(
                "{} radial values for a grid of {} nodes",
                u.len(),
                grid.len()
            )));
        }
        if let Some(j) = u.iter().position(|&v| !(v > -1.0) || !v.is_finite()) {
            return Err(Error::NotStarShaped(format!("u[{j}] = {} is not > -1", u[j])));
        }
        let splits = vec![None; u.len()];
        Ok(Self {
            grid,
            u,
            splits,
            center: ORIGIN,
        })
    }

    /// The unit ball on `grid`.
    pub fn ball(grid: Arc<SphereGrid>) -> Self {
        let n = grid.len();
        Self::new(grid, vec![0.0; n]).expect("zero perturbation is valid")
    }

    /// Samples `f` at the grid nodes.
    pub fn from_fn(grid: Arc<SphereGrid>, f: impl Fn(Point) -> f64) -> Result<Self> {
        let u = grid.nodes().iter().map(|&p| f(p)).collect();
        Self::new(grid, u)
    }

    /// Builds a set with split cells; `splits[j]` applies to node `j`.
    pub fn with_splits(
        grid: Arc<SphereGrid>,
        u: Vec<f64>,
        splits: Vec<Option<CellSplit>>,
    ) -> Result<Self> {
        let mut g = Self::new(grid, u)?;
        if splits.len() != g.u.len() {
            return Err(Error::Inconsistent("split list length differs from grid".into()));
        }
        for (j, s) in splits.iter().enumerate() {
            if let Some(s) = s {
                if !(s.lambda > 0.0 && s.lambda < 1.0) || !(s.u_second > -1.0) {
                    return Err(Error::Inconsistent(format!("invalid split at node {j}: {s:?}")));
                }
            }
        }
        g.splits = splits;
        Ok(g)
    }

    pub fn with_center(mut self, center: Point) -> Self {
        self.center = center;
        self
    }

    pub fn grid(&self) -> &Arc<SphereGrid> {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.grid.dim()
    }

    pub fn u(&self) -> &[f64] {
        &self.u
    }

    pub fn splits(&self) -> &[Option<CellSplit>] {
        &self.splits
    }

    pub fn has_splits(&self) -> bool {
        self.splits.iter().any(Option::is_some)
    }

    pub fn center(&self) -> Point {
        self.center
    }

    /// All quadrature cells, expanding split nodes into two sub-cells.
    pub fn cells(&self) -> Vec<Cell> {
        let dphi = self.grid.azimuth_width();
        let mut out = Vec::with_capacity(self.u.len());
        for (j, (&p, &w)) in self.grid.nodes().iter().zip(self.grid.weights()).enumerate() {
            match self.splits[j] {
                None => out.push(Cell {
                    node: p,
                    weight: w,
                    u: self.u[j],
                    parent: j,
                }),
                Some(s) => {
                    out.push(Cell {
                        node: self.grid.shift_azimuth(p, -(1.0 - s.lambda) * dphi / 2.0),
                        weight: s.lambda * w,
                        u: self.u[j],
                        parent: j,
                    });
                    out.push(Cell {
                        node: self.grid.shift_azimuth(p, s.lambda * dphi / 2.0),
                        weight: (1.0 - s.lambda) * w,
                        u: s.u_second,
                        parent: j,
                    });
                }
            }
        }
        out
    }

    /// Largest `|u|` over all cells.
    pub fn sup_norm(&self) -> f64 {
        self.cells().iter().map(|c| c.u.abs()).fold(0.0, f64::max)
    }

    /// `sum w u^2` over all cells.
    pub fn l2_norm_sq(&self) -> f64 {
        self.cells().iter().map(|c| c.weight * c.u * c.u).sum()
    }

    /// Boundary radius `1 + u` in direction `dir`, exact on cells.
    pub fn radius_in_cell(&self, dir: Point) -> f64 {
        let (j, frac) = self.grid.locate(dir);
        let u = match self.splits[j] {
            Some(s) if frac >= s.lambda => s.u_second,
            _ => self.u[j],
        };
        1.0 + u
    }

    /// Boundary radius interpolated between nodes; falls back to the
    /// cell-exact value when cells are split.
    pub fn radius_interpolated(&self, dir: Point) -> f64 {
        if self.has_splits() {
            self.radius_in_cell(dir)
        } else {
            1.0 + self.grid.interpolate(&self.u, dir)
        }
    }

    /// Membership of point `x`, using the interpolated boundary.
    pub fn contains(&self, x: Point) -> bool {
        let d = sub(x, self.center);
        let r = norm(d);
        r == 0.0 || r <= self.radius_interpolated(d)
    }

    /// Volume `(1/N) sum w (1 + u)^N`.
    pub fn volume(&self) -> f64 {
        let n = self.dim() as i32;
        self.cells()
            .iter()
            .map(|c| c.weight * (1.0 + c.u).powi(n))
            .sum::<f64>()
            / n as f64
    }

    /// Barycenter, in absolute coordinates.
    pub fn barycenter(&self) -> Point {
        let n = self.dim() as i32;
        let mut m = ORIGIN;
        for c in self.cells() {
            m = add(m, scale(c.node, c.weight * (1.0 + c.u).powi(n + 1)));
        }
        add(self.center, scale(m, 1.0 / ((n as f64 + 1.0) * self.volume())))
    }

    /// Rescales `1 + u` about the center so that the volume is `omega_N`.
    pub fn volume_normalize(&self) -> Self {
        let n = self.dim() as f64;
        let target = unit_ball_volume(self.dim()).expect("grid dimension is valid");
        let lambda = (target / self.volume()).powf(1.0 / n);
        self.scaled(lambda)
    }

    /// The set dilated by `lambda` about its center.
    pub fn scaled(&self, lambda: f64) -> Self {
        let f = |u: f64| lambda * (1.0 + u) - 1.0;
        Self {
            grid: self.grid.clone(),
            u: self.u.iter().map(|&u| f(u)).collect(),
            splits: self
                .splits
                .iter()
                .map(|s| {
                    s.map(|s| CellSplit {
                        lambda: s.lambda,
                        u_second: f(s.u_second),
                    })
                })
                .collect(),
            center: self.center,
        }
    }

    /// Same set with new radial values `u` on the unsplit grid.
    pub fn with_u(&self, u: Vec<f64>) -> Result<Self> {
        Ok(Self::new(self.grid.clone(), u)?.with_center(self.center))
    }

    /// `|E Δ B_c|` for the unit ball centred at `c` (absolute coordinates),
    /// computed ray by ray.
    pub fn symm_diff_ball(&self, c: Point) -> Result<f64> {
        let rel = sub(c, self.center);
        if norm(rel) >= 1.0 {
            return Err(Error::UnsupportedCenter(c));
        }
        Ok(self.symm_diff_rel(rel))
    }

    pub(crate) fn symm_diff_rel(&self, rel: Point) -> f64 {
        let n = self.dim() as i32;
        let c2 = dot(rel, rel);
        let s: f64 = self
            .cells()
            .iter()
            .map(|cell| {
                let nu = dot(cell.node, rel);
                let tp = nu + (nu * nu - c2 + 1.0).sqrt();
                cell.weight * ((1.0 + cell.u).powi(n) - tp.powi(n)).abs()
            })
            .sum();
        s / n as f64
    }
}

/// Set `{center + t x : t in [0, 1 - u_minus(x)) or (1, 1 + u_plus(x))}`.
#[derive(Debug, Clone)]
pub struct TwoSidedGraphSet {
    grid: Arc<SphereGrid>,
    u_minus: Vec<f64>,
    u_plus: Vec<f64>,
    center: Point,
}

impl TwoSidedGraphSet {
    pub fn new(grid: Arc<SphereGrid>, u_minus: Vec<f64>, u_plus: Vec<f64>) -> Result<Self> {
        if u_minus.len() != grid.len() || u_plus.len() != grid.len() {
            return Err(Error::Inconsistent("two-sided graph length differs from grid".into()));
        }
        let bad = |v: &f64| !(*v >= 0.0 && *v < 1.0);
        if u_minus.iter().any(bad) || u_plus.iter().any(|v| !(*v >= 0.0) || !v.is_finite()) {
            return Err(Error::Domain("two-sided graph values must be nonnegative, u_minus < 1".into()));
        }
        Ok(Self {
            grid,
            u_minus,
            u_plus,
            center: ORIGIN,
        })
    }

    pub fn with_center(mut self, center: Point) -> Self {
        self.center = center;
        self
    }

    pub fn grid(&self) -> &Arc<SphereGrid> {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.grid.dim()
    }

    pub fn u_minus(&self) -> &[f64] {
        &self.u_minus
    }

    pub fn u_plus(&self) -> &[f64] {
        &self.u_plus
    }

    pub fn center(&self) -> Point {
        self.center
    }

    pub fn sup_norm(&self) -> f64 {
        self.u_minus
            .iter()
            .chain(&self.u_plus)
            .fold(0.0, |a, &b| a.max(b))
    }

    pub fn volume(&self) -> f64 {
        let n = self.dim() as i32;
        self.grid
            .weights()
            .iter()
            .zip(self.u_minus.iter().zip(&self.u_plus))
            .map(|(w, (um, up))| w * ((1.0 - um).powi(n) + (1.0 + up).powi(n) - 1.0))
            .sum::<f64>()
            / n as f64
    }

    /// `|E Δ B|` for the unit ball at the set's own center.
    pub fn symm_diff_unit_ball(&self) -> f64 {
        let n = self.dim() as i32;
        self.grid
            .weights()
            .iter()
            .zip(self.u_minus.iter().zip(&self.u_plus))
            .map(|(w, (um, up))| w * ((1.0 + up).powi(n) - (1.0 - um).powi(n)))
            .sum::<f64>()
            / n as f64
    }

    /// Membership using the cell-exact radii.
    pub fn contains(&self, x: Point) -> bool {
        let d = sub(x, self.center);
        let r = norm(d);
        if r == 0.0 {
            return self.u_minus.iter().all(|&v| v < 1.0);
        }
        let (j, _) = self.grid.locate(d);
        r < 1.0 - self.u_minus[j] || (r > 1.0 && r < 1.0 + self.u_plus[j])
    }
}

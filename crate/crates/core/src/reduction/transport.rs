use std::sync::Arc;

use rand::distr::{weighted::WeightedIndex, Distribution};
use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::geom::{add, dist, scale, Point};
use crate::quad::GaussLegendre;
use crate::sets::{GraphSet, SphereGrid, TwoSidedGraphSet};

use super::consolidate::split_fraction;

/// Largest accepted relative mismatch of the two shell volumes of a map.
pub const MASS_TOLERANCE: f64 = 1e-8;

/// Azimuth fraction `[f0, f1]` of one grid cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Patch {
    pub cell: usize,
    pub f0: f64,
    pub f1: f64,
}

/// Monotone map of the shell `source` over `from` onto the shell `target`
/// over `to`: `Phi(t nu) = phi(t) tau(nu)` with `tau` affine in the azimuth
/// and `|from| (t^N - s0^N) = |to| (phi^N - r0^N)`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RayMap {
    pub from: Patch,
    pub to: Patch,
    pub source: (f64, f64),
    pub target: (f64, f64),
}

/// Union of ray maps around a common center.
#[derive(Debug, Clone)]
pub struct RadialTransport {
    grid: Arc<SphereGrid>,
    center: Point,
    maps: Vec<RayMap>,
}

impl RadialTransport {
    /// Checks every map for matching shell volumes, patch bounds and
    /// increasing radii.
    pub fn new(grid: Arc<SphereGrid>, center: Point, maps: Vec<RayMap>) -> Result<Self> {
        let t = Self { grid, center, maps };
        for (k, m) in t.maps.iter().enumerate() {
            for p in [m.from, m.to] {
                if p.cell >= t.grid.len() || !(0.0 <= p.f0 && p.f0 < p.f1 && p.f1 <= 1.0) {
                    return Err(Error::Inconsistent(format!("map {k}: invalid patch {p:?}")));
                }
            }
            if !(0.0 <= m.source.0 && m.source.0 < m.source.1 && 0.0 <= m.target.0 && m.target.0 < m.target.1) {
                return Err(Error::Inconsistent(format!("map {k}: invalid shells {m:?}")));
            }
            let (a, b) = t.shell_measures(m);
            if (a - b).abs() > MASS_TOLERANCE * a.max(b) {
                return Err(Error::Inconsistent(format!(
                    "map {k}: source measure {a:e} differs from target measure {b:e}"
                )));
            }
        }
        Ok(t)
    }

    pub fn maps(&self) -> &[RayMap] {
        &self.maps
    }

    pub fn center(&self) -> Point {
        self.center
    }

    fn area(&self, p: &Patch) -> f64 {
        self.grid.weight(p.cell) * (p.f1 - p.f0)
    }

    fn n(&self) -> i32 {
        self.grid.dim() as i32
    }

    /// Volumes of the source and the target shell of `m`.
    fn shell_measures(&self, m: &RayMap) -> (f64, f64) {
        let n = self.n();
        let s = self.area(&m.from) * (m.source.1.powi(n) - m.source.0.powi(n)) / n as f64;
        let t = self.area(&m.to) * (m.target.1.powi(n) - m.target.0.powi(n)) / n as f64;
        (s, t)
    }

    /// Largest relative difference between matched shell volumes.
    pub fn max_measure_mismatch(&self) -> f64 {
        self.maps
            .iter()
            .map(|m| {
                let (a, b) = self.shell_measures(m);
                (a - b).abs() / a.max(b)
            })
            .fold(0.0, f64::max)
    }

    /// `|H|`, the total source volume.
    pub fn measure(&self) -> f64 {
        self.maps.iter().map(|m| self.shell_measures(m).0).sum()
    }

    /// Radial part of map `k` at radius `t`.
    pub fn radial(&self, k: usize, t: f64) -> f64 {
        let m = &self.maps[k];
        let n = self.n();
        let ratio = self.area(&m.from) / self.area(&m.to);
        (m.target.0.powi(n) + ratio * (t.powi(n) - m.source.0.powi(n)))
            .max(0.0)
            .powf(1.0 / n as f64)
    }

    /// Direction at the relative position `(a, b)` of a patch, `a` across
    /// the `cos(theta)` range and `b` across the azimuth fraction.
    fn patch_direction(&self, p: &Patch, a: f64, b: f64) -> Point {
        let cb = self.grid.cell_bounds(p.cell);
        let z = cb.z.0 + a * (cb.z.1 - cb.z.0);
        let f = p.f0 + b * (p.f1 - p.f0);
        self.grid.direction(z, cb.phi.0 + f * (cb.phi.1 - cb.phi.0))
    }

    /// `Phi(y)` and `y` at relative patch position `(a, b)` and radius `t`
    /// of map `k`.
    fn pair(&self, k: usize, a: f64, b: f64, t: f64) -> (Point, Point) {
        let m = &self.maps[k];
        let y = add(self.center, scale(self.patch_direction(&m.from, a, b), t));
        let z = add(self.center, scale(self.patch_direction(&m.to, a, b), self.radial(k, t)));
        (y, z)
    }

    /// `Phi(y)`, or `None` outside the source set.
    pub fn apply(&self, y: Point) -> Option<Point> {
        let d = crate::geom::sub(y, self.center);
        let r = crate::geom::norm(d);
        if r == 0.0 {
            return None;
        }
        let (cell, frac) = self.grid.locate(d);
        let cb = self.grid.cell_bounds(cell);
        let k = self.maps.iter().position(|m| {
            m.from.cell == cell && m.from.f0 <= frac && frac < m.from.f1 && m.source.0 < r && r < m.source.1
        })?;
        let m = &self.maps[k];
        let a = if self.grid.dim() == 2 {
            0.5
        } else {
            let z = self.grid_height(d, r);
            (z - cb.z.0) / (cb.z.1 - cb.z.0)
        };
        let b = (frac - m.from.f0) / (m.from.f1 - m.from.f0);
        Some(add(self.center, scale(self.patch_direction(&m.to, a, b), self.radial(k, r))))
    }

    /// `cos(theta)` of `d` in the grid's canonical frame.
    fn grid_height(&self, d: Point, r: f64) -> f64 {
        match self.grid.rotation() {
            None => d[2] / r,
            Some(rot) => (0..3).map(|k| rot[k][2] * d[k]).sum::<f64>() / r,
        }
    }

    /// `int_H f(y) g(y, Phi(y)) dy` by tensor Gauss–Legendre rules with `q`
    /// points per axis on every source shell.
    fn integrate_pairs(&self, q: usize, f: impl Fn(Point, Point) -> f64) -> f64 {
        let rule = GaussLegendre::cached(q);
        let n = self.n();
        let planar = self.grid.dim() == 2;
        let heights: Vec<(f64, f64)> = if planar {
            vec![(0.5, 1.0)]
        } else {
            rule.mapped(0.0, 1.0).collect()
        };
        let mut total = 0.0;
        for (k, m) in self.maps.iter().enumerate() {
            let area = self.area(&m.from);
            let mut acc = 0.0;
            for &(a, wa) in &heights {
                for (b, wb) in rule.mapped(0.0, 1.0) {
                    for (t, wt) in rule.mapped(m.source.0, m.source.1) {
                        let (y, z) = self.pair(k, a, b, t);
                        acc += wa * wb * wt * t.powi(n - 1) * f(y, z);
                    }
                }
            }
            total += area * acc;
        }
        total
    }

    /// `int_H f(Phi(y)) dy`.
    pub fn pushforward_integral(&self, q: usize, f: impl Fn(Point) -> f64) -> f64 {
        self.integrate_pairs(q, |_, z| f(z))
    }

    /// `int_H f(y) dy`.
    pub fn source_integral(&self, q: usize, f: impl Fn(Point) -> f64) -> f64 {
        self.integrate_pairs(q, |y, _| f(y))
    }

    /// `int_K f(z) dz`, integrated directly over the target shells.
    pub fn target_integral(&self, q: usize, f: impl Fn(Point) -> f64) -> f64 {
        let rule = GaussLegendre::cached(q);
        let n = self.n();
        let planar = self.grid.dim() == 2;
        let mut total = 0.0;
        for m in &self.maps {
            let heights: Vec<(f64, f64)> = if planar {
                vec![(0.5, 1.0)]
            } else {
                rule.mapped(0.0, 1.0).collect()
            };
            let mut acc = 0.0;
            for &(a, wa) in &heights {
                for (b, wb) in rule.mapped(0.0, 1.0) {
                    let dir = self.patch_direction(&m.to, a, b);
                    for (t, wt) in rule.mapped(m.target.0, m.target.1) {
                        acc += wa * wb * wt * t.powi(n - 1) * f(add(self.center, scale(dir, t)));
                    }
                }
            }
            total += self.area(&m.to) * acc;
        }
        total
    }

    /// `count` points drawn uniformly from the target set `K`.
    pub fn sample_target(&self, rng: &mut impl Rng, count: usize) -> Result<Vec<Point>> {
        let pick = WeightedIndex::new(self.maps.iter().map(|m| self.shell_measures(m).1))
            .map_err(|e| Error::Inconsistent(format!("no target volume to sample: {e}")))?;
        let n = self.n();
        Ok((0..count)
            .map(|_| {
                let m = &self.maps[pick.sample(rng)];
                let dir = self.patch_direction(&m.to, rng.random(), rng.random());
                let (r0, r1) = (m.target.0.powi(n), m.target.1.powi(n));
                let t = (r0 + rng.random::<f64>() * (r1 - r0)).powf(1.0 / n as f64);
                add(self.center, scale(dir, t))
            })
            .collect())
    }

    /// `int_H 1 ∧ |y - Phi(y)| dy`.
    pub fn displacement_integral(&self, q: usize) -> f64 {
        self.integrate_pairs(q, |y, z| dist(y, z).min(1.0))
    }
}

/// Transport from the part of the two-sided set `t` dropped by its
/// consolidation `g` outside the sphere onto the part `g` removes inside.
///
/// In a split node the outer shell `(1, 1 + u+)` above the sub-cell
/// carrying `-u-` is sent to the inner shell `(1 - u-, 1)` below the
/// sub-cell carrying `u+`. `g` must be the consolidation of `t`.
pub fn build_radial_transport(t: &TwoSidedGraphSet, g: &GraphSet) -> Result<RadialTransport> {
    if !Arc::ptr_eq(t.grid(), g.grid()) && t.grid().spec() != g.grid().spec() {
        return Err(Error::Inconsistent("sets live on different grids".into()));
    }
    if dist(t.center(), g.center()) > 0.0 {
        return Err(Error::Inconsistent("sets have different centers".into()));
    }
    let n = t.dim();
    let mut maps = Vec::new();
    for j in 0..t.grid().len() {
        let (up, um) = (t.u_plus()[j], t.u_minus()[j]);
        let uj = g.u()[j];
        match g.splits()[j] {
            Some(s) if up > 0.0 && um > 0.0 => {
                let lam = split_fraction(up, um, n);
                if (s.lambda - lam).abs() > MASS_TOLERANCE || uj != up || s.u_second != -um {
                    return Err(Error::Inconsistent(format!(
                        "node {j}: split {s:?} does not consolidate u+ = {up}, u- = {um}"
                    )));
                }
                maps.push(RayMap {
                    from: Patch { cell: j, f0: s.lambda, f1: 1.0 },
                    to: Patch { cell: j, f0: 0.0, f1: s.lambda },
                    source: (1.0, 1.0 + up),
                    target: (1.0 - um, 1.0),
                });
            }
            None if (um == 0.0 && uj == up) || (up == 0.0 && uj == -um) => {}
            _ => {
                return Err(Error::Inconsistent(format!(
                    "node {j}: u = {uj} does not consolidate u+ = {up}, u- = {um}"
                )))
            }
        }
    }
    RadialTransport::new(t.grid().clone(), t.center(), maps)
}

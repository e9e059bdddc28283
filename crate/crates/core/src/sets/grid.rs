use std::f64::consts::PI;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geom::{dot, norm, rotate_z, Point};
use crate::kernel::sphere_area;
use crate::quad::GaussLegendre;

use super::local::Neighborhoods;

/// Layout of a quadrature grid on the unit sphere.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum GridSpec {
    /// `nodes` equispaced points on the unit circle.
    Circle { nodes: usize },
    /// Gauss–Legendre rings in `cos(theta)` times uniform azimuths.
    Product { polar: usize, azimuthal: usize },
}

impl GridSpec {
    /// Default layout of resolution `res` in dimension `dim`.
    pub fn for_dim(dim: usize, res: usize) -> Result<Self> {
        match dim {
            2 => Ok(GridSpec::Circle { nodes: res }),
            3 => Ok(GridSpec::Product {
                polar: res,
                azimuthal: 2 * res,
            }),
            _ => Err(Error::InvalidDimension(dim)),
        }
    }

    pub fn dim(&self) -> usize {
        match self {
            GridSpec::Circle { .. } => 2,
            GridSpec::Product { .. } => 3,
        }
    }

    /// Highest harmonic degree integrated exactly in products of two harmonics.
    pub fn max_exact_degree(&self) -> usize {
        match *self {
            GridSpec::Circle { nodes } => nodes.saturating_sub(1) / 2,
            GridSpec::Product { polar, azimuthal } => {
                (polar.saturating_sub(1)).min(azimuthal.saturating_sub(1) / 2)
            }
        }
    }
}

/// Extent of one grid cell in `cos(theta)` and azimuth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CellBounds {
    pub z: (f64, f64),
    pub phi: (f64, f64),
}

/// Weighted nodes on the unit sphere, together with a partition of the
/// sphere into cells, one per node.
#[derive(Debug, Clone)]
pub struct SphereGrid {
    spec: GridSpec,
    nodes: Vec<Point>,
    weights: Vec<f64>,
    /// Ring heights `cos(theta)` (product grids), ascending.
    ring_z: Vec<f64>,
    /// Cell boundaries in `cos(theta)` (product grids), ascending.
    ring_edges: Vec<f64>,
    azimuths: usize,
    /// Orientation of the layout; nodes are `rotation * canonical node`.
    rotation: Option<[[f64; 3]; 3]>,
    local: OnceLock<Neighborhoods>,
}

impl SphereGrid {
    pub fn new(spec: GridSpec) -> Result<Self> {
        match spec {
            GridSpec::Circle { nodes: m } => {
                if m < 3 {
                    return Err(Error::Precondition(format!("circle grid needs >= 3 nodes, got {m}")));
                }
                let dt = 2.0 * PI / m as f64;
                let nodes = (0..m)
                    .map(|j| {
                        let (s, c) = (j as f64 * dt).sin_cos();
                        [c, s, 0.0]
                    })
                    .collect();
                Ok(Self {
                    spec,
                    nodes,
                    weights: vec![dt; m],
                    ring_z: vec![0.0],
                    ring_edges: vec![-1.0, 1.0],
                    azimuths: m,
                    rotation: None,
                    local: OnceLock::new(),
                })
            }
            GridSpec::Product { polar, azimuthal } => {
                if polar < 2 || azimuthal < 3 {
                    return Err(Error::Precondition(format!(
                        "product grid needs >= 2 rings and >= 3 azimuths, got {polar} x {azimuthal}"
                    )));
                }
                let rule = GaussLegendre::new(polar);
                let dphi = 2.0 * PI / azimuthal as f64;
                let mut nodes = Vec::with_capacity(polar * azimuthal);
                let mut weights = Vec::with_capacity(polar * azimuthal);
                for (&z, &wz) in rule.nodes.iter().zip(&rule.weights) {
                    let r = (1.0 - z * z).sqrt();
                    for k in 0..azimuthal {
                        let (s, c) = (k as f64 * dphi).sin_cos();
                        nodes.push([r * c, r * s, z]);
                        weights.push(wz * dphi);
                    }
                }
                let mut ring_edges = Vec::with_capacity(polar + 1);
                let mut acc = -1.0;
                ring_edges.push(acc);
                for &w in &rule.weights {
                    acc += w;
                    ring_edges.push(acc);
                }
                *ring_edges.last_mut().expect("non-empty") = 1.0;
                Ok(Self {
                    spec,
                    nodes,
                    weights,
                    ring_z: rule.nodes.clone(),
                    ring_edges,
                    azimuths: azimuthal,
                    rotation: None,
                    local: OnceLock::new(),
                })
            }
        }
    }

    /// The same grid turned by the orthogonal matrix `r` (planar rotations
    /// only for circle grids). Not part of the serialized grid spec.
    pub fn rotated(&self, r: [[f64; 3]; 3]) -> Result<Self> {
        for a in 0..3 {
            for b in 0..3 {
                let g: f64 = (0..3).map(|k| r[k][a] * r[k][b]).sum();
                let want = if a == b { 1.0 } else { 0.0 };
                if (g - want).abs() > 1e-12 {
                    return Err(Error::Domain("rotation matrix is not orthogonal".into()));
                }
            }
        }
        if self.dim() == 2 && (r[2][2] - 1.0).abs() > 1e-12 {
            return Err(Error::Domain("circle grids rotate in the plane only".into()));
        }
        let base = self.rotation.unwrap_or([[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);
        let mut total = [[0.0; 3]; 3];
        for a in 0..3 {
            for b in 0..3 {
                total[a][b] = (0..3).map(|k| r[a][k] * base[k][b]).sum();
            }
        }
        let apply = |p: Point| -> Point { [0, 1, 2].map(|a| (0..3).map(|k| r[a][k] * p[k]).sum()) };
        Ok(Self {
            nodes: self.nodes.iter().map(|&p| apply(p)).collect(),
            rotation: Some(total),
            local: OnceLock::new(),
            ..self.clone()
        })
    }

    pub fn rotation(&self) -> Option<[[f64; 3]; 3]> {
        self.rotation
    }

    /// Direction in the canonical layout.
    fn canonical(&self, dir: Point) -> Point {
        match &self.rotation {
            None => dir,
            Some(r) => [0, 1, 2].map(|a| (0..3).map(|k| r[k][a] * dir[k]).sum()),
        }
    }

    /// Default grid of resolution `res` in dimension `dim`.
    pub fn for_dim(dim: usize, res: usize) -> Result<Self> {
        Self::new(GridSpec::for_dim(dim, res)?)
    }

    pub fn spec(&self) -> GridSpec {
        self.spec
    }

    pub fn dim(&self) -> usize {
        self.spec.dim()
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn nodes(&self) -> &[Point] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn node(&self, j: usize) -> Point {
        self.nodes[j]
    }

    pub fn weight(&self, j: usize) -> f64 {
        self.weights[j]
    }

    /// Angular width of every cell along the azimuth.
    pub fn azimuth_width(&self) -> f64 {
        2.0 * PI / self.azimuths as f64
    }

    /// Typical distance between neighbouring nodes.
    pub fn mean_spacing(&self) -> f64 {
        match self.dim() {
            2 => 2.0 * PI / self.len() as f64,
            _ => (4.0 * PI / self.len() as f64).sqrt(),
        }
    }

    /// Tangent frames, neighbour lists and jet stencils, built on first use.
    pub fn neighborhoods(&self) -> &Neighborhoods {
        self.local.get_or_init(|| Neighborhoods::build(self))
    }

    /// Moves a point on the sphere along the azimuth of its cell.
    pub fn shift_azimuth(&self, p: Point, angle: f64) -> Point {
        let q = rotate_z(self.canonical(p), angle);
        match &self.rotation {
            None => q,
            Some(r) => [0, 1, 2].map(|a| (0..3).map(|k| r[a][k] * q[k]).sum()),
        }
    }

    fn azimuth(dir: Point) -> f64 {
        let phi = dir[1].atan2(dir[0]);
        if phi < 0.0 {
            phi + 2.0 * PI
        } else {
            phi
        }
    }

    fn ring_of(&self, z: f64) -> usize {
        let i = self.ring_edges.partition_point(|&e| e <= z);
        i.clamp(1, self.ring_z.len()) - 1
    }

    /// Cell containing direction `dir` and the position of `dir` across the
    /// cell along the azimuth, in `[0, 1)`.
    pub fn locate(&self, dir: Point) -> (usize, f64) {
        let dir = self.canonical(dir);
        let dphi = self.azimuth_width();
        let x = Self::azimuth(dir) / dphi + 0.5;
        let k = x.floor();
        let frac = x - k;
        let k = (k as usize) % self.azimuths;
        let ring = match self.spec {
            GridSpec::Circle { .. } => 0,
            GridSpec::Product { .. } => {
                let r = norm(dir);
                self.ring_of(if r > 0.0 { dir[2] / r } else { 0.0 })
            }
        };
        (ring * self.azimuths + k, frac)
    }

    /// Piecewise-linear interpolation of nodal `values` in direction `dir`.
    pub fn interpolate(&self, values: &[f64], dir: Point) -> f64 {
        let dir = self.canonical(dir);
        let m = self.azimuths;
        let x = Self::azimuth(dir) / self.azimuth_width();
        let k0 = (x.floor() as usize) % m;
        let k1 = (k0 + 1) % m;
        let s = x - x.floor();
        let along = |ring: usize| {
            (1.0 - s) * values[ring * m + k0] + s * values[ring * m + k1]
        };
        match self.spec {
            GridSpec::Circle { .. } => along(0),
            GridSpec::Product { .. } => {
                let r = norm(dir);
                let z = if r > 0.0 { dir[2] / r } else { 0.0 };
                let zs = &self.ring_z;
                let i = zs.partition_point(|&zi| zi <= z);
                if i == 0 {
                    along(0)
                } else if i == zs.len() {
                    along(zs.len() - 1)
                } else {
                    let t = (z - zs[i - 1]) / (zs[i] - zs[i - 1]);
                    (1.0 - t) * along(i - 1) + t * along(i)
                }
            }
        }
    }

    /// Range of `cos(theta)` and of the azimuth covered by cell `j` in the
    /// canonical layout. Circle cells report the full `cos(theta)` range.
    pub fn cell_bounds(&self, j: usize) -> CellBounds {
        let dphi = self.azimuth_width();
        let k = j % self.azimuths;
        let ring = j / self.azimuths;
        let phi0 = (k as f64 - 0.5) * dphi;
        CellBounds {
            z: (self.ring_edges[ring], self.ring_edges[ring + 1]),
            phi: (phi0, phi0 + dphi),
        }
    }

    /// Unit vector at height `z` and azimuth `phi` of the canonical layout,
    /// in the grid's orientation. Circle grids ignore `z`.
    pub fn direction(&self, z: f64, phi: f64) -> Point {
        let (s, c) = phi.sin_cos();
        let q = match self.spec {
            GridSpec::Circle { .. } => [c, s, 0.0],
            GridSpec::Product { .. } => {
                let r = (1.0 - z * z).max(0.0).sqrt();
                [r * c, r * s, z]
            }
        };
        match &self.rotation {
            None => q,
            Some(r) => [0, 1, 2].map(|a| (0..3).map(|k| r[a][k] * q[k]).sum()),
        }
    }

    /// `m^(N-1)` directions at the midpoints of an equal-area subdivision
    /// of the azimuth fraction `[f0, f1]` of cell `j`.
    pub fn cell_samples(&self, j: usize, f0: f64, f1: f64, m: usize) -> Vec<Point> {
        let b = self.cell_bounds(j);
        let dphi = b.phi.1 - b.phi.0;
        let phis: Vec<f64> = (0..m)
            .map(|a| b.phi.0 + dphi * (f0 + (f1 - f0) * (a as f64 + 0.5) / m as f64))
            .collect();
        match self.spec {
            GridSpec::Circle { .. } => phis.iter().map(|&phi| self.direction(0.0, phi)).collect(),
            GridSpec::Product { .. } => {
                let dz = (b.z.1 - b.z.0) / m as f64;
                (0..m)
                    .flat_map(|a| {
                        let z = b.z.0 + (a as f64 + 0.5) * dz;
                        phis.iter().map(move |&phi| (z, phi))
                    })
                    .map(|(z, phi)| self.direction(z, phi))
                    .collect()
            }
        }
    }

    /// Checks unit norms, total weight and antipodal balance.
    pub fn check(&self) -> Result<()> {
        let area = sphere_area(self.dim())?;
        for (j, p) in self.nodes.iter().enumerate() {
            if (norm(*p) - 1.0).abs() > 1e-12 {
                return Err(Error::Inconsistent(format!("grid node {j} is not a unit vector")));
            }
        }
        let total: f64 = self.weights.iter().sum();
        if ((total - area) / area).abs() > 1e-8 {
            return Err(Error::Inconsistent(format!(
                "grid weights sum to {total}, expected {area}"
            )));
        }
        for axis in 0..3 {
            let mut e = [0.0; 3];
            e[axis] = 1.0;
            let m: f64 = self
                .nodes
                .iter()
                .zip(&self.weights)
                .map(|(p, w)| w * dot(*p, e))
                .sum();
            if m.abs() > 1e-8 {
                return Err(Error::Inconsistent(format!("grid first moment {m:e} along axis {axis}")));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn grids_satisfy_invariants() {
        for spec in [
            GridSpec::Circle { nodes: 7 },
            GridSpec::Circle { nodes: 256 },
            GridSpec::Product { polar: 5, azimuthal: 10 },
            GridSpec::Product { polar: 32, azimuthal: 64 },
        ] {
            SphereGrid::new(spec).unwrap().check().unwrap();
        }
    }

    #[test]
    fn product_grid_integrates_polynomials() {
        let g = SphereGrid::for_dim(3, 8).unwrap();
        let int = |f: &dyn Fn(Point) -> f64| -> f64 {
            g.nodes().iter().zip(g.weights()).map(|(p, w)| w * f(*p)).sum()
        };
        assert_relative_eq!(int(&|p| p[2] * p[2]), 4.0 * PI / 3.0, max_relative = 1e-13);
        assert_relative_eq!(int(&|p| p[0] * p[0] * p[1] * p[1]), 4.0 * PI / 15.0, max_relative = 1e-12);
    }

    #[test]
    fn locate_finds_own_cell() {
        for spec in [GridSpec::Circle { nodes: 64 }, GridSpec::Product { polar: 12, azimuthal: 24 }] {
            let g = SphereGrid::new(spec).unwrap();
            for j in 0..g.len() {
                let (k, frac) = g.locate(g.node(j));
                assert_eq!(k, j);
                assert!((frac - 0.5).abs() < 1e-9);
            }
        }
    }

    #[test]
    fn interpolation_reproduces_nodes() {
        let g = SphereGrid::for_dim(3, 10).unwrap();
        let vals: Vec<f64> = g.nodes().iter().map(|p| p[0] + 2.0 * p[2]).collect();
        for j in 0..g.len() {
            assert_relative_eq!(g.interpolate(&vals, g.node(j)), vals[j], epsilon = 1e-12);
        }
    }

    #[test]
    fn cell_samples_fall_in_their_cell() {
        for spec in [GridSpec::Circle { nodes: 16 }, GridSpec::Product { polar: 6, azimuthal: 12 }] {
            let g = SphereGrid::new(spec).unwrap().rotated(rot()).unwrap();
            for j in 0..g.len() {
                for d in g.cell_samples(j, 0.0, 1.0, 3) {
                    assert_eq!(g.locate(d).0, j);
                }
                let b = g.cell_bounds(j);
                let area = match g.dim() {
                    2 => b.phi.1 - b.phi.0,
                    _ => (b.z.1 - b.z.0) * (b.phi.1 - b.phi.0),
                };
                assert_relative_eq!(area, g.weight(j), max_relative = 1e-12);
            }
        }
    }

    fn rot() -> [[f64; 3]; 3] {
        let (s, c) = 0.3f64.sin_cos();
        [[c, -s, 0.0], [s, c, 0.0], [0.0, 0.0, 1.0]]
    }

    #[test]
    fn exactness_rule() {
        assert_eq!(GridSpec::Circle { nodes: 25 }.max_exact_degree(), 12);
        assert_eq!(GridSpec::Product { polar: 13, azimuthal: 26 }.max_exact_degree(), 12);
    }
}

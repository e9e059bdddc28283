use crate::error::{Error, Result};
use crate::geom::{add, scale, Point, ORIGIN};
use crate::kernel::unit_ball_volume;

use super::graph::GraphSet;

/// Indicator of a set on a uniform Cartesian lattice.
///
/// Cell `(i, j, k)` covers `origin + h [i, i+1) x [j, j+1) x [k, k+1)`; planar
/// sets use `dims[2] == 1` and ignore the third coordinate.
#[derive(Debug, Clone, PartialEq)]
pub struct VoxelSet {
    dim: usize,
    origin: Point,
    spacing: f64,
    dims: [usize; 3],
    occ: Vec<bool>,
}

impl VoxelSet {
    pub fn empty(dim: usize, origin: Point, spacing: f64, dims: [usize; 3]) -> Result<Self> {
        if !(2..=3).contains(&dim) {
            return Err(Error::InvalidDimension(dim));
        }
        if !(spacing > 0.0) || !spacing.is_finite() {
            return Err(Error::Domain(format!("voxel spacing must be positive, got {spacing}")));
        }
        let mut dims = dims;
        if dim == 2 {
            dims[2] = 1;
        }
        if dims.contains(&0) {
            return Err(Error::Domain(format!("voxel dims must be positive, got {dims:?}")));
        }
        let mut origin = origin;
        if dim == 2 {
            origin[2] = 0.0;
        }
        Ok(Self {
            dim,
            origin,
            spacing,
            dims,
            occ: vec![false; dims.iter().product()],
        })
    }

    pub fn from_bits(
        dim: usize,
        origin: Point,
        spacing: f64,
        dims: [usize; 3],
        occ: Vec<bool>,
    ) -> Result<Self> {
        let mut v = Self::empty(dim, origin, spacing, dims)?;
        if occ.len() != v.occ.len() {
            return Err(Error::Format(format!(
                "{} occupancy bits for {} cells",
                occ.len(),
                v.occ.len()
            )));
        }
        v.occ = occ;
        Ok(v)
    }

    /// Occupies every cell whose center satisfies `f`.
    pub fn from_fn(
        dim: usize,
        origin: Point,
        spacing: f64,
        dims: [usize; 3],
        f: impl Fn(Point) -> bool,
    ) -> Result<Self> {
        let mut v = Self::empty(dim, origin, spacing, dims)?;
        for idx in 0..v.occ.len() {
            v.occ[idx] = f(v.center_of(idx));
        }
        Ok(v)
    }

    /// Lattice of spacing `h` with a cell corner at `anchor`, covering the
    /// box `anchor +- half_extent`.
    pub fn lattice_around(dim: usize, anchor: Point, half_extent: f64, h: f64) -> Result<Self> {
        let m = (half_extent / h).ceil() as usize + 1;
        let origin = add(anchor, scale([1.0, 1.0, 1.0], -(m as f64) * h));
        Self::empty(dim, origin, h, [2 * m, 2 * m, 2 * m])
    }

    /// Voxelized ball, with the lattice anchored at the ball's center.
    pub fn ball(dim: usize, center: Point, radius: f64, h: f64) -> Result<Self> {
        let mut v = Self::lattice_around(dim, center, radius, h)?;
        let r2 = radius * radius;
        v.fill(|p| {
            let d: f64 = (0..dim).map(|i| (p[i] - center[i]).powi(2)).sum();
            d < r2
        });
        Ok(v)
    }

    /// Voxelized ball of volume `w_N radius^N` to within half a cell: the
    /// `round(w_N radius^N / h^N)` cells whose centers are nearest to
    /// `center` (ties broken by cell index).
    pub fn volume_matched_ball(dim: usize, center: Point, radius: f64, h: f64) -> Result<Self> {
        let mut v = Self::lattice_around(dim, center, radius + h, h)?;
        let target = (unit_ball_volume(dim)? * radius.powi(dim as i32) / h.powi(dim as i32)).round() as usize;
        let reach2 = (radius + 2.0 * h).powi(2);
        let mut cand: Vec<(f64, usize)> = (0..v.occ.len())
            .filter_map(|idx| {
                let p = v.center_of(idx);
                let d: f64 = (0..dim).map(|i| (p[i] - center[i]).powi(2)).sum();
                (d < reach2).then_some((d, idx))
            })
            .collect();
        cand.sort_by(|a, b| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1)));
        for &(_, idx) in cand.iter().take(target) {
            v.occ[idx] = true;
        }
        Ok(v)
    }

    /// Voxelized graph set.
    pub fn from_graph(e: &GraphSet, h: f64) -> Result<Self> {
        let reach = 1.0 + e.sup_norm();
        let mut v = Self::lattice_around(e.dim(), e.center(), reach, h)?;
        v.fill(|p| e.contains(p));
        Ok(v)
    }

    /// Sets occupancy from `f` evaluated at cell centers.
    pub fn fill(&mut self, f: impl Fn(Point) -> bool) {
        for idx in 0..self.occ.len() {
            self.occ[idx] = f(self.center_of(idx));
        }
    }

    /// Empty set on the same lattice.
    pub fn cleared(&self) -> Self {
        Self {
            occ: vec![false; self.occ.len()],
            ..self.clone()
        }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn origin(&self) -> Point {
        self.origin
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn dims(&self) -> [usize; 3] {
        self.dims
    }

    pub fn bits(&self) -> &[bool] {
        &self.occ
    }

    pub fn len(&self) -> usize {
        self.occ.len()
    }

    pub fn is_empty(&self) -> bool {
        self.count() == 0
    }

    pub fn cell_volume(&self) -> f64 {
        self.spacing.powi(self.dim as i32)
    }

    pub fn index(&self, ijk: [usize; 3]) -> usize {
        ijk[0] + self.dims[0] * (ijk[1] + self.dims[1] * ijk[2])
    }

    pub fn coords(&self, idx: usize) -> [usize; 3] {
        let i = idx % self.dims[0];
        let r = idx / self.dims[0];
        [i, r % self.dims[1], r / self.dims[1]]
    }

    pub fn center_of(&self, idx: usize) -> Point {
        let c = self.coords(idx);
        let h = self.spacing;
        let mut p = ORIGIN;
        for a in 0..self.dim {
            p[a] = self.origin[a] + (c[a] as f64 + 0.5) * h;
        }
        p
    }

    /// Cell containing `p`, if inside the lattice.
    pub fn cell_of(&self, p: Point) -> Option<usize> {
        let mut ijk = [0usize; 3];
        for a in 0..self.dim {
            let x = ((p[a] - self.origin[a]) / self.spacing).floor();
            if x < 0.0 || x >= self.dims[a] as f64 {
                return None;
            }
            ijk[a] = x as usize;
        }
        Some(self.index(ijk))
    }

    pub fn get(&self, idx: usize) -> bool {
        self.occ[idx]
    }

    pub fn set(&mut self, idx: usize, value: bool) {
        self.occ[idx] = value;
    }

    /// Membership of the point `p` (cell-exact).
    pub fn contains(&self, p: Point) -> bool {
        self.cell_of(p).is_some_and(|i| self.occ[i])
    }

    pub fn count(&self) -> usize {
        self.occ.iter().filter(|&&b| b).count()
    }

    pub fn occupied(&self) -> impl Iterator<Item = usize> + '_ {
        self.occ.iter().enumerate().filter(|(_, &b)| b).map(|(i, _)| i)
    }

    /// `count * h^N`.
    pub fn measure(&self) -> f64 {
        self.count() as f64 * self.cell_volume()
    }

    /// Volume and barycenter (mean of occupied cell centers).
    pub fn measures(&self) -> Result<(f64, Point)> {
        let n = self.count();
        if n == 0 {
            return Err(Error::EmptySet);
        }
        let mut m = ORIGIN;
        for idx in self.occupied() {
            m = add(m, self.center_of(idx));
        }
        Ok((n as f64 * self.cell_volume(), scale(m, 1.0 / n as f64)))
    }

    /// Whether `other` lives on the same lattice.
    pub fn same_lattice(&self, other: &Self) -> bool {
        self.dim == other.dim
            && self.dims == other.dims
            && self.spacing == other.spacing
            && self.origin == other.origin
    }

    fn check_lattice(&self, other: &Self) -> Result<()> {
        if self.same_lattice(other) {
            Ok(())
        } else {
            Err(Error::Inconsistent("voxel sets live on different lattices".into()))
        }
    }

    fn zip_with(&self, other: &Self, f: impl Fn(bool, bool) -> bool) -> Result<Self> {
        self.check_lattice(other)?;
        Ok(Self {
            occ: self.occ.iter().zip(&other.occ).map(|(&a, &b)| f(a, b)).collect(),
            ..self.clone()
        })
    }

    pub fn union(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a || b)
    }

    pub fn intersection(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a && b)
    }

    pub fn difference(&self, other: &Self) -> Result<Self> {
        self.zip_with(other, |a, b| a && !b)
    }

    /// `|self Δ other|` on a shared lattice.
    pub fn symm_diff_measure(&self, other: &Self) -> Result<f64> {
        self.check_lattice(other)?;
        let n = self.occ.iter().zip(&other.occ).filter(|(a, b)| a != b).count();
        Ok(n as f64 * self.cell_volume())
    }

    /// Same occupancy on a lattice translated by whole cells.
    pub fn shifted(&self, cells: [i64; 3]) -> Self {
        let mut origin = self.origin;
        for a in 0..self.dim {
            origin[a] += cells[a] as f64 * self.spacing;
        }
        Self {
            origin,
            ..self.clone()
        }
    }

    /// Same set translated by `v`, re-sampled on this set's lattice.
    pub fn resampled_translation(&self, v: Point) -> Self {
        let src = self.clone();
        let mut out = self.cleared();
        out.fill(|p| src.contains([p[0] - v[0], p[1] - v[1], p[2] - v[2]]));
        out
    }

    /// Occupied parameter intervals `[a, b]` of the ray `start + t dir`,
    /// `t >= 0`, by exact cell traversal; adjacent intervals are merged.
    pub fn ray_intervals(&self, start: Point, dir: Point) -> Vec<(f64, f64)> {
        let h = self.spacing;
        let (mut t0, mut t1) = (0.0f64, f64::INFINITY);
        for a in 0..self.dim {
            let lo = self.origin[a];
            let hi = lo + self.dims[a] as f64 * h;
            if dir[a] == 0.0 {
                if start[a] < lo || start[a] >= hi {
                    return Vec::new();
                }
                continue;
            }
            let (ta, tb) = ((lo - start[a]) / dir[a], (hi - start[a]) / dir[a]);
            t0 = t0.max(ta.min(tb));
            t1 = t1.min(ta.max(tb));
        }
        if !(t0 < t1) {
            return Vec::new();
        }
        let mut ijk = [0i64; 3];
        let mut step = [0i64; 3];
        let mut next = [f64::INFINITY; 3];
        let mut delta = [f64::INFINITY; 3];
        // a point just past the entry, so that a start on a face picks the
        // cell the ray moves into
        let tm = t0 + 1e-9 * h;
        for a in 0..self.dim {
            let x = start[a] + tm * dir[a];
            ijk[a] = (((x - self.origin[a]) / h).floor() as i64).clamp(0, self.dims[a] as i64 - 1);
            if dir[a] > 0.0 {
                step[a] = 1;
                next[a] = (self.origin[a] + (ijk[a] + 1) as f64 * h - start[a]) / dir[a];
                delta[a] = h / dir[a];
            } else if dir[a] < 0.0 {
                step[a] = -1;
                next[a] = (self.origin[a] + ijk[a] as f64 * h - start[a]) / dir[a];
                delta[a] = -h / dir[a];
            }
        }
        let mut out: Vec<(f64, f64)> = Vec::new();
        let mut t = t0;
        loop {
            let a = (0..self.dim)
                .min_by(|&x, &y| next[x].total_cmp(&next[y]))
                .expect("dim >= 2");
            let exit = next[a].min(t1);
            let idx = self.index([ijk[0] as usize, ijk[1] as usize, ijk[2] as usize]);
            if self.occ[idx] && exit > t {
                match out.last_mut() {
                    Some(last) if last.1 >= t => last.1 = exit,
                    _ => out.push((t, exit)),
                }
            }
            if exit >= t1 {
                break;
            }
            t = exit.max(t);
            ijk[a] += step[a];
            if ijk[a] < 0 || ijk[a] >= self.dims[a] as i64 {
                break;
            }
            next[a] += delta[a];
        }
        out
    }

    /// Copy onto a lattice with `pad` extra cells on every side.
    pub fn padded(&self, pad: usize) -> Self {
        let mut dims = self.dims;
        let mut origin = self.origin;
        for a in 0..self.dim {
            dims[a] += 2 * pad;
            origin[a] -= pad as f64 * self.spacing;
        }
        let mut out = Self::empty(self.dim, origin, self.spacing, dims).expect("valid lattice");
        for idx in self.occupied() {
            let mut c = self.coords(idx);
            for v in c.iter_mut().take(self.dim) {
                *v += pad;
            }
            let j = out.index(c);
            out.occ[j] = true;
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use std::f64::consts::PI;

    #[test]
    fn full_cube() {
        let h = 1.0 / 16.0;
        let v = VoxelSet::from_fn(3, ORIGIN, h, [16, 16, 16], |_| true).unwrap();
        let (vol, b) = v.measures().unwrap();
        assert_relative_eq!(vol, 1.0, max_relative = 1e-14);
        for x in b {
            assert_relative_eq!(x, 0.5, max_relative = 1e-14);
        }
    }

    #[test]
    fn single_voxel() {
        let mut v = VoxelSet::empty(2, [1.0, 2.0, 0.0], 0.5, [4, 4, 1]).unwrap();
        assert!(v.measures().is_err());
        let idx = v.index([1, 2, 0]);
        v.set(idx, true);
        let (vol, b) = v.measures().unwrap();
        assert_eq!(vol, 0.25);
        assert_eq!(b, [1.75, 3.25, 0.0]);
    }

    #[test]
    fn voxelized_ball_volume() {
        let v = VoxelSet::ball(3, ORIGIN, 1.0, 1.0 / 64.0).unwrap();
        assert_relative_eq!(v.measure(), 4.0 * PI / 3.0, max_relative = 1e-2);
        let v = VoxelSet::ball(2, ORIGIN, 1.0, 1.0 / 256.0).unwrap();
        assert_relative_eq!(v.measure(), PI, max_relative = 1e-3);
    }

    #[test]
    fn volume_matched_ball_is_within_half_a_cell() {
        for (dim, h) in [(3, 1.0 / 48.0), (2, 1.0 / 100.0)] {
            let v = VoxelSet::volume_matched_ball(dim, [0.1, -0.2, 0.05], 1.0, h).unwrap();
            let omega = unit_ball_volume(dim).unwrap();
            assert!((v.measure() - omega).abs() <= 0.5 * v.cell_volume());
            let (_, b) = v.measures().unwrap();
            assert!(crate::geom::dist(b, [0.1, -0.2, if dim == 3 { 0.05 } else { 0.0 }]) < h);
        }
    }

    #[test]
    fn set_algebra() {
        let a = VoxelSet::ball(2, ORIGIN, 1.0, 0.05).unwrap();
        let mut b = a.cleared();
        b.fill(|p| p[0] > 0.0);
        let i = a.intersection(&b).unwrap();
        let d = a.difference(&b).unwrap();
        assert_eq!(i.count() + d.count(), a.count());
        let u = a.union(&b).unwrap();
        let sd = a.symm_diff_measure(&b).unwrap();
        assert_relative_eq!(sd, u.measure() - i.measure(), max_relative = 1e-12);
        let p = a.padded(3);
        assert_eq!(p.count(), a.count());
        let (b0, b1) = (p.measures().unwrap().1, a.measures().unwrap().1);
        assert!(crate::geom::dist(b0, b1) < 1e-12);
    }

    #[test]
    fn ray_intervals_match_point_sampling() {
        use rand::{Rng, SeedableRng};
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(5);
        for dim in [2, 3] {
            let mut v = VoxelSet::lattice_around(dim, ORIGIN, 1.2, 0.1).unwrap();
            v.fill(|p| (p[0] * 3.0).sin() + p[1] * p[1] + p[2] < 0.6);
            for _ in 0..50 {
                let mut d = [0.0; 3];
                for x in d.iter_mut().take(dim) {
                    *x = rng.random_range(-1.0..1.0);
                }
                let d = scale(d, 1.0 / crate::geom::norm(d));
                let start = if dim == 2 { [0.03, -0.1, 0.0] } else { [0.0; 3] };
                let iv = v.ray_intervals(start, d);
                for w in iv.windows(2) {
                    assert!(w[0].1 < w[1].0);
                }
                let n = 4000;
                for k in 0..n {
                    let t = 2.0 * (k as f64 + 0.37) / n as f64;
                    let inside = iv.iter().any(|&(a, b)| a < t && t < b);
                    let p = add(start, scale(d, t));
                    let near_face = (0..dim).any(|a| {
                        let x = (p[a] - v.origin()[a]) / v.spacing();
                        (x - x.round()).abs() < 1e-6
                    });
                    if !near_face {
                        assert_eq!(inside, v.contains(p), "t = {t}");
                    }
                }
            }
        }
        let v = VoxelSet::ball(3, ORIGIN, 1.0, 0.25).unwrap();
        let iv = v.ray_intervals(ORIGIN, [1.0, 0.0, 0.0]);
        assert_eq!(iv.len(), 1);
        assert!(iv[0].0 == 0.0 && (iv[0].1 - 1.0).abs() < 1e-12, "{iv:?}");
    }
}

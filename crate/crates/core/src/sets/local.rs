//! Local geometry of a sphere grid: tangent frames, neighbour lists and
//! least-squares jets of nodal functions.

use crate::geom::{cross, dot, norm, scale, sub, Point};

use super::grid::SphereGrid;

/// Neighbour radius in units of the mean node spacing.
pub const NEIGHBOR_RADIUS: f64 = 7.0;

/// A node near a reference node.
#[derive(Debug, Clone, Copy)]
pub struct Neighbor {
    pub j: usize,
    /// Chord distance.
    pub q: f64,
    /// Coordinates of the neighbour in the reference node's tangent frame.
    pub xi: [f64; 2],
}

/// Second-order local model `value + g . xi + xi^T H xi / 2` of a nodal
/// function in a node's tangent frame. `hess` holds `(H11, H12, H22)`.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
pub struct Jet {
    pub value: f64,
    pub grad: [f64; 2],
    pub hess: [f64; 3],
}

impl Jet {
    pub fn eval(&self, xi: [f64; 2]) -> f64 {
        let [h11, h12, h22] = self.hess;
        self.value
            + self.grad[0] * xi[0]
            + self.grad[1] * xi[1]
            + 0.5 * (h11 * xi[0] * xi[0] + 2.0 * h12 * xi[0] * xi[1] + h22 * xi[1] * xi[1])
    }
}

#[derive(Debug, Clone)]
pub struct Neighborhoods {
    spacing: f64,
    frames: Vec<[Point; 2]>,
    near: Vec<Vec<Neighbor>>,
    /// Per node: neighbour index and its row of the least-squares
    /// pseudo-inverse, one coefficient per jet unknown.
    fit: Vec<Vec<(usize, [f64; 5])>>,
}

/// Orthonormal tangent frame at `x`; the second vector vanishes on the circle.
fn frame(x: Point, dim: usize) -> [Point; 2] {
    if dim == 2 {
        return [[-x[1], x[0], 0.0], [0.0; 3]];
    }
    let a = if x[0].abs() <= x[1].abs() && x[0].abs() <= x[2].abs() {
        [1.0, 0.0, 0.0]
    } else if x[1].abs() <= x[2].abs() {
        [0.0, 1.0, 0.0]
    } else {
        [0.0, 0.0, 1.0]
    };
    let t = sub(a, scale(x, dot(a, x)));
    let e1 = scale(t, 1.0 / norm(t));
    [e1, cross(x, e1)]
}

/// Solves the symmetric system `a x = b` in place by Gaussian elimination
/// with partial pivoting; `None` if singular.
fn solve(a: &mut [[f64; 5]; 5], b: &mut [f64; 5], n: usize) -> Option<()> {
    for c in 0..n {
        let p = (c..n).max_by(|&i, &j| a[i][c].abs().total_cmp(&a[j][c].abs()))?;
        if a[p][c].abs() < 1e-300 {
            return None;
        }
        a.swap(c, p);
        b.swap(c, p);
        for r in c + 1..n {
            let f = a[r][c] / a[c][c];
            for k in c..n {
                a[r][k] -= f * a[c][k];
            }
            b[r] -= f * b[c];
        }
    }
    for c in (0..n).rev() {
        let mut s = b[c];
        for k in c + 1..n {
            s -= a[c][k] * b[k];
        }
        b[c] = s / a[c][c];
    }
    Some(())
}

impl Neighborhoods {
    pub(crate) fn build(grid: &SphereGrid) -> Self {
        let dim = grid.dim();
        let h = grid.mean_spacing();
        let radius = NEIGHBOR_RADIUS * h;
        let fit_radius = if dim == 2 { 3.5 * h } else { 3.0 * h };
        let nodes = grid.nodes();
        let frames: Vec<[Point; 2]> = nodes.iter().map(|&x| frame(x, dim)).collect();
        let mut near = Vec::with_capacity(nodes.len());
        let mut fit = Vec::with_capacity(nodes.len());
        for (i, &x) in nodes.iter().enumerate() {
            let [e1, e2] = frames[i];
            let list: Vec<Neighbor> = nodes
                .iter()
                .enumerate()
                .filter(|&(j, _)| j != i)
                .filter_map(|(j, &y)| {
                    let q = norm(sub(y, x));
                    (q < radius).then(|| Neighbor {
                        j,
                        q,
                        xi: [dot(y, e1), dot(y, e2)],
                    })
                })
                .collect();
            fit.push(Self::fit_rows(&list, fit_radius, dim));
            near.push(list);
        }
        Self {
            spacing: h,
            frames,
            near,
            fit,
        }
    }

    fn basis(xi: [f64; 2], dim: usize) -> ([f64; 5], usize) {
        let [a, b] = xi;
        if dim == 2 {
            ([a, 0.5 * a * a, 0.0, 0.0, 0.0], 2)
        } else {
            ([a, b, 0.5 * a * a, a * b, 0.5 * b * b], 5)
        }
    }

    fn fit_rows(list: &[Neighbor], fit_radius: f64, dim: usize) -> Vec<(usize, [f64; 5])> {
        let used: Vec<&Neighbor> = list.iter().filter(|n| n.q < fit_radius).collect();
        let mut ata = [[0.0; 5]; 5];
        let mut k = 0;
        for n in &used {
            let (row, m) = Self::basis(n.xi, dim);
            k = m;
            for a in 0..m {
                for b in 0..m {
                    ata[a][b] += row[a] * row[b];
                }
            }
        }
        if used.len() < k || k == 0 {
            return Vec::new();
        }
        // columns of (A^T A)^{-1}: solve against unit vectors
        let mut inv = [[0.0; 5]; 5];
        for c in 0..k {
            let mut a = ata;
            let mut e = [0.0; 5];
            e[c] = 1.0;
            if solve(&mut a, &mut e, k).is_none() {
                return Vec::new();
            }
            for r in 0..k {
                inv[r][c] = e[r];
            }
        }
        used.iter()
            .map(|n| {
                let (row, _) = Self::basis(n.xi, dim);
                let mut coef = [0.0; 5];
                for (r, c) in coef.iter_mut().enumerate().take(k) {
                    *c = (0..k).map(|s| inv[r][s] * row[s]).sum();
                }
                (n.j, coef)
            })
            .collect()
    }

    pub fn spacing(&self) -> f64 {
        self.spacing
    }

    pub fn frame(&self, i: usize) -> [Point; 2] {
        self.frames[i]
    }

    /// Neighbours of node `i` within `NEIGHBOR_RADIUS` spacings.
    pub fn near(&self, i: usize) -> &[Neighbor] {
        &self.near[i]
    }

    /// Least-squares quadratic jet of `values` at node `i`; zero slope and
    /// curvature if the stencil is degenerate.
    pub fn jet(&self, i: usize, values: &[f64]) -> Jet {
        let v0 = values[i];
        let mut t = [0.0; 5];
        for &(j, c) in &self.fit[i] {
            let d = values[j] - v0;
            for (tk, ck) in t.iter_mut().zip(c) {
                *tk += ck * d;
            }
        }
        if self.frames[i][1] == [0.0; 3] {
            Jet {
                value: v0,
                grad: [t[0], 0.0],
                hess: [t[1], 0.0, 0.0],
            }
        } else {
            Jet {
                value: v0,
                grad: [t[0], t[1]],
                hess: [t[2], t[3], t[4]],
            }
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn frames_are_orthonormal() {
        let g = SphereGrid::for_dim(3, 8).unwrap();
        let nb = g.neighborhoods();
        for (i, &x) in g.nodes().iter().enumerate() {
            let [a, b] = nb.frame(i);
            assert!((norm(a) - 1.0).abs() < 1e-12 && (norm(b) - 1.0).abs() < 1e-12);
            assert!(dot(a, b).abs() < 1e-12 && dot(a, x).abs() < 1e-12 && dot(b, x).abs() < 1e-12);
        }
    }

    #[test]
    fn jets_reproduce_quadratics() {
        // restricted to the sphere, a linear function is exactly
        // value + g . xi + curvature along the normal, which is quadratic in xi
        for g in [SphereGrid::for_dim(3, 24).unwrap(), SphereGrid::for_dim(2, 128).unwrap()] {
            let nb = g.neighborhoods();
            let c = [0.3, -0.7, 0.5];
            let vals: Vec<f64> = g.nodes().iter().map(|&p| dot(p, c)).collect();
            for i in (0..g.len()).step_by(7) {
                let x = g.node(i);
                let [e1, e2] = nb.frame(i);
                let jet = nb.jet(i, &vals);
                assert!((jet.grad[0] - dot(c, e1)).abs() < 1e-3, "{i}: {:?}", jet);
                if g.dim() == 3 {
                    assert!((jet.grad[1] - dot(c, e2)).abs() < 1e-3);
                }
                // normal curvature of a linear function: -(c . x)
                assert!((jet.hess[0] + dot(c, x)).abs() < 2e-2, "{i}: {:?}", jet);
            }
        }
    }
}

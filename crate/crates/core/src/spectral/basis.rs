use std::f64::consts::PI;
use std::sync::Arc;

use crate::error::{Error, Result};
use crate::geom::Point;
use crate::kernel::sphere_area;
use crate::sets::SphereGrid;

/// Largest accepted deviation of the discrete Gram matrix from the identity.
pub const GRAM_TOLERANCE: f64 = 1e-6;

/// Number of independent harmonics of degree `k` on the sphere in `R^dim`.
pub fn multiplicity(dim: usize, k: usize) -> usize {
    match (dim, k) {
        (_, 0) => 1,
        (2, _) => 2,
        _ => 2 * k + 1,
    }
}

/// Real orthonormal harmonics of degree `<= kmax` at the unit vector `x`,
/// ordered by degree and, within degree `k`, by index `i = 1..N(k)`.
///
/// On the circle `i = 1, 2` are `cos(k t)`, `sin(k t)`. On the sphere the
/// order is `m = +1, -1, +2, -2, ..., +k, -k, 0` (cosine then sine in the
/// azimuth), so that degree one is `(x_1, x_2, x_3) / sqrt(w_3)`.
pub fn harmonics_at(dim: usize, kmax: usize, x: Point) -> Vec<f64> {
    let mut out = Vec::new();
    if dim == 2 {
        let t = x[1].atan2(x[0]);
        out.push(1.0 / (2.0 * PI).sqrt());
        let s = 1.0 / PI.sqrt();
        for k in 1..=kmax {
            let (sn, cs) = (k as f64 * t).sin_cos();
            out.push(s * cs);
            out.push(s * sn);
        }
        return out;
    }
    let z = x[2].clamp(-1.0, 1.0);
    let st = (x[0] * x[0] + x[1] * x[1]).sqrt();
    let phi = x[1].atan2(x[0]);
    let p = normalized_legendre(kmax, z, st);
    let at = |l: usize, m: usize| p[l * (kmax + 1) + m];
    for l in 0..=kmax {
        for m in 1..=l {
            let (sn, cs) = (m as f64 * phi).sin_cos();
            let a = std::f64::consts::SQRT_2 * at(l, m);
            out.push(a * cs);
            out.push(a * sn);
        }
        out.push(at(l, 0));
    }
    out
}

/// Fully normalized associated Legendre values `P_l^m(z)` (no Condon–Shortley
/// phase) times `1/sqrt(4 pi)`, row-major in `(l, m)`.
fn normalized_legendre(kmax: usize, z: f64, s: f64) -> Vec<f64> {
    let w = kmax + 1;
    let mut p = vec![0.0; w * w];
    p[0] = 1.0 / (4.0 * PI).sqrt();
    for m in 1..=kmax {
        let mf = m as f64;
        p[m * w + m] = ((2.0 * mf + 1.0) / (2.0 * mf)).sqrt() * s * p[(m - 1) * w + m - 1];
    }
    for m in 0..kmax {
        p[(m + 1) * w + m] = (2.0 * m as f64 + 3.0).sqrt() * z * p[m * w + m];
    }
    for m in 0..=kmax {
        let mf = m as f64;
        for l in (m + 2)..=kmax {
            let lf = l as f64;
            let a = ((4.0 * lf * lf - 1.0) / (lf * lf - mf * mf)).sqrt();
            let b = (((lf - 1.0).powi(2) - mf * mf) / (4.0 * (lf - 1.0).powi(2) - 1.0)).sqrt();
            p[l * w + m] = a * (z * p[(l - 1) * w + m] - b * p[(l - 2) * w + m]);
        }
    }
    p
}

/// Orthonormal harmonics tabulated on the nodes of a sphere grid.
#[derive(Debug, Clone)]
pub struct HarmonicBasis {
    grid: Arc<SphereGrid>,
    max_degree: usize,
    labels: Vec<(usize, usize)>,
    values: Vec<Vec<f64>>,
}

impl HarmonicBasis {
    /// Tabulates all harmonics of degree `<= max_degree` and checks the
    /// discrete Gram matrix against the identity.
    pub fn new(grid: Arc<SphereGrid>, max_degree: usize) -> Result<Self> {
        let dim = grid.dim();
        let labels: Vec<(usize, usize)> = (0..=max_degree)
            .flat_map(|k| (1..=multiplicity(dim, k)).map(move |i| (k, i)))
            .collect();
        let mut values = vec![Vec::with_capacity(grid.len()); labels.len()];
        for &x in grid.nodes() {
            for (f, y) in values.iter_mut().zip(harmonics_at(dim, max_degree, x)) {
                f.push(y);
            }
        }
        let basis = Self {
            grid,
            max_degree,
            labels,
            values,
        };
        basis.check_gram()?;
        Ok(basis)
    }

    fn check_gram(&self) -> Result<()> {
        let w = self.grid.weights();
        let mut worst: Option<(usize, usize, f64)> = None;
        for a in 0..self.values.len() {
            for b in a..self.values.len() {
                let g: f64 = self.values[a]
                    .iter()
                    .zip(&self.values[b])
                    .zip(w)
                    .map(|((ya, yb), wj)| wj * ya * yb)
                    .sum();
                let dev = (g - if a == b { 1.0 } else { 0.0 }).abs();
                if dev > GRAM_TOLERANCE && worst.is_none_or(|(_, _, d)| dev > d) {
                    worst = Some((a, b, dev));
                }
            }
        }
        match worst {
            None => Ok(()),
            Some((a, b, deviation)) => Err(Error::UnderResolved {
                a: self.labels[a],
                b: self.labels[b],
                deviation,
            }),
        }
    }

    pub fn grid(&self) -> &Arc<SphereGrid> {
        &self.grid
    }

    pub fn dim(&self) -> usize {
        self.grid.dim()
    }

    pub fn max_degree(&self) -> usize {
        self.max_degree
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// `(k, i)` of every basis function, in storage order.
    pub fn labels(&self) -> &[(usize, usize)] {
        &self.labels
    }

    /// Nodal values of `y_{k,i}`.
    pub fn function(&self, k: usize, i: usize) -> Option<&[f64]> {
        self.labels
            .iter()
            .position(|&l| l == (k, i))
            .map(|a| self.values[a].as_slice())
    }

    /// Nodal values of every function, in label order.
    pub fn values(&self) -> &[Vec<f64>] {
        &self.values
    }

    /// `(N w_N)`; the squared norm of the constant 1.
    pub fn area(&self) -> f64 {
        sphere_area(self.dim()).expect("grid dimension is valid")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::unit_ball_volume;

    #[test]
    fn low_degrees_have_closed_forms() {
        for dim in [2, 3] {
            let omega = unit_ball_volume(dim).unwrap();
            let x = if dim == 2 {
                [0.6, 0.8, 0.0]
            } else {
                [0.48, 0.64, 0.6]
            };
            let y = harmonics_at(dim, 1, x);
            assert!((y[0] - 1.0 / (dim as f64 * omega).sqrt()).abs() < 1e-15);
            for a in 0..dim {
                assert!((y[1 + a] - x[a] / omega.sqrt()).abs() < 1e-15, "{dim} {a}");
            }
        }
    }

    #[test]
    fn gram_is_identity_up_to_degree_eight() {
        let b = HarmonicBasis::new(Arc::new(SphereGrid::for_dim(3, 12).unwrap()), 8).unwrap();
        assert_eq!(b.len(), 81);
        let b = HarmonicBasis::new(Arc::new(SphereGrid::for_dim(2, 24).unwrap()), 8).unwrap();
        assert_eq!(b.len(), 17);
    }

    #[test]
    fn under_resolved_grid_names_a_pair() {
        let err = HarmonicBasis::new(Arc::new(SphereGrid::for_dim(3, 6).unwrap()), 8).unwrap_err();
        match err {
            Error::UnderResolved { a, b, deviation } => {
                assert!(a.0 > 5 || b.0 > 5, "{a:?} {b:?}");
                assert!(deviation > GRAM_TOLERANCE);
            }
            e => panic!("unexpected {e}"),
        }
    }
}

//! Weighted double sums over sphere nodes with a singular pair integrand,
//! corrected near the diagonal by a local model.
//!
//! For each node `i` the pair integrand `F_i(y)` is approximated near `x_i`
//! by a model `M_i(y)` built from the jet of a nodal function. The sum over
//! `j != i` of `w_j M_i(x_j) chi(|x_j - x_i|)` is replaced by the integral of
//! `M_i chi` over the sphere, where `chi(q) = exp(-(q / sigma)^4)` is a
//! smooth cutoff. The remainder `F_i - M_i chi` is regular enough for the
//! plain node sum.

use std::f64::consts::PI;

use crate::geom::{norm, sub, Point};
use crate::quad::GaussLegendre;
use crate::sets::{Jet, SphereGrid};

/// Cutoff widths in units of the mean node spacing; the second one gives
/// an independent estimate used as the error indicator.
pub(crate) const SIGMA: f64 = 2.0;
pub(crate) const SIGMA_ALT: f64 = 2.75;
/// The cutoff is treated as zero beyond this many widths.
const CUTOFF: f64 = 2.2;
const THETA_NODES: usize = 32;
const PHI_NODES: usize = 16;

#[inline]
fn chi(q: f64, sigma: f64) -> f64 {
    let s = q / sigma;
    let s2 = s * s;
    (-s2 * s2).exp()
}

/// `sum_{i != j} w_i w_j pair(i, j, |x_i - x_j|)`; with `symmetric` only
/// `i < j` is evaluated and doubled.
pub(crate) fn pair_sum<F>(points: &[Point], weights: &[f64], symmetric: bool, pair: F) -> f64
where
    F: Fn(usize, usize, f64) -> f64,
{
    let n = points.len();
    let mut total = 0.0;
    for i in 0..n {
        let xi = points[i];
        let mut row = 0.0;
        let start = if symmetric { i + 1 } else { 0 };
        for j in start..n {
            if j == i {
                continue;
            }
            let q = norm(sub(points[j], xi));
            row += weights[j] * pair(i, j, q);
        }
        total += weights[i] * row;
    }
    if symmetric {
        2.0 * total
    } else {
        total
    }
}

/// Near-diagonal corrections at the two cutoff widths.
#[derive(Debug, Clone, Copy)]
pub(crate) struct NearField {
    pub correction: f64,
    pub alt: f64,
}

impl NearField {
    /// Disagreement between the two cutoffs.
    pub fn spread(&self) -> f64 {
        (self.correction - self.alt).abs()
    }
}

/// How the model depends on the partner value.
#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Model {
    /// Through the jet of the partner function.
    Jet,
    /// Only through `q`.
    Radial,
}

/// Near-diagonal correction for the node sum of `pair(i, j, q)`, where
/// `model(i, v, q)` approximates it with `v` the jet of `partner` at `i`
/// evaluated at the neighbour.
pub(crate) fn near_field<M>(grid: &SphereGrid, partner: &[f64], kind: Model, model: M) -> NearField
where
    M: Fn(usize, f64, f64) -> f64,
{
    near_field_with(grid, partner, |_| kind, model)
}

/// As [`near_field`], with the model kind chosen per node.
pub(crate) fn near_field_with<K, M>(grid: &SphereGrid, partner: &[f64], kind_of: K, model: M) -> NearField
where
    K: Fn(usize) -> Model,
    M: Fn(usize, f64, f64) -> f64,
{
    let nb = grid.neighborhoods();
    let h = nb.spacing();
    let sigmas = [SIGMA * h, SIGMA_ALT * h];
    let reach = CUTOFF * sigmas[1];
    let theta_max = 2.0 * (0.5 * reach).min(1.0).asin();
    let rule = GaussLegendre::cached(THETA_NODES);
    let dim = grid.dim();
    let ring: Vec<(f64, f64)> = (0..PHI_NODES)
        .map(|l| {
            let (s, c) = (2.0 * PI * l as f64 / PHI_NODES as f64).sin_cos();
            (c, s)
        })
        .collect();
    let weights = grid.weights();

    let mut out = [0.0; 2];
    for i in 0..grid.len() {
        let kind = kind_of(i);
        let (phis, phi_weight): (&[(f64, f64)], f64) = match (dim, kind) {
            (2, _) => (&[(1.0, 0.0), (-1.0, 0.0)], 1.0),
            (_, Model::Radial) => (&[(1.0, 0.0)], 2.0 * PI),
            _ => (&ring, 2.0 * PI / PHI_NODES as f64),
        };
        let jet = match kind {
            Model::Jet => nb.jet(i, partner),
            Model::Radial => Jet {
                value: partner[i],
                ..Jet::default()
            },
        };
        let mut local = [0.0; 2];
        for (v, wv) in rule.nodes.iter().zip(&rule.weights) {
            let t = 0.5 * (v + 1.0);
            let theta = theta_max * t * t;
            let dtheta = 0.5 * wv * 2.0 * theta_max * t;
            let q = 2.0 * (0.5 * theta).sin();
            let (st, _) = theta.sin_cos();
            let measure = if dim == 2 { 1.0 } else { st };
            let mut m = 0.0;
            for &(c, s) in phis {
                m += model(i, jet.eval([st * c, st * s]), q);
            }
            let base = m * phi_weight * measure * dtheta;
            local[0] += base * chi(q, sigmas[0]);
            local[1] += base * chi(q, sigmas[1]);
        }
        for n in nb.near(i) {
            if n.q >= reach {
                continue;
            }
            let m = weights[n.j] * model(i, jet.eval(n.xi), n.q);
            local[0] -= m * chi(n.q, sigmas[0]);
            local[1] -= m * chi(n.q, sigmas[1]);
        }
        out[0] += weights[i] * local[0];
        out[1] += weights[i] * local[1];
    }
    NearField {
        correction: out[0],
        alt: out[1],
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::{mu, KernelParams};

    fn seminorm(grid: &SphereGrid, u: &[f64], p: &KernelParams) -> (f64, f64) {
        let e = p.alpha() - p.n();
        let raw = pair_sum(grid.nodes(), grid.weights(), true, |i, j, q| {
            (u[i] - u[j]).powi(2) * q.powf(e)
        });
        let nf = near_field(grid, u, Model::Jet, |i, v, q| (v - u[i]).powi(2) * q.powf(e));
        (raw, raw + nf.correction)
    }

    #[test]
    fn correction_recovers_first_eigenvalue() {
        let g = SphereGrid::for_dim(3, 24).unwrap();
        let p = KernelParams::new(3, 2.0).unwrap();
        let s = (3.0 / (4.0 * PI)).sqrt();
        let u: Vec<f64> = g.nodes().iter().map(|x| s * x[2]).collect();
        let (raw, corrected) = seminorm(&g, &u, &p);
        let want = mu(1, &p);
        assert!((corrected / want - 1.0).abs() < 2e-3, "{raw} {corrected} {want}");
        assert!((raw / want - 1.0).abs() > (corrected / want - 1.0).abs());
    }

    #[test]
    fn circle_modes() {
        let g = SphereGrid::for_dim(2, 256).unwrap();
        for alpha in [1.2, 1.5, 1.9] {
            let p = KernelParams::new(2, alpha).unwrap();
            for k in 1..=6 {
                let u: Vec<f64> = g
                    .nodes()
                    .iter()
                    .map(|x| (k as f64 * x[1].atan2(x[0])).cos() / PI.sqrt())
                    .collect();
                let (_, c) = seminorm(&g, &u, &p);
                let want = mu(k, &p);
                assert!((c / want - 1.0).abs() < 2e-3, "alpha {alpha} k {k}: {c} vs {want}");
            }
        }
    }
}

use crate::energy::pairsum::{near_field, pair_sum, Model};
use crate::error::{Error, Result};
use crate::kernel::{mu, KernelParams};
use crate::sets::SphereGrid;

use super::spectrum::Spectrum;

/// `[u]^2 = sum_{i != j} w_i w_j (u_i - u_j)^2 |x_i - x_j|^(a-N)`, with the
/// near-diagonal part replaced by the integral of a local quadratic model.
pub fn seminorm_direct(grid: &SphereGrid, u: &[f64], p: &KernelParams) -> Result<f64> {
    if u.len() != grid.len() {
        return Err(Error::Inconsistent(format!(
            "{} values for a grid of {} nodes",
            u.len(),
            grid.len()
        )));
    }
    if grid.dim() != p.dim() {
        return Err(Error::Inconsistent("grid and kernel dimensions differ".into()));
    }
    if let Some(j) = u.iter().position(|v| !v.is_finite()) {
        return Err(Error::Domain(format!("u[{j}] is not finite")));
    }
    let e = p.alpha() - p.n();
    let raw = pair_sum(grid.nodes(), grid.weights(), true, |i, j, q| {
        (u[i] - u[j]).powi(2) * q.powf(e)
    });
    let nf = near_field(grid, u, Model::Jet, |i, v, q| (v - u[i]).powi(2) * q.powf(e));
    Ok(raw + nf.correction)
}

/// `sum_k mu_k sum_i a_{k,i}^2`.
pub fn seminorm_spectral(s: &Spectrum, p: &KernelParams) -> f64 {
    (0..=s.max_degree).map(|k| mu(k, p) * s.degree_energy(k)).sum()
}

/// Limit of `D / t^2` for volume- and barycenter-corrected perturbations:
/// `1/2 sum_{k >= 2} (mu_k - mu_1) sum_i a_{k,i}^2`.
pub fn second_variation(s: &Spectrum, p: &KernelParams) -> f64 {
    let mu1 = mu(1, p);
    0.5 * (2..=s.max_degree)
        .map(|k| (mu(k, p) - mu1) * s.degree_energy(k))
        .sum::<f64>()
}

/// `(k, mu_k)` for `k = 0..=kmax`.
pub fn eigenvalue_table(p: &KernelParams, kmax: usize) -> Vec<(usize, f64)> {
    (0..=kmax).map(|k| (k, mu(k, p))).collect()
}

/// The eigenvalue table as CSV with header `k,mu`.
pub fn eigenvalue_csv(p: &KernelParams, kmax: usize) -> String {
    let mut out = String::from("k,mu\n");
    for (k, m) in eigenvalue_table(p, kmax) {
        out.push_str(&format!("{k},{m:.17e}\n"));
    }
    out
}

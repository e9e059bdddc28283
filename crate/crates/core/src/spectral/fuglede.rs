use crate::energy::graph::boxsq;
use crate::energy::energy_graph;
use crate::energy::pairsum::{near_field, pair_sum, Model};
use crate::error::{Error, Result};
use crate::kernel::{ball_energy, KernelParams};
use crate::sets::GraphSet;

/// Largest amplitude accepted by [`fuglede_identity_residual`].
pub const MAX_AMPLITUDE: f64 = 0.2;

/// Relative residual of `F(B) - F(E) = t^2/2 g(t) + F(B)/(N w_N) (h(0) - h(t))`
/// for `E` the graph of `u = t v` with `|v| <= 1`, where
/// `h(t) = int (1 + t v)^(N+a)` and `g(t)` is the double integral of boxes
/// over `[v(y), v(x)]^2` in the rescaled radial variables.
///
/// The left side is `F(B)` minus the graph energy of `E`; the right side
/// evaluates `g` in the variables of `v` with the alternative cutoff width
/// of the near-diagonal correction. The residual is relative to
/// `|t^2 g / 2| + |F(B)/(N w_N) (h(0) - h(t))|`.
pub fn fuglede_identity_residual(e: &GraphSet, t: f64, p: &KernelParams) -> Result<f64> {
    if !(0.0..=MAX_AMPLITUDE).contains(&t) {
        return Err(Error::Precondition(format!("amplitude t = {t} must lie in [0, {MAX_AMPLITUDE}]")));
    }
    if e.has_splits() {
        return Err(Error::NotApplicable("identity needs an unsplit graph set".into()));
    }
    let u = e.u();
    let sup = e.sup_norm();
    if sup > t * (1.0 + 1e-12) {
        return Err(Error::Precondition(format!("sup |u| = {sup} exceeds t = {t}")));
    }
    if t == 0.0 {
        return Ok(0.0);
    }
    let grid = e.grid();
    let v: Vec<f64> = u.iter().map(|x| x / t).collect();
    let ex = p.n() + p.alpha();
    let w = grid.weights();
    let h0: f64 = w.iter().sum();
    let ht: f64 = w.iter().zip(&v).map(|(wj, vj)| wj * (1.0 + t * vj).powf(ex)).sum();
    let c = ball_energy(p) / h0;

    let t2 = t * t;
    let gbox = |q: f64, a: f64, b: f64| boxsq(q, 1.0 + t * a, 1.0 + t * b, p) / t2;
    let raw = pair_sum(grid.nodes(), w, true, |i, j, q| gbox(q, v[j], v[i]));
    let nf = near_field(grid, &v, Model::Jet, |i, vj, q| gbox(q, vj, v[i]));
    let g = raw + nf.alt;
    if !g.is_finite() {
        return Err(Error::Quadrature {
            value: g,
            residual: f64::INFINITY,
        });
    }

    let lhs = ball_energy(p) - energy_graph(e, p)?.value;
    let quad = 0.5 * t2 * g;
    let lin = c * (h0 - ht);
    let scale = quad.abs() + lin.abs();
    if scale == 0.0 {
        return Ok(lhs.abs());
    }
    Ok((lhs - (quad + lin)).abs() / scale)
}

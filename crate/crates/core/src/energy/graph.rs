//! Energies of graph sets through the polar decomposition
//! `F(E) = F(B)/(N w_N) sum w (1+u)^(N+a) - T/2`, where `T` is the angular
//! double sum of box integrals between the radii of pairs of rays.

use crate::error::{Error, Result};
use crate::geom::Point;
use crate::kernel::{ball_energy, unit_ball_volume, KernelParams};
use crate::sets::{GraphSet, SphereGrid};

use super::pairsum::{near_field, near_field_with, pair_sum, Model};
use super::radial::radial_box_square;
use super::{EnergyEstimate, Method};

/// Relative volume mismatch accepted before normalization.
pub const VOLUME_TOLERANCE: f64 = 5e-3;

/// Value of an angular double sum and its error estimate.
#[derive(Debug, Clone, Copy)]
pub(crate) struct Term {
    pub value: f64,
    pub error: f64,
}

/// Box evaluations signal failure with NaN; surface it as a quadrature error.
pub(crate) fn check_finite(v: f64) -> Result<f64> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(Error::Quadrature {
            value: v,
            residual: f64::INFINITY,
        })
    }
}

#[inline]
pub(crate) fn boxsq(q: f64, a: f64, b: f64, p: &KernelParams) -> f64 {
    radial_box_square(q, a, b, p).unwrap_or(f64::NAN)
}

/// `sum_{i,j} w_i w_j box(q_ij, [r_j, r_i]^2)` for radial values `r = scale (1 + u)`
/// on an unsplit grid, with the near-diagonal correction.
pub(crate) fn box_term_nodes(grid: &SphereGrid, u: &[f64], scale: f64, p: &KernelParams) -> Result<Term> {
    let r: Vec<f64> = u.iter().map(|&v| scale * (1.0 + v)).collect();
    let raw = pair_sum(grid.nodes(), grid.weights(), true, |i, j, q| boxsq(q, r[j], r[i], p));
    let nf = near_field(grid, u, Model::Jet, |i, v, q| boxsq(q, scale * (1.0 + v), r[i], p));
    let value = check_finite(raw + nf.correction)?;
    Ok(Term {
        value,
        error: nf.spread() + 1e-12 * value.abs(),
    })
}

/// Box term over the cells of a split set. Split cells make the radius
/// discontinuous, so no local model applies; the error estimate is the
/// mass of pairs closer than two spacings.
fn box_term_cells(e: &GraphSet, p: &KernelParams) -> Result<Term> {
    let cells = e.cells();
    let pts: Vec<Point> = cells.iter().map(|c| c.node).collect();
    let w: Vec<f64> = cells.iter().map(|c| c.weight).collect();
    let r: Vec<f64> = cells.iter().map(|c| 1.0 + c.u).collect();
    let h = e.grid().mean_spacing();
    let raw = pair_sum(&pts, &w, true, |i, j, q| boxsq(q, r[j], r[i], p));
    let near = pair_sum(&pts, &w, true, |i, j, q| {
        if q < 2.0 * h {
            boxsq(q, r[j], r[i], p)
        } else {
            0.0
        }
    });
    let value = check_finite(raw)?;
    Ok(Term { value, error: near })
}

fn box_term(e: &GraphSet, p: &KernelParams) -> Result<Term> {
    if e.has_splits() {
        box_term_cells(e, p)
    } else {
        box_term_nodes(e.grid(), e.u(), 1.0, p)
    }
}

fn check_dim(e: &GraphSet, p: &KernelParams) -> Result<()> {
    if e.dim() != p.dim() {
        return Err(Error::Inconsistent(format!(
            "set of dimension {} with kernel of dimension {}",
            e.dim(),
            p.dim()
        )));
    }
    Ok(())
}

fn check_star(e: &GraphSet) -> Result<()> {
    let s = e.sup_norm();
    if s >= 1.0 {
        return Err(Error::NotStarShaped(format!("sup |u| = {s} must be < 1")));
    }
    Ok(())
}

/// `F(E)` of a graph set.
pub fn energy_graph(e: &GraphSet, p: &KernelParams) -> Result<EnergyEstimate> {
    check_dim(e, p)?;
    check_star(e)?;
    let c = ball_energy(p) / (p.n() * unit_ball_volume(p.dim())?);
    let ex = p.n() + p.alpha();
    let first: f64 = c * e
        .cells()
        .iter()
        .map(|cell| cell.weight * (1.0 + cell.u).powf(ex))
        .sum::<f64>();
    let t = box_term(e, p)?;
    Ok(EnergyEstimate {
        value: first - 0.5 * t.value,
        error_bound: 0.5 * t.error + 1e-13 * first,
        method: Method::GraphQuadrature,
    })
}

/// `D(E)` of the volume-normalized graph set, without forming `F(B) - F(E)`:
/// `D = F(B)/(N w_N) sum w (1 - (1+u)^(N+a)) + T/2`.
pub fn deficit_graph(e: &GraphSet, p: &KernelParams) -> Result<EnergyEstimate> {
    check_dim(e, p)?;
    let omega = unit_ball_volume(p.dim())?;
    let vol = e.volume();
    if !((vol / omega - 1.0).abs() <= VOLUME_TOLERANCE) {
        return Err(Error::Precondition(format!(
            "volume {vol} differs from the unit ball volume {omega} by more than {:.1}%",
            100.0 * VOLUME_TOLERANCE
        )));
    }
    let en = e.volume_normalize();
    check_star(&en)?;
    let c = ball_energy(p) / (p.n() * omega);
    let ex = p.n() + p.alpha();
    let first: f64 = c * en
        .cells()
        .iter()
        .map(|cell| -cell.weight * (ex * cell.u.ln_1p()).exp_m1())
        .sum::<f64>();
    let t = box_term(&en, p)?;
    Ok(EnergyEstimate {
        value: first + 0.5 * t.value,
        error_bound: 0.5 * t.error + 1e-15 * ball_energy(p),
        method: Method::GraphQuadrature,
    })
}

/// `sum_{i != j} w_i w_j box(q_ij, [1 + b_j, 1 + a_i]^2)` plus the diagonal
/// handled by the near-field model.
fn cross_term(grid: &SphereGrid, a: &[f64], b: &[f64], p: &KernelParams) -> Result<Term> {
    let h = grid.mean_spacing();
    let raw = pair_sum(grid.nodes(), grid.weights(), false, |i, j, q| {
        boxsq(q, 1.0 + b[j], 1.0 + a[i], p)
    });
    let nf = near_field_with(
        grid,
        b,
        |i| {
            if (a[i] - b[i]).abs() <= 0.25 * h {
                Model::Jet
            } else {
                Model::Radial
            }
        },
        |i, v, q| boxsq(q, 1.0 + v, 1.0 + a[i], p),
    );
    let value = check_finite(raw + nf.correction)?;
    Ok(Term {
        value,
        error: nf.spread() + 1e-12 * value.abs(),
    })
}

/// `I(G, H)` of two unsplit graph sets on a shared grid and center,
/// symmetric in its arguments by construction.
pub fn mutual_energy_graph(g: &GraphSet, hset: &GraphSet, p: &KernelParams) -> Result<EnergyEstimate> {
    check_dim(g, p)?;
    check_star(g)?;
    check_star(hset)?;
    if !std::sync::Arc::ptr_eq(g.grid(), hset.grid()) && g.grid().spec() != hset.grid().spec() {
        return Err(Error::Inconsistent("graph sets live on different grids".into()));
    }
    if g.center() != hset.center() {
        return Err(Error::Inconsistent("graph sets have different centers".into()));
    }
    if g.has_splits() || hset.has_splits() {
        return Err(Error::NotApplicable(
            "mutual energy of split graph sets; use the voxel path".into(),
        ));
    }
    let grid = g.grid();
    let c = ball_energy(p) / (p.n() * unit_ball_volume(p.dim())?);
    let ex = p.n() + p.alpha();
    let moment = |u: &[f64]| -> f64 {
        grid.weights()
            .iter()
            .zip(u)
            .map(|(w, &v)| w * (1.0 + v).powf(ex))
            .sum()
    };
    let first = 0.5 * c * (moment(g.u()) + moment(hset.u()));
    let gh = cross_term(grid, g.u(), hset.u(), p)?;
    let hg = cross_term(grid, hset.u(), g.u(), p)?;
    let t = 0.5 * (gh.value + hg.value);
    Ok(EnergyEstimate {
        value: first - 0.5 * t,
        error_bound: 0.25 * (gh.error + hg.error) + 0.25 * (gh.value - hg.value).abs(),
        method: Method::GraphQuadrature,
    })
}

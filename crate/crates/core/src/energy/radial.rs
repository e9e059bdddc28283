//! The radial box kernel
//! `int_{s1}^{s2} int_{t1}^{t2} (r rho)^(N-1) / ((r - rho)^2 + r rho q^2)^((N-alpha)/2) drho dr`,
//! the polar-coordinate form of the interaction between two rays at chord
//! distance `q`.

use crate::error::{Error, Result};
use crate::kernel::KernelParams;
use crate::quad::{integrate, integrate_breaks, GaussLegendre, QuadOptions};

/// Integrand of the box kernel.
#[inline]
pub fn radial_integrand(q: f64, r: f64, rho: f64, p: &KernelParams) -> f64 {
    let n = p.dim() as i32;
    let d = (r - rho) * (r - rho) + r * rho * q * q;
    (r * rho).powi(n - 1) * d.powf(-0.5 * (p.n() - p.alpha()))
}

const OPTS: QuadOptions = QuadOptions {
    rel_tol: 1e-10,
    abs_tol: 1e-300,
    max_intervals: 4000,
};

/// Box integral over `[s1, s2] x [t1, t2]`.
pub fn radial_box_kernel(q: f64, s1: f64, s2: f64, t1: f64, t2: f64, p: &KernelParams) -> Result<f64> {
    if !(q >= 0.0) || !(0.0 <= s1 && s1 <= s2) || !(0.0 <= t1 && t1 <= t2) {
        return Err(Error::Domain(format!(
            "box kernel needs q >= 0 and ordered nonnegative intervals, got q={q}, [{s1},{s2}] x [{t1},{t2}]"
        )));
    }
    if s1 == s2 || t1 == t2 {
        return Ok(0.0);
    }
    let beta = p.n() - p.alpha();
    let overlap = s1.max(t1) < s2.min(t2);
    if q == 0.0 && overlap && beta >= 1.0 {
        return Err(Error::Divergent(format!(
            "coincident rays with overlapping intervals diverge for N - alpha = {beta}"
        )));
    }
    if s1 == t1 && s2 == t2 && q > 0.0 {
        if let Some(v) = square_fast(q, s1, s2, p) {
            return Ok(v);
        }
    }
    let mut outer_breaks = vec![s1];
    for x in [t1, t2] {
        if x > s1 && x < s2 {
            outer_breaks.push(x);
        }
    }
    outer_breaks.push(s2);
    let mut inner_err = None;
    let outer = integrate_breaks(
        |r: f64| match inner(q, r, t1, t2, p) {
            Ok(v) => v,
            Err(e) => {
                inner_err.get_or_insert(e);
                0.0
            }
        },
        &outer_breaks,
        OPTS,
    );
    if let Some(e) = inner_err {
        return Err(e);
    }
    Ok(outer?.value)
}

/// Symmetric box `[lo, hi]^2`, the case arising between two graph rays.
pub fn radial_box_square(q: f64, lo: f64, hi: f64, p: &KernelParams) -> Result<f64> {
    let (lo, hi) = if lo <= hi { (lo, hi) } else { (hi, lo) };
    radial_box_kernel(q, lo, hi, lo, hi, p)
}

/// Tensor Gauss–Legendre for boxes narrow compared to the ridge width `q m`.
fn square_fast(q: f64, lo: f64, hi: f64, p: &KernelParams) -> Option<f64> {
    let w = hi - lo;
    let m = 0.5 * (lo + hi);
    let ratio = w / (q * m);
    let n = if ratio <= 0.02 {
        2
    } else if ratio <= 0.1 {
        3
    } else if ratio <= 0.25 {
        5
    } else if ratio <= 0.5 {
        8
    } else {
        return None;
    };
    let rule = GaussLegendre::cached(n);
    let pts: Vec<(f64, f64)> = rule.mapped(lo, hi).collect();
    let mut acc = 0.0;
    for (a, &(r, wr)) in pts.iter().enumerate() {
        acc += wr * wr * radial_integrand(q, r, r, p);
        for &(rho, wrho) in &pts[a + 1..] {
            acc += 2.0 * wr * wrho * radial_integrand(q, r, rho, p);
        }
    }
    Some(acc)
}

/// Inner integral over `rho in [t1, t2]` at fixed `r`.
fn inner(q: f64, r: f64, t1: f64, t2: f64, p: &KernelParams) -> Result<f64> {
    if r == 0.0 {
        return Ok(0.0);
    }
    if q > 0.0 {
        // rho = r + r q sinh(v) spreads the ridge at rho = r over unit scale
        let c = r * q;
        let v1 = ((t1 - r) / c).asinh();
        let v2 = ((t2 - r) / c).asinh();
        let f = |v: f64| {
            let rho = r + c * v.sinh();
            if rho <= 0.0 {
                0.0
            } else {
                radial_integrand(q, r, rho, p) * c * v.cosh()
            }
        };
        let mut br = vec![v1];
        if v1 < 0.0 && v2 > 0.0 {
            br.push(0.0);
        }
        br.push(v2);
        return Ok(integrate_breaks(f, &br, OPTS)?.value);
    }
    // q = 0: |r - rho|^(-beta) endpoint singularity, removed by grading
    let beta = p.n() - p.alpha();
    let grade = 1.0 / (1.0 - beta).max(0.05);
    let side = |len: f64, sign: f64| -> Result<f64> {
        if len <= 0.0 {
            return Ok(0.0);
        }
        let top = len.powf(1.0 / grade);
        let f = |v: f64| {
            let t = v.powf(grade);
            let rho = r + sign * t;
            grade * v.powf(grade - 1.0) * radial_integrand(0.0, r, rho, p)
        };
        Ok(integrate(f, 0.0, top, OPTS)?.value)
    };
    if r <= t1 {
        return Ok(side(t2 - r, 1.0)? - side(t1 - r, 1.0)?);
    }
    if r >= t2 {
        return Ok(side(r - t1, -1.0)? - side(r - t2, -1.0)?);
    }
    Ok(side(t2 - r, 1.0)? + side(r - t1, -1.0)?)
}

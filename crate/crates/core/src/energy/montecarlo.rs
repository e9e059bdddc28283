//! Monte Carlo oracle for energies.
//!
//! With `X` uniform in `G` and an offset `Z` of density proportional to
//! `|z|^(a-N)` on the ball of radius `R` (the diameter of the bounding
//! boxes), `I(G, H) = |G| (N w_N R^a / a) P(X + Z in H)`. The estimator is a
//! Bernoulli mean, so its variance is finite for every `a`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::geom::{add, dist, scale, Point, ORIGIN};
use crate::kernel::{unit_ball_volume, KernelParams};
use crate::sets::Region;

use super::{EnergyEstimate, Method};

/// Smallest accepted sample count.
pub const MIN_SAMPLES: usize = 10_000;
/// Samples drawn from one RNG stream; stream `b` serves block `b`.
const BLOCK: usize = 4096;

fn uniform_in(r: &dyn Region, lo: Point, hi: Point, rng: &mut ChaCha8Rng) -> Point {
    let d = r.dim();
    loop {
        let mut x = ORIGIN;
        for a in 0..d {
            x[a] = lo[a] + (hi[a] - lo[a]) * rng.random::<f64>();
        }
        if r.contains(x) {
            return x;
        }
    }
}

fn direction(dim: usize, rng: &mut ChaCha8Rng) -> Point {
    if dim == 2 {
        let t = std::f64::consts::TAU * rng.random::<f64>();
        return [t.cos(), t.sin(), 0.0];
    }
    // uniform on the sphere: z uniform in [-1, 1], azimuth uniform
    let z: f64 = 2.0 * rng.random::<f64>() - 1.0;
    let t = std::f64::consts::TAU * rng.random::<f64>();
    let s = (1.0 - z * z).max(0.0).sqrt();
    [s * t.cos(), s * t.sin(), z]
}

/// `I(G, H)` by importance sampling; `error_bound` is one standard error.
pub fn mc_mutual_energy(
    g: &dyn Region,
    h: &dyn Region,
    p: &KernelParams,
    seed: u64,
    n_samples: usize,
) -> Result<EnergyEstimate> {
    if n_samples < MIN_SAMPLES {
        return Err(Error::Precondition(format!(
            "Monte Carlo needs at least {MIN_SAMPLES} samples, got {n_samples}"
        )));
    }
    if g.dim() != p.dim() || h.dim() != p.dim() {
        return Err(Error::Inconsistent("set and kernel dimensions differ".into()));
    }
    let vg = g.volume();
    if !(vg > 0.0) || !(h.volume() > 0.0) {
        return Err(Error::EmptySet);
    }
    let (glo, ghi) = g.bounding_box();
    let (hlo, hhi) = h.bounding_box();
    let mut lo = ORIGIN;
    let mut hi = ORIGIN;
    for a in 0..p.dim() {
        lo[a] = glo[a].min(hlo[a]);
        hi[a] = ghi[a].max(hhi[a]);
    }
    let reach = dist(lo, hi);
    let alpha = p.alpha();
    let mass = p.n() * unit_ball_volume(p.dim())? * reach.powf(alpha) / alpha;

    let mut hits = 0u64;
    let blocks = n_samples.div_ceil(BLOCK);
    for b in 0..blocks {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(b as u64);
        let count = BLOCK.min(n_samples - b * BLOCK);
        for _ in 0..count {
            let x = uniform_in(g, glo, ghi, &mut rng);
            let r = reach * rng.random::<f64>().powf(1.0 / alpha);
            let y = add(x, scale(direction(p.dim(), &mut rng), r));
            if h.contains(y) {
                hits += 1;
            }
        }
    }
    let n = n_samples as f64;
    let phat = hits as f64 / n;
    let se = (phat * (1.0 - phat) / n).sqrt();
    Ok(EnergyEstimate {
        value: vg * mass * phat,
        error_bound: vg * mass * se,
        method: Method::MonteCarlo,
    })
}

/// `F(E)` by importance sampling; `error_bound` is one standard error.
pub fn mc_energy(e: &dyn Region, p: &KernelParams, seed: u64, n_samples: usize) -> Result<EnergyEstimate> {
    mc_mutual_energy(e, e, p, seed, n_samples)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::kernel::ball_energy;
    use crate::sets::{GraphSet, SphereGrid};
    use std::sync::Arc;

    #[test]
    fn ball_energy_within_three_standard_errors() {
        let p = KernelParams::new(3, 2.0).unwrap();
        let b = GraphSet::ball(Arc::new(SphereGrid::for_dim(3, 8).unwrap()));
        let e = mc_energy(&b, &p, 7, 1_000_000).unwrap();
        let fb = ball_energy(&p);
        assert!((e.value - fb).abs() < 3.0 * e.error_bound, "{e:?} vs {fb}");
    }

    #[test]
    fn deterministic_and_scaling() {
        let p = KernelParams::new(2, 1.2).unwrap();
        let b = GraphSet::ball(Arc::new(SphereGrid::for_dim(2, 64).unwrap()));
        let a = mc_energy(&b, &p, 3, 20_000).unwrap();
        let again = mc_energy(&b, &p, 3, 20_000).unwrap();
        assert_eq!(a.value.to_bits(), again.value.to_bits());
        let twice = mc_energy(&b, &p, 3, 40_000).unwrap();
        let ratio = twice.error_bound / a.error_bound;
        assert!((ratio * 2f64.sqrt() - 1.0).abs() < 0.2, "{ratio}");
        assert!(mc_energy(&b, &p, 3, 100).is_err());
    }
}

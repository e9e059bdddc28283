//! Energies of voxel sets by FFT autocorrelation of the occupancy.
//!
//! `F(E) = h^(2N) sum_{d != 0} R(d) |d h|^(a-N) + count * s_h`, where `R` is
//! the lattice autocorrelation of the occupied cells and `s_h` is the
//! energy of a ball of one cell's volume.

use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

use rustfft::num_complex::Complex;
use rustfft::FftPlanner;

use crate::error::{Error, Result};
use crate::geom::{Point, ORIGIN};
use crate::kernel::{ball_energy, unit_ball_volume, KernelParams};
use crate::sets::VoxelSet;

use super::graph::VOLUME_TOLERANCE;
use super::{EnergyEstimate, Method};

#[derive(Debug, Clone, Copy)]
pub struct VoxelEnergyOptions {
    /// Largest FFT work array, in bytes.
    pub memory_budget: usize,
}

impl Default for VoxelEnergyOptions {
    fn default() -> Self {
        Self {
            memory_budget: 1 << 30,
        }
    }
}

/// Smallest integer `>= n` whose only prime factors are 2, 3 and 5.
fn fft_size(n: usize) -> usize {
    let mut m = n.max(1);
    loop {
        let mut r = m;
        for f in [2, 3, 5] {
            while r.is_multiple_of(f) {
                r /= f;
            }
        }
        if r == 1 {
            return m;
        }
        m += 1;
    }
}

/// Index-space box `[lo, lo + len)` of the occupied cells.
fn occupied_box(v: &VoxelSet) -> Option<([usize; 3], [usize; 3])> {
    let mut lo = [usize::MAX; 3];
    let mut hi = [0usize; 3];
    let mut any = false;
    for idx in v.occupied() {
        any = true;
        let c = v.coords(idx);
        for a in 0..3 {
            lo[a] = lo[a].min(c[a]);
            hi[a] = hi[a].max(c[a]);
        }
    }
    any.then(|| {
        let mut len = [1; 3];
        for a in 0..3 {
            len[a] = hi[a] - lo[a] + 1;
        }
        (lo, len)
    })
}

/// Complex 3D array with in-place transforms along every axis.
struct Grid3 {
    dims: [usize; 3],
    data: Vec<Complex<f64>>,
}

impl Grid3 {
    fn new(dims: [usize; 3], budget: usize) -> Result<Self> {
        let n: usize = dims.iter().product();
        let bytes = n.saturating_mul(std::mem::size_of::<Complex<f64>>());
        if bytes > budget {
            return Err(Error::Resource(format!(
                "FFT grid {dims:?} needs {} MiB, budget is {} MiB",
                bytes >> 20,
                budget >> 20
            )));
        }
        Ok(Self {
            dims,
            data: vec![Complex::new(0.0, 0.0); n],
        })
    }

    fn at(&self, i: usize, j: usize, k: usize) -> usize {
        i + self.dims[0] * (j + self.dims[1] * k)
    }

    fn transform(&mut self, inverse: bool) {
        let mut planner = FftPlanner::<f64>::new();
        let [n0, n1, n2] = self.dims;
        for (axis, len) in [n0, n1, n2].into_iter().enumerate() {
            if len == 1 {
                continue;
            }
            let fft = if inverse {
                planner.plan_fft_inverse(len)
            } else {
                planner.plan_fft_forward(len)
            };
            if axis == 0 {
                fft.process(&mut self.data);
                continue;
            }
            // gather lines along `axis` into a contiguous buffer, transform, scatter
            let (outer, stride) = if axis == 1 { (n2, n0) } else { (n1, n0 * n1) };
            let mut buf = vec![Complex::new(0.0, 0.0); len * n0];
            for o in 0..outer {
                let base = if axis == 1 { o * n0 * n1 } else { o * n0 };
                for i in 0..n0 {
                    for t in 0..len {
                        buf[i * len + t] = self.data[base + i + t * stride];
                    }
                }
                fft.process(&mut buf);
                for i in 0..n0 {
                    for t in 0..len {
                        self.data[base + i + t * stride] = buf[i * len + t];
                    }
                }
            }
        }
    }
}

/// Offsets represented by wrapped FFT index `i` on an axis of length `l`.
#[inline]
fn wrapped(i: usize, l: usize) -> f64 {
    if 2 * i < l {
        i as f64
    } else {
        i as f64 - l as f64
    }
}

/// Energy of one cell, taken as that of the ball of equal volume.
fn cell_self_energy(h: f64, p: &KernelParams) -> Result<f64> {
    let omega = unit_ball_volume(p.dim())?;
    let n = p.n();
    Ok((h.powf(n) / omega).powf((n + p.alpha()) / n) * ball_energy(p))
}

/// `h^(N+a) sum_{d != 0} C(d) |d|^(a-N)` over a correlation array, plus
/// `C(0) s_h`.
fn kernel_sum(c: &Grid3, h: f64, p: &KernelParams) -> Result<f64> {
    let [l0, l1, l2] = c.dims;
    let e = 0.5 * (p.alpha() - p.n());
    let norm = (l0 * l1 * l2) as f64;
    let mut acc = 0.0;
    for k in 0..l2 {
        let dz = wrapped(k, l2);
        for j in 0..l1 {
            let dy = wrapped(j, l1);
            let row = dy * dy + dz * dz;
            let mut line = 0.0;
            for i in 0..l0 {
                let r = (c.data[c.at(i, j, k)].re / norm).round();
                if r == 0.0 {
                    continue;
                }
                let dx = wrapped(i, l0);
                let d2 = dx * dx + row;
                if d2 > 0.0 {
                    line += r * d2.powf(e);
                }
            }
            acc += line;
        }
    }
    let zero = (c.data[0].re / norm).round();
    Ok(h.powf(p.n() + p.alpha()) * acc + zero * cell_self_energy(h, p)?)
}

fn check(v: &VoxelSet, p: &KernelParams) -> Result<()> {
    if v.dim() != p.dim() {
        return Err(Error::Inconsistent(format!(
            "voxel set of dimension {} with kernel of dimension {}",
            v.dim(),
            p.dim()
        )));
    }
    Ok(())
}

/// Error model for the cell-center kernel sampling: `2 (h / r)^a` relative,
/// with `r` the equal-volume radius. The measured error on voxelized balls
/// is `O((h / r)^a)` with constant below 0.35.
fn error_model(v: &VoxelSet, p: &KernelParams, value: f64) -> f64 {
    let h = v.spacing();
    let r = (v.measure() / unit_ball_volume(v.dim()).unwrap_or(1.0)).powf(1.0 / v.dim() as f64);
    value * 2.0 * (h / r.max(h)).powf(p.alpha())
}

/// `F(E)` of a voxel set.
pub fn energy_voxel(v: &VoxelSet, p: &KernelParams, opts: &VoxelEnergyOptions) -> Result<EnergyEstimate> {
    check(v, p)?;
    let (lo, len) = occupied_box(v).ok_or(Error::EmptySet)?;
    let dims = [0, 1, 2].map(|a| if len[a] == 1 { 1 } else { fft_size(2 * len[a] - 1) });
    let mut g = Grid3::new(dims, opts.memory_budget)?;
    for idx in v.occupied() {
        let c = v.coords(idx);
        let at = g.at(c[0] - lo[0], c[1] - lo[1], c[2] - lo[2]);
        g.data[at] = Complex::new(1.0, 0.0);
    }
    g.transform(false);
    for z in g.data.iter_mut() {
        *z = Complex::new(z.norm_sqr(), 0.0);
    }
    g.transform(true);
    let value = kernel_sum(&g, v.spacing(), p)?;
    Ok(EnergyEstimate {
        value,
        error_bound: error_model(v, p, value),
        method: Method::VoxelConvolution,
    })
}

/// Whole-cell offset of `v`'s lattice relative to `frame`'s; `None` if the
/// lattices are not aligned.
fn cell_offset(frame: &VoxelSet, v: &VoxelSet) -> Option<[i64; 3]> {
    let h = frame.spacing();
    if (v.spacing() - h).abs() > 1e-12 * h {
        return None;
    }
    let mut off = [0i64; 3];
    for a in 0..frame.dim() {
        let s = (v.origin()[a] - frame.origin()[a]) / h;
        let r = s.round();
        if (s - r).abs() > 1e-6 {
            return None;
        }
        off[a] = r as i64;
    }
    Some(off)
}

/// `I(G, H)` of two voxel sets on aligned lattices of equal spacing, by
/// cross-correlation. The operands are put in a canonical order so the
/// result is exactly symmetric.
pub fn mutual_energy_voxel(
    g: &VoxelSet,
    hset: &VoxelSet,
    p: &KernelParams,
    opts: &VoxelEnergyOptions,
) -> Result<EnergyEstimate> {
    check(g, p)?;
    check(hset, p)?;
    let (a, b) = if (g.count(), g.origin().map(f64::to_bits)) <= (hset.count(), hset.origin().map(f64::to_bits)) {
        (g, hset)
    } else {
        (hset, g)
    };
    let off = cell_offset(a, b)
        .ok_or_else(|| Error::Inconsistent("voxel sets are not on aligned lattices".into()))?;
    // occupied cells of both in a's index space
    let cells = |v: &VoxelSet, o: [i64; 3]| -> Vec<[i64; 3]> {
        v.occupied()
            .map(|idx| {
                let c = v.coords(idx);
                [c[0] as i64 + o[0], c[1] as i64 + o[1], c[2] as i64 + o[2]]
            })
            .collect()
    };
    let ca = cells(a, [0; 3]);
    let cb = cells(b, off);
    if ca.is_empty() || cb.is_empty() {
        return Err(Error::EmptySet);
    }
    let mut lo = [i64::MAX; 3];
    let mut hi = [i64::MIN; 3];
    for c in ca.iter().chain(&cb) {
        for d in 0..3 {
            lo[d] = lo[d].min(c[d]);
            hi[d] = hi[d].max(c[d]);
        }
    }
    let len = [0, 1, 2].map(|d| (hi[d] - lo[d] + 1) as usize);
    let dims = [0, 1, 2].map(|d| if len[d] == 1 { 1 } else { fft_size(2 * len[d] - 1) });
    let mut fa = Grid3::new(dims, opts.memory_budget / 2)?;
    let mut fb = Grid3::new(dims, opts.memory_budget / 2)?;
    let put = |grid: &mut Grid3, cs: &[[i64; 3]]| {
        for c in cs {
            let at = grid.at((c[0] - lo[0]) as usize, (c[1] - lo[1]) as usize, (c[2] - lo[2]) as usize);
            grid.data[at] = Complex::new(1.0, 0.0);
        }
    };
    put(&mut fa, &ca);
    put(&mut fb, &cb);
    fa.transform(false);
    fb.transform(false);
    for (x, y) in fa.data.iter_mut().zip(&fb.data) {
        *x = x.conj() * y;
    }
    drop(fb);
    fa.transform(true);
    let value = kernel_sum(&fa, a.spacing(), p)?;
    let scale = (error_model(a, p, 1.0) * error_model(b, p, 1.0)).sqrt();
    Ok(EnergyEstimate {
        value,
        error_bound: value * scale,
        method: Method::VoxelConvolution,
    })
}

type BallCache = Mutex<HashMap<(usize, u64, u64), f64>>;

/// Energy of the voxelized unit ball at spacing `h`, scaled to unit volume.
fn calibrated_ball(p: &KernelParams, h: f64, opts: &VoxelEnergyOptions) -> Result<f64> {
    static CACHE: OnceLock<BallCache> = OnceLock::new();
    let key = (p.dim(), p.alpha().to_bits(), h.to_bits());
    let cache = CACHE.get_or_init(Default::default);
    if let Some(&v) = cache.lock().expect("cache lock").get(&key) {
        return Ok(v);
    }
    let b = VoxelSet::ball(p.dim(), ORIGIN, 1.0, h)?;
    let omega = unit_ball_volume(p.dim())?;
    let lam = (omega / b.measure()).powf(1.0 / p.n());
    let v = lam.powf(p.n() + p.alpha()) * energy_voxel(&b, p, opts)?.value;
    cache.lock().expect("cache lock").insert(key, v);
    Ok(v)
}

/// `D(E)` of the volume-normalized voxel set, measured against the
/// voxelized ball at the same effective spacing so that the discretization
/// bias common to both cancels.
pub fn deficit_voxel(v: &VoxelSet, p: &KernelParams, opts: &VoxelEnergyOptions) -> Result<EnergyEstimate> {
    check(v, p)?;
    let omega = unit_ball_volume(p.dim())?;
    let vol = v.measure();
    if vol == 0.0 {
        return Err(Error::EmptySet);
    }
    if !((vol / omega - 1.0).abs() <= VOLUME_TOLERANCE) {
        return Err(Error::Precondition(format!(
            "volume {vol} differs from the unit ball volume {omega} by more than {:.1}%",
            100.0 * VOLUME_TOLERANCE
        )));
    }
    let lam = (omega / vol).powf(1.0 / p.n());
    let e = energy_voxel(v, p, opts)?;
    let fe = lam.powf(p.n() + p.alpha()) * e.value;
    let fb = calibrated_ball(p, lam * v.spacing(), opts)?;
    let bias = (fb - ball_energy(p)).abs();
    Ok(EnergyEstimate {
        value: fb - fe,
        error_bound: bias + 0.5 * lam.powf(p.n() + p.alpha()) * e.error_bound * v.spacing(),
        method: Method::VoxelConvolution,
    })
}

/// Empty lattice aligned with `frame` covering the box `[lo, hi]`.
pub(crate) fn aligned_lattice(frame: &VoxelSet, lo: Point, hi: Point) -> Result<VoxelSet> {
    let h = frame.spacing();
    let mut origin = ORIGIN;
    let mut dims = [1usize; 3];
    for a in 0..frame.dim() {
        let i0 = ((lo[a] - frame.origin()[a]) / h).floor() - 1.0;
        let i1 = ((hi[a] - frame.origin()[a]) / h).ceil() + 1.0;
        origin[a] = frame.origin()[a] + i0 * h;
        dims[a] = (i1 - i0) as usize;
    }
    VoxelSet::empty(frame.dim(), origin, h, dims)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn p32() -> KernelParams {
        KernelParams::new(3, 2.0).unwrap()
    }

    #[test]
    fn single_voxel_is_self_term() {
        let p = p32();
        let h = 0.1;
        let mut v = VoxelSet::empty(3, ORIGIN, h, [3, 3, 3]).unwrap();
        v.set(v.index([1, 1, 1]), true);
        let e = energy_voxel(&v, &p, &Default::default()).unwrap();
        assert_relative_eq!(e.value, cell_self_energy(h, &p).unwrap(), max_relative = 1e-12);
    }

    #[test]
    fn two_distant_voxels() {
        for (n, a) in [(3, 2.0), (2, 1.3)] {
            let p = KernelParams::new(n, a).unwrap();
            let h = 0.01;
            let m = 200;
            let mut v = VoxelSet::empty(n, ORIGIN, h, [m, 3, 3]).unwrap();
            v.set(v.index([0, 0, 0]), true);
            v.set(v.index([m - 1, 0, 0]), true);
            let d = (m - 1) as f64 * h;
            let want = 2.0 * h.powi(2 * n as i32) * d.powf(a - n as f64)
                + 2.0 * cell_self_energy(h, &p).unwrap();
            let got = energy_voxel(&v, &p, &Default::default()).unwrap().value;
            assert_relative_eq!(got, want, max_relative = 1e-3);
        }
    }

    #[test]
    fn voxel_ball_energy() {
        let p = p32();
        let b = VoxelSet::ball(3, ORIGIN, 1.0, 1.0 / 32.0).unwrap();
        let e = energy_voxel(&b, &p, &Default::default()).unwrap();
        let fb = ball_energy(&p);
        assert!((e.value - fb).abs() < 0.01 * fb, "{} vs {fb}", e.value);
        assert!((e.value - fb).abs() <= e.error_bound);
    }

    #[test]
    fn mutual_is_symmetric_and_matches_self() {
        let p = KernelParams::new(2, 1.5).unwrap();
        let h = 1.0 / 64.0;
        let a = VoxelSet::ball(2, ORIGIN, 0.5, h).unwrap();
        let mut b = a.cleared();
        b.fill(|x| (x[0] - 0.3).abs() < 0.2 && x[1].abs() < 0.3);
        let ab = mutual_energy_voxel(&a, &b, &p, &Default::default()).unwrap();
        let ba = mutual_energy_voxel(&b, &a, &p, &Default::default()).unwrap();
        assert_eq!(ab.value, ba.value);
        let aa = mutual_energy_voxel(&a, &a, &p, &Default::default()).unwrap().value;
        let ea = energy_voxel(&a, &p, &Default::default()).unwrap().value;
        assert_relative_eq!(aa, ea, max_relative = 1e-12);
        // additivity over a disjoint split
        let b1 = b.intersection(&a).unwrap();
        let b2 = b.difference(&a).unwrap();
        let s = mutual_energy_voxel(&a, &b1, &p, &Default::default()).unwrap().value
            + mutual_energy_voxel(&a, &b2, &p, &Default::default()).unwrap().value;
        assert_relative_eq!(s, ab.value, max_relative = 1e-12);
    }

    #[test]
    fn memory_budget_is_enforced() {
        let p = p32();
        let b = VoxelSet::ball(3, ORIGIN, 1.0, 1.0 / 16.0).unwrap();
        let opts = VoxelEnergyOptions { memory_budget: 1 << 10 };
        assert!(matches!(energy_voxel(&b, &p, &opts), Err(Error::Resource(_))));
    }

    #[test]
    fn ball_deficit_vanishes() {
        let p = KernelParams::new(2, 1.5).unwrap();
        let b = VoxelSet::ball(2, [0.3, 0.1, 0.0], 1.0, 1.0 / 128.0).unwrap();
        let d = deficit_voxel(&b, &p, &Default::default()).unwrap();
        assert!(d.value.abs() < 1e-10, "{d:?}");
    }
}

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use riesz_core::energy::{deficit_graph, deficit_voxel, energy_graph, mc_energy, mutual_energy_voxel, VoxelEnergyOptions};
use riesz_core::geom::ORIGIN;
use riesz_core::kernel::{mu, tau1};
use riesz_core::sets::{GraphSet, SphereGrid, VoxelSet};
use riesz_core::spectral::{analyze, normalize_and_center, second_variation, HarmonicBasis};
use riesz_core::KernelParams;

/// Random combination of harmonics of degree 2..=4 with sup norm `amplitude`.
fn perturbation(rng: &mut ChaCha8Rng, basis: &HarmonicBasis, amplitude: f64) -> Vec<f64> {
    let dim = basis.grid().dim();
    let mut u = vec![0.0; basis.grid().len()];
    for k in 2..=4 {
        for i in 1..=riesz_core::spectral::multiplicity(dim, k) {
            let c: f64 = rng.random_range(-1.0..1.0);
            for (a, y) in u.iter_mut().zip(basis.function(k, i).unwrap()) {
                *a += c * y;
            }
        }
    }
    let sup = u.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    u.iter().map(|v| amplitude * v / sup).collect()
}

fn setup(dim: usize, res: usize) -> (Arc<SphereGrid>, HarmonicBasis) {
    let grid = Arc::new(SphereGrid::for_dim(dim, res).unwrap());
    let basis = HarmonicBasis::new(grid.clone(), 6).unwrap();
    (grid, basis)
}

#[test]
fn graph_sets_never_beat_the_ball() {
    for (dim, res, alpha) in [(2, 128, 1.3), (2, 128, 1.8), (3, 16, 1.5), (3, 16, 2.5)] {
        let p = KernelParams::new(dim, alpha).unwrap();
        let (grid, basis) = setup(dim, res);
        let mut rng = ChaCha8Rng::seed_from_u64(dim as u64 * 100 + res as u64);
        for _ in 0..8 {
            let amp = rng.random_range(0.01..0.3);
            let e = GraphSet::new(grid.clone(), perturbation(&mut rng, &basis, amp)).unwrap().volume_normalize();
            let d = deficit_graph(&e, &p).unwrap();
            assert!(d.value >= -d.error_bound, "N={dim} alpha={alpha} amp={amp}: D = {} +- {}", d.value, d.error_bound);
        }
    }
}

#[test]
fn voxel_sets_never_beat_the_ball() {
    let p = KernelParams::new(3, 2.0).unwrap();
    let h = 1.0 / 20.0;
    let ball = VoxelSet::volume_matched_ball(3, ORIGIN, 1.0, h).unwrap();
    let mut cube = VoxelSet::lattice_around(3, ORIGIN, 1.0, h).unwrap().cleared();
    let mut order: Vec<usize> = (0..cube.len()).collect();
    let sup = |i: usize| cube.center_of(i).iter().fold(0.0f64, |m, c| m.max(c.abs()));
    order.sort_by(|&a, &b| sup(a).total_cmp(&sup(b)));
    for &i in &order[..ball.count()] {
        cube.set(i, true);
    }
    let opts = VoxelEnergyOptions::default();
    let fb = riesz_core::energy::energy_voxel(&ball, &p, &opts).unwrap();
    let d = deficit_voxel(&cube, &p, &opts).unwrap();
    assert!(d.value > d.error_bound);
    let fc = riesz_core::energy::energy_voxel(&cube, &p, &opts).unwrap();
    assert!(fc.value < fb.value);
    assert!((fb.value - fc.value - d.value).abs() <= d.error_bound + fb.error_bound + fc.error_bound);
}

#[test]
fn graph_energy_agrees_with_monte_carlo() {
    for (dim, res, alpha) in [(2, 128, 1.5), (3, 24, 2.0)] {
        let p = KernelParams::new(dim, alpha).unwrap();
        let (grid, basis) = setup(dim, res);
        let mut rng = ChaCha8Rng::seed_from_u64(17);
        let e = GraphSet::new(grid, perturbation(&mut rng, &basis, 0.15)).unwrap();
        let det = energy_graph(&e, &p).unwrap();
        let mc = mc_energy(&e, &p, 5, 400_000).unwrap();
        let gap = (det.value - mc.value).abs();
        assert!(
            gap <= 5.0 * mc.error_bound + det.error_bound,
            "N={dim}: quadrature {} vs sampled {} +- {}",
            det.value,
            mc.value,
            mc.error_bound
        );
    }
}

#[test]
fn small_perturbations_follow_the_second_variation() {
    let mut checked = 0;
    for (dim, res, alpha, count) in [(2, 128, 1.5, 40), (3, 16, 2.0, 10)] {
        let p = KernelParams::new(dim, alpha).unwrap();
        let (grid, basis) = setup(dim, res);
        let gap = 0.5 * (mu(2, &p) - mu(1, &p));
        let mut rng = ChaCha8Rng::seed_from_u64(23);
        for _ in 0..count {
            let t = rng.random_range(0.005..0.02);
            let e = GraphSet::new(grid.clone(), perturbation(&mut rng, &basis, t)).unwrap();
            let e = normalize_and_center(&e).unwrap();
            let s = analyze(e.u(), &basis).unwrap();
            let q = second_variation(&s, &p);
            let high: f64 = (2..=s.max_degree).map(|k| s.degree_energy(k)).sum();
            assert!(q >= gap * high * (1.0 - 1e-12));
            let d = deficit_graph(&e, &p).unwrap();
            let r = d.value / q;
            assert!((0.85..1.15).contains(&r), "N={dim} t={t}: D / Q = {r}");
            assert!(d.value >= 0.85 * gap * high);
            checked += 1;
        }
    }
    assert_eq!(checked, 50);
}

#[test]
fn interaction_is_dominated_by_the_point_bound() {
    let p = KernelParams::new(3, 2.0).unwrap();
    let h = 1.0 / 16.0;
    let g = VoxelSet::ball(3, ORIGIN, 0.4, h).unwrap();
    for (r, d) in [(0.2, 0.7), (0.35, 1.2), (0.5, 2.5)] {
        let mut hset = VoxelSet::lattice_around(3, ORIGIN, 3.2, h).unwrap();
        hset.fill(|x| ((x[0] - d).powi(2) + x[1] * x[1] + x[2] * x[2]).sqrt() < r);
        let i = mutual_energy_voxel(&g, &hset, &p, &VoxelEnergyOptions::default()).unwrap();
        let bound = g.measure() * tau1(hset.measure(), &p).unwrap();
        assert!(i.value + i.error_bound <= bound, "r={r} d={d}: {} > {bound}", i.value);
    }
}

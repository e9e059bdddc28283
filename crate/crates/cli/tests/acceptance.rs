//! End-to-end acceptance criteria. Prints one line per criterion and exits
//! nonzero when any fails.

use std::f64::consts::PI;
use std::process::ExitCode;
use std::sync::Arc;
use std::time::{Duration, Instant};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use riesz_cli::battery::run_battery;
use riesz_cli::config::log_grid;
use riesz_cli::families::{admissible_voxel_input, random_perturbation};
use riesz_cli::reduce::reduce_set;
use riesz_cli::sweep::run_sweep;
use riesz_cli::verify::{run_verify, PUSHFORWARD_TOLERANCE};
use riesz_cli::{Envelope, ExperimentConfig, SetFamily};
use riesz_core::energy::energy_voxel;
use riesz_core::geom::ORIGIN;
use riesz_core::kernel::{ball_energy, ball_energy_by_quadrature, mu, unit_ball_volume, KernelParams};
use riesz_core::sets::{GraphSet, SphereGrid, VoxelSet};
use riesz_core::spectral::{fuglede_identity_residual, multiplicity, seminorm_direct, HarmonicBasis};

type Outcome = Result<(bool, String), String>;
type Criterion = (&'static str, fn() -> Outcome);

/// Closed-form Coulomb energy of the unit ball in R^3.
fn coulomb_ball() -> f64 {
    32.0 * PI * PI / 15.0
}

fn rel(a: f64, b: f64) -> f64 {
    (a / b - 1.0).abs()
}

fn params(n: usize, a: f64) -> Result<KernelParams, String> {
    KernelParams::new(n, a).map_err(|e| e.to_string())
}

fn ball_energy_identity() -> Outcome {
    let t = Instant::now();
    let p = params(3, 2.0)?;
    let fb = ball_energy(&p);
    let quad = ball_energy_by_quadrature(&p).map_err(|e| e.to_string())?;
    let omega = unit_ball_volume(3).map_err(|e| e.to_string())?;
    let mu1_from_energy = p.alpha() * (p.n() + p.alpha()) * quad / (p.n() * omega);
    let e1 = rel(fb, coulomb_ball());
    let e2 = rel(quad, coulomb_ball());
    let e3 = rel(mu(1, &p), mu1_from_energy);
    let secs = t.elapsed();
    Ok((
        e1 <= 5e-3 && e2 <= 5e-3 && e3 <= 5e-3 && secs < Duration::from_secs(60),
        format!("F(B) rel err {e1:.2e}, quadrature rel err {e2:.2e}, mu_1 identity rel err {e3:.2e} (tol 5e-3), {secs:.2?}"),
    ))
}

fn parseval() -> Outcome {
    let t = Instant::now();
    let mut worst: f64 = 0.0;
    for (n, res, alphas) in [(2usize, 256usize, [1.1, 1.5, 1.9]), (3, 24, [1.1, 2.0, 2.9])] {
        let grid = SphereGrid::for_dim(n, res).map_err(|e| e.to_string())?;
        let b = HarmonicBasis::new(Arc::new(grid), 6).map_err(|e| e.to_string())?;
        for a in alphas {
            let p = params(n, a)?;
            for k in 1..=6 {
                for i in 1..=multiplicity(n, k) {
                    let y = b.function(k, i).ok_or("missing harmonic")?;
                    let r = seminorm_direct(b.grid(), y, &p).map_err(|e| e.to_string())? / mu(k, &p);
                    worst = worst.max((r - 1.0).abs());
                }
            }
        }
    }
    let secs = t.elapsed();
    Ok((
        worst <= 0.02 && secs < Duration::from_secs(300),
        format!("max |[y]^2/mu_k - 1| = {worst:.2e} over k <= 6, N in {{2,3}}, 3 alphas each (tol 2e-2), {secs:.2?}"),
    ))
}

fn fuglede_identity() -> Outcome {
    let p = params(3, 2.0)?;
    let grid = Arc::new(SphereGrid::for_dim(3, 32).map_err(|e| e.to_string())?);
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let t = 0.05;
    let mut worst: f64 = 0.0;
    for _ in 0..10 {
        let u = random_perturbation(&mut rng, &grid, 4, t);
        let e = GraphSet::new(grid.clone(), u).map_err(|e| e.to_string())?;
        worst = worst.max(fuglede_identity_residual(&e, t, &p).map_err(|e| e.to_string())?);
    }
    Ok((worst <= 1e-3, format!("max relative residual {worst:.2e} over 10 sets, t = 0.05 (tol 1e-3)")))
}

fn sharpness() -> Outcome {
    let start = Instant::now();
    let cfg = ExperimentConfig {
        family: SetFamily::Harmonic {
            degree: 2,
            index: 1,
            amplitudes: log_grid(1e-3, 5e-2, 14),
        },
        ..Default::default()
    };
    let r = run_sweep(&cfg).map_err(|e| e.to_string())?;
    let secs = start.elapsed();
    Ok((
        (r.fit.slope - 0.5).abs() <= 0.03 && r.limit_relative_error <= 0.03 && secs < Duration::from_secs(600),
        format!(
            "slope {:.4} (95% CI {:.4}..{:.4}; tol 0.50 +- 0.03), D/s^2 vs (mu_2-mu_1)/2 rel err {:.2e} (tol 3e-2), {secs:.2?}",
            r.fit.slope, r.fit.ci95.0, r.fit.ci95.1, r.limit_relative_error
        ),
    ))
}

fn stability_battery() -> Outcome {
    let cfg = ExperimentConfig {
        samples: 100,
        voxel_samples: 20,
        seed: 5,
        ..Default::default()
    };
    let a = run_battery(&cfg).map_err(|e| e.to_string())?;
    let b = run_battery(&cfg).map_err(|e| e.to_string())?;
    let bytes = |r| Envelope::new("stability-battery", &cfg, r).and_then(|e| e.to_json());
    let same = bytes(a.clone()).map_err(|e| e.to_string())? == bytes(b).map_err(|e| e.to_string())?;
    Ok((
        a.violations == 0 && a.max_ratio.is_finite() && a.max_ratio > 0.0 && same,
        format!(
            "{} graph + {} voxel sets, {} violations, max delta/sqrt(D) {:.4}, {} ratios skipped, identical rerun: {same}",
            a.graph_sets, a.voxel_sets, a.violations, a.max_ratio, a.skipped
        ),
    ))
}

fn reduction() -> Outcome {
    let cfg = ExperimentConfig {
        grid: 24,
        ..Default::default()
    };
    let grid = Arc::new(SphereGrid::for_dim(3, 32).map_err(|e| e.to_string())?);
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut failed = Vec::new();
    let (mut worst_deficit, mut worst_asym, mut worst_res): (f64, f64, f64) = (f64::INFINITY, f64::INFINITY, 0.0);
    for i in 0..10 {
        let v = admissible_voxel_input(&mut rng, &grid, 1.0 / 40.0, 0.03, 0.05, i % 2 == 1).map_err(|e| e.to_string())?;
        let r = reduce_set(&v, &cfg).map_err(|e| format!("input {i}: {e}"))?;
        let get = |name: &str| r.check(name).ok_or(format!("input {i}: no check {name}"));
        worst_deficit = worst_deficit.min(get("final_deficit")?.margin());
        worst_asym = worst_asym.min(get("final_asymmetry")?.margin());
        worst_res = worst_res.max(get("barycenter")?.lhs);
        for k in r.checks.iter().filter(|k| !k.passed) {
            failed.push(format!("{i}:{}", k.name));
        }
    }
    Ok((
        failed.is_empty() && worst_res <= 1e-4,
        format!(
            "10 inputs; worst slack D(E~) <= 2D(E)+tol {worst_deficit:.2e}, |E~ Δ B| >= delta/6-tol {worst_asym:.2e}, max barycenter residual {worst_res:.1e}; failed checks: {}",
            if failed.is_empty() { "none".to_string() } else { failed.join(", ") }
        ),
    ))
}

fn certification() -> Outcome {
    let cfg = ExperimentConfig {
        samples: 50,
        test_functions: 20,
        seed: 11,
        ..Default::default()
    };
    let r = run_verify(&cfg).map_err(|e| e.to_string())?;
    let names = ["pushforward", "tau1", "ball_capture", "transport_estimate"];
    let mut ok = true;
    let mut parts = Vec::new();
    for name in names {
        let c = r.check(name).ok_or(format!("no check {name}"))?;
        let want = if name == "pushforward" { 20 } else { 50 };
        ok &= c.passed && c.instances == want;
        parts.push(format!("{name} {}/{} worst margin {:.2e}", c.instances - c.failures, c.instances, c.worst_margin));
    }
    Ok((
        ok,
        format!("{} (pushforward tol {PUSHFORWARD_TOLERANCE})", parts.join("; ")),
    ))
}

fn voxel_convergence() -> Outcome {
    let p = params(3, 2.0)?;
    let mut errs = Vec::new();
    for h in [32.0, 48.0, 64.0] {
        let b = VoxelSet::volume_matched_ball(3, ORIGIN, 1.0, 1.0 / h).map_err(|e| e.to_string())?;
        let e = energy_voxel(&b, &p, &Default::default()).map_err(|e| e.to_string())?;
        errs.push((e.value - coulomb_ball()).abs());
    }
    Ok((
        errs.windows(2).all(|w| w[1] < w[0]),
        format!(
            "|F(B_h) - 32pi^2/15| = {:.3e}, {:.3e}, {:.3e} at h = 1/32, 1/48, 1/64",
            errs[0], errs[1], errs[2]
        ),
    ))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 8] = [
        ("eigenvalue identity", ball_energy_identity),
        ("parseval cross-check", parseval),
        ("fuglede identity", fuglede_identity),
        ("sharpness of exponent 1/2", sharpness),
        ("stability battery", stability_battery),
        ("reduction pipeline", reduction),
        ("transport and inequality certification", certification),
        ("voxel energy convergence", voxel_convergence),
    ];
    let mut all = true;
    for (i, (name, run)) in criteria.iter().enumerate() {
        let (ok, detail) = run().unwrap_or_else(|e| (false, format!("error: {e}")));
        all &= ok;
        println!("criterion {} [{}] {name}: {detail}", i + 1, if ok { "PASS" } else { "FAIL" });
    }
    if all {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

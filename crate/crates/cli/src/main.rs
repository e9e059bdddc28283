use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use riesz_cli::battery::run_battery;
use riesz_cli::reduce::reduce_file;
use riesz_cli::report::{emit, to_csv};
use riesz_cli::spectral::spectral_table;
use riesz_cli::sweep::run_sweep;
use riesz_cli::verify::run_verify;
use riesz_cli::{exit, Envelope, ExperimentConfig, Overrides, Result};

#[derive(Parser)]
#[command(name = "riesz", version, about = "Riesz energy stability experiments")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// JSON or TOML file mirroring the experiment configuration.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Ambient dimension, 2 or 3.
    #[arg(long, global = true)]
    dim: Option<usize>,
    /// Riesz exponent, in (1, N).
    #[arg(long, global = true)]
    alpha: Option<f64>,
    /// Sphere grid resolution.
    #[arg(long, global = true)]
    grid: Option<usize>,
    /// Largest harmonic degree in the spectral table.
    #[arg(long, global = true)]
    k_max: Option<usize>,
    /// Seed of all random draws.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Random instances per battery or verify check.
    #[arg(long, global = true)]
    samples: Option<usize>,
    /// Reduction scale: mass is moved into the annulus 1 +- eps^2.
    #[arg(long, global = true)]
    eps: Option<f64>,
    /// Output file; standard output when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum Command {
    /// Deficit and asymmetry of `s y_{k,i}` over an amplitude grid, with the
    /// fitted log-log slope. Writes CSV; the summary goes next to it as JSON.
    SharpnessSweep,
    /// Deficits and asymmetries of random sets; JSON report.
    StabilityBattery,
    /// Reduction pipeline on a voxel file; JSON report.
    Reduce {
        /// Voxel set file.
        input: PathBuf,
    },
    /// Eigenvalues `mu_k` with direct seminorm estimates; CSV.
    SpectralTable,
    /// Randomized checks of the energy inequalities; JSON report.
    Verify,
}

fn config(c: &Common) -> Result<ExperimentConfig> {
    let mut cfg = match &c.config {
        Some(path) => ExperimentConfig::load(path)?,
        None => ExperimentConfig::default(),
    };
    cfg.apply(&Overrides {
        dim: c.dim,
        alpha: c.alpha,
        grid: c.grid,
        k_max: c.k_max,
        seed: c.seed,
        samples: c.samples,
        eps: c.eps,
        out: c.out.clone(),
    });
    cfg.validate()?;
    Ok(cfg)
}

fn run(cli: &Cli) -> Result<()> {
    let cfg = config(&cli.common)?;
    let out = cfg.out.as_deref();
    match &cli.command {
        Command::SharpnessSweep => {
            let report = run_sweep(&cfg)?;
            emit(out, &to_csv(&report.rows)?)?;
            let f = report.fit;
            eprintln!(
                "slope {:.4} (95% CI {:.4} .. {:.4}, {} points); D/s^2 limit {:.6}, relative error {:.2e}",
                f.slope, f.ci95.0, f.ci95.1, f.points, report.predictor_limit, report.limit_relative_error
            );
            if let Some(path) = out {
                emit(Some(&path.with_extension("json")), &Envelope::new("sharpness-sweep", &cfg, report)?.to_json()?)?;
            }
        }
        Command::StabilityBattery => {
            let report = run_battery(&cfg)?;
            eprintln!(
                "{} sets, {} Riesz violations, max ratio {:.4}",
                report.rows.len(),
                report.violations,
                report.max_ratio
            );
            emit(out, &Envelope::new("stability-battery", &cfg, report)?.to_json()?)?;
        }
        Command::Reduce { input } => {
            let report = reduce_file(input, &cfg)?;
            if !report.passed {
                let failed: Vec<&str> = report.checks.iter().filter(|k| !k.passed).map(|k| k.name.as_str()).collect();
                eprintln!("warning: failed checks: {}", failed.join(", "));
            }
            emit(out, &Envelope::new("reduce", &cfg, report)?.to_json()?)?;
        }
        Command::SpectralTable => emit(out, &to_csv(&spectral_table(&cfg)?)?)?,
        Command::Verify => {
            let report = run_verify(&cfg)?;
            for c in &report.checks {
                eprintln!(
                    "{:<20} {} ({} instances, worst margin {:.3e})",
                    c.name,
                    if c.passed { "pass" } else { "FAIL" },
                    c.instances,
                    c.worst_margin
                );
            }
            emit(out, &Envelope::new("verify", &cfg, report)?.to_json()?)?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::from(exit::SUCCESS as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}


//! `siqrng`: sweeps and simulations of the SI-QRNG security model.
//!
//! Exit status: 0 on success, 2 for command-line usage errors, 3 for invalid
//! configuration or parameters, 4 for numerical failures (e.g. no single
//! clicks at all), 5 for I/O errors.

mod config;
mod error;
mod output;
mod simulate;

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{Map, Value};
use siqrng_core::figures::{
    AfterpulseSweepConfig, AutocorrConfig, MismatchConfig, MonteCarlo, RateSweepConfig,
    SamplingConfig, Table,
};

use crate::error::CliError;
use crate::output::RunManifest;

#[derive(Debug, Parser)]
#[command(
    name = "siqrng",
    version,
    about = "Security model and simulator for source-independent QRNGs"
)]
struct Cli {
    /// JSON configuration (or a manifest of an earlier run); flags override it.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Master seed of seeded commands.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory for outputs.
    #[arg(long, global = true, default_value = ".")]
    out_dir: PathBuf,
    /// Worker threads (default: all cores).
    #[arg(long, global = true, env = "SIQRNG_THREADS")]
    threads: Option<usize>,
    /// Number of sweep points.
    #[arg(long, global = true)]
    points: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum HminSweep {
    /// Against the afterpulse rate, for no, infinite and finite history.
    Afterpulse,
    /// Against the efficiency ratio of the Z-basis detectors.
    Mismatch,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Autocorrelation of the raw bits against the lag-i afterpulse coefficient.
    Autocorr {
        /// Add simulated columns.
        #[arg(long)]
        monte_carlo: bool,
        /// Pulses per simulated point.
        #[arg(long)]
        pulses: Option<u64>,
    },
    /// Min-entropy sweeps.
    Hmin {
        #[arg(long, value_enum, default_value = "afterpulse")]
        sweep: HminSweep,
    },
    /// Randomness rates against the attenuator loss.
    Rates,
    /// Min-entropy against the photon-number sample size.
    FiniteSampling,
    /// Simulate a pulse train and extract random bits.
    Simulate {
        #[arg(long)]
        pulses: Option<u64>,
    },
}

fn resolved<T: Serialize>(config: &T) -> Value {
    serde_json::to_value(config).expect("configurations serialise")
}

fn sweep(
    name: &str,
    file: &str,
    map: Map<String, Value>,
    axes: &[(&str, &str, &str)],
    nest_security: bool,
    out_dir: &Path,
    run: impl FnOnce(Map<String, Value>) -> Result<(Value, Table), CliError>,
) -> Result<(RunManifest, String), CliError> {
    let map = config::expand_sweep(map, axes, nest_security)?;
    let (config, table) = run(map)?;
    let mut manifest = RunManifest::new(name, None, config);
    let path = out_dir.join(file);
    output::write_table(&path, name, &manifest.hash, &table)?;
    manifest.outputs.push(path.clone());
    Ok((
        manifest,
        format!("{} rows written to {}", table.rows.len(), path.display()),
    ))
}

fn execute(cli: &Cli) -> Result<(RunManifest, String), CliError> {
    let mut map = config::load(cli.config.as_deref())?;
    if let Some(points) = cli.points {
        config::set(&mut map, "points", points);
    }
    let out = &cli.out_dir;
    match &cli.command {
        Command::Autocorr {
            monte_carlo,
            pulses,
        } => {
            let mut cfg: AutocorrConfig = config::resolve(config::expand_sweep(map, &[], false)?)?;
            if *monte_carlo || pulses.is_some() || cli.seed.is_some() {
                let mc = cfg.monte_carlo.get_or_insert_with(MonteCarlo::default);
                if let Some(p) = pulses {
                    mc.pulses = *p;
                }
                if let Some(s) = cli.seed {
                    mc.seed = s;
                }
            }
            let table = cfg.run()?;
            let seed = cfg.monte_carlo.map(|m| m.seed);
            let mut manifest = RunManifest::new("autocorr", seed, resolved(&cfg));
            let path = out.join("autocorr.csv");
            output::write_table(&path, "autocorr", &manifest.hash, &table)?;
            manifest.outputs.push(path.clone());
            Ok((
                manifest,
                format!("{} rows written to {}", table.rows.len(), path.display()),
            ))
        }
        Command::Hmin {
            sweep: HminSweep::Afterpulse,
        } => sweep("hmin", "hmin_afterpulse.csv", map, &[], false, out, |m| {
            let cfg: AfterpulseSweepConfig = config::resolve(m)?;
            Ok((resolved(&cfg), cfg.run()?))
        }),
        Command::Hmin {
            sweep: HminSweep::Mismatch,
        } => sweep(
            "hmin",
            "hmin_mismatch.csv",
            map,
            &[("ratio", "ratio_from", "ratio_to")],
            false,
            out,
            |m| {
                let cfg: MismatchConfig = config::resolve(m)?;
                Ok((resolved(&cfg), cfg.run()?))
            },
        ),
        Command::Rates => sweep(
            "rates",
            "rates.csv",
            map,
            &[("voa_loss_db", "loss_from_db", "loss_to_db")],
            true,
            out,
            |m| {
                let cfg: RateSweepConfig = config::resolve(m)?;
                Ok((resolved(&cfg), cfg.run()?))
            },
        ),
        Command::FiniteSampling => sweep(
            "finite-sampling",
            "finite_sampling.csv",
            map,
            &[("samples", "samples_from", "samples_to")],
            false,
            out,
            |m| {
                let cfg: SamplingConfig = config::resolve(m)?;
                Ok((resolved(&cfg), cfg.run()?))
            },
        ),
        Command::Simulate { pulses } => {
            map.remove("points");
            if let Some(p) = pulses {
                config::set(&mut map, "pulses", *p);
            }
            if let Some(s) = cli.seed {
                config::set(&mut map, "seed", s);
            }
            let cfg: simulate::SimulateConfig = config::resolve(map)?;
            let mut manifest = RunManifest::new("simulate", Some(cfg.seed), resolved(&cfg));
            let message = simulate::run(&cfg, out, &mut manifest)?;
            Ok((manifest, message))
        }
    }
}

fn run(cli: &Cli) -> Result<String, CliError> {
    let start = Instant::now();
    let (mut manifest, message) = execute(cli)?;
    manifest.duration_seconds = start.elapsed().as_secs_f64();
    let path = cli.out_dir.join("manifest.json");
    output::write_json(&path, &manifest)?;
    Ok(format!(
        "{message}; manifest {} ({})",
        path.display(),
        manifest.hash
    ))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(threads) = cli.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build_global()
        {
            eprintln!("error: cannot start {threads} worker threads: {e}");
            return ExitCode::from(3);
        }
    }
    match run(&cli) {
        Ok(message) => {
            println!("{message}");
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

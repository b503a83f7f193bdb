//! Command-line front end: `simulate`, `sweep` and `validate-waveform`.

pub mod config;
pub mod output;

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::montecarlo::{realization_rng, run_experiment, to_db, MseCurve};
use crate::waveform::{compute_cpe_term, wiener_phase};
use config::{SimFile, WaveformFile};
use output::{format_real, CsvBuilder};

pub const TOOL_VERSION: &str = concat!(env!("CARGO_PKG_NAME"), " ", env!("CARGO_PKG_VERSION"));

pub const SIMULATE_CSV: &str = "mse_vs_copy.csv";
pub const SWEEP_CSV: &str = "mse_vs_snr.csv";
pub const CPE_CSV: &str = "cpe.csv";
pub const CPE_SUMMARY_CSV: &str = "cpe_summary.csv";
pub const MANIFEST: &str = "manifest.toml";

#[derive(Debug, Error)]
pub enum CliError {
    #[error("{}: {message}", path.display())]
    Config { path: PathBuf, message: String },

    #[error("{}: {source}", path.display())]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },

    #[error("{0}")]
    Usage(String),

    #[error(transparent)]
    Simulation(#[from] crate::Error),
}

#[derive(Debug, Parser)]
#[command(
    name = "seqmmse",
    version,
    about = "Sequential MMSE channel estimation under random phase noise"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// MSE versus repetition copy for every estimator and SNR.
    Simulate(CommonArgs),
    /// MSE versus SNR at a fixed repetition copy.
    Sweep {
        #[command(flatten)]
        common: CommonArgs,
        /// 1-based copy index to report; defaults to the last copy.
        #[arg(long = "copy-index")]
        copy_index: Option<usize>,
    },
    /// Common-phase-error statistics of the OFDM waveform model.
    ValidateWaveform(CommonArgs),
}

#[derive(Debug, Clone, Args)]
pub struct CommonArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    /// Overrides the seed in the config file.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Worker threads; results do not depend on it.
    #[arg(long)]
    pub threads: Option<usize>,
}

/// Record of one invocation, written next to the results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest<C> {
    pub tool_version: String,
    pub command: String,
    pub config_path: PathBuf,
    pub output_dir: PathBuf,
    pub config: C,
}

pub fn run(cli: Cli) -> Result<Vec<PathBuf>, CliError> {
    match cli.command {
        Command::Simulate(args) => with_threads(args.threads, || cmd_simulate(&args)),
        Command::Sweep { common, copy_index } => {
            with_threads(common.threads, || cmd_sweep(&common, copy_index))
        }
        Command::ValidateWaveform(args) => {
            with_threads(args.threads, || cmd_validate_waveform(&args))
        }
    }
}

fn with_threads<T: Send>(
    threads: Option<usize>,
    f: impl FnOnce() -> Result<T, CliError> + Send,
) -> Result<T, CliError> {
    match threads {
        None => f(),
        Some(0) => Err(CliError::Usage("--threads must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Usage(e.to_string()))?
            .install(f),
    }
}

fn read(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn write(path: &Path, text: &str) -> Result<(), CliError> {
    fs::write(path, text).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

fn prepare_out(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|source| CliError::Io {
        path: dir.to_path_buf(),
        source,
    })
}

fn config_error(path: &Path, message: impl ToString) -> CliError {
    CliError::Config {
        path: path.to_path_buf(),
        message: message.to_string(),
    }
}

fn load_sim(args: &CommonArgs) -> Result<SimFile, CliError> {
    let mut file =
        SimFile::parse(&read(&args.config)?).map_err(|e| config_error(&args.config, e))?;
    if let Some(seed) = args.seed {
        file.seed = seed;
    }
    Ok(file)
}

fn write_manifest<C: Serialize>(
    args: &CommonArgs,
    command: &str,
    config: C,
) -> Result<PathBuf, CliError> {
    let manifest = RunManifest {
        tool_version: TOOL_VERSION.to_string(),
        command: command.to_string(),
        config_path: args.config.clone(),
        output_dir: args.out.clone(),
        config,
    };
    let path = args.out.join(MANIFEST);
    write(
        &path,
        &toml::to_string(&manifest).expect("manifest serializes"),
    )?;
    Ok(path)
}

pub fn simulate_csv(curve: &MseCurve) -> Result<String, CliError> {
    let mut csv = CsvBuilder::new(&["estimator", "snr_db", "copy_index", "mse", "mse_db"]);
    for s in &curve.series {
        for (i, mse) in s.mse.iter().enumerate() {
            csv.row(&[
                s.estimator.to_string(),
                format_real(s.snr_db)?,
                (i + 1).to_string(),
                format_real(*mse)?,
                format_real(to_db(*mse))?,
            ]);
        }
    }
    Ok(csv.finish())
}

pub fn cmd_simulate(args: &CommonArgs) -> Result<Vec<PathBuf>, CliError> {
    let file = load_sim(args)?;
    let r0 = match file.r0_init.as_slice() {
        [one] => *one,
        _ => {
            return Err(config_error(
                &args.config,
                "r0_init: simulate takes exactly one initialization",
            ))
        }
    };
    let cfg = file
        .sim_config(r0)
        .map_err(|e| config_error(&args.config, e))?;
    let curve = run_experiment(&cfg)?;
    prepare_out(&args.out)?;
    let csv_path = args.out.join(SIMULATE_CSV);
    write(&csv_path, &simulate_csv(&curve)?)?;
    let manifest = write_manifest(args, "simulate", &file)?;
    Ok(vec![csv_path, manifest])
}

pub fn cmd_sweep(args: &CommonArgs, copy_index: Option<usize>) -> Result<Vec<PathBuf>, CliError> {
    let file = load_sim(args)?;
    let m = copy_index.unwrap_or(file.num_copies);
    if m == 0 || m > file.num_copies {
        return Err(config_error(
            &args.config,
            format!(
                "copy-index {m} must be within 1..={} (num_copies)",
                file.num_copies
            ),
        ));
    }
    if file.r0_init.is_empty() {
        return Err(config_error(
            &args.config,
            "r0_init: need at least one initialization",
        ));
    }
    let mut curves = Vec::new();
    for &r0 in &file.r0_init {
        let cfg = file
            .sim_config(r0)
            .map_err(|e| config_error(&args.config, e))?;
        curves.push((r0, run_experiment(&cfg)?));
    }
    let mut csv = CsvBuilder::new(&["estimator", "r0_init", "snr_db", "mse_db"]);
    for &estimator in &file.estimators {
        for (r0, curve) in &curves {
            for &snr in &file.snr_db {
                let mse = curve.get(estimator, snr).expect("series present")[m - 1];
                csv.row(&[
                    estimator.to_string(),
                    r0.to_string(),
                    format_real(snr)?,
                    format_real(to_db(mse))?,
                ]);
            }
        }
    }
    prepare_out(&args.out)?;
    let csv_path = args.out.join(SWEEP_CSV);
    write(&csv_path, &csv.finish())?;
    let manifest = write_manifest(args, "sweep", &file)?;
    Ok(vec![csv_path, manifest])
}

/// Mean and 1st percentile (nearest rank) of the CPE moduli.
pub fn cpe_summary(moduli: &[f64]) -> (f64, f64) {
    let mean = moduli.iter().sum::<f64>() / moduli.len() as f64;
    let mut sorted = moduli.to_vec();
    sorted.sort_by(f64::total_cmp);
    let rank = ((0.01 * sorted.len() as f64).ceil() as usize).max(1);
    (mean, sorted[rank - 1])
}

pub fn cmd_validate_waveform(args: &CommonArgs) -> Result<Vec<PathBuf>, CliError> {
    let mut file =
        WaveformFile::parse(&read(&args.config)?).map_err(|e| config_error(&args.config, e))?;
    if let Some(seed) = args.seed {
        file.seed = seed;
    }
    let cfg = file
        .waveform_config()
        .map_err(|e| config_error(&args.config, e))?;
    let terms = (0..file.trials as u64)
        .into_par_iter()
        .map(|trial| {
            let mut rng = realization_rng(file.seed, trial);
            let phase = wiener_phase(
                cfg.fft_size,
                cfg.initial_phase,
                cfg.phase_noise_std,
                &mut rng,
            );
            compute_cpe_term(&phase, cfg.residual_fo, cfg.fft_size)
        })
        .collect::<crate::Result<Vec<_>>>()?;

    let mut csv = CsvBuilder::new(&["trial", "cpe_modulus", "cpe_phase"]);
    for (i, z) in terms.iter().enumerate() {
        csv.row(&[i.to_string(), format_real(z.norm())?, format_real(z.arg())?]);
    }
    let moduli: Vec<f64> = terms.iter().map(|z| z.norm()).collect();
    let (mean, p01) = cpe_summary(&moduli);
    let mut summary = CsvBuilder::new(&["trials", "mean_modulus", "p01_modulus"]);
    summary.row(&[
        terms.len().to_string(),
        format_real(mean)?,
        format_real(p01)?,
    ]);

    prepare_out(&args.out)?;
    let csv_path = args.out.join(CPE_CSV);
    write(&csv_path, &csv.finish())?;
    let summary_path = args.out.join(CPE_SUMMARY_CSV);
    write(&summary_path, &summary.finish())?;
    println!(
        "trials={} mean_modulus={} p01_modulus={}",
        terms.len(),
        format_real(mean)?,
        format_real(p01)?
    );
    let manifest = write_manifest(args, "validate-waveform", &file)?;
    Ok(vec![csv_path, summary_path, manifest])
}

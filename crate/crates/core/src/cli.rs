//! Command-line front end. Every command reads an optional JSON config,
//! writes its artifacts into `--out` and reports errors as one line of JSON on
//! stderr with a nonzero exit status.

use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::bulk_support::{all_supports, write_separability_csv};
use crate::error::{Error, Result};
use crate::montecarlo::{
    ber_sweep, spectrum_experiment, write_ber_csv, write_json_header, write_spectrum_csv,
    ExperimentConfig, SpectrumConfig,
};
use crate::system_model::{coherence_symbols, derive_params, RadioParams, SystemConfig};

#[derive(Debug, Parser)]
#[command(
    name = "pilot-decontam",
    version,
    about = "Pilot decontamination analysis and simulation"
)]
pub struct Cli {
    #[command(flatten)]
    pub common: Common,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Common {
    /// JSON configuration file.
    #[arg(long, global = true)]
    pub config: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long, global = true, default_value = "out")]
    pub out: PathBuf,
    /// Overrides the seed of the configuration.
    #[arg(long, global = true)]
    pub seed: Option<u64>,
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Points of the density grid.
    #[arg(long, global = true)]
    pub grid_points: Option<usize>,
    /// Imaginary offset of the Stieltjes inversion.
    #[arg(long, global = true)]
    pub y_offset: Option<f64>,
}

#[derive(Debug, Clone, Subcommand)]
pub enum Command {
    /// Coherence time in symbols.
    Coherence {
        #[arg(long)]
        carrier_ghz: Option<f64>,
        #[arg(long)]
        delay_spread_us: Option<f64>,
        #[arg(long)]
        speed_kmh: Option<f64>,
    },
    /// Empirical spectrum against the asymptotic density.
    Spectrum,
    /// Support intervals of the signal and interference bulks by every method.
    Support,
    /// Separability boundary (I/P, max α/κ) per number of neighbors.
    Separability {
        /// Comma-separated numbers of neighboring cells.
        #[arg(long = "L", value_delimiter = ',', default_value = "2")]
        neighbors: Vec<usize>,
        #[arg(long, default_value_t = 201)]
        points: usize,
    },
    /// BER sweep of the SVD and conventional receivers.
    Ber,
}

/// Radio parameters of the `coherence` command in practical units.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CoherenceConfig {
    pub carrier_ghz: f64,
    pub delay_spread_us: f64,
    pub speed_kmh: f64,
}

fn read_config<T: DeserializeOwned>(path: Option<&Path>) -> Result<T> {
    let path = path.ok_or_else(|| Error::Config("this command needs --config".into()))?;
    let text = fs::read_to_string(path)?;
    Ok(serde_json::from_str(&text)?)
}

fn create(dir: &Path, name: &str) -> Result<BufWriter<File>> {
    fs::create_dir_all(dir)?;
    Ok(BufWriter::new(File::create(dir.join(name))?))
}

/// What a successful command produced.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Outcome {
    pub files: Vec<PathBuf>,
    /// Printed on stdout.
    pub stdout: String,
}

pub fn run(cli: &Cli) -> Result<Outcome> {
    let c = &cli.common;
    if let Some(n) = c.threads {
        // A pool that is already set up (e.g. a second call in one process)
        // keeps its size.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global();
    }
    let config = c.config.as_deref();
    let mut files = Vec::new();
    let mut stdout = String::new();
    match &cli.command {
        Command::Coherence {
            carrier_ghz,
            delay_spread_us,
            speed_kmh,
        } => {
            let file: Option<CoherenceConfig> = config.map(|p| read_config(Some(p))).transpose()?;
            let pick = |flag: Option<f64>, from: fn(&CoherenceConfig) -> f64, name: &str| {
                flag.or(file.as_ref().map(from))
                    .ok_or_else(|| Error::Config(format!("missing --{name}")))
            };
            let cc = CoherenceConfig {
                carrier_ghz: pick(*carrier_ghz, |f| f.carrier_ghz, "carrier-ghz")?,
                delay_spread_us: pick(*delay_spread_us, |f| f.delay_spread_us, "delay-spread-us")?,
                speed_kmh: pick(*speed_kmh, |f| f.speed_kmh, "speed-kmh")?,
            };
            let radio =
                RadioParams::from_practical_units(cc.carrier_ghz, cc.delay_spread_us, cc.speed_kmh);
            let symbols = coherence_symbols(&radio)?;
            stdout = format!("{symbols:.2}\n");
            let mut w = create(&c.out, "coherence.json")?;
            serde_json::to_writer_pretty(
                &mut w,
                &serde_json::json!({ "config": cc, "coherence_symbols": symbols }),
            )?;
            w.flush()?;
            files.push(c.out.join("coherence.json"));
        }
        Command::Spectrum => {
            let mut cfg: SpectrumConfig = read_config(config)?;
            if let Some(n) = c.grid_points {
                cfg.grid_points = n;
            }
            if c.y_offset.is_some() {
                cfg.y_offset = c.y_offset;
            }
            let seed = c.seed.unwrap_or(cfg.system.seed);
            cfg.system.seed = seed;
            let report = spectrum_experiment(&cfg, seed)?;
            write_spectrum_csv(create(&c.out, "spectrum.csv")?, &cfg, &report)?;
            let meta = vec![
                ("config".to_string(), serde_json::to_string(&cfg)?),
                ("seed".to_string(), seed.to_string()),
            ];
            report
                .density
                .write_csv(create(&c.out, "density.csv")?, &meta)?;
            let mut w = create(&c.out, "spectrum.json")?;
            serde_json::to_writer_pretty(
                &mut w,
                &serde_json::json!({
                    "config": cfg,
                    "seed": seed,
                    "ks_distance": report.ks_distance,
                    "gap_mass": report.gap_mass,
                    "bulks": report.bulks,
                    "containment": report.containment,
                    "supports": report.supports,
                }),
            )?;
            w.flush()?;
            for name in ["spectrum.csv", "density.csv", "spectrum.json"] {
                files.push(c.out.join(name));
            }
            stdout = format!("ks_distance {:.4}\n", report.ks_distance);
        }
        Command::Support => {
            let mut cfg: SystemConfig = read_config(config)?;
            if let Some(s) = c.seed {
                cfg.seed = s;
            }
            let sys = cfg.resolve()?;
            let report = all_supports(&sys)?;
            let mut w = create(&c.out, "support.json")?;
            serde_json::to_writer_pretty(
                &mut w,
                &serde_json::json!({
                    "config": cfg,
                    "seed": cfg.seed,
                    "system": sys,
                    "params": derive_params(&sys)?,
                    "report": report,
                }),
            )?;
            w.flush()?;
            files.push(c.out.join("support.json"));
        }
        Command::Separability { neighbors, points } => {
            if neighbors.is_empty() || *points < 2 {
                return Err(Error::Config("need at least one L and two points".into()));
            }
            let mut w = create(&c.out, "separability.csv")?;
            write_json_header(
                &mut w,
                &serde_json::json!({ "L": neighbors, "points": points }),
            )?;
            write_separability_csv(&mut w, neighbors, *points)?;
            w.flush()?;
            files.push(c.out.join("separability.csv"));
        }
        Command::Ber => {
            let cfg: ExperimentConfig = read_config(config)?;
            let seed = c.seed.unwrap_or(cfg.system.seed);
            let points = ber_sweep(&cfg, seed)?;
            let mut w = create(&c.out, "ber.csv")?;
            write_ber_csv(&mut w, &cfg, seed, &points)?;
            w.flush()?;
            files.push(c.out.join("ber.csv"));
        }
    }
    Ok(Outcome { files, stdout })
}

/// Error report written to stderr.
pub fn error_json(e: &Error) -> String {
    serde_json::json!({ "error": e.kind(), "message": e.to_string() }).to_string()
}

/// Parses the process arguments, runs, and returns the exit status.
pub fn main() -> i32 {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(outcome) => {
            print!("{}", outcome.stdout);
            0
        }
        Err(e) => {
            eprintln!("{}", error_json(&e));
            1
        }
    }
}

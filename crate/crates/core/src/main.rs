use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{bail, Context};
use clap::{Parser, Subcommand};
use serde::Serialize;

use tabtriplet::dataio::{encode, load_csv};
use tabtriplet::netcore::EncoderParams;
use tabtriplet::pipeline::{
    compare, export_visualization, run_experiment, run_gradcheck_suite, train_representation, CompareConfig,
    ExperimentConfig, VERSION,
};
use tabtriplet::rng;

#[derive(Parser)]
#[command(name = "tabtriplet", version, about = "Representation learning for imbalanced tabular classification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Cross-validate one experiment configuration.
    Run {
        config: PathBuf,
        /// Write the JSON report here and print a summary table; without it
        /// the JSON goes to stdout.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Cross-validate several arms on shared folds.
    Compare {
        config: PathBuf,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Export 2-D PCA views of the data and of a learned embedding.
    Viz {
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        /// Use this saved encoder instead of training one.
        #[arg(long)]
        encoder: Option<PathBuf>,
    },
    /// Compare analytic gradients of every objective with finite differences.
    Gradcheck {
        #[arg(long, default_value_t = 5)]
        seeds: u64,
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn emit(json: &str, table: &str, out: Option<&Path>) -> anyhow::Result<()> {
    match out {
        Some(path) => {
            std::fs::write(path, json).with_context(|| format!("writing {}", path.display()))?;
            print!("{table}");
        }
        None => print!("{json}"),
    }
    Ok(())
}

#[derive(Serialize)]
struct VizReport {
    version: &'static str,
    config: ExperimentConfig,
    /// "trained", "loaded" or "none".
    encoder: &'static str,
    rows: usize,
    files: Vec<String>,
}

fn viz(config: &Path, out: &Path, encoder_path: Option<&Path>) -> anyhow::Result<()> {
    let cfg = ExperimentConfig::load(config)?;
    let raw = load_csv(&cfg.dataset.path, &cfg.dataset.schema())?;
    let data = encode(&raw)?;
    let (encoder, source) = match encoder_path {
        Some(p) => (Some(EncoderParams::load(p)?), "loaded"),
        None => {
            let seed = rng::derive_seed(cfg.cv.seed, &[cfg.repeats[0]]);
            match train_representation(&data, &cfg, seed)? {
                Some(e) => (Some(e), "trained"),
                None => (None, "none"),
            }
        }
    };
    let mut result = export_visualization(&data, encoder.as_ref(), out)?;
    if let (Some(e), "trained") = (&encoder, source) {
        e.save(out.join("encoder.json"))?;
        result.files.push("encoder.json".into());
    }
    let report = VizReport {
        version: VERSION,
        config: cfg,
        encoder: source,
        rows: result.rows,
        files: result.files,
    };
    let path = out.join("viz.json");
    std::fs::write(&path, serde_json::to_string_pretty(&report)? + "\n")
        .with_context(|| format!("writing {}", path.display()))?;
    for f in &report.files {
        println!("{}", out.join(f).display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Run { config, out } => (|| {
            let report = run_experiment(&ExperimentConfig::load(&config)?)?;
            emit(&report.to_json()?, &report.to_table(), out.as_deref())
        })(),
        Command::Compare { config, out } => (|| {
            let cmp = compare(&CompareConfig::load(&config)?)?;
            emit(&cmp.to_json()?, &cmp.to_table(), out.as_deref())
        })(),
        Command::Viz { config, out, encoder } => viz(&config, &out, encoder.as_deref()),
        Command::Gradcheck { seeds, out } => (|| {
            if seeds == 0 {
                bail!("--seeds must be positive");
            }
            let suite = run_gradcheck_suite(seeds)?;
            if let Some(path) = &out {
                std::fs::write(path, suite.to_json()?).with_context(|| format!("writing {}", path.display()))?;
            }
            print!("{}", suite.to_table());
            if !suite.passed() {
                bail!("gradient check failed");
            }
            Ok(())
        })(),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}

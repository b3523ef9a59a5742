use std::io::{self, BufWriter};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Context;
use bus_curate::pipeline::{self, PipelineConfig, RunOptions, RunSummary};
use bus_curate::synthgen::{export_corpus, Mix};
use bus_curate::textkx::{serve, FontBackend};
use bus_curate::Error;
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "bus-curate", version, about = "Curate breast-ultrasound still images")]
struct Cli {
    #[command(subcommand)]
    cmd: Cmd,
}

#[derive(Subcommand)]
enum Cmd {
    /// Run the pipeline over a set of images and write a JSONL manifest.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Glob pattern; repeatable. Replaces `pipeline.inputs` from the config.
        #[arg(long = "input")]
        inputs: Vec<String>,
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        workers: Option<usize>,
        #[arg(long)]
        emit_crops: Option<PathBuf>,
    },
    /// Score a manifest against a ground-truth manifest.
    Score {
        #[arg(long)]
        manifest: PathBuf,
        #[arg(long)]
        truth: PathBuf,
    },
    /// Write a synthetic corpus: PNGs plus truth.jsonl.
    Gen {
        #[arg(long)]
        seed: u64,
        #[arg(long)]
        n: usize,
        #[arg(long)]
        out: PathBuf,
        /// Every scene carries calipers.
        #[arg(long)]
        all_calipers: bool,
    },
    /// Serve the built-in font reader over the line protocol (stdin/stdout).
    OcrServe,
    /// Print the default configuration.
    Defaults,
}

/// Exit status: 0 success, 1 fatal (config or I/O), 2 finished with decode errors.
fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    match dispatch(Cli::parse().cmd) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

fn dispatch(cmd: Cmd) -> anyhow::Result<ExitCode> {
    match cmd {
        Cmd::Run {
            config,
            inputs,
            manifest,
            workers,
            emit_crops,
        } => {
            let mut cfg = PipelineConfig::load(&config)?;
            if let Some(w) = workers {
                cfg.pipeline.workers = w;
            }
            cfg.validate()?;
            let patterns = if inputs.is_empty() {
                cfg.pipeline.inputs.clone()
            } else {
                inputs
            };
            if patterns.is_empty() {
                return Err(Error::Config("no inputs given".into()).into());
            }
            let inputs = pipeline::expand_inputs(&patterns)?;
            if inputs.is_empty() {
                log::warn!("input patterns matched no files");
            }
            let summary = pipeline::run(
                &cfg,
                &RunOptions {
                    inputs,
                    manifest,
                    emit_crops,
                },
            )?;
            print_summary(&summary)?;
            Ok(if summary.decode_errors > 0 {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            })
        }
        Cmd::Score { manifest, truth } => {
            let m = pipeline::read_manifest(&manifest)
                .with_context(|| format!("reading {}", manifest.display()))?;
            let t = pipeline::read_manifest(&truth)
                .with_context(|| format!("reading {}", truth.display()))?;
            print_summary(&pipeline::score(&m, &t))?;
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Gen {
            seed,
            n,
            out,
            all_calipers,
        } => {
            let mix = if all_calipers {
                Mix::all_calipers()
            } else {
                Mix::default()
            };
            let written = export_corpus(seed, n, &mix, &out)?;
            log::info!("wrote {written} images to {}", out.display());
            Ok(ExitCode::SUCCESS)
        }
        Cmd::OcrServe => {
            let stdin = io::stdin();
            serve(&mut FontBackend::default(), stdin.lock(), BufWriter::new(io::stdout()))?;
            Ok(ExitCode::SUCCESS)
        }
        Cmd::Defaults => {
            print!("{}", PipelineConfig::default().to_toml());
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn print_summary(s: &RunSummary) -> anyhow::Result<()> {
    serde_json::to_writer_pretty(io::stdout().lock(), s)?;
    println!();
    Ok(())
}

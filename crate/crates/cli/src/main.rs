// NaN must fail range checks, hence !(x > 0.0) style comparisons.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::Parser;
use halfline::Error;

mod commands;
mod config;
mod manifest;

use config::{Command, ExperimentConfig, SCHEMA_VERSION};
use manifest::{Checks, RunManifest};

/// Batch front end for the half-line flux-boundary laboratory.
#[derive(Debug, Parser)]
#[command(name = "halfline", version)]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    /// JSON experiment configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output_dir` in the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads for sweeps (default: available parallelism).
    #[arg(long)]
    workers: Option<usize>,
    /// Treat soft checks as hard.
    #[arg(long)]
    strict: bool,
}

const EXIT_INVARIANT: u8 = 1;
const EXIT_VALIDATION: u8 = 2;

fn load(path: &Path, command: Command) -> Result<ExperimentConfig, String> {
    let text = std::fs::read_to_string(path).map_err(|e| format!("cannot read {}: {e}", path.display()))?;
    let cfg = ExperimentConfig::parse(&text)?;
    cfg.validate(command)?;
    Ok(cfg)
}

fn write_outputs(dir: &Path, files: &[(String, String)]) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    for (name, body) in files {
        std::fs::write(dir.join(name), body)?;
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let cfg = match load(&cli.config, cli.command) {
        Ok(c) => c,
        Err(msg) => {
            eprintln!("error: {msg}");
            return ExitCode::from(EXIT_VALIDATION);
        }
    };
    let workers = cli.workers.unwrap_or_else(|| std::thread::available_parallelism().map(|n| n.get()).unwrap_or(1));
    if workers == 0 {
        eprintln!("error: --workers must be at least 1");
        return ExitCode::from(EXIT_VALIDATION);
    }
    let out = cli.out.clone().or_else(|| cfg.output_dir.clone()).unwrap_or_else(|| PathBuf::from("out"));

    let started = Instant::now();
    let mut checks = Checks::new(cli.strict);
    let result = commands::run(cli.command, &cfg, workers, &mut checks);
    let wall = started.elapsed().as_secs_f64();

    let (mut files, metadata, status, message) = match result {
        Ok(o) => {
            let status = if checks.failed_hard() { "invariant-failure" } else { "ok" };
            (o.artifacts, o.metadata, status, None)
        }
        Err(Error::Input(msg)) => {
            eprintln!("error: {msg}");
            return ExitCode::from(EXIT_VALIDATION);
        }
        Err(e) => (Vec::new(), serde_json::Value::Null, "error", Some(e.to_string())),
    };
    let failed = status != "ok";
    let outputs: Vec<String> = files.iter().map(|(n, _)| n.clone()).collect();
    let manifest = RunManifest {
        schema_version: SCHEMA_VERSION,
        command: cli.command.name().into(),
        software_version: env!("CARGO_PKG_VERSION").into(),
        config: serde_json::to_value(&cfg).expect("config serializes"),
        metadata,
        wall_time_s: wall,
        status: status.into(),
        message: message.clone(),
        checks: checks.into_vec(),
        outputs,
    };
    files.push(("manifest.json".into(), serde_json::to_string_pretty(&manifest).expect("manifest serializes") + "\n"));
    if let Err(e) = write_outputs(&out, &files) {
        eprintln!("error: cannot write to {}: {e}", out.display());
        return ExitCode::from(EXIT_INVARIANT);
    }
    for c in manifest.checks.iter().filter(|c| !c.passed) {
        eprintln!("{} {}: {}", if c.hard { "FAILED" } else { "soft-fail" }, c.name, c.detail);
    }
    if let Some(m) = message {
        eprintln!("error: {m}");
    }
    if failed {
        ExitCode::from(EXIT_INVARIANT)
    } else {
        ExitCode::SUCCESS
    }
}

//! `zmt`: toy fixtures, gradient and gauge diagnostics, and Z2 evolution
//! benchmarks of zero-mode truncation against SVD truncation.
//!
//! Exit codes: 0 success, 1 numerical failure, 2 usage error.

mod config;
mod run;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::Parser;
use serde::Serialize;
use serde_json::Value;

use config::{resolve, Command, Knobs, RunConfig, UsageError, OUT_DIR_ENV};
use run::RunOutput;

#[derive(Parser, Debug)]
#[command(name = "zmt", version, about = "Zero-mode truncation experiments")]
struct Cli {
    #[arg(value_enum)]
    command: Command,
    #[command(flatten)]
    knobs: Knobs,
}

#[derive(Serialize)]
struct Versions {
    zmt_cli: &'static str,
    zmt_core: &'static str,
}

#[derive(Serialize)]
struct Sidecar<'a> {
    config: &'a RunConfig,
    seed: u64,
    versions: Versions,
    status: &'static str,
    failed_step: Option<usize>,
    error: Option<&'a str>,
    outputs: &'a [PathBuf],
    summary: &'a Value,
    timestamp_unix: u64,
}

fn write_sidecar(cfg: &RunConfig, out: &RunOutput) -> anyhow::Result<()> {
    let sidecar = Sidecar {
        config: cfg,
        seed: cfg.seed,
        versions: Versions {
            zmt_cli: env!("CARGO_PKG_VERSION"),
            zmt_core: zmt_core::VERSION,
        },
        status: if out.failure.is_some() {
            "failed"
        } else {
            "ok"
        },
        failed_step: out.failure.as_ref().and_then(|f| f.step),
        error: out.failure.as_ref().map(|f| f.message.as_str()),
        outputs: &out.outputs,
        summary: &out.summary,
        timestamp_unix: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map_or(0, |d| d.as_secs()),
    };
    let path = cfg.sidecar_path();
    let mut file = std::fs::File::create(&path)?;
    serde_json::to_writer_pretty(&mut file, &sidecar)?;
    writeln!(file)?;
    Ok(())
}

fn execute(cfg: &RunConfig) -> anyhow::Result<RunOutput> {
    match cfg.command {
        Command::Toy => run::toy(cfg),
        Command::Evolve => run::evolve(cfg),
        Command::Compare => run::compare(cfg),
        Command::GaugeProbe => run::gauge(cfg),
        Command::GradCheck => run::grad_check(cfg),
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() {
                ExitCode::from(2)
            } else {
                ExitCode::SUCCESS
            };
        }
    };
    let out_dir = std::env::var_os(OUT_DIR_ENV).map(PathBuf::from);
    let (cfg, warnings) = match resolve(cli.command, cli.knobs, out_dir) {
        Ok(r) => r,
        Err(UsageError(msg)) => {
            eprintln!("error: {msg}");
            return ExitCode::from(2);
        }
    };
    for w in &warnings {
        eprintln!("{w}");
    }
    println!(
        "config: {}",
        serde_json::to_string(&cfg).expect("config serializes")
    );

    let output = match execute(&cfg) {
        Ok(o) => o,
        Err(e) => RunOutput {
            summary: Value::Null,
            outputs: vec![],
            failure: Some(run::Failure {
                message: format!("{e:#}"),
                step: None,
            }),
        },
    };
    if let Err(e) = write_sidecar(&cfg, &output) {
        eprintln!(
            "error: writing sidecar {}: {e:#}",
            cfg.sidecar_path().display()
        );
        return ExitCode::from(1);
    }
    match &output.failure {
        None => {
            println!("summary: {}", output.summary);
            ExitCode::SUCCESS
        }
        Some(f) => {
            eprintln!("error: {}", f.message);
            ExitCode::from(1)
        }
    }
}

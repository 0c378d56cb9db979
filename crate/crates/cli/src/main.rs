//! Batch experiment runner for the fraclab toolkit.
//!
//! Verbs: `run <config>`, `list`, `diff <a> <b>`, `init <experiment>`.
//! Machine output goes to files under the run directory; progress goes to
//! standard error. Exit code 0 means zero failed checks (`--strict` promotes
//! inconclusive results to failures).

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use fraclab::experiments::{self, ExperimentConfig, RunReport};

#[derive(Parser)]
#[command(name = "fraclab", version, about = "nonlocal-operator verification runs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Execute an experiment config and write report.json + CSV tables
    Run {
        /// path to a JSON experiment config (see `init`)
        config: PathBuf,
        /// output directory (default: $FRACLAB_OUT or ./runs, plus a
        /// per-run subdirectory)
        #[arg(long)]
        out: Option<PathBuf>,
        /// promote inconclusive checks to failures
        #[arg(long)]
        strict: bool,
        /// worker threads for per-radius evaluation
        #[arg(long)]
        threads: Option<usize>,
        /// override the exponent margin
        #[arg(long)]
        margin: Option<f64>,
    },
    /// Print the experiment catalog with the claim each one verifies
    List,
    /// Field-by-field diff of two report.json files
    Diff { a: PathBuf, b: PathBuf },
    /// Write a default config for the named experiment
    Init {
        experiment: String,
        /// output file (default: <experiment>.json)
        #[arg(long)]
        out: Option<PathBuf>,
    },
}

fn output_root() -> PathBuf {
    std::env::var_os("FRACLAB_OUT")
        .map(PathBuf::from)
        .unwrap_or_else(|| PathBuf::from("runs"))
}

fn load_report(path: &Path) -> Result<RunReport> {
    let text = std::fs::read_to_string(path)
        .with_context(|| format!("reading report {}", path.display()))?;
    serde_json::from_str(&text).with_context(|| format!("parsing report {}", path.display()))
}

fn cmd_run(
    config: &Path,
    out: Option<PathBuf>,
    strict: bool,
    threads: Option<usize>,
    margin: Option<f64>,
) -> Result<bool> {
    let text = std::fs::read_to_string(config)
        .with_context(|| format!("reading config {}", config.display()))?;
    let mut cfg: ExperimentConfig =
        serde_json::from_str(&text).context("config does not match the schema")?;
    // flag overrides become part of the effective config, hence of its hash
    if strict {
        cfg.strict = true;
    }
    if let Some(t) = threads {
        cfg.threads = Some(t);
    }
    if let Some(m) = margin {
        cfg.margin = m;
    }
    let dir = out
        .or_else(|| cfg.output_dir.clone().map(PathBuf::from))
        .unwrap_or_else(|| {
            output_root().join(format!("{}-{}", cfg.experiment, &cfg.hash()[..8]))
        });
    eprintln!("running '{}' -> {}", cfg.experiment, dir.display());
    let report = experiments::run(&cfg, Some(&dir))?;
    for check in &report.checks {
        eprintln!("  [{:?}] {}", check.verdict, check.id);
    }
    eprintln!(
        "done: {} passed, {} failed, {} inconclusive (report.json written)",
        report.passed, report.failed, report.inconclusive
    );
    Ok(report.exit_failure())
}

fn cmd_list() {
    println!("{:<14} {:<55} claim", "id", "title");
    for entry in experiments::catalog() {
        println!("{:<14} {:<55} {}", entry.id, entry.title, entry.claim);
    }
}

fn cmd_diff(a: &Path, b: &Path) -> Result<()> {
    let ra = load_report(a)?;
    let rb = load_report(b)?;
    let diff = experiments::diff_reports(&ra, &rb)?;
    if diff.identical {
        println!("reports are identical");
        return Ok(());
    }
    for entry in &diff.entries {
        println!("{}: {} -> {}", entry.path, entry.a, entry.b);
    }
    if !diff.flipped.is_empty() {
        println!("flipped verdicts: {}", diff.flipped.join(", "));
    }
    Ok(())
}

fn cmd_init(experiment: &str, out: Option<PathBuf>) -> Result<()> {
    let cfg = ExperimentConfig::for_experiment(experiment)?;
    let path = out.unwrap_or_else(|| PathBuf::from(format!("{experiment}.json")));
    std::fs::write(&path, serde_json::to_string_pretty(&cfg)?)?;
    eprintln!("wrote {}", path.display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result: Result<bool> = match cli.command {
        Command::Run { config, out, strict, threads, margin } => {
            cmd_run(&config, out, strict, threads, margin)
        }
        Command::List => {
            cmd_list();
            Ok(false)
        }
        Command::Diff { a, b } => cmd_diff(&a, &b).map(|_| false),
        Command::Init { experiment, out } => cmd_init(&experiment, out).map(|_| false),
    };
    match result {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => ExitCode::from(1),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(2)
        }
    }
}

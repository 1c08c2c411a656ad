use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use cct::harness::{emit_report, simulate, write_csv, write_csv_to, Experiment, ExperimentConfig, Procedure};
use cct::Error;

/// Conditional testing with localized conformal p-values.
#[derive(Debug, Parser)]
#[command(name = "cct", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Conditional outlier detection with FDR control.
    OutlierDetect(Args),
    /// Conditional label screening with FWER control.
    LabelScreen(Args),
    /// Balanced data selection with per-selection error control.
    Select(Args),
    /// Two-sample test of equal conditional distributions.
    TwoSampleTest(Args),
    /// Write one generated sample of the configured scenario as CSV.
    Simulate(Args),
}

#[derive(Debug, clap::Args)]
struct Args {
    /// Flat key = value experiment file.
    #[arg(long, value_name = "PATH")]
    config: PathBuf,
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    #[arg(long, value_name = "F")]
    alpha: Option<f64>,
    #[arg(long, value_name = "N")]
    reps: Option<usize>,
    #[arg(long, value_name = "PATH")]
    output: Option<PathBuf>,
    /// Worker threads; the CCT_THREADS environment variable takes precedence.
    #[arg(long, value_name = "N")]
    threads: Option<usize>,
    /// Resume from this replication index.
    #[arg(long, value_name = "N")]
    start_rep: Option<usize>,
    /// Override any config key, e.g. `--set bandwidth=0.3`.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
}

enum Failure {
    Config(String),
    Runtime(String),
}

impl Args {
    fn overrides(&self) -> Result<Vec<(String, String)>, Failure> {
        let mut out = Vec::new();
        for item in &self.overrides {
            let (k, v) = item
                .split_once('=')
                .ok_or_else(|| Failure::Config(format!("--set expects KEY=VALUE, got `{item}`")))?;
            out.push((k.trim().to_string(), v.trim().to_string()));
        }
        let flag = |key: &str, value: Option<String>, out: &mut Vec<(String, String)>| {
            if let Some(v) = value {
                out.push((key.to_string(), v));
            }
        };
        flag("seed", self.seed.map(|v| v.to_string()), &mut out);
        flag("alpha", self.alpha.map(|v| format!("{v:?}")), &mut out);
        flag("reps", self.reps.map(|v| v.to_string()), &mut out);
        flag("start_rep", self.start_rep.map(|v| v.to_string()), &mut out);
        flag("output", self.output.as_ref().map(|p| toml_string(&p.to_string_lossy())), &mut out);
        let threads = match std::env::var("CCT_THREADS") {
            Ok(v) if !v.trim().is_empty() => Some(v.trim().to_string()),
            _ => self.threads.map(|t| t.to_string()),
        };
        flag("threads", threads, &mut out);
        Ok(out)
    }
}

fn toml_string(s: &str) -> String {
    toml::Value::String(s.to_string()).to_string()
}

fn config_error(e: Error) -> Failure {
    match e {
        Error::Config(msg) => Failure::Config(msg),
        other => Failure::Config(other.to_string()),
    }
}

fn run(cli: Cli) -> Result<(), Failure> {
    let (procedure, args) = match cli.command {
        Command::OutlierDetect(a) => (Some(Procedure::OutlierDetect), a),
        Command::LabelScreen(a) => (Some(Procedure::LabelScreen), a),
        Command::Select(a) => (Some(Procedure::Select), a),
        Command::TwoSampleTest(a) => (Some(Procedure::TwoSampleTest), a),
        Command::Simulate(a) => (None, a),
    };
    let overrides = args.overrides()?;
    let mut config = ExperimentConfig::load(&args.config, &overrides).map_err(config_error)?;

    let Some(procedure) = procedure else {
        let (names, rows) = simulate(&config).map_err(config_error)?;
        let written = match &config.output {
            Some(path) => write_csv(path, &names, &rows),
            None => write_csv_to(std::io::stdout().lock(), &names, &rows),
        };
        return written.map_err(|e| Failure::Runtime(e.to_string()));
    };

    config.procedure = Some(procedure);
    let experiment = Experiment::new(config).map_err(config_error)?;
    let report = experiment.run().map_err(|e| {
        let hint = match &e {
            Error::Replication { replication, .. } => format!(" (resume with --start-rep {})", replication + 1),
            _ => String::new(),
        };
        Failure::Runtime(format!("{e}{hint}"))
    })?;
    for agg in &report.aggregates {
        let show = |v: Option<f64>| v.map_or("undefined".to_string(), |x| format!("{x:.4}"));
        eprintln!("{:<24} mean {:>10}  se {:>10}  n {}", agg.metric, show(agg.mean), show(agg.se), agg.count);
    }
    let config = &experiment.config;
    match &config.output {
        Some(path) => emit_report(&report, path, config.report_format()),
        None => report.to_json().map(|s| print!("{s}")),
    }
    .map_err(|e| Failure::Runtime(e.to_string()))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(Failure::Config(msg)) => {
            eprintln!("config error: {msg}");
            ExitCode::from(1)
        }
        Err(Failure::Runtime(msg)) => {
            eprintln!("runtime error: {msg}");
            ExitCode::from(2)
        }
    }
}

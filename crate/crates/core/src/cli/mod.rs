//! Batch front end: `cylevy <check|dichotomy|solve|converge> --config FILE`.
//!
//! Exit codes: 0 pass, 1 violation, 2 inconclusive, 3 blow-up, 64 usage.

mod commands;
mod config;
mod output;

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};

pub use commands::{cmd_check, cmd_converge, cmd_dichotomy, cmd_solve, Outcome, RunContext};
pub use config::{
    CheckConfig, CoefficientCheckConfig, ConvergeConfig, DichotomyConfig, ExperimentConfig, SolveConfig,
};
pub use output::{exit, OutputDir, OutputFile, RunManifest, Timer, MANIFEST_FILE, MANIFEST_SCHEMA, TIMINGS_FILE};

use crate::error::{Error, Result};

#[derive(Debug, Parser)]
#[command(name = "cylevy", version, about = "Cylindrical Levy noise experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, clap::Args)]
pub struct Common {
    #[arg(long, value_name = "PATH")]
    pub config: PathBuf,
    /// Overrides `master_seed`.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Overrides `output_dir`.
    #[arg(long, value_name = "DIR")]
    pub out: Option<PathBuf>,
    /// Worker threads; 0 uses all cores.
    #[arg(long)]
    pub workers: Option<usize>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Series conditions, A6 and coefficient checks.
    Check(Common),
    /// Large-jump stopping times against the exponential law.
    Dichotomy(Common),
    /// Galerkin solution paths.
    Solve(Common),
    /// Error and energy table over (n, dt).
    Converge(Common),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Check(_) => "check",
            Command::Dichotomy(_) => "dichotomy",
            Command::Solve(_) => "solve",
            Command::Converge(_) => "converge",
        }
    }

    fn common(&self) -> &Common {
        match self {
            Command::Check(c) | Command::Dichotomy(c) | Command::Solve(c) | Command::Converge(c) => c,
        }
    }
}

/// Exit code for a library error raised by a command.
pub fn error_exit(e: &Error) -> i32 {
    match e {
        Error::AssumptionViolated(_) => exit::VIOLATION,
        _ => exit::USAGE,
    }
}

/// Run one command; the returned manifest has already been written.
pub fn execute(command: &Command) -> Result<RunManifest> {
    let common = command.common();
    let text = std::fs::read_to_string(&common.config)
        .map_err(|e| Error::Domain(format!("{}: {e}", common.config.display())))?;
    let mut config = ExperimentConfig::from_json(&text)?;
    let seed = common
        .seed
        .or(config.master_seed)
        .ok_or_else(|| Error::Domain("master_seed is required (config or --seed)".into()))?;
    let workers = common.workers.or(config.workers).unwrap_or(0);
    let out_dir = common
        .out
        .clone()
        .or_else(|| config.output_dir.as_ref().map(PathBuf::from))
        .unwrap_or_else(|| PathBuf::from("cylevy-out"));
    config.master_seed = Some(seed);
    config.workers = None;
    config.output_dir = None;
    let config_dir = common.config.parent().map(Path::to_path_buf).unwrap_or_default();
    let ctx = RunContext {
        config: &config,
        seed,
        workers,
        config_dir: &config_dir,
    };
    let mut out = OutputDir::create(&out_dir)?;
    let mut timer = Timer::new();
    let outcome = match command {
        Command::Check(_) => cmd_check(&ctx, &mut out, &mut timer),
        Command::Dichotomy(_) => cmd_dichotomy(&ctx, &mut out, &mut timer),
        Command::Solve(_) => cmd_solve(&ctx, &mut out, &mut timer),
        Command::Converge(_) => cmd_converge(&ctx, &mut out, &mut timer),
    }?;
    let manifest = RunManifest {
        artifact: "cylevy".into(),
        version: env!("CARGO_PKG_VERSION").into(),
        command: command.name().into(),
        master_seed: seed,
        config: config.clone(),
        exit_code: outcome.exit_code,
        outputs: Vec::new(),
        timings_file: TIMINGS_FILE.into(),
        results: outcome.results,
    };
    out.finish(manifest, timer, workers)
}

/// Parse `args` (program name first), run, print a summary and return the
/// exit code.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { exit::USAGE } else { exit::PASS };
            let _ = e.print();
            return code;
        }
    };
    match execute(&cli.command) {
        Ok(m) => {
            if let Some(d) = m.results.get("diagnostics").and_then(|d| d.as_array()) {
                for line in d {
                    eprintln!("{}", line.as_str().unwrap_or_default());
                }
            }
            println!("{}: exit {}", m.command, m.exit_code);
            m.exit_code
        }
        Err(e) => {
            eprintln!("cylevy {}: {e}", cli.command.name());
            error_exit(&e)
        }
    }
}

//! Command-line front end: argument parsing, config overrides and output files.

mod commands;
mod config;
mod matrix;

use std::io::Write;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use serde_json::json;

pub use commands::{cmd_delta, cmd_fill, cmd_preimage, cmd_verify, CommandOutput, EXIT_CONCLUSION, EXIT_HYPOTHESIS};
pub use config::{Caps, ExperimentConfig, FixtureFactor, Model, PresentationConfig, Samples};
pub use matrix::{aggregate, Matrix, MatrixRow};

use crate::error::{Error, Result};
use crate::rational::{parse_rational, Q};

#[derive(Parser, Debug)]
#[command(name = "dehnfill", version, about = "Rotation families, windmills and Dehn fillings on Bass-Serre trees")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Directory receiving report.json, trace.json and tree.dot.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Hyperbolicity constant of a finite metric space given as JSON.
    Delta {
        file: PathBuf,
        #[arg(long, default_value_t = 20_000)]
        samples: u64,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Kernel ledger, its certificate and the quotient hyperbolicity.
    Fill(ConfigArgs),
    /// Reduced preimage of an infinite-order element and the ledger of ⟨g, K⟩.
    Preimage {
        #[command(flatten)]
        config: ConfigArgs,
        /// Element of the filled group, e.g. "a b".
        #[arg(short = 'g', long)]
        element: String,
    },
    /// Every verification suite as one pass/fail matrix.
    Verify(ConfigArgs),
}

#[derive(Args, Debug, Clone, Default)]
pub struct ConfigArgs {
    /// JSON configuration file; defaults apply when absent.
    #[arg(short = 'c', long)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    pub radius: Option<u64>,
    #[arg(long)]
    pub delta: Option<String>,
    #[arg(long)]
    pub sigma: Option<String>,
    #[arg(long)]
    pub edge_scale: Option<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Comma-separated subgroup indices, e.g. "3,3".
    #[arg(long)]
    pub fillings: Option<String>,
    /// Comma-separated factors, e.g. "Z,Z/3".
    #[arg(long)]
    pub factors: Option<String>,
}

fn list<T>(s: &str, f: impl Fn(&str) -> Result<T>) -> Result<Vec<T>> {
    s.split(',').map(|p| f(p.trim())).collect()
}

impl ConfigArgs {
    /// Reads the config file and applies the flag overrides.
    pub fn load(&self) -> Result<ExperimentConfig> {
        let mut cfg = match &self.config {
            Some(p) => {
                let text = std::fs::read_to_string(p).map_err(|e| Error::input(format!("cannot read {}: {e}", p.display())))?;
                ExperimentConfig::from_json(&text)?
            }
            None => ExperimentConfig::default(),
        };
        let q = |s: &str| parse_rational(s).map(Q);
        if let Some(r) = self.radius {
            cfg.radius = r;
        }
        if let Some(d) = &self.delta {
            cfg.delta = q(d)?;
        }
        if let Some(s) = &self.sigma {
            cfg.sigma = q(s)?;
        }
        if let Some(s) = &self.edge_scale {
            cfg.edge_scale = q(s)?;
        }
        if let Some(s) = self.seed {
            cfg.seed = s;
        }
        if let Some(f) = &self.fillings {
            cfg.presentation.fillings =
                list(f, |p| p.parse::<u64>().map_err(|e| Error::input(format!("bad filling index {p:?}: {e}"))))?;
        }
        if let Some(f) = &self.factors {
            cfg.presentation.factors = list(f, |p| Ok(p.to_string()))?;
        }
        cfg.validate()?;
        Ok(cfg)
    }
}

fn write_outputs(dir: &Path, out: &CommandOutput) -> Result<()> {
    let io = |e: std::io::Error| Error::input(format!("cannot write to {}: {e}", dir.display()));
    std::fs::create_dir_all(dir).map_err(io)?;
    let pretty = |v: &serde_json::Value| serde_json::to_string_pretty(v).expect("JSON values serialize") + "\n";
    std::fs::write(dir.join("report.json"), pretty(&out.report)).map_err(io)?;
    if let Some(t) = &out.trace {
        std::fs::write(dir.join("trace.json"), pretty(t)).map_err(io)?;
    }
    if let Some(d) = &out.dot {
        std::fs::write(dir.join("tree.dot"), d).map_err(io)?;
    }
    Ok(())
}

fn dispatch(cli: &Cli) -> Result<CommandOutput> {
    match &cli.command {
        Command::Delta { file, samples, seed } => cmd_delta(file, *samples, *seed),
        Command::Fill(c) => cmd_fill(&c.load()?),
        Command::Preimage { config, element } => cmd_preimage(&config.load()?, element),
        Command::Verify(c) => cmd_verify(&c.load()?),
    }
}

fn command_name(c: &Command) -> &'static str {
    match c {
        Command::Delta { .. } => "delta",
        Command::Fill(_) => "fill",
        Command::Preimage { .. } => "preimage",
        Command::Verify(_) => "verify",
    }
}

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::Input(_) => "input",
        Error::Precondition(_) => "precondition",
        Error::Domain(_) => "domain",
        Error::Resource { .. } => "resource",
        Error::Internal(_) => "internal",
    }
}

/// Runs one command, prints its report to stdout and returns the exit code.
/// Errors become a JSON error report with the matching code.
pub fn run(cli: &Cli) -> i32 {
    let (out, code) = match dispatch(cli) {
        Ok(out) => {
            let code = out.exit;
            (out, code)
        }
        Err(e) => {
            let report = json!({
                "command": command_name(&cli.command),
                "status": "error",
                "error": {"kind": error_kind(&e), "message": e.to_string(), "exit_code": e.exit_code()},
            });
            let out = CommandOutput {
                report,
                trace: None,
                dot: None,
                exit: e.exit_code(),
            };
            let code = out.exit;
            (out, code)
        }
    };
    let text = serde_json::to_string_pretty(&out.report).expect("JSON values serialize");
    let _ = writeln!(std::io::stdout(), "{text}");
    if let Some(dir) = &cli.out {
        if let Err(e) = write_outputs(dir, &out) {
            eprintln!("{e}");
            return e.exit_code();
        }
    }
    code
}

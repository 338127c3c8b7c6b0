use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use hoermander_kit::report::{Format, Report};
use hoermander_kit::run::{self, merge_config, Overrides};
use serde::de::DeserializeOwned;
use serde::Serialize;

#[derive(Parser)]
#[command(name = "hoermander-kit", version, about = "Hörmander-space norms, interpolation, traces and parabolic bench runs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Multiplier norms and quotient norms on random or stored fields.
    Norm(Common),
    /// Interpolation identities: parameters built from orders, reiteration, orthogonal sums.
    InterpCheck(Common),
    /// Compatibility conditions on synthesized data, plus parabolicity and covering.
    CompatCheck(Common),
    /// Trace of the lift, and lift constants of the cutoff.
    TraceCheck(Common),
    /// Two-sided ratio sweep under refinement.
    IsoBench(Common),
    /// Half-interpolated norms at a jump point of the compatibility count.
    JumpStudy(Common),
}

#[derive(Args)]
struct Common {
    /// JSON config; keys override the defaults.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output directory for the report.
    #[arg(long, default_value = ".")]
    out: PathBuf,
    #[arg(long)]
    seed: Option<u64>,
    /// Comma-separated lattice sizes.
    #[arg(long, value_delimiter = ',')]
    resolutions: Option<Vec<usize>>,
    /// Write JSON (default).
    #[arg(long, conflicts_with = "csv")]
    json: bool,
    /// Write a flattened CSV table.
    #[arg(long)]
    csv: bool,
}

fn load<T: Serialize + DeserializeOwned + Default>(path: Option<&Path>) -> Result<T> {
    let default = T::default();
    match path {
        None => Ok(default),
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            let user = serde_json::from_str(&text).with_context(|| format!("parsing {}", p.display()))?;
            merge_config(&default, user).with_context(|| format!("config {}", p.display()))
        }
    }
}

#[derive(Serialize, serde::Deserialize)]
#[serde(transparent)]
struct JumpConfig(hoermander_kit::bench::JumpCase);

impl Default for JumpConfig {
    fn default() -> Self {
        JumpConfig(run::default_jump_case())
    }
}

fn execute(cli: Cli) -> Result<(Report, Common)> {
    let (report, c) = match cli.command {
        Command::Norm(c) => (run::run_norm(load(c.config.as_deref())?, &overrides(&c))?, c),
        Command::InterpCheck(c) => (run::run_interp(load(c.config.as_deref())?, &overrides(&c))?, c),
        Command::CompatCheck(c) => (run::run_compat(load(c.config.as_deref())?, &overrides(&c))?, c),
        Command::TraceCheck(c) => (run::run_trace(load(c.config.as_deref())?, &overrides(&c))?, c),
        Command::IsoBench(c) => (run::run_iso(load(c.config.as_deref())?, &overrides(&c))?, c),
        Command::JumpStudy(c) => {
            let JumpConfig(case) = load(c.config.as_deref())?;
            (run::run_jump(case, &overrides(&c))?, c)
        }
    };
    Ok((report, c))
}

fn overrides(c: &Common) -> Overrides {
    Overrides { seed: c.seed, resolutions: c.resolutions.clone() }
}

fn main() -> ExitCode {
    match execute(Cli::parse()) {
        Ok((report, c)) => {
            let format = if c.csv { Format::Csv } else { Format::Json };
            match report.write(&c.out, format) {
                Ok(path) => {
                    let verdict = if report.pass { "PASS" } else { "FAIL" };
                    println!("{verdict} {} ({} records) -> {}", report.command, report.records.len(), path.display());
                    if report.pass {
                        ExitCode::SUCCESS
                    } else {
                        ExitCode::from(1)
                    }
                }
                Err(e) => {
                    eprintln!("error: {e:#}");
                    ExitCode::from(2)
                }
            }
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}

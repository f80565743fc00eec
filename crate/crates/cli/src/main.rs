//! `sl3sph`: evaluations, bound scans and verification suites for SL(3, R) spherical functions.

mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::Parser;

use commands::Failure;
use config::{parse_list, parse_triple, Command, Format, RunConfig};

#[derive(Parser, Debug)]
#[command(name = "sl3sph", version, about)]
struct Cli {
    /// Subcommand; may be omitted when the config file names one.
    #[arg(value_enum)]
    command: Option<Command>,

    /// Versioned JSON run configuration. Flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,

    /// Write the effective configuration to this path before running.
    #[arg(long)]
    dump_config: Option<PathBuf>,

    /// H direction `h1,h2,h3` (repeatable); scaled to unit Killing norm.
    #[arg(long = "h-dir", allow_hyphen_values = true)]
    h_dir: Vec<String>,

    /// H magnitudes: `a,b,c` or `start:stop:step`.
    #[arg(long, allow_hyphen_values = true)]
    h_mags: Option<String>,

    /// lambda direction `l1,l2,l3` (repeatable); scaled to unit Euclidean length.
    #[arg(long = "lam-dir", allow_hyphen_values = true)]
    lam_dir: Vec<String>,

    /// lambda magnitudes `t`: `a,b,c` or `start:stop:step`.
    #[arg(long, allow_hyphen_values = true)]
    lam_mags: Option<String>,

    /// Fixed Gauss-Legendre size in beta (requires --nag).
    #[arg(long)]
    nbeta: Option<usize>,

    /// Fixed trapezoid size in alpha and gamma (requires --nbeta).
    #[arg(long)]
    nag: Option<usize>,

    /// Refinement-gate tolerance.
    #[arg(long, allow_hyphen_values = true)]
    tol: Option<f64>,

    /// Report path; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,

    #[arg(long)]
    seed: Option<u64>,

    #[arg(long, value_enum)]
    format: Option<Format>,

    /// SVG decay plot path (scan only).
    #[arg(long)]
    plot: Option<PathBuf>,
}

fn build_config(cli: &Cli) -> Result<RunConfig, String> {
    let file = cli.config.as_deref().map(RunConfig::load).transpose()?;
    let command = cli
        .command
        .or(file.as_ref().map(|c| c.command))
        .ok_or("no subcommand given and no config file")?;
    let mut cfg = file.unwrap_or_else(|| RunConfig::defaults(command));
    cfg.command = command;
    if !cli.h_dir.is_empty() {
        cfg.h.dirs = cli.h_dir.iter().map(|s| parse_triple(s)).collect::<Result<_, _>>()?;
    }
    if let Some(m) = &cli.h_mags {
        cfg.h.mags = parse_list(m)?;
    }
    if !cli.lam_dir.is_empty() {
        cfg.lambda.dirs = cli.lam_dir.iter().map(|s| parse_triple(s)).collect::<Result<_, _>>()?;
    }
    if let Some(m) = &cli.lam_mags {
        cfg.lambda.mags = parse_list(m)?;
    }
    if cli.nbeta.is_some() || cli.nag.is_some() {
        cfg.n_beta = cli.nbeta;
        cfg.n_ag = cli.nag;
    }
    if let Some(t) = cli.tol {
        cfg.tol = t;
    }
    if let Some(s) = cli.seed {
        cfg.seed = s;
    }
    if let Some(f) = cli.format {
        cfg.format = f;
    }
    if cli.out.is_some() {
        cfg.out = cli.out.clone();
    }
    if cli.plot.is_some() {
        cfg.plot = cli.plot.clone();
    }
    cfg.validate()?;
    Ok(cfg)
}

fn fail(f: Failure) -> ExitCode {
    eprintln!("{}", f.to_json());
    ExitCode::from(f.exit_code() as u8)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let _ = e.print();
            return fail(Failure::Config(e.kind().to_string()));
        }
    };
    let cfg = match build_config(&cli) {
        Ok(c) => c,
        Err(e) => return fail(Failure::Config(e)),
    };
    if let Some(p) = &cli.dump_config {
        if let Err(e) = std::fs::write(p, cfg.to_json()) {
            return fail(Failure::Runtime(e.to_string()));
        }
    }
    match commands::run(&cfg) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => fail(f),
    }
}

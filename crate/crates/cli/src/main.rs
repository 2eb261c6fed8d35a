//! `polydisk` command-line tool.
//!
//! Exit codes: 0 on success, 2 when the problem is infeasible or undecided,
//! 1 on errors (diagnostics go to standard error).

mod commands;
mod spec;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use polydisk::polyseries::MultiIndex;
use serde::Deserialize;

use commands::{Outcome, RunReport};
use spec::{parse_complex, parse_index, BuiltinName, BuiltinParams, Cplx, FunctionSpec, K11Data, ProblemSpec};

#[derive(Parser)]
#[command(name = "polydisk", version, about = "Rational approximation and interpolation on the polydisk")]
struct Cli {
    /// Seed for quasi-random verification samples.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Tolerance override, e.g. --tol mtol=1e-8 (repeatable).
    #[arg(long = "tol", global = true, value_name = "KEY=VALUE")]
    tol: Vec<String>,
    /// Write output here instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct Input {
    /// Problem spec (or a previous run report) as JSON.
    spec: Option<PathBuf>,
    /// Built-in symbol, used when no spec file is given.
    #[arg(long, value_enum)]
    builtin: Option<BuiltinName>,
    #[arg(long)]
    d: Option<usize>,
    /// Box index such as 1,1 (repeatable; replaces the spec schedule).
    #[arg(long = "n", value_parser = parse_index)]
    n: Vec<MultiIndex>,
}

#[derive(Subcommand)]
enum Command {
    /// Top con-eigenpair and Padé step for each box of the schedule.
    Takagi {
        #[command(flatten)]
        input: Input,
        /// Radius of the Taylor contour.
        #[arg(long, default_value_t = 0.5)]
        radius: f64,
    },
    /// Padé steps along a schedule, with a CSV table.
    PadeSweep {
        #[command(flatten)]
        input: Input,
        /// Radius of the polydisk on which approximation errors are measured.
        #[arg(long, default_value_t = 0.5)]
        compact: f64,
    },
    /// Carathéodory–Fejér interpolation by a realization.
    CfInterp {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        max_iters: Option<usize>,
    },
    /// Membership and construction for bidisk data through zw.
    K11 {
        #[command(flatten)]
        input: Input,
        /// Coefficients as re,im.
        #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
        c00: Option<Cplx>,
        #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
        c01: Option<Cplx>,
        #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
        c10: Option<Cplx>,
        #[arg(long, value_parser = parse_complex, allow_hyphen_values = true)]
        c11: Option<Cplx>,
    },
    /// Pfister's rational inner approximants of f(ρz).
    Pfister {
        #[command(flatten)]
        input: Input,
        #[arg(long)]
        rho: Option<f64>,
        /// Degree schedule (repeatable).
        #[arg(long = "kappa")]
        kappa: Vec<usize>,
    },
}

#[derive(Deserialize)]
#[serde(untagged)]
enum SpecFile {
    Spec(ProblemSpec),
    Report(Box<RunReport>),
}

/// Loads the spec file (or a report's spec echo) and applies flag overrides.
fn load(input: &Input, tol: &[String]) -> Result<(ProblemSpec, Option<u64>)> {
    let (mut spec, seed) = match &input.spec {
        Some(path) => {
            let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
            match serde_json::from_str::<SpecFile>(&text) {
                Ok(SpecFile::Spec(s)) => (s, None),
                Ok(SpecFile::Report(r)) => (r.spec, Some(r.seed)),
                Err(_) => {
                    // re-parse strictly for a useful message
                    let e = serde_json::from_str::<ProblemSpec>(&text).err();
                    bail!("{}: not a problem spec or run report: {}", path.display(), e.map_or(String::new(), |e| e.to_string()))
                }
            }
        }
        None => {
            let d = input.d.or_else(|| input.n.first().map(|n| n.dim())).unwrap_or(2);
            (ProblemSpec::new(d), None)
        }
    };
    if let Some(name) = input.builtin {
        spec.function = Some(FunctionSpec::Builtin { name, params: BuiltinParams::default() });
    }
    if let Some(d) = input.d {
        spec.d = d;
    }
    if !input.n.is_empty() {
        spec.schedule = input.n.clone();
    }
    spec.options.apply_overrides(tol)?;
    spec.validate()?;
    Ok((spec, seed))
}

fn run(cli: &Cli) -> Result<Outcome> {
    let input = match &cli.command {
        Command::Takagi { input, .. }
        | Command::PadeSweep { input, .. }
        | Command::CfInterp { input, .. }
        | Command::K11 { input, .. }
        | Command::Pfister { input, .. } => input,
    };
    let (mut spec, file_seed) = load(input, &cli.tol)?;
    let seed = cli.seed.or(file_seed).unwrap_or(0);
    let outcome = match &cli.command {
        Command::Takagi { radius, .. } => commands::cmd_takagi(&spec, seed, *radius)?,
        Command::PadeSweep { compact, .. } => commands::cmd_pade_sweep(&spec, seed, *compact)?,
        Command::CfInterp { max_iters, .. } => commands::cmd_cf_interp(&spec, seed, *max_iters)?,
        Command::K11 { c00, c01, c10, c11, .. } => {
            if c00.is_some() || c01.is_some() || c10.is_some() || c11.is_some() {
                let zero = Cplx { re: 0.0, im: 0.0 };
                spec.d = 2;
                spec.k11 = Some(K11Data {
                    c00: c00.unwrap_or(Cplx { re: 1.0, im: 0.0 }),
                    c01: c01.unwrap_or(zero),
                    c10: c10.unwrap_or(zero),
                    c11: c11.unwrap_or(zero),
                });
            }
            commands::cmd_k11(&spec, seed)?
        }
        Command::Pfister { rho, kappa, .. } => {
            if rho.is_some() {
                spec.rho = *rho;
            }
            if !kappa.is_empty() {
                spec.kappas = Some(kappa.clone());
            }
            commands::cmd_pfister(&spec, seed)?
        }
    };
    Ok(outcome)
}

fn emit(cli: &Cli, outcome: &Outcome) -> Result<()> {
    let text = match cli.format {
        Format::Json => serde_json::to_string_pretty(&outcome.report)? + "\n",
        Format::Csv => match &outcome.csv {
            Some(c) => c.clone(),
            None => bail!("CSV output is not available for {}", outcome.report.command),
        },
    };
    match &cli.out {
        Some(p) => fs::write(p, text).with_context(|| format!("writing {}", p.display()))?,
        None => print!("{text}"),
    }
    Ok(())
}

fn main() -> ExitCode {
    // clap's own usage errors would exit with 2, which is reserved for infeasible problems
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(&cli).and_then(|o| emit(&cli, &o).map(|_| o.report.status.exit_code())) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

//! Command line for p-curves of maximal slope: solve a configured flow,
//! transform it between exponents, verify the identities along it, replay
//! a canned scenario, or sweep a config across parameter grids. Exit
//! status 0 means everything that ran passed.

// validation uses !(v > 0.0) so that NaN fails the guard
#![allow(clippy::neg_cmp_op_on_partial_ord)]

mod config;
mod experiment;
mod reproduce;

use std::path::PathBuf;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

use crate::experiment::Mode;

#[derive(Parser)]
#[command(name = "maxslope", version, about = "p-curves of maximal slope and their exponent transforms")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Experiment config file (JSON)
    #[arg(long)]
    config: PathBuf,
    /// Output directory; falls back to the config's out_dir, then runs/<name>
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override a config field by dotted path, e.g. --set source.nodes=2001
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    /// Multiply every tolerance by this factor
    #[arg(long, default_value_t = 1.0)]
    tol_scale: f64,
}

#[derive(Subcommand)]
enum Command {
    /// Solve the configured flow and export it
    Solve(RunArgs),
    /// Solve the flow and transform it to each requested exponent
    Transform(RunArgs),
    /// Solve, transform, and run every enabled checker
    Verify(RunArgs),
    /// Replay a canned scenario with its expected outcomes
    Reproduce {
        /// One of: blowup_example, nonuniqueness_example, normlike_stationary, quadratic_family
        name: String,
        /// Output directory; defaults to runs/<name>
        #[arg(long)]
        out: Option<PathBuf>,
        /// Multiply every tolerance by this factor
        #[arg(long, default_value_t = 1.0)]
        tol_scale: f64,
    },
    /// Verify once per combination of comma-separated --set values
    Sweep(RunArgs),
}

fn resolve_out(cli_out: &Option<PathBuf>, config: &config::ExperimentConfig) -> PathBuf {
    cli_out
        .clone()
        .or_else(|| config.out_dir.clone())
        .unwrap_or_else(|| PathBuf::from("runs").join(&config.name))
}

fn run(args: &RunArgs, mode: Mode) -> Result<bool> {
    let sets = args.set.iter().map(|s| config::parse_set(s)).collect::<Result<Vec<_>>>()?;
    let config = config::load_config(&args.config, &sets)?;
    let out_dir = resolve_out(&args.out, &config);
    experiment::run_experiment(&config, mode, &out_dir, args.tol_scale)
}

fn sweep(args: &RunArgs) -> Result<bool> {
    let mut axes: Vec<(String, Vec<String>)> = Vec::new();
    for raw in &args.set {
        let (key, value) = config::parse_set(raw)?;
        // a bracketed value is one JSON array, not a list of alternatives
        let values = if value.starts_with('[') {
            vec![value]
        } else {
            value.split(',').map(str::to_string).collect()
        };
        axes.push((key, values));
    }

    let mut combos: Vec<Vec<(String, String)>> = vec![Vec::new()];
    for (key, values) in &axes {
        let mut next = Vec::with_capacity(combos.len() * values.len());
        for combo in &combos {
            for value in values {
                let mut extended = combo.clone();
                extended.push((key.clone(), value.clone()));
                next.push(extended);
            }
        }
        combos = next;
    }

    let mut all = true;
    for combo in &combos {
        let config = config::load_config(&args.config, combo)?;
        let label = if combo.is_empty() {
            "base".to_string()
        } else {
            combo.iter().map(|(k, v)| format!("{k}={v}")).collect::<Vec<_>>().join("_")
        };
        let out_dir = resolve_out(&args.out, &config).join(&label);
        all &= experiment::run_experiment(&config, Mode::Verify, &out_dir, args.tol_scale)?;
    }
    println!("sweep: {} combinations, {}", combos.len(), if all { "PASS" } else { "FAIL" });
    Ok(all)
}

fn dispatch(cli: &Cli) -> Result<bool> {
    match &cli.command {
        Command::Solve(args) => run(args, Mode::Solve),
        Command::Transform(args) => run(args, Mode::Transform),
        Command::Verify(args) => run(args, Mode::Verify),
        Command::Reproduce { name, out, tol_scale } => {
            let out_dir = out.clone().unwrap_or_else(|| PathBuf::from("runs").join(name));
            reproduce::run_reproduce(name, &out_dir, *tol_scale)
        }
        Command::Sweep(args) => sweep(args),
    }
}

fn main() {
    let cli = Cli::parse();
    match dispatch(&cli) {
        Ok(true) => {}
        Ok(false) => std::process::exit(1),
        Err(err) => {
            eprintln!("error: {err:#}");
            std::process::exit(1);
        }
    }
}

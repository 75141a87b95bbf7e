mod commands;
mod config;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use config::Config;

#[derive(Parser)]
#[command(name = "ivl", version, about = "Invariance complexity and equi-invariance analysis for finite-alphabet control systems")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

/// Flags shared by the analysis commands. Each overrides the config file key
/// of the same name.
#[derive(Args, Clone, Debug, Default)]
struct Common {
    /// `ivl-config v1` file.
    #[arg(long)]
    config: Option<PathBuf>,
    /// A1..A5 or the full example name.
    #[arg(long)]
    example: Option<String>,
    /// Tolerance, as p/q or a decimal.
    #[arg(long)]
    epsilon: Option<String>,
    /// Largest horizon.
    #[arg(long)]
    nmax: Option<String>,
    /// Grid step (interval examples) or block depth (block example).
    #[arg(long)]
    grid: Option<String>,
    /// Output directory; stdout when absent.
    #[arg(long)]
    out: Option<PathBuf>,
    /// plain | mean | limsup
    #[arg(long)]
    mode: Option<String>,
    /// Worker threads.
    #[arg(long)]
    jobs: Option<String>,
}

#[derive(Subcommand)]
enum Command {
    /// Trajectory CSV of one point under one schedule.
    Simulate {
        #[command(flatten)]
        common: Common,
        /// Initial state, e.g. 5/16 or ab(cde)^inf.
        #[arg(long)]
        x: Option<String>,
        /// Schedule, e.g. "0^4 2 0^inf".
        #[arg(long)]
        omega: Option<String>,
    },
    /// Invariance complexity profile r(n) for n = 1..nmax.
    Span {
        #[command(flatten)]
        common: Common,
    },
    /// Classify the target set (claims matrix by default) and audit.
    Classify {
        #[command(flatten)]
        common: Common,
        /// Comma-separated notions; each is classified on the whole grid.
        #[arg(long)]
        notions: Option<String>,
    },
    /// Reach set, invariance, no-return and dichotomy probes.
    Controlset {
        #[command(flatten)]
        common: Common,
        /// Reach-set source.
        #[arg(long)]
        x: Option<String>,
    },
    /// Built-in examples.
    Example {
        #[command(subcommand)]
        action: ExampleAction,
    },
    /// Reproduce the claims of one example (all when omitted) and audit them.
    Audit {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Subcommand)]
enum ExampleAction {
    List,
    Dump { id: String },
}

fn config(common: &Common, extra: &[(&str, Option<String>)]) -> ivl_core::Result<Config> {
    let mut cfg = match &common.config {
        Some(p) => Config::load(p)?,
        None => Config::default(),
    };
    cfg.set("example", common.example.clone());
    cfg.set("epsilon", common.epsilon.clone());
    cfg.set("nmax", common.nmax.clone());
    cfg.set("grid", common.grid.clone());
    cfg.set("out", common.out.as_ref().map(|p| p.display().to_string()));
    cfg.set("mode", common.mode.clone());
    cfg.set("jobs", common.jobs.clone());
    for (k, v) in extra {
        cfg.set(k, v.clone());
    }
    if let Some(j) = cfg.parsed::<usize>("jobs")? {
        ivl_core::par::set_jobs(j.max(1));
    }
    Ok(cfg)
}

fn run(cli: Cli) -> ivl_core::Result<bool> {
    match cli.command {
        Command::Simulate { common, x, omega } => commands::simulate(&config(&common, &[("x", x), ("omega", omega)])?).map(|_| true),
        Command::Span { common } => commands::span(&config(&common, &[])?).map(|_| true),
        Command::Classify { common, notions } => commands::classify(&config(&common, &[("notions", notions)])?),
        Command::Controlset { common, x } => commands::controlset(&config(&common, &[("x", x)])?).map(|_| true),
        Command::Example { action: ExampleAction::List } => commands::example_list().map(|_| true),
        Command::Example { action: ExampleAction::Dump { id } } => commands::example_dump(&id).map(|_| true),
        Command::Audit { common } => commands::audit(&config(&common, &[])?),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

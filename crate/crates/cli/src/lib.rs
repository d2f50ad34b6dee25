//! `egolink` command line: a staged, resumable pipeline over a workspace
//! directory.

pub mod config;
pub mod error;
mod pipeline;
pub mod workspace;

use std::ffi::OsString;
use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};

use crate::config::{KeyFlags, Settings};
use crate::error::{CliError, Result};
use crate::workspace::Workspace;

#[derive(Debug, Parser)]
#[command(name = "egolink", version, about = "Link prediction inside ego-networks from interaction timing")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Args)]
struct Common {
    /// TOML config file; flags override its keys.
    #[arg(long, short, value_name = "PATH")]
    config: Option<PathBuf>,
    /// Override any key, including nested ones (`synth.p_in=0.5`).
    #[arg(long = "set", value_name = "KEY=VALUE")]
    set: Vec<String>,
    #[command(flatten)]
    keys: KeyFlags,
}

#[derive(Debug, Clone, Args)]
struct StageArgs {
    #[command(flatten)]
    common: Common,
    /// Recompute even if the stage is up to date.
    #[arg(long)]
    force: bool,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Parse and clean the input log into the workspace.
    Ingest(StageArgs),
    /// Build ego-networks and split egos by degree class.
    Split(StageArgs),
    /// Score every candidate pair.
    Score(StageArgs),
    /// Rank pairs by each score; Spearman matrix on the learning set.
    Rank(StageArgs),
    /// Borda and Medrank consensus rankings.
    Aggregate(StageArgs),
    /// Learn, tune and apply the supervised merge per class.
    Merge(StageArgs),
    /// Precision-recall reports.
    Eval(StageArgs),
    /// All stages in order.
    Run(StageArgs),
    /// Generate a synthetic log with planted circles.
    Synth {
        #[command(flatten)]
        common: Common,
        /// Output directory (defaults to the `output` key).
        #[arg(long, value_name = "DIR")]
        out: Option<PathBuf>,
    },
    /// Summary statistics of the input log, without a workspace.
    Stats {
        #[command(flatten)]
        common: Common,
    },
}

fn settings(common: Common) -> Result<Settings> {
    let raw = config::load(common.config.as_deref(), common.keys, &common.set)?;
    Settings::new(raw)
}

type StageFn = fn(&Workspace, &Settings, bool) -> Result<()>;

fn run_stages(args: StageArgs, stages: &[StageFn]) -> Result<()> {
    let s = settings(args.common)?;
    let ws = Workspace::open(s.workspace())?;
    for stage in stages {
        stage(&ws, &s, args.force)?;
    }
    Ok(())
}

fn dispatch(cli: Cli) -> Result<()> {
    use pipeline::*;
    match cli.command {
        Command::Ingest(a) => run_stages(a, &[ingest]),
        Command::Split(a) => run_stages(a, &[split]),
        Command::Score(a) => run_stages(a, &[score]),
        Command::Rank(a) => run_stages(a, &[rank]),
        Command::Aggregate(a) => run_stages(a, &[aggregate]),
        Command::Merge(a) => run_stages(a, &[merge]),
        Command::Eval(a) => run_stages(a, &[eval]),
        Command::Run(a) => run_stages(a, &[ingest, split, score, rank, aggregate, merge, eval]),
        Command::Synth { common, out } => {
            let s = settings(common)?;
            let out = out
                .or_else(|| s.raw.output.clone())
                .ok_or_else(|| CliError::usage("synth needs --out or an `output` key"))?;
            synth(&s, &out)
        }
        Command::Stats { common } => stats(&settings(common)?),
    }
}

/// Runs the command line and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 1 } else { 0 };
        }
    };
    match std::panic::catch_unwind(|| dispatch(cli)) {
        Ok(Ok(())) => 0,
        Ok(Err(e)) => {
            eprintln!("egolink: {e}");
            e.exit_code()
        }
        Err(_) => 3,
    }
}

//! Argument parsing and dispatch.

use std::io::Write;
use std::path::PathBuf;

use clap::{CommandFactory, FromArgMatches, Parser, Subcommand};

use crate::commands::{self, Leg};
use crate::config::{keys_help, split_overrides, Config, Override};
use crate::error::{CliError, Result};

/// Retrieval-driven selection of minority-class texts for annotation.
#[derive(Debug, Parser)]
#[command(name = "cueselect", version)]
pub struct Cli {
    /// Configuration file; `--section.key value` overrides it.
    #[arg(long, short, global = true)]
    pub config: Option<PathBuf>,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic corpus and its hidden-label oracle.
    Generate,
    /// Build the lexical index and print collection statistics.
    Index,
    /// Run a one-off query against one or both retrieval legs.
    Search {
        /// Query terms.
        #[arg(required = true)]
        terms: Vec<String>,
        /// Category used for precision@k and for file-provided query vectors.
        #[arg(long)]
        category: Option<String>,
        #[arg(long, value_enum, default_value = "both")]
        leg: Leg,
        /// Ranked results to print per leg.
        #[arg(long, default_value_t = 10)]
        show: usize,
    },
    /// Train per-category models and write the query file for review.
    Suggest {
        /// Restrict to these categories (repeatable).
        #[arg(long)]
        category: Vec<String>,
    },
    /// Select one fused batch and annotate it or write a pending file.
    Select {
        #[arg(long)]
        category: String,
        /// Round whose k and cap schedule values apply.
        #[arg(long, default_value_t = 1)]
        round: usize,
    },
    /// Apply returned labels for a pending batch to the corpus.
    Import {
        #[arg(long)]
        pending: PathBuf,
        #[arg(long)]
        labels: PathBuf,
    },
    /// Train and evaluate a category model; writes the model file.
    Train {
        #[arg(long)]
        category: String,
    },
    /// Evaluate a stored model on the test split.
    Eval {
        #[arg(long)]
        category: String,
    },
    /// Simulate a multi-round campaign with fused and random arms.
    Campaign,
    /// Print the effective configuration.
    Config,
}

fn parse(args: Vec<String>) -> std::result::Result<Cli, clap::Error> {
    let cmd = Cli::command().after_long_help(keys_help()).after_help("Run with --help to list every configuration key.");
    let matches = cmd.try_get_matches_from(args)?;
    Cli::from_arg_matches(&matches)
}

fn effective_config(cli: &Cli, overrides: &[Override]) -> Result<Config> {
    let mut cfg = match &cli.config {
        Some(p) => Config::from_file(p)?,
        None => Config::default(),
    };
    for (k, v) in overrides {
        cfg.set(k, v).map_err(CliError::Usage)?;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn dispatch(cli: &Cli, cfg: &Config, out: &mut dyn Write) -> Result<()> {
    match &cli.command {
        Command::Generate => commands::generate(cfg, out),
        Command::Index => commands::index(cfg, out),
        Command::Search { terms, category, leg, show } => {
            commands::search(cfg, terms, category.as_deref(), *leg, *show, out)
        }
        Command::Suggest { category } => commands::suggest(cfg, category, out),
        Command::Select { category, round } => commands::select(cfg, category, *round, out),
        Command::Import { pending, labels } => commands::import(cfg, pending, labels, out),
        Command::Train { category } => commands::train(cfg, category, out),
        Command::Eval { category } => commands::eval(cfg, category, out),
        Command::Campaign => commands::campaign(cfg, out),
        Command::Config => out.write_all(cfg.to_text().as_bytes()).map_err(|e| CliError::io("<stdout>".as_ref(), e)),
    }
}

/// Runs the CLI on `args` (including the program name) and returns the exit
/// code. Errors are reported on `err`.
pub fn run(args: Vec<String>, out: &mut dyn Write, err: &mut dyn Write) -> i32 {
    let (rest, overrides) = match split_overrides(args) {
        Ok(x) => x,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            return e.exit_code();
        }
    };
    let cli = match parse(rest) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(err, "{text}");
                1
            } else {
                let _ = write!(out, "{text}");
                0
            };
        }
    };
    let result = effective_config(&cli, &overrides).and_then(|cfg| dispatch(&cli, &cfg, out));
    match result {
        Ok(()) => 0,
        // A reader such as `head` closed stdout early; nothing left to report.
        Err(CliError::Io { source, .. }) if source.kind() == std::io::ErrorKind::BrokenPipe => 0,
        Err(e) => {
            let _ = writeln!(err, "error: {e}");
            e.exit_code()
        }
    }
}

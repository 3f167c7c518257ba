use clap::error::ErrorKind;
use clap::{Parser, Subcommand};
use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use voicepipe_cli::commands::{self, CliError};
use voicepipe_cli::config::CONFIG_ENV;

/// Streaming voice pipeline benchmark harness.
#[derive(Debug, Parser)]
#[command(name = "voicepipe", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Synthetic benchmark manifests.
    #[command(subcommand)]
    Dataset(DatasetCmd),
    /// Document index cache management.
    #[command(subcommand)]
    Index(IndexCmd),
    /// Pipeline benchmark runs.
    #[command(subcommand)]
    Bench(BenchCmd),
}

#[derive(Debug, Subcommand)]
enum DatasetCmd {
    /// Write a manifest of synthetic utterances drawn from a document corpus.
    Synth {
        /// Number of utterances.
        #[arg(long = "n", value_parser = clap::value_parser!(u64).range(1..))]
        n: u64,
        /// Target mean utterance duration in seconds.
        #[arg(long, default_value_t = 6.36)]
        mean_duration: f64,
        /// Directory of `.txt` documents the questions are drawn from.
        #[arg(long)]
        docs_dir: PathBuf,
        #[arg(long, default_value_t = 42)]
        seed: u64,
        /// Output manifest path (JSON Lines).
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Debug, Subcommand)]
enum IndexCmd {
    /// Embed every `.txt` file in a directory and write the index cache.
    Build {
        #[arg(long)]
        docs_dir: PathBuf,
        #[arg(long)]
        cache: PathBuf,
        /// Embedding dimension; must match `embed_dim` of bench runs.
        #[arg(long, default_value_t = 256, value_parser = clap::value_parser!(u64).range(1..))]
        dim: u64,
    },
    /// Print the top-k documents for a query, one `doc_id<TAB>score` per line.
    Query {
        #[arg(long)]
        cache: PathBuf,
        #[arg(long)]
        query: String,
        #[arg(long, default_value_t = 3, value_parser = clap::value_parser!(u64).range(1..))]
        k: u64,
    },
}

#[derive(Debug, Subcommand)]
enum BenchCmd {
    /// Run every manifest utterance through the pipeline and write reports.
    Run {
        #[arg(long)]
        manifest: PathBuf,
        /// Config file; defaults apply when neither this nor the
        /// environment variable is set.
        #[arg(long, env = CONFIG_ENV)]
        config: Option<PathBuf>,
        #[arg(long)]
        cache: PathBuf,
        /// Directory for timings.csv, summary.json and table.txt.
        #[arg(long)]
        out_dir: PathBuf,
    },
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut stdout = io::stdout().lock();
    match cli.command {
        Command::Dataset(DatasetCmd::Synth {
            n,
            mean_duration,
            docs_dir,
            seed,
            out,
        }) => {
            let msg = commands::dataset_synth(n as usize, mean_duration, &docs_dir, seed, &out)?;
            writeln!(stdout, "{msg}")?;
        }
        Command::Index(IndexCmd::Build {
            docs_dir,
            cache,
            dim,
        }) => {
            let msg = commands::index_build(&docs_dir, &cache, dim as usize)?;
            writeln!(stdout, "{msg}")?;
        }
        Command::Index(IndexCmd::Query { cache, query, k }) => {
            write!(
                stdout,
                "{}",
                commands::index_query(&cache, &query, k as usize)?
            )?;
        }
        Command::Bench(BenchCmd::Run {
            manifest,
            config,
            cache,
            out_dir,
        }) => {
            let outcome = commands::bench_run(
                &manifest,
                config.as_deref(),
                &cache,
                &out_dir,
                &mut io::stderr(),
            )?;
            write!(stdout, "{}", outcome.table)?;
            writeln!(
                stdout,
                "{} completed, {} failed; reports in {}",
                outcome.completed,
                outcome.failed,
                outcome.out_dir.display()
            )?;
            if outcome.failed > 0 {
                return Err(CliError::Runtime(format!(
                    "{} of {} utterances failed",
                    outcome.failed,
                    outcome.failed + outcome.completed
                )));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}

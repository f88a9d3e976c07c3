mod commands;
mod repl;
mod transcript;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

#[derive(Parser, Debug)]
#[command(name = "logiplan", version, about = "Logic-program planning over payment data")]
struct Cli {
    /// Print structured output as JSON.
    #[arg(long, global = true)]
    json: bool,
    /// Run bulk work on one thread.
    #[arg(long, global = true)]
    sequential: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Read goals interactively and print their solutions.
    Repl {
        /// Program files to consult first.
        files: Vec<PathBuf>,
        #[command(flatten)]
        data: DataArg,
    },
    /// Load program files and print the resulting database.
    Consult {
        #[arg(required = true)]
        files: Vec<PathBuf>,
    },
    /// Print every solution of a goal, then exit.
    Query {
        #[arg(short, long)]
        goal: String,
        /// Program files to consult first.
        files: Vec<PathBuf>,
        /// Stop after this many solutions.
        #[arg(long)]
        limit: Option<usize>,
        #[command(flatten)]
        data: DataArg,
    },
    /// Load a dataset directory and print row counts.
    Ingest {
        #[command(flatten)]
        data: DataArg,
    },
    /// Score a plan envelope.
    EvalPlan {
        file: PathBuf,
        #[command(flatten)]
        agent: AgentArgs,
    },
    /// Answer a question through the planning loop.
    RunTask {
        #[arg(short, long)]
        query: String,
        /// Use this planner response instead of asking a provider.
        #[arg(long, conflicts_with = "replay")]
        plan: Option<PathBuf>,
        /// Print the first prompt and exit.
        #[arg(long)]
        print_prompt: bool,
        #[command(flatten)]
        agent: AgentArgs,
        #[command(flatten)]
        provider: ProviderArgs,
    },
    /// Run a task file and report exact-match accuracy.
    Bench {
        #[arg(long)]
        tasks: PathBuf,
        #[command(flatten)]
        agent: AgentArgs,
        #[command(flatten)]
        provider: ProviderArgs,
    },
    /// Write the synthetic dataset.
    GenFixture {
        #[arg(long, default_value_t = 7)]
        seed: u64,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 1000)]
        payments: usize,
        #[arg(long, default_value_t = 20)]
        rules: usize,
    },
}

#[derive(Args, Debug, Clone)]
struct DataArg {
    /// Dataset directory.
    #[arg(long = "data", env = "LOGIPLAN_DATA_DIR")]
    dir: Option<PathBuf>,
}

#[derive(Args, Debug, Clone)]
struct AgentArgs {
    #[command(flatten)]
    data: DataArg,
    /// Rubric JSON overriding the default penalties.
    #[arg(long)]
    rubric: Option<PathBuf>,
    /// Directory with template.txt, schema.txt and examples/.
    #[arg(long)]
    prompt_dir: Option<PathBuf>,
    #[arg(long)]
    threshold: Option<f64>,
    #[arg(long)]
    max_retries: Option<usize>,
}

#[derive(Args, Debug, Clone)]
struct ProviderArgs {
    /// Directory of recorded responses named by prompt hash.
    #[arg(long)]
    replay: Option<PathBuf>,
}

/// A failed command. User errors exit with 1, everything else with 2.
#[derive(Debug)]
enum CliError {
    User(String),
    Internal(String),
}

impl CliError {
    fn user(e: impl std::fmt::Display) -> CliError {
        CliError::User(e.to_string())
    }

    fn internal(e: impl std::fmt::Display) -> CliError {
        CliError::Internal(e.to_string())
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match commands::run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(CliError::User(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(1)
        }
        Err(CliError::Internal(m)) => {
            eprintln!("internal error: {m}");
            ExitCode::from(2)
        }
    }
}

//! `tm`: command-line front end for thinging-machine models.
//!
//! Artifacts go to stdout (or `-o`/`--*-out` files), diagnostics to stderr.
//! Exit codes: 0 success, 1 model or constraint violation, 2 usage, 3
//! runtime or I/O failure.

mod commands;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "tm", version, about = "Thinging-machine modeling toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Parse a `.tm` file and print it in canonical form.
    Parse {
        file: PathBuf,
        /// Print the parsed model as JSON instead.
        #[arg(long)]
        json: bool,
    },
    /// Run static and event validation.
    Validate { file: PathBuf },
    /// Translate an `.ers` schema into a `.tm` model.
    TranslateEr {
        schema: PathBuf,
        #[arg(short = 'o', long = "output")]
        output: Option<PathBuf>,
    },
    /// Print the resolved events of a model as JSON.
    Events { file: PathBuf },
    /// Print the behavior graph, or check a trace against it.
    Behavior {
        file: PathBuf,
        /// Use the declared chronology instead of deriving it.
        #[arg(long)]
        declared: bool,
        /// Trace JSON (a trace object or an array of events) to check.
        #[arg(long)]
        check: Option<PathBuf>,
    },
    /// Run a model against a store and a request.
    Simulate {
        model: PathBuf,
        #[arg(long)]
        store: PathBuf,
        #[arg(long)]
        request: PathBuf,
        /// `.tm` file with event declarations replacing the model's own.
        #[arg(long)]
        events: Option<PathBuf>,
        /// Where to write the trace; `-` or absent means stdout.
        #[arg(long)]
        trace_out: Option<PathBuf>,
        #[arg(long)]
        store_out: Option<PathBuf>,
        /// Dotted path of the entry stage.
        #[arg(long)]
        entry: Option<String>,
        #[arg(long)]
        max_steps: Option<usize>,
    },
    /// Check a functional dependency over a relation.
    CheckFd {
        file: PathBuf,
        /// FD such as `A,B->C`.
        #[arg(long)]
        fd: String,
        /// Relation to read when the file is a store.
        #[arg(long)]
        relation: Option<String>,
    },
    /// Render a model, or its behavior graph, as DOT.
    ExportDot {
        model: PathBuf,
        /// Render the behavior graph; reads it from FILE when given,
        /// otherwise derives it from the model.
        #[arg(long, num_args = 0..=1)]
        behavior: Option<Option<PathBuf>>,
    },
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Parse { file, json } => commands::parse(&file, json),
        Command::Validate { file } => commands::validate(&file),
        Command::TranslateEr { schema, output } => commands::translate_er(&schema, output.as_deref()),
        Command::Events { file } => commands::events(&file),
        Command::Behavior { file, declared, check } => commands::behavior(&file, declared, check.as_deref()),
        Command::Simulate { model, store, request, events, trace_out, store_out, entry, max_steps } => {
            commands::simulate(commands::SimulateArgs {
                model,
                store,
                request,
                events,
                trace_out,
                store_out,
                entry,
                max_steps,
            })
        }
        Command::CheckFd { file, fd, relation } => commands::check_fd(&file, &fd, relation.as_deref()),
        Command::ExportDot { model, behavior } => commands::export_dot(&model, behavior),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(failure) => {
            if let Some(msg) = failure.message() {
                eprintln!("tm: {msg}");
            }
            ExitCode::from(failure.code())
        }
    }
}

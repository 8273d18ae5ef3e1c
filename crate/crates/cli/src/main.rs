mod args;
mod commands;

use std::process::ExitCode;

use clap::Parser;
use orthonet_core::Error;

use args::{Cli, Command};

fn error_kind(e: &Error) -> &'static str {
    match e {
        Error::InvalidArgument(_) => "invalid_argument",
        Error::NumericalFailure { .. } => "numerical_failure",
        Error::RankDeficient { .. } => "rank_deficient",
        Error::TrainingDiverged { .. } => "training_diverged",
        Error::Parse { .. } => "parse",
        Error::Io { .. } => "io",
        Error::Json { .. } => "json",
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = if cli.quiet { "error" } else { "info" };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level))
        .format_timestamp(None)
        .init();

    let result = match &cli.command {
        Command::Synth(a) => commands::synth(a),
        Command::Pipeline(a) => commands::pipeline(a),
        Command::Predict(a) => commands::predict(a),
        Command::Evaluate(a) => commands::evaluate(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            // One JSON object on stderr so scripts can tell failure kinds apart.
            let report = serde_json::json!({ "error": error_kind(&e), "message": e.to_string() });
            eprintln!("{report}");
            ExitCode::from(if e.is_usage() { 2 } else { 1 })
        }
    }
}

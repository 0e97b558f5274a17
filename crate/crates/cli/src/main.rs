//! `dentalign` — evaluation and registration harness for dental CBCT/IOS
//! data.
//!
//! Exit codes: 0 on success, 1 for metric/domain errors, 2 for I/O or
//! parse errors. Batch subcommands report per-case failures on stderr and
//! keep going; they only fail outright when nothing could be evaluated.

mod commands;

use clap::{Parser, Subcommand};
use dentalign_core::Error;

#[derive(Parser)]
#[command(
    name = "dentalign",
    version,
    about = "Segmentation and registration evaluation for dental CBCT/IOS data"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evaluate segmentation predictions against ground truth volumes.
    EvalSeg(commands::eval_seg::Args),
    /// Evaluate predicted rigid transforms against ground truth.
    EvalReg(commands::eval_reg::Args),
    /// Register a source cloud onto a target cloud or CBCT volume.
    Register(commands::register::Args),
    /// Run the staged pseudo-label protocol over a pair manifest.
    PseudoRun(commands::pseudo_run::Args),
    /// Aggregate per-team reports into a ranked leaderboard.
    Leaderboard(commands::leaderboard::Args),
    /// Generate seeded synthetic fixtures (arch pairs or label maps).
    Synth(commands::synth::Args),
}

fn main() {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::EvalSeg(args) => commands::eval_seg::run(args),
        Command::EvalReg(args) => commands::eval_reg::run(args),
        Command::Register(args) => commands::register::run(args),
        Command::PseudoRun(args) => commands::pseudo_run::run(args),
        Command::Leaderboard(args) => commands::leaderboard::run(args),
        Command::Synth(args) => commands::synth::run(args),
    };
    match result {
        Ok(()) => {}
        Err(err) => {
            eprintln!("error: {err}");
            std::process::exit(exit_code(&err));
        }
    }
}

fn exit_code(err: &Error) -> i32 {
    if err.is_io_or_parse() {
        2
    } else {
        1
    }
}

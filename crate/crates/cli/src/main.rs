//! `eerd-pipeline`: forge mistake corpora, refine traces, export alignment
//! datasets and evaluate diagnostic feedback.

mod commands;
mod config;
mod error;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};

use eerd_core::exec::Execution;
use eerd_core::export::DatasetStage;
use eerd_core::forge::Split;
use eerd_gateway::mock::MockTransport;
use eerd_gateway::ModelHandle;

use commands::{EvalSource, Session};
use config::{JudgeMode, PipelineConfig};
use error::CliError;

#[derive(Parser, Debug)]
#[command(name = "eerd-pipeline", version, about)]
struct Cli {
    /// Pipeline configuration file (TOML).
    #[arg(short, long, global = true, default_value = "pipeline.toml")]
    config: PathBuf,
    /// Overrides the configured seed.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Worker threads for item-level work; 1 is sequential, 0 all cores.
    #[arg(long, global = true)]
    jobs: Option<usize>,
    /// Overrides the configured judge mode.
    #[arg(long, global = true, value_enum)]
    judge: Option<JudgeMode>,
    /// Replay model calls from a JSON script instead of the network.
    #[arg(long, global = true)]
    mock_script: Option<PathBuf>,
    /// More log output; repeat for debug.
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Inject mistakes into every configured schema.
    Forge,
    /// Run the audit and polish loops over every forged variant. Resumes
    /// from existing per-variant logs.
    Refine,
    /// Write SFT and preference datasets from the refinement logs.
    Export {
        #[arg(long, value_enum, default_value_t = StageArg::All)]
        stage: StageArg,
    },
    /// Score feedback per variant and write the category table.
    Eval {
        /// Feedback to score, one `{variant_id, feedback}` object per line.
        #[arg(long, conflicts_with = "refined")]
        predictions: Option<PathBuf>,
        /// Score the refined feedback from the refinement logs.
        #[arg(long)]
        refined: bool,
        #[arg(long, value_enum, default_value_t = SplitArg::Test)]
        split: SplitArg,
    },
    /// Print the category table of the last evaluation.
    Report {
        #[arg(long, value_enum, default_value_t = Format::Table)]
        format: Format,
    },
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum StageArg {
    All,
    ReasoningSft,
    ReasoningDpo,
    FeedbackSft,
    FeedbackDpo,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum SplitArg {
    Train,
    Test,
    All,
}

#[derive(Debug, Clone, Copy, ValueEnum)]
enum Format {
    Table,
    Csv,
}

fn run(cli: Cli) -> Result<(), CliError> {
    let mut cfg = PipelineConfig::load(&cli.config)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(jobs) = cli.jobs {
        cfg.jobs = jobs;
    }
    if let Some(judge) = cli.judge {
        cfg.judge_mode = judge;
    }
    let mock = match &cli.mock_script {
        Some(path) => Some(ModelHandle::mock_script(
            MockTransport::load(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?,
        )),
        None => None,
    };
    let session = Session {
        exec: Execution::from_jobs(cfg.jobs),
        cfg,
        mock,
    };
    match cli.command {
        Command::Forge => session.forge(),
        Command::Refine => session.refine(),
        Command::Export { stage } => session.export(match stage {
            StageArg::All => None,
            StageArg::ReasoningSft => Some(DatasetStage::ReasoningSft),
            StageArg::ReasoningDpo => Some(DatasetStage::ReasoningDpo),
            StageArg::FeedbackSft => Some(DatasetStage::FeedbackSft),
            StageArg::FeedbackDpo => Some(DatasetStage::FeedbackDpo),
        }),
        Command::Eval {
            predictions,
            refined,
            split,
        } => {
            let source = match (predictions, refined) {
                (Some(p), _) => EvalSource::Predictions(p),
                (None, true) => EvalSource::Refined,
                (None, false) => EvalSource::Oracle,
            };
            session.eval(
                source,
                match split {
                    SplitArg::Train => Some(Split::Train),
                    SplitArg::Test => Some(Split::Test),
                    SplitArg::All => None,
                },
            )
        }
        Command::Report { format } => session.report(matches!(format, Format::Csv)),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_code()
        }
    }
}

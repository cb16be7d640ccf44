use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, CommandFactory, FromArgMatches, Parser, Subcommand};

use kinemo::dataset::CORPUS_FORMAT_VERSION;
use kinemo::evaluation::REPORT_FORMAT_VERSION;
use kinemo::model::CHECKPOINT_FORMAT_VERSION;
use kinemo::streaming::STREAM_SCHEMA_VERSION;

mod commands;

#[derive(Parser, Debug)]
#[command(name = "kinemo", about = "Emotional-intensity estimation from body-pose sequences")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Convert a quaternion-frame corpus into the descriptor corpus format.
    Convert(ConvertArgs),
    /// Mirror and phase-subsample every record of a corpus.
    Augment(AugmentArgs),
    /// Generate a seeded synthetic corpus.
    Synth(SynthArgs),
    /// Train a model on a corpus and write a checkpoint.
    Train(TrainArgs),
    /// Grouped k-fold cross-validation of one or more methods.
    Eval(EvalArgs),
    /// Score every record of a corpus with a trained checkpoint.
    Infer(InferArgs),
    /// Sliding-window inference over JSON frames on stdin or TCP.
    Stream(StreamArgs),
}

#[derive(Args, Debug)]
struct ConvertArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// Built-in skeleton mapping (kinect25, mocap23, canonical); detected
    /// from joint names when omitted.
    #[arg(long)]
    profile: Option<String>,
    /// Mapping file (target topology plus joint-name table).
    #[arg(long, conflicts_with = "profile")]
    topology: Option<PathBuf>,
}

#[derive(Args, Debug)]
struct AugmentArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 30.0)]
    target_rate: f64,
}

#[derive(Args, Debug)]
struct SynthArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 200)]
    count: usize,
    /// Comma-separated emotion vocabulary.
    #[arg(long, value_delimiter = ',', default_value = "joy,surprise,sadness")]
    emotions: Vec<String>,
    #[arg(long, default_value_t = 30.0)]
    sample_rate: f64,
    #[arg(long, default_value_t = 24)]
    min_len: usize,
    #[arg(long, default_value_t = 48)]
    max_len: usize,
}

#[derive(Args, Debug, Clone)]
struct TrainFlags {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 100)]
    epochs: usize,
    #[arg(long, default_value_t = 256)]
    batch_size: usize,
    #[arg(long, default_value_t = 1e-3)]
    lr: f64,
    #[arg(long, default_value_t = 64)]
    hidden1: usize,
    #[arg(long, default_value_t = 128)]
    hidden2: usize,
}

#[derive(Args, Debug)]
struct TrainArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    /// `lstm` or `svr`.
    #[arg(long, default_value = "lstm")]
    method: String,
    #[command(flatten)]
    train: TrainFlags,
}

#[derive(Args, Debug)]
struct EvalArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 5)]
    k: usize,
    /// Comma-separated methods: lstm, lstm-blind, svr.
    #[arg(long, value_delimiter = ',', default_value = "lstm,svr")]
    methods: Vec<String>,
    #[command(flatten)]
    train: TrainFlags,
}

#[derive(Args, Debug)]
struct InferArgs {
    #[arg(long = "in")]
    input: PathBuf,
    #[arg(long)]
    model: PathBuf,
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 0.5)]
    threshold: f64,
}

#[derive(Args, Debug)]
struct StreamArgs {
    #[arg(long)]
    model: PathBuf,
    /// Joint layout of incoming frames: kinect25, mocap23 or canonical.
    #[arg(long, default_value = "kinect25")]
    profile: String,
    /// Mapping file replacing the profile's built-in joint table.
    #[arg(long)]
    topology: Option<PathBuf>,
    #[arg(long, default_value_t = 90)]
    window: usize,
    /// Frames between estimates, or `inf` for a single estimate.
    #[arg(long, default_value = "15", value_parser = parse_hop)]
    hop: Hop,
    #[arg(long, default_value_t = 0.5)]
    threshold: f64,
    /// Emotion assumed until a frame names one.
    #[arg(long)]
    emotion: Option<String>,
    /// Serve TCP on this address instead of stdin/stdout.
    #[arg(long)]
    listen: Option<String>,
}

#[derive(Debug, Clone, Copy)]
struct Hop(Option<usize>);

fn parse_hop(s: &str) -> Result<Hop, String> {
    match s {
        "inf" | "none" => Ok(Hop(None)),
        n => n
            .parse::<usize>()
            .map(|v| Hop(Some(v)))
            .map_err(|_| format!("expected a frame count or `inf`, got {n:?}")),
    }
}

fn version_string() -> &'static str {
    let s = format!(
        "{} (corpus format {CORPUS_FORMAT_VERSION}, checkpoint format {CHECKPOINT_FORMAT_VERSION}, \
         report format {REPORT_FORMAT_VERSION}, stream schema {STREAM_SCHEMA_VERSION})",
        env!("CARGO_PKG_VERSION")
    );
    Box::leak(s.into_boxed_str())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info"))
        .format_timestamp(None)
        .init();
    let matches = match Cli::command().version(version_string()).try_get_matches() {
        Ok(m) => m,
        Err(e) if !e.use_stderr() => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let rendered = e.render().to_string();
            eprintln!("error:usage: {}", rendered.trim_start_matches("error: ").trim_end());
            return ExitCode::from(2);
        }
    };
    let cli = Cli::from_arg_matches(&matches).expect("matches come from this parser");
    match commands::run(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let category = e.category();
            eprintln!("error:{}: {e}", category.as_str());
            ExitCode::from(category.exit_code() as u8)
        }
    }
}

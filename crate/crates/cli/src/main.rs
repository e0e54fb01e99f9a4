//! `light`: one entry point for playing, hosting, evaluating and
//! inspecting episodes. Exit status is 0 on success, 1 on a domain error
//! (reported on stderr) and 2 on a usage error.

mod common;
mod data_cmds;
mod eval;
mod play;
mod serve;
mod turn_line;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, CommandFactory, Parser, Subcommand};

use common::UsageError;

/// Seed used by randomized commands when `--seed` is not given.
pub const DEFAULT_SEED: u64 = 0;

#[derive(Parser, Debug)]
#[command(name = "light", version, about = "Grounded-dialogue text adventure: play, serve, evaluate and inspect episodes")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Play one episode in the terminal against a scripted or in-process partner
    Play(PlayArgs),
    /// Host live episodes over NDJSON/TCP and WebSocket
    Serve(ServeArgs),
    /// Score a ranker on the speech, action or emote task
    Eval(EvalArgs),
    /// Train a bag-of-words embedding ranker
    TrainEmbed(TrainArgs),
    /// Print per-split dataset statistics
    Stats(StatsArgs),
    /// Convert a raw dialogue release into world and episode files
    Import(ImportArgs),
    /// Nearest registered phrases to a query in an embedding model
    Nn(NnArgs),
    /// Write action/emote co-occurrence matrices as CSV
    ExportCooccurrence(CooccurArgs),
}

/// A directory holding `manifest.json`, or the manifest itself.
#[derive(Args, Debug, Clone)]
struct DataArg {
    /// Dataset root (directory with manifest.json) or manifest path
    #[arg(long, env = "LIGHT_DATA_DIR", value_name = "DIR")]
    data: PathBuf,
}

#[derive(Args, Debug)]
pub struct PlayArgs {
    /// World file to play in
    #[arg(long, value_name = "FILE")]
    world: PathBuf,
    /// Character to play (id or name)
    #[arg(long, value_name = "NAME")]
    seat: String,
    /// Partner character; another character in the same room by default
    #[arg(long, value_name = "NAME")]
    partner: Option<String>,
    /// Let the partner take the first turn
    #[arg(long)]
    second: bool,
    /// Turn lines for the partner, one per turn (same syntax as typed input)
    #[arg(long, value_name = "FILE")]
    partner_script: Option<PathBuf>,
    /// In-process partner when no script is given: random, ir or a model file
    #[arg(long, value_name = "AGENT", default_value = "random")]
    agent: String,
    /// Dataset whose train utterances the partner may say (needed for ir)
    #[arg(long, env = "LIGHT_DATA_DIR", value_name = "DIR")]
    data: Option<PathBuf>,
    /// The episode ends after this many turns
    #[arg(long, value_name = "N", default_value_t = 14)]
    max_turns: usize,
    /// Episode log to write on exit; the world copy goes next to it
    #[arg(long, value_name = "FILE", default_value = "play.jsonl")]
    log: PathBuf,
    /// Seed for the partner and fallback moves
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
}

#[derive(Args, Debug)]
pub struct ServeArgs {
    /// NDJSON/TCP port (0 picks a free one)
    #[arg(long, value_name = "PORT", default_value_t = 7040)]
    port: u16,
    /// Address to bind
    #[arg(long, value_name = "ADDR", default_value = "127.0.0.1")]
    host: String,
    /// World file hosted by every session
    #[arg(long, value_name = "FILE")]
    world: PathBuf,
    /// Seat policy: human-vs-agent, human-vs-human or agent-vs-agent
    #[arg(long, value_name = "POLICY", default_value = "human-vs-agent")]
    seats: light_server::SeatPolicy,
    /// Turn timeout for human seats in seconds, or "none"
    #[arg(long, value_name = "SECS", default_value = "300")]
    timeout: String,
    /// Turn timeout for agent-role seats in seconds, or "none"
    #[arg(long, value_name = "SECS", default_value = "none")]
    agent_timeout: String,
    /// Directory for finished episode logs
    #[arg(long, value_name = "DIR", default_value = "logs")]
    log_dir: PathBuf,
    /// Static files to serve over HTTP next to the /ws endpoint
    #[arg(long, value_name = "DIR")]
    web_root: Option<PathBuf>,
    /// HTTP port for /ws and --web-root (default: --port + 1)
    #[arg(long, value_name = "PORT")]
    ws_port: Option<u16>,
    /// Two characters in turn order, comma separated
    #[arg(long, value_name = "A,B")]
    participants: Option<String>,
    /// In-process agent: random, ir or a model file
    #[arg(long, value_name = "AGENT", default_value = "random")]
    agent: String,
    /// Dataset for utterance candidates and the ir agent
    #[arg(long, env = "LIGHT_DATA_DIR", value_name = "DIR")]
    data: Option<PathBuf>,
    /// Turns per episode
    #[arg(long, value_name = "N", default_value_t = 14)]
    max_turns: usize,
    /// Rejected actions use up the turn
    #[arg(long)]
    strict: bool,
    /// Sessions to run under agent-vs-agent; the server exits after them
    #[arg(long, value_name = "N", default_value_t = 1)]
    agent_sessions: usize,
    /// Seed for agents, candidates and fallback moves
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
}

#[derive(Args, Debug)]
pub struct EvalArgs {
    /// Task to score: speech, action, emote or all (repeatable)
    #[arg(long, value_name = "TASK", required = true)]
    task: Vec<String>,
    /// Ranker: random, ir or an embedding model file
    #[arg(long, value_name = "MODEL")]
    model: String,
    #[command(flatten)]
    data: DataArg,
    /// Evaluate this split only (repeatable; all splits pooled when absent)
    #[arg(long, value_name = "SPLIT")]
    split: Vec<light_core::episode::Split>,
    /// Seed for distractor sampling and random choices
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
    /// Directory for metrics.tsv and metrics.json
    #[arg(long, value_name = "DIR", default_value = ".")]
    out: PathBuf,
    /// Run on one thread (results are identical)
    #[arg(long)]
    sequential: bool,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    #[command(flatten)]
    data: DataArg,
    /// Model file to write
    #[arg(long, value_name = "FILE")]
    out: PathBuf,
    /// Tasks whose train examples feed training (repeatable; default all three)
    #[arg(long, value_name = "TASK")]
    task: Vec<light_core::episode::TaskKind>,
    /// Embedding dimension
    #[arg(long, value_name = "N", default_value_t = 16)]
    dim: usize,
    /// Passes over the training pairs
    #[arg(long, value_name = "N", default_value_t = 10)]
    epochs: usize,
    /// SGD step size
    #[arg(long, value_name = "X", default_value_t = 0.5)]
    lr: f64,
    /// Ranking margin
    #[arg(long, value_name = "X", default_value_t = 0.2)]
    margin: f64,
    /// Pairs per minibatch (in-batch negatives)
    #[arg(long, value_name = "N", default_value_t = 32)]
    batch_size: usize,
    /// Seed for initialization and shuffling
    #[arg(long, value_name = "N")]
    seed: Option<u64>,
}

#[derive(Args, Debug)]
pub struct StatsArgs {
    #[command(flatten)]
    data: DataArg,
    /// Split to report (repeatable; default all four)
    #[arg(long, value_name = "SPLIT")]
    split: Vec<light_core::episode::Split>,
    /// Print JSON instead of a table
    #[arg(long)]
    json: bool,
}

#[derive(Args, Debug)]
pub struct ImportArgs {
    /// Directory with train.json, valid.json, test.json and test_unseen.json
    #[arg(long, value_name = "DIR")]
    raw: PathBuf,
    /// Output dataset root
    #[arg(long, value_name = "DIR")]
    out: PathBuf,
}

#[derive(Args, Debug)]
pub struct NnArgs {
    /// Embedding model file
    #[arg(long, value_name = "FILE")]
    model: PathBuf,
    /// Query text
    #[arg(long, value_name = "TEXT")]
    query: String,
    /// Phrase kind: object, character, location, action or vocabulary
    #[arg(long, value_name = "KIND")]
    kind: light_core::agents::PhraseKind,
    /// Number of neighbors
    #[arg(short = 'k', value_name = "N", default_value_t = 10)]
    k: usize,
}

#[derive(Args, Debug)]
pub struct CooccurArgs {
    #[command(flatten)]
    data: DataArg,
    /// Directory for the CSV files
    #[arg(long, value_name = "DIR", default_value = ".")]
    out: PathBuf,
    /// Count this split only (repeatable; all splits when absent)
    #[arg(long, value_name = "SPLIT")]
    split: Vec<light_core::episode::Split>,
}

fn run(cli: Cli) -> anyhow::Result<()> {
    match cli.command {
        Command::Play(a) => play::run(a),
        Command::Serve(a) => serve::run(a),
        Command::Eval(a) => eval::run(a),
        Command::TrainEmbed(a) => eval::train(a),
        Command::Stats(a) => data_cmds::stats(a),
        Command::Import(a) => data_cmds::import(a),
        Command::Nn(a) => eval::nn(a),
        Command::ExportCooccurrence(a) => data_cmds::cooccurrence(a),
    }
}

/// Synopsis of the subcommand named by the first argument, or of `light`.
fn synopsis() -> String {
    let name = std::env::args().nth(1).unwrap_or_default();
    let mut cmd = Cli::command();
    cmd.build();
    match cmd.find_subcommand_mut(&name) {
        Some(sub) => sub.render_usage().to_string(),
        None => cmd.render_usage().to_string(),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let code = e.exit_code();
            let msg = e.render().to_string();
            if code == 2 && !msg.contains("Usage:") {
                let hint = "For more information, try '--help'.";
                let body = msg.trim_end().trim_end_matches(hint).trim_end();
                eprintln!("{body}\n\n{}\n\n{hint}", synopsis());
            } else {
                let _ = e.print();
            }
            return ExitCode::from(code as u8);
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if e.is::<UsageError>() => {
            eprintln!("error: {e}\n\n{}\n\nFor more information, try '--help'.", synopsis());
            ExitCode::from(2)
        }
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}

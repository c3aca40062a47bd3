//! `statgraph`: generate graphs, compute distances, sample pairs, train
//! embeddings, evaluate and export them. Each subcommand writes its files
//! plus a `<command>.manifest.json` into the output directory.

mod commands;
mod manifest;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use commands::{
    BourgainArgs, DistancesArgs, EmbedArgs, EvalArgs, ExportArgs, GenerateArgs, SampleArgs,
};
use manifest::{ensure_dir, write_manifest, ManifestContext, RunLog};

/// Environment variable naming the default output root.
pub const OUT_ENV: &str = "STATGRAPH_OUT";

#[derive(Parser, Debug)]
#[command(
    name = "statgraph",
    version,
    about = "Directed graph embeddings on statistical manifolds"
)]
struct Cli {
    /// Single-threaded execution; outputs are byte-identical for a seed.
    #[arg(long, global = true)]
    deterministic: bool,

    /// Output directory. Defaults to `$STATGRAPH_OUT/<command>`, or
    /// `statgraph-out/<command>` when the variable is unset.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write a generated graph as an edge list.
    Generate(GenerateArgs),
    /// All-pairs hop distances (binary matrix) and graph statistics.
    Distances(DistancesArgs),
    /// Sampled training pairs as CSV.
    Sample(SampleArgs),
    /// Train an embedding.
    Embed(EmbedArgs),
    /// Correlation and MI between inverse distances and model similarity.
    Eval(EvalArgs),
    /// Half-plane, disc and hyperboloid coordinates of a model.
    ExportHyperbolic(ExportArgs),
    /// Random-subset L1 baseline embedding with its bound report.
    Bourgain(BourgainArgs),
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Generate(_) => "generate",
            Command::Distances(_) => "distances",
            Command::Sample(_) => "sample",
            Command::Embed(_) => "embed",
            Command::Eval(_) => "eval",
            Command::ExportHyperbolic(_) => "export-hyperbolic",
            Command::Bourgain(_) => "bourgain",
        }
    }
}

const EXIT_VALIDATION: u8 = 2;
const EXIT_CAPACITY: u8 = 3;
const EXIT_NUMERIC: u8 = 4;

fn exit_code(err: &anyhow::Error) -> u8 {
    use statgraph_core::Error;
    for cause in err.chain() {
        if let Some(e) = cause.downcast_ref::<Error>() {
            return match e {
                Error::Capacity { .. } => EXIT_CAPACITY,
                Error::NonFinite(_) => EXIT_NUMERIC,
                _ => EXIT_VALIDATION,
            };
        }
    }
    EXIT_VALIDATION
}

fn out_dir(cli_out: Option<PathBuf>, command: &str) -> PathBuf {
    cli_out.unwrap_or_else(|| {
        let root = std::env::var_os(OUT_ENV)
            .map(PathBuf::from)
            .unwrap_or_else(|| PathBuf::from("statgraph-out"));
        root.join(command)
    })
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let name = cli.command.name();
    let dir = out_dir(cli.out, name);

    if cli.deterministic {
        // the pool can only be configured once; a failure means it already is
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(1)
            .build_global();
    }
    if let Err(e) = ensure_dir(&dir) {
        eprintln!("error: {e:#}");
        return ExitCode::from(EXIT_VALIDATION);
    }

    let start = Instant::now();
    let mut log = RunLog::default();
    let result = match &cli.command {
        Command::Generate(a) => commands::generate(a, &dir, &mut log),
        Command::Distances(a) => commands::distances(a, &dir, &mut log),
        Command::Sample(a) => commands::sample(a, &dir, &mut log),
        Command::Embed(a) => commands::embed(a, cli.deterministic, &dir, &mut log),
        Command::Eval(a) => commands::eval(a, &dir, &mut log),
        Command::ExportHyperbolic(a) => commands::export_hyperbolic(a, &dir, &mut log),
        Command::Bourgain(a) => commands::bourgain(a, &dir, &mut log),
    };

    let ctx = ManifestContext {
        command: name,
        argv: std::env::args().collect(),
        deterministic: cli.deterministic,
        duration: start.elapsed(),
    };
    let error = result.as_ref().err().map(|e| format!("{e:#}"));
    if let Err(e) = write_manifest(&dir, ctx, &log, error) {
        eprintln!("warning: could not write manifest: {e:#}");
    }

    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}

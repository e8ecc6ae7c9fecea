//! The `graphon-ignr` command line: dataset generation, training,
//! evaluation, embedding extraction, graph generation, and report
//! rendering, glued into reproducible recipes.
//!
//! Exit codes: 0 success, 2 usage, 3 data error, 4 numerical failure.

mod commands;
mod recipe;
mod svg;

pub use recipe::{run_recipe, EvalStage, ExperimentRecipe, GenStage};

use clap::{Args, Parser, Subcommand};

use crate::error::Error;

#[derive(Parser)]
#[command(
    name = "graphon-ignr",
    about = "Resolution-free graphon models under a Gromov-Wasserstein loss",
    version
)]
struct Cli {
    /// Worker threads for parallel evaluation (also: IGNR_JOBS).
    #[arg(long, global = true)]
    jobs: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Sample a dataset from a closed-form graphon or family.
    Gen(GenArgs),
    /// Fit a model to a dataset and write a checkpoint.
    Train(TrainArgs),
    /// Compare a trained model against ground truth.
    Eval(EvalArgs),
    /// Write the latent code of every graph in a dataset.
    Embed(EmbedArgs),
    /// Sample graphs (and probability grids) from a trained model.
    Generate(GenerateArgs),
    /// Render report tables and a latent scatter plot.
    Report(ReportArgs),
    /// Run a gen -> train -> eval pipeline from a recipe file.
    Recipe(RecipeArgs),
}

#[derive(Args)]
pub struct GenArgs {
    /// benchmark:K (0-12), s1, s2, two-block:ALPHA, or noisy-ring:ALPHA.
    #[arg(long)]
    spec: String,
    /// Comma-separated graph sizes (single-graphon specs).
    #[arg(long)]
    sizes: Option<String>,
    /// Number of graphs (families).
    #[arg(long)]
    count: Option<usize>,
    /// Independent repetitions; each trial is written to its own file.
    #[arg(long, default_value_t = 1)]
    trials: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: std::path::PathBuf,
}

#[derive(Args)]
pub struct TrainArgs {
    /// ignr, cignr, or discrete (may also come from --config).
    #[arg(long)]
    objective: Option<String>,
    #[arg(long)]
    data: std::path::PathBuf,
    /// Flat key = value config file.
    #[arg(long)]
    config: Option<std::path::PathBuf>,
    #[arg(long)]
    out: std::path::PathBuf,
    #[arg(long)]
    epochs: Option<usize>,
    #[arg(long)]
    lr: Option<f64>,
    /// cg or pg.
    #[arg(long)]
    solver: Option<String>,
    #[arg(long)]
    latent_dim: Option<usize>,
    #[arg(long)]
    seed: Option<u64>,
    /// Grid resolution K of the discrete baseline decoder.
    #[arg(long)]
    resolution: Option<usize>,
}

#[derive(Args)]
pub struct EvalArgs {
    /// One checkpoint per trial.
    #[arg(long, required = true)]
    ckpt: Vec<std::path::PathBuf>,
    /// Ground-truth spec for single-graphon checkpoints.
    #[arg(long)]
    spec: Option<String>,
    /// Labeled test dataset for autoencoder checkpoints.
    #[arg(long)]
    data: Option<std::path::PathBuf>,
    #[arg(long, default_value_t = 300)]
    resolution: usize,
    /// Comma-separated metrics: gw, msesorted.
    #[arg(long, default_value = "gw")]
    metric: String,
    /// Solver for the error computation (cg or pg).
    #[arg(long, default_value = "cg")]
    solver: String,
    #[arg(long)]
    out_dir: std::path::PathBuf,
}

#[derive(Args)]
pub struct EmbedArgs {
    #[arg(long)]
    ckpt: std::path::PathBuf,
    #[arg(long)]
    data: std::path::PathBuf,
    #[arg(long)]
    out: std::path::PathBuf,
}

#[derive(Args)]
pub struct GenerateArgs {
    #[arg(long)]
    ckpt: std::path::PathBuf,
    /// Literal latent vector, comma-separated.
    #[arg(long)]
    z: Option<String>,
    /// Take the latent code of this graph index in --data.
    #[arg(long)]
    z_index: Option<usize>,
    /// Dataset backing --z-index.
    #[arg(long)]
    data: Option<std::path::PathBuf>,
    #[arg(long)]
    sizes: String,
    /// deterministic or stochastic node placement.
    #[arg(long, default_value = "deterministic")]
    mode: String,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: std::path::PathBuf,
}

#[derive(Args)]
pub struct ReportArgs {
    /// report.csv files to aggregate.
    #[arg(long, required = true)]
    input: Vec<std::path::PathBuf>,
    /// Embeddings CSV for the latent scatter.
    #[arg(long)]
    embeddings: Option<std::path::PathBuf>,
    #[arg(long)]
    out_dir: std::path::PathBuf,
}

#[derive(Args)]
pub struct RecipeArgs {
    #[arg(long)]
    file: std::path::PathBuf,
}

fn exit_code(err: &Error) -> i32 {
    match err {
        Error::InputDomain(_) | Error::DimensionMismatch(_) => 2,
        Error::Data(_) | Error::Io(_) => 3,
        Error::Numerical(_) => 4,
    }
}

/// Entry point used by the binary; parses, dispatches, and maps errors to
/// exit codes (clap itself exits with 2 on usage problems).
pub fn main() {
    let cli = Cli::parse();
    let jobs = cli.jobs.or_else(|| {
        std::env::var("IGNR_JOBS")
            .ok()
            .and_then(|s| s.parse().ok())
    });
    if let Some(n) = jobs {
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n).build_global();
    }
    let result = match cli.command {
        Command::Gen(args) => commands::cmd_gen(&args),
        Command::Train(args) => commands::cmd_train(&args),
        Command::Eval(args) => commands::cmd_eval(&args),
        Command::Embed(args) => commands::cmd_embed(&args),
        Command::Generate(args) => commands::cmd_generate(&args),
        Command::Report(args) => commands::cmd_report(&args),
        Command::Recipe(args) => commands::cmd_recipe(&args),
    };
    if let Err(err) = result {
        eprintln!("error: {err}");
        std::process::exit(exit_code(&err));
    }
}

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod files;
mod manifest;

#[derive(Parser, Debug)]
#[command(name = "sparseview", version, about = "Deep multiview feature selection")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Generate a synthetic benchmark with planted signal features.
    Simulate(SimulateArgs),
    /// Stage 1: fit decoders and latent code under the sparsity penalty.
    Train(TrainArgs),
    /// Rank columns of a stage-1 fit and write the selected indices.
    Rank(RankArgs),
    /// Stage 2: refit on the selected columns; trains an SVM when labels exist.
    Refit(RefitArgs),
    /// Stage 3: infer latent codes for new samples with frozen decoders.
    Predict(PredictArgs),
    /// Classification error and per-view selection accuracy.
    Evaluate(EvaluateArgs),
    /// Random search over a hyperparameter grid on an 80/20 split.
    Hypersearch(HypersearchArgs),
    /// K-means on a latent code.
    Cluster(ClusterArgs),
}

#[derive(Args, Debug)]
struct Output {
    /// Directory for every output file; created when missing.
    #[arg(long)]
    out_dir: PathBuf,
}

#[derive(Args, Debug)]
pub struct SimulateArgs {
    #[command(subcommand)]
    scenario: Scenario,
}

#[derive(Subcommand, Debug)]
pub enum Scenario {
    /// Two classes, trigonometric signals in the first 10% of each view.
    Nonlinear {
        #[arg(long, default_value_t = 200)]
        n1: usize,
        #[arg(long, default_value_t = 150)]
        n2: usize,
        #[arg(long, default_value_t = 500)]
        p1: usize,
        #[arg(long, default_value_t = 500)]
        p2: usize,
        #[command(flatten)]
        common: SimCommon,
    },
    /// Three Gaussian classes with correlated views.
    Linear {
        #[arg(long, default_value_t = 180)]
        n_per_class: usize,
        #[arg(long, default_value_t = 1000)]
        p1: usize,
        #[arg(long, default_value_t = 1000)]
        p2: usize,
        #[arg(long, default_value_t = 0.9)]
        rho1: f64,
        #[arg(long, default_value_t = 0.7)]
        rho2: f64,
        #[arg(long, default_value_t = 0.5)]
        c: f64,
        #[command(flatten)]
        common: SimCommon,
    },
    /// Nonlinear signals on a 50-vertex feature graph.
    Graph {
        /// scale-free, lattice or cluster
        #[arg(long)]
        topology: sparseview::Topology,
        #[arg(long, default_value_t = 200)]
        n1: usize,
        #[arg(long, default_value_t = 150)]
        n2: usize,
        #[arg(long, default_value_t = 500)]
        p1: usize,
        #[arg(long, default_value_t = 500)]
        p2: usize,
        #[command(flatten)]
        common: SimCommon,
    },
}

#[derive(Args, Debug)]
pub struct SimCommon {
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[command(flatten)]
    output: Output,
    /// Also write an independent test split here.
    #[arg(long)]
    test_out_dir: Option<PathBuf>,
}

#[derive(Args, Debug)]
pub struct TrainArgs {
    /// Directory holding views_{d}.csv (and optionally labels.csv).
    #[arg(long)]
    data_dir: PathBuf,
    /// JSON training configuration; defaults apply to missing fields.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    max_iters: Option<usize>,
    #[arg(long)]
    r_fraction: Option<f64>,
    /// Directory holding graph_{d}.txt; defaults to the data directory.
    #[arg(long)]
    graph_dir: Option<PathBuf>,
    #[command(flatten)]
    output: Output,
}

#[derive(Args, Debug)]
pub struct RankArgs {
    /// Stage-1 checkpoint.
    #[arg(long)]
    checkpoint: PathBuf,
    /// Overrides the fraction stored in the checkpoint's configuration.
    #[arg(long)]
    r_fraction: Option<f64>,
    #[command(flatten)]
    output: Output,
}

#[derive(Args, Debug)]
pub struct RefitArgs {
    /// Training views (full width).
    #[arg(long)]
    data_dir: PathBuf,
    /// Stage-1 checkpoint.
    #[arg(long)]
    checkpoint: PathBuf,
    /// Directory holding selection_{d}.txt.
    #[arg(long)]
    selection_dir: PathBuf,
    #[command(flatten)]
    output: Output,
}

#[derive(Args, Debug)]
pub struct PredictArgs {
    /// Test views (full width).
    #[arg(long)]
    data_dir: PathBuf,
    /// Stage-2 checkpoint.
    #[arg(long)]
    checkpoint: PathBuf,
    /// Classifier written by `refit`.
    #[arg(long)]
    classifier: Option<PathBuf>,
    #[command(flatten)]
    output: Output,
}

#[derive(Args, Debug)]
pub struct EvaluateArgs {
    /// Predicted labels.
    #[arg(long, requires = "labels")]
    predictions: Option<PathBuf>,
    /// True labels.
    #[arg(long, requires = "predictions")]
    labels: Option<PathBuf>,
    /// Directory holding selection_{d}.txt.
    #[arg(long, requires = "truth_dir")]
    selection_dir: Option<PathBuf>,
    /// Directory holding truth_{d}.txt and views_{d}.csv.
    #[arg(long, requires = "selection_dir")]
    truth_dir: Option<PathBuf>,
    /// Column counts per view, when the truth directory has no view files.
    #[arg(long, value_delimiter = ',')]
    feature_counts: Option<Vec<usize>>,
    #[command(flatten)]
    output: Output,
}

#[derive(Args, Debug)]
pub struct HypersearchArgs {
    /// JSON object mapping hyperparameter names to candidate lists.
    #[arg(long)]
    space: PathBuf,
    #[arg(long)]
    n_draws: usize,
    /// Labelled training views.
    #[arg(long)]
    data_dir: PathBuf,
    /// Base configuration for parameters outside the space.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Worker threads; defaults to the number of available cores.
    #[arg(long)]
    jobs: Option<usize>,
    #[arg(long)]
    graph_dir: Option<PathBuf>,
    #[command(flatten)]
    output: Output,
}

#[derive(Args, Debug)]
pub struct ClusterArgs {
    /// Latent code CSV.
    #[arg(long)]
    latent: PathBuf,
    #[arg(long)]
    k: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 10)]
    n_init: usize,
    #[arg(long, default_value_t = 300)]
    max_iter: usize,
    #[command(flatten)]
    output: Output,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Simulate(a) => commands::simulate(a),
        Command::Train(a) => commands::train(a),
        Command::Rank(a) => commands::rank(a),
        Command::Refit(a) => commands::refit(a),
        Command::Predict(a) => commands::predict(a),
        Command::Evaluate(a) => commands::evaluate(a),
        Command::Hypersearch(a) => commands::hypersearch(a),
        Command::Cluster(a) => commands::cluster(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            let msg = format!("{e:#}").replace('\n', " ");
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}

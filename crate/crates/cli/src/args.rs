use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use gravclust::dbgsa::ThetaSource;
use gravclust::DivergenceFamily;

#[derive(Debug, Parser)]
#[command(
    name = "gravclust",
    version,
    about = "Bregman power k-means, KNN-gravity data improvement and DBGSA parameter search",
    after_help = "Every run writes manifest.txt into --out-dir. Pass it back with --config to \
                  reproduce the run; flags given alongside --config override its values. \
                  Set RAYON_NUM_THREADS to control parallelism (results do not depend on it)."
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Draw labelled synthetic clusters from an exponential-family generator.
    Generate(GenerateArgs),
    /// Apply the KNN-gravity transform with fixed parameters.
    Improve(ImproveArgs),
    /// Cluster a dataset.
    Cluster(ClusterArgs),
    /// Search gravity parameters and write the improved dataset.
    Dbgsa(DbgsaArgs),
    /// Compare two labellings with ARI and NMI.
    Metrics(MetricsArgs),
    /// ARI of the four clustering objectives on simulated data, per family.
    SimulationStudy(SimulationArgs),
    /// NMI of the baseline clusterers before and after DBGSA on labelled datasets.
    ImprovementStudy(ImprovementArgs),
    /// Emit 2-D coordinates (PCA when needed) with labels for plotting.
    Plotdata(PlotArgs),
}

#[derive(Debug, Args)]
pub struct Common {
    /// Manifest of an earlier run to replay.
    #[arg(long, value_name = "MANIFEST")]
    pub config: Option<PathBuf>,
    /// Output directory, created if missing.
    #[arg(long, value_name = "DIR", default_value = ".")]
    pub out_dir: PathBuf,
}

/// Input dataset. The label column defaults to `auto`: use a column named
/// `label` when the header has one.
#[derive(Debug, Args)]
pub struct InputArgs {
    #[arg(long, value_name = "CSV")]
    pub input: Option<PathBuf>,
    /// Label column name, `auto` or `none`.
    #[arg(long, value_name = "NAME")]
    pub label_column: Option<String>,
}

#[derive(Debug, Args)]
pub struct GenerateArgs {
    #[command(flatten)]
    pub common: Common,
    /// gaussian, binomial, poisson or gamma.
    #[arg(long)]
    pub family: Option<String>,
    /// Cluster centers as `x:y,x:y,...`.
    #[arg(long)]
    pub centers: Option<String>,
    #[arg(long)]
    pub samples_per_center: Option<usize>,
    /// Standard deviation of the gaussian generator.
    #[arg(long)]
    pub noise_scale: Option<f64>,
    #[arg(long)]
    pub binomial_trials: Option<u64>,
    #[arg(long)]
    pub gamma_shape: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

#[derive(Debug, Args)]
pub struct ImproveArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub input: InputArgs,
    /// Step size.
    #[arg(long)]
    pub eta: Option<f64>,
    /// Neighbours per point.
    #[arg(long = "K", visible_alias = "neighbors", value_name = "K")]
    pub k_neighbors: Option<usize>,
    /// Number of iterations.
    #[arg(long = "d", visible_alias = "iterations", value_name = "D")]
    pub iterations: Option<usize>,
    /// `full` (distance-weighted) or `simplified`.
    #[arg(long)]
    pub rule: Option<String>,
}

#[derive(Debug, Args)]
pub struct PowerArgs {
    /// Initial power-mean exponent.
    #[arg(long, allow_negative_numbers = true)]
    pub s0: Option<f64>,
    #[arg(long)]
    pub anneal_factor: Option<f64>,
    /// Floor of the annealed exponent.
    #[arg(long, allow_negative_numbers = true)]
    pub s_min: Option<f64>,
    #[arg(long)]
    pub max_iters: Option<usize>,
    #[arg(long)]
    pub tol: Option<f64>,
}

#[derive(Debug, Args)]
pub struct ClusterArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub input: InputArgs,
    /// kmeans, bregman_hard, kmeans_power, bregman_power, agglomerative or peak.
    #[arg(long)]
    pub method: Option<String>,
    #[arg(long)]
    pub family: Option<DivergenceFamily>,
    /// Number of clusters (defaults to the label count of a labelled input).
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub restarts: Option<usize>,
    #[command(flatten)]
    pub power: PowerArgs,
    /// Pairwise-distance quantile used as the density-peak bandwidth.
    #[arg(long)]
    pub dc_percentile: Option<f64>,
}

#[derive(Debug, Args)]
pub struct GridArgs {
    #[arg(long)]
    pub eta0: Option<f64>,
    #[arg(long)]
    pub delta_eta: Option<f64>,
    #[arg(long)]
    pub k_min: Option<usize>,
    #[arg(long)]
    pub k_max: Option<usize>,
    #[arg(long)]
    pub delta_k: Option<usize>,
    #[arg(long)]
    pub d_min: Option<usize>,
    #[arg(long)]
    pub d_max: Option<usize>,
    #[arg(long)]
    pub delta_d: Option<usize>,
    /// Sweep eta independently of K and d.
    #[arg(long, num_args = 0..=1, default_missing_value = "true", value_name = "BOOL")]
    pub decoupled_eta: Option<bool>,
    /// Eta values per (K, d) cell in decoupled mode.
    #[arg(long)]
    pub eta_steps: Option<usize>,
    /// Divergence family of the centroid fit.
    #[arg(long)]
    pub family: Option<DivergenceFamily>,
    /// Fit centroids on the `improved` (default) or `raw` data.
    #[arg(long)]
    pub theta: Option<ThetaSource>,
    #[arg(long)]
    pub theta_restarts: Option<usize>,
}

#[derive(Debug, Args)]
pub struct DbgsaArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub input: InputArgs,
    /// Number of clusters (defaults to the label count of a labelled input).
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Preprocessing applied before the search, e.g. `normalize` or `pca:2`.
    #[arg(long)]
    pub preprocess: Option<String>,
    #[command(flatten)]
    pub grid: GridArgs,
}

#[derive(Debug, Args)]
pub struct MetricsArgs {
    #[command(flatten)]
    pub common: Common,
    /// CSV holding the reference labels.
    #[arg(long, value_name = "CSV")]
    pub truth: Option<PathBuf>,
    #[arg(long, value_name = "NAME")]
    pub truth_column: Option<String>,
    /// CSV holding the predicted labels.
    #[arg(long, value_name = "CSV")]
    pub pred: Option<PathBuf>,
    #[arg(long, value_name = "NAME")]
    pub pred_column: Option<String>,
}

#[derive(Debug, Args)]
pub struct SimulationArgs {
    #[command(flatten)]
    pub common: Common,
    #[arg(long)]
    pub replicates: Option<usize>,
    /// Run 250 replicates.
    #[arg(long, conflicts_with = "replicates")]
    pub full: bool,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Comma-separated generator families.
    #[arg(long)]
    pub families: Option<String>,
    /// Comma-separated clustering methods.
    #[arg(long)]
    pub methods: Option<String>,
    #[arg(long)]
    pub samples_per_center: Option<usize>,
    #[arg(long)]
    pub noise_scale: Option<f64>,
    #[arg(long)]
    pub binomial_trials: Option<u64>,
    #[arg(long)]
    pub gamma_shape: Option<f64>,
    #[command(flatten)]
    pub power: PowerArgs,
}

#[derive(Debug, Args)]
pub struct ImprovementArgs {
    #[command(flatten)]
    pub common: Common,
    /// Labelled dataset CSV; repeat for several.
    #[arg(long = "dataset", value_name = "CSV")]
    pub datasets: Vec<PathBuf>,
    /// Label column of every dataset.
    #[arg(long, value_name = "NAME")]
    pub label_column: Option<String>,
    /// Recipe file replacing the shipped one.
    #[arg(long, value_name = "FILE")]
    pub recipes: Option<PathBuf>,
    /// Recipe override `name=spec`; repeatable.
    #[arg(long = "recipe", value_name = "NAME=SPEC")]
    pub recipe_overrides: Vec<String>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub kmeans_restarts: Option<usize>,
    #[arg(long)]
    pub dc_percentile: Option<f64>,
    #[command(flatten)]
    pub grid: GridArgs,
}

#[derive(Debug, Args)]
pub struct PlotArgs {
    #[command(flatten)]
    pub common: Common,
    #[command(flatten)]
    pub input: InputArgs,
    /// CSV of cluster assignments to use as the label column.
    #[arg(long, value_name = "CSV")]
    pub assignments: Option<PathBuf>,
    #[arg(long, value_name = "NAME")]
    pub assignments_column: Option<String>,
}

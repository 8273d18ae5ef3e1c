use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use orthonet_core::AggregationMethod;

#[derive(Debug, Parser)]
#[command(name = "orthonet", version, about = "Multilayer graph clustering with SPD layer aggregation and an implicitly orthogonal spectral embedding")]
pub struct Cli {
    /// Only log errors.
    #[arg(long, global = true)]
    pub quiet: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Generate a synthetic multilayer dataset bundle.
    Synth(SynthArgs),
    /// Aggregate, train, embed and cluster a dataset bundle.
    Pipeline(PipelineArgs),
    /// Assign new feature rows to the nearest trained cluster center.
    Predict(PredictArgs),
    /// Score predicted assignments against ground truth.
    Evaluate(EvaluateArgs),
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// Number of nodes.
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    /// Number of clusters.
    #[arg(long, default_value_t = 4)]
    pub k: usize,
    /// Number of layers.
    #[arg(long, default_value_t = 3)]
    pub s: usize,
    /// Feature dimension of each layer's point cloud.
    #[arg(long, default_value_t = 2)]
    pub d: usize,
    /// Neighbours per node in each k-NN layer.
    #[arg(long, default_value_t = 20)]
    pub knn: usize,
    /// Distance between neighbouring cluster means in units of the cluster spread.
    #[arg(long, default_value_t = 4.0)]
    pub separation: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Output directory.
    #[arg(long)]
    pub out: PathBuf,
}

#[derive(Debug, Args)]
pub struct PipelineArgs {
    /// Bundle directory written by `synth` (or laid out the same way).
    #[arg(long, conflicts_with_all = ["layer", "features"])]
    pub data: Option<PathBuf>,
    /// Edge-list file of one layer; repeat for every layer.
    #[arg(long, requires = "features")]
    pub layer: Vec<PathBuf>,
    /// Node feature CSV (used with --layer).
    #[arg(long, requires = "layer")]
    pub features: Option<PathBuf>,
    /// The feature CSV starts with a header line.
    #[arg(long)]
    pub header: bool,
    /// Ground-truth labels, one per line (used with --layer).
    #[arg(long, requires = "layer")]
    pub labels: Option<PathBuf>,

    /// Directory for the output artifacts.
    #[arg(long)]
    pub out: PathBuf,
    /// JSON run configuration; flags given on the command line take precedence.
    #[arg(long)]
    pub config: Option<PathBuf>,

    /// Number of clusters; defaults to the number of distinct labels.
    #[arg(long)]
    pub k: Option<usize>,
    #[arg(long)]
    pub method: Option<AggregationMethod>,
    /// Use only these layers (0-based, comma separated).
    #[arg(long, value_delimiter = ',')]
    pub layers: Option<Vec<usize>>,
    /// Karcher flow iterations.
    #[arg(long)]
    pub iterations: Option<usize>,
    /// Karcher flow step size.
    #[arg(long)]
    pub step_size: Option<f64>,
    /// Diagonal shift as a fraction of the mean Laplacian diagonal.
    #[arg(long)]
    pub shift: Option<f64>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub max_steps: Option<usize>,
    /// K-means restarts.
    #[arg(long)]
    pub restarts: Option<usize>,
    /// Seed for weight initialization, K-means and subset sampling.
    #[arg(long)]
    pub seed: Option<u64>,

    /// Train on this fraction of the nodes and classify the rest.
    #[arg(long)]
    pub train_fraction: Option<f64>,
    /// Number of random training subsets.
    #[arg(long)]
    pub repeats: Option<usize>,
    /// Also cluster the aggregated matrix spectrally (no features).
    #[arg(long)]
    pub spectral_baseline: bool,
    /// Write the aggregated matrix as a dense CSV.
    #[arg(long)]
    pub export_laplacian: bool,
}

#[derive(Debug, Args)]
pub struct PredictArgs {
    /// Trained model JSON.
    #[arg(long)]
    pub model: PathBuf,
    /// Cluster centers CSV written by `pipeline`.
    #[arg(long)]
    pub centers: PathBuf,
    /// Feature CSV, one sample per row.
    #[arg(long)]
    pub features: PathBuf,
    #[arg(long)]
    pub header: bool,
    /// Output CSV; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct EvaluateArgs {
    /// Predicted assignments (`node_index,cluster_id` CSV or one id per line).
    #[arg(long)]
    pub pred: PathBuf,
    /// Ground-truth labels in either format.
    #[arg(long)]
    pub truth: PathBuf,
    /// Output JSON; stdout when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

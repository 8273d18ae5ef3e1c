//! End-to-end runs: aggregate → train → whiten → K-means → metrics, the
//! spectral baseline, and the train-on-a-subset generalization protocol.

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::aggregate::{aggregate_graph, AggregationConfig, AggregationMethod};
use crate::cluster::{classify_rows, kmeans_with, spectral_clustering, KMeansConfig, Partition};
use crate::embed::{train, EmbedderModel, EmbeddingResult, TrainConfig, DEFAULT_HIDDEN};
use crate::error::{Error, Result};
use crate::io::DatasetBundle;
use crate::metrics::MetricsReport;
use crate::spd::SpdMatrix;

/// Stream of the subset sampler; restart `r` uses stream `SUBSET_STREAM + r`.
const SUBSET_STREAM: u64 = 1 << 32;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PipelineConfig {
    /// Number of clusters and embedding dimension.
    pub k: usize,
    pub method: AggregationMethod,
    pub aggregation: AggregationConfig,
    pub train: TrainConfig,
    pub kmeans: KMeansConfig,
    /// Hidden layer widths of the embedding network.
    pub hidden: Vec<usize>,
    /// Restrict aggregation to these layers; all layers when absent.
    pub layers: Option<Vec<usize>>,
    /// Seed for K-means and subset sampling.
    pub seed: u64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            k: 2,
            method: AggregationMethod::Geometric,
            aggregation: AggregationConfig::default(),
            train: TrainConfig::default(),
            kmeans: KMeansConfig::default(),
            hidden: DEFAULT_HIDDEN.to_vec(),
            layers: None,
            seed: 0,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        if self.k == 0 {
            return Err(Error::invalid("K must be at least 1"));
        }
        if self.kmeans.restarts == 0 {
            return Err(Error::invalid("kmeans restarts must be at least 1"));
        }
        self.aggregation.validate()?;
        self.train.validate()
    }

    fn layer_sizes(&self, input_dim: usize) -> Vec<usize> {
        let mut sizes = vec![input_dim];
        sizes.extend_from_slice(&self.hidden);
        sizes.push(self.k);
        sizes
    }
}

#[derive(Debug, Clone)]
pub struct PipelineOutput {
    pub aggregated: SpdMatrix,
    pub model: EmbedderModel,
    pub embedding: EmbeddingResult,
    pub partition: Partition,
    pub metrics: Option<MetricsReport>,
}

/// Representative SPD matrix of the bundle's (selected) layers.
pub fn aggregate_bundle(bundle: &DatasetBundle, cfg: &PipelineConfig) -> Result<SpdMatrix> {
    let graph = match &cfg.layers {
        Some(which) => bundle.graph.select_layers(which)?,
        None => bundle.graph.clone(),
    };
    aggregate_graph(&graph, cfg.method, &cfg.aggregation)
}

pub fn run_pipeline(bundle: &DatasetBundle, cfg: &PipelineConfig) -> Result<PipelineOutput> {
    cfg.validate()?;
    if cfg.k > bundle.num_nodes() {
        return Err(Error::invalid(format!(
            "K={} exceeds the number of nodes {}",
            cfg.k,
            bundle.num_nodes()
        )));
    }
    log::info!(
        "aggregating {} layers over {} nodes ({})",
        cfg.layers.as_ref().map_or(bundle.graph.num_layers(), Vec::len),
        bundle.num_nodes(),
        cfg.method
    );
    let aggregated = aggregate_bundle(bundle, cfg)?;
    run_pipeline_on(bundle, aggregated, cfg)
}

/// Pipeline from an already aggregated matrix.
pub fn run_pipeline_on(
    bundle: &DatasetBundle,
    aggregated: SpdMatrix,
    cfg: &PipelineConfig,
) -> Result<PipelineOutput> {
    cfg.validate()?;
    let mut model = EmbedderModel::new(&cfg.layer_sizes(bundle.features.cols()), cfg.train.seed)?;
    log::info!("training embedder with {} parameters", model.param_count());
    let embedding = train(&mut model, &bundle.features, &aggregated, &cfg.train)?;
    log::info!(
        "trained for {} steps, final loss {:.6e}",
        embedding.loss_history.len(),
        embedding.final_loss
    );
    let partition = kmeans_with(embedding.whitened.view(), cfg.k, &cfg.kmeans, cfg.seed)?;
    let metrics = bundle
        .labels
        .as_ref()
        .map(|truth| MetricsReport::compute(&partition.assignments, truth))
        .transpose()?;
    Ok(PipelineOutput {
        aggregated,
        model,
        embedding,
        partition,
        metrics,
    })
}

/// Spectral clustering of the aggregated matrix (graph only, no features).
pub fn spectral_baseline(
    bundle: &DatasetBundle,
    cfg: &PipelineConfig,
) -> Result<(Partition, Option<MetricsReport>)> {
    cfg.validate()?;
    let aggregated = aggregate_bundle(bundle, cfg)?;
    let partition = spectral_clustering(&aggregated, cfg.k, cfg.seed)?;
    let metrics = bundle
        .labels
        .as_ref()
        .map(|truth| MetricsReport::compute(&partition.assignments, truth))
        .transpose()?;
    Ok((partition, metrics))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneralizationRun {
    pub repeat: usize,
    pub train_nodes: usize,
    pub metrics: MetricsReport,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneralizationReport {
    pub train_fraction: f64,
    pub repeats: usize,
    pub runs: Vec<GeneralizationRun>,
    pub nmi_mean: f64,
    /// Sample standard deviation (zero for a single repeat).
    pub nmi_std: f64,
    pub purity_mean: f64,
    pub ari_mean: f64,
}

/// Random subset of `round(fraction × n)` node indices, sorted.
pub fn sample_subset(n: usize, fraction: f64, seed: u64, repeat: usize) -> Result<Vec<usize>> {
    if !(fraction > 0.0 && fraction <= 1.0) {
        return Err(Error::invalid(format!(
            "train fraction must lie in (0, 1], got {fraction}"
        )));
    }
    let size = ((fraction * n as f64).round() as usize).clamp(1, n);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(SUBSET_STREAM + repeat as u64);
    let mut nodes: Vec<usize> = (0..n).collect();
    nodes.shuffle(&mut rng);
    nodes.truncate(size);
    nodes.sort_unstable();
    Ok(nodes)
}

/// Trains on a random fraction of the nodes, then classifies every node by
/// its nearest training-time center and scores against the labels.
pub fn run_generalization(
    bundle: &DatasetBundle,
    cfg: &PipelineConfig,
    fraction: f64,
    repeats: usize,
) -> Result<GeneralizationReport> {
    let truth = bundle
        .labels
        .as_ref()
        .ok_or_else(|| Error::invalid("the generalization protocol needs ground-truth labels"))?;
    if repeats == 0 {
        return Err(Error::invalid("repeats must be at least 1"));
    }
    let mut runs = Vec::with_capacity(repeats);
    for repeat in 0..repeats {
        let nodes = sample_subset(bundle.num_nodes(), fraction, cfg.seed, repeat)?;
        if nodes.len() < cfg.k {
            return Err(Error::invalid(format!(
                "training subset of {} nodes is smaller than K={}",
                nodes.len(),
                cfg.k
            )));
        }
        let subset = bundle.subset(&nodes)?;
        let out = run_pipeline(&subset, cfg)?;
        let predicted = classify_rows(&out.model, out.partition.centers.view(), bundle.features.view())?;
        let metrics = MetricsReport::compute(&predicted, truth)?;
        log::info!(
            "repeat {repeat}: trained on {} nodes, NMI on all nodes {:.4}",
            nodes.len(),
            metrics.nmi
        );
        runs.push(GeneralizationRun {
            repeat,
            train_nodes: nodes.len(),
            metrics,
        });
    }
    let count = runs.len() as f64;
    let mean = |f: fn(&MetricsReport) -> f64| runs.iter().map(|r| f(&r.metrics)).sum::<f64>() / count;
    let nmi_mean = mean(|m| m.nmi);
    let nmi_std = if runs.len() > 1 {
        (runs
            .iter()
            .map(|r| (r.metrics.nmi - nmi_mean).powi(2))
            .sum::<f64>()
            / (count - 1.0))
            .sqrt()
    } else {
        0.0
    };
    Ok(GeneralizationReport {
        train_fraction: fraction,
        repeats,
        nmi_mean,
        nmi_std,
        purity_mean: mean(|m| m.purity),
        ari_mean: mean(|m| m.ari),
        runs,
    })
}

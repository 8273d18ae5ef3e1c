//! Clustering of multilayer graphs with node features.
//!
//! The layers are merged into one SPD matrix (the geometric mean of the
//! shifted Laplacians on the SPD manifold), a dense network is trained on the
//! node features with a spectral objective whose orthogonality constraint is
//! enforced implicitly through a Cholesky factor, and the whitened embedding
//! is clustered with K-means. New feature vectors are classified by their
//! nearest cluster center.

pub mod aggregate;
pub mod cluster;
mod dense;
pub mod embed;
pub mod error;
pub mod graph;
pub mod io;
pub mod metrics;
pub mod pipeline;
pub mod spd;

pub use aggregate::{
    aggregate_graph, arithmetic_mean, geometric_mean, karcher_flow, AggregationConfig,
    AggregationMethod, KarcherOutcome,
};
pub use cluster::{classify, classify_rows, kmeans, kmeans_with, spectral_clustering, KMeansConfig, Partition};
pub use embed::{loss, loss_jacobian, train, EmbedderModel, EmbeddingResult, TrainConfig};
pub use error::{Error, Result};
pub use graph::{knn_layer, laplacian, shifted_laplacian, DiagonalShift, FeatureMatrix, MultilayerGraph};
pub use io::{generate_synthetic, load_bundle, load_bundle_dir, save_bundle, DatasetBundle, SyntheticSpec};
pub use metrics::{adjusted_rand, nmi, purity, ContingencyTable, MetricsReport};
pub use pipeline::{run_generalization, run_pipeline, GeneralizationReport, PipelineConfig, PipelineOutput};
pub use spd::{riemann_dist, spd_exp, spd_log, sym_eig, SpdMatrix, SymEig};

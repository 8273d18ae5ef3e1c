//! Fixtures shared by the benchmarks.

use ndarray::Array2;
use orthonet_core::aggregate::shifted_laplacians;
use orthonet_core::embed::gram_cholesky;
use orthonet_core::{generate_synthetic, DatasetBundle, DiagonalShift, SpdMatrix, SyntheticSpec};

/// Benchmark-style bundle with `n` nodes, four clusters and three layers.
pub fn bundle(n: usize) -> DatasetBundle {
    generate_synthetic(&SyntheticSpec {
        n_points: n,
        n_clusters: 4,
        n_layers: 3,
        knn_k: 20.min(n - 1),
        seed: 7,
        ..SyntheticSpec::default()
    })
    .expect("valid synthetic spec")
}

pub fn layer_laplacians(bundle: &DatasetBundle) -> Vec<SpdMatrix> {
    shifted_laplacians(&bundle.graph, DiagonalShift::default()).expect("graph layers are valid")
}

/// Deterministic full-rank `n × k` embedding with its Gram Cholesky factor.
pub fn embedding(n: usize, k: usize) -> (Array2<f64>, Array2<f64>) {
    let y = Array2::from_shape_fn((n, k), |(i, j)| {
        let t = (i * 31 + j * 17) as f64;
        t.sin() + if i % k == j { 1.0 } else { 0.0 }
    });
    let r = gram_cholesky(y.view(), 0.0).expect("embedding has full column rank");
    (y, r)
}

//! Synthetic multilayer datasets: one Gaussian-mixture point cloud per
//! layer, a k-NN graph on each cloud, features = per-node concatenation.
//!
//! Random streams: every draw comes from `ChaCha8Rng::seed_from_u64(seed)`
//! with stream 0 for labels and stream `1 + s` for layer `s`.

use std::f64::consts::PI;

use ndarray::{s, Array2};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use super::bundle::DatasetBundle;
use crate::error::{Error, Result};
use crate::graph::{knn_layer, FeatureMatrix, MultilayerGraph};

const LABEL_STREAM: u64 = 0;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SyntheticSpec {
    pub n_points: usize,
    pub n_clusters: usize,
    pub n_layers: usize,
    pub dim_per_layer: usize,
    pub knn_k: usize,
    pub seed: u64,
    /// Distance between neighbouring cluster means, in units of the
    /// within-cluster standard deviation.
    pub separation: f64,
    /// Explicit means, one `K × d` matrix per layer. Overrides `separation`.
    pub means: Option<Vec<Array2<f64>>>,
    /// Standard deviation per layer and cluster (`scales[s][k]`); 1 when absent.
    pub scales: Option<Vec<Vec<f64>>>,
}

impl Default for SyntheticSpec {
    fn default() -> Self {
        SyntheticSpec {
            n_points: 100,
            n_clusters: 4,
            n_layers: 3,
            dim_per_layer: 2,
            knn_k: 20,
            seed: 0,
            separation: 4.0,
            means: None,
            scales: None,
        }
    }
}

impl SyntheticSpec {
    pub fn feature_dim(&self) -> usize {
        self.dim_per_layer * self.n_layers
    }

    pub fn validate(&self) -> Result<()> {
        if self.n_clusters == 0 || self.n_layers == 0 || self.dim_per_layer == 0 {
            return Err(Error::invalid(
                "n_clusters, n_layers and dim_per_layer must be positive",
            ));
        }
        if self.n_points < self.n_clusters {
            return Err(Error::invalid(format!(
                "n_points={} must be at least n_clusters={}",
                self.n_points, self.n_clusters
            )));
        }
        if self.knn_k == 0 || self.knn_k >= self.n_points {
            return Err(Error::invalid(format!(
                "knn_k={} must lie in 1..{}",
                self.knn_k, self.n_points
            )));
        }
        if !(self.separation >= 0.0) || !self.separation.is_finite() {
            return Err(Error::invalid("separation must be a finite nonnegative number"));
        }
        if let Some(means) = &self.means {
            if means.len() != self.n_layers
                || means
                    .iter()
                    .any(|m| m.dim() != (self.n_clusters, self.dim_per_layer))
            {
                return Err(Error::invalid(format!(
                    "means must be {} matrices of shape {}x{}",
                    self.n_layers, self.n_clusters, self.dim_per_layer
                )));
            }
        }
        if let Some(scales) = &self.scales {
            if scales.len() != self.n_layers
                || scales.iter().any(|s| s.len() != self.n_clusters)
                || scales.iter().flatten().any(|&v| !(v > 0.0) || !v.is_finite())
            {
                return Err(Error::invalid(format!(
                    "scales must be {} lists of {} positive values",
                    self.n_layers, self.n_clusters
                )));
            }
        }
        Ok(())
    }

    /// Cluster means of one layer: neighbouring clusters `separation` apart on
    /// a circle (on a line when d = 1), with a per-layer random assignment of
    /// clusters to positions.
    fn layer_means(&self, layer: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
        if let Some(means) = &self.means {
            return means[layer].clone();
        }
        let k = self.n_clusters;
        let d = self.dim_per_layer;
        let mut slots: Vec<usize> = (0..k).collect();
        slots.shuffle(rng);
        let mut means = Array2::<f64>::zeros((k, d));
        if k == 1 {
            return means;
        }
        for (cluster, &slot) in slots.iter().enumerate() {
            if d == 1 {
                means[[cluster, 0]] = self.separation * slot as f64;
            } else {
                let radius = self.separation / (2.0 * (PI / k as f64).sin());
                let angle = 2.0 * PI * slot as f64 / k as f64;
                means[[cluster, 0]] = radius * angle.cos();
                means[[cluster, 1]] = radius * angle.sin();
            }
        }
        means
    }

    fn scale(&self, layer: usize, cluster: usize) -> f64 {
        self.scales.as_ref().map_or(1.0, |s| s[layer][cluster])
    }
}

/// Balanced labels: cluster sizes differ by at most one, order shuffled.
fn balanced_labels(n: usize, k: usize, rng: &mut ChaCha8Rng) -> Vec<usize> {
    let mut labels: Vec<usize> = (0..n).map(|i| i % k).collect();
    labels.shuffle(rng);
    labels
}

/// Point cloud of every layer, `N × d` each, plus the labels.
pub fn sample_clouds(spec: &SyntheticSpec) -> Result<(Vec<Array2<f64>>, Vec<usize>)> {
    spec.validate()?;
    let mut label_rng = ChaCha8Rng::seed_from_u64(spec.seed);
    label_rng.set_stream(LABEL_STREAM);
    let labels = balanced_labels(spec.n_points, spec.n_clusters, &mut label_rng);

    let clouds = (0..spec.n_layers)
        .map(|layer| {
            let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
            rng.set_stream(1 + layer as u64);
            let means = spec.layer_means(layer, &mut rng);
            let mut cloud = Array2::<f64>::zeros((spec.n_points, spec.dim_per_layer));
            for (i, &c) in labels.iter().enumerate() {
                let sigma = spec.scale(layer, c);
                for j in 0..spec.dim_per_layer {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    cloud[[i, j]] = means[[c, j]] + sigma * z;
                }
            }
            cloud
        })
        .collect();
    Ok((clouds, labels))
}

pub fn generate_synthetic(spec: &SyntheticSpec) -> Result<DatasetBundle> {
    let (clouds, labels) = sample_clouds(spec)?;
    let d = spec.dim_per_layer;
    let mut features = Array2::<f64>::zeros((spec.n_points, spec.feature_dim()));
    let mut layers = Vec::with_capacity(clouds.len());
    for (s, cloud) in clouds.iter().enumerate() {
        features.slice_mut(s![.., s * d..(s + 1) * d]).assign(cloud);
        layers.push(knn_layer(cloud.view(), spec.knn_k)?);
    }
    DatasetBundle::new(
        MultilayerGraph::new(layers)?,
        FeatureMatrix::new(features)?,
        Some(labels),
    )
}

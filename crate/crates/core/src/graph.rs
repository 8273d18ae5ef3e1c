//! Multilayer graphs over a shared vertex set, their Laplacians, and k-NN
//! layer construction from point clouds.

use ndarray::{Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::spd::SpdMatrix;

/// `S ≥ 1` weighted layers over the same `N` vertices, stored as dense
/// symmetric adjacency matrices with zero diagonal and nonnegative weights.
#[derive(Debug, Clone, PartialEq)]
pub struct MultilayerGraph {
    num_vertices: usize,
    layers: Vec<Array2<f64>>,
}

impl MultilayerGraph {
    pub fn new(layers: Vec<Array2<f64>>) -> Result<Self> {
        let first = layers
            .first()
            .ok_or_else(|| Error::invalid("a multilayer graph needs at least one layer"))?;
        let n = first.nrows();
        for (s, w) in layers.iter().enumerate() {
            if w.nrows() != n || w.ncols() != n {
                return Err(Error::invalid(format!(
                    "layer {s} is {}x{}, expected {n}x{n}",
                    w.nrows(),
                    w.ncols()
                )));
            }
            validate_adjacency(w.view()).map_err(|e| match e {
                Error::InvalidArgument(m) => Error::invalid(format!("layer {s}: {m}")),
                other => other,
            })?;
        }
        Ok(MultilayerGraph {
            num_vertices: n,
            layers,
        })
    }

    pub fn num_vertices(&self) -> usize {
        self.num_vertices
    }

    pub fn num_layers(&self) -> usize {
        self.layers.len()
    }

    pub fn layers(&self) -> &[Array2<f64>] {
        &self.layers
    }

    pub fn layer(&self, s: usize) -> &Array2<f64> {
        &self.layers[s]
    }

    /// Subgraph induced on `nodes` in every layer; vertex `i` of the result is
    /// `nodes[i]` of `self`.
    pub fn induced(&self, nodes: &[usize]) -> Result<Self> {
        if let Some(&bad) = nodes.iter().find(|&&v| v >= self.num_vertices) {
            return Err(Error::invalid(format!(
                "vertex {bad} out of range for a graph with {} vertices",
                self.num_vertices
            )));
        }
        let layers = self
            .layers
            .iter()
            .map(|w| w.select(Axis(0), nodes).select(Axis(1), nodes))
            .collect();
        MultilayerGraph::new(layers)
    }

    /// Keeps only the listed layers, in the given order.
    pub fn select_layers(&self, which: &[usize]) -> Result<Self> {
        let mut layers = Vec::with_capacity(which.len());
        for &s in which {
            let w = self.layers.get(s).ok_or_else(|| {
                Error::invalid(format!(
                    "layer {s} out of range (graph has {} layers)",
                    self.layers.len()
                ))
            })?;
            layers.push(w.clone());
        }
        MultilayerGraph::new(layers)
    }
}

/// Node features, one row per vertex.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix(Array2<f64>);

impl FeatureMatrix {
    pub fn new(entries: Array2<f64>) -> Result<Self> {
        if entries.iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("feature matrix has non-finite entries"));
        }
        Ok(FeatureMatrix(entries))
    }

    pub fn rows(&self) -> usize {
        self.0.nrows()
    }

    pub fn cols(&self) -> usize {
        self.0.ncols()
    }

    pub fn view(&self) -> ArrayView2<'_, f64> {
        self.0.view()
    }

    pub fn as_array(&self) -> &Array2<f64> {
        &self.0
    }

    pub fn select_rows(&self, rows: &[usize]) -> FeatureMatrix {
        FeatureMatrix(self.0.select(Axis(0), rows))
    }
}

fn validate_adjacency(w: ArrayView2<'_, f64>) -> Result<()> {
    let n = w.nrows();
    if w.ncols() != n {
        return Err(Error::invalid(format!(
            "adjacency must be square, got {}x{}",
            w.nrows(),
            w.ncols()
        )));
    }
    for i in 0..n {
        if w[[i, i]] != 0.0 {
            return Err(Error::invalid(format!("self-loop at vertex {i}")));
        }
        for j in 0..n {
            let v = w[[i, j]];
            if !v.is_finite() {
                return Err(Error::invalid(format!("non-finite weight at ({i}, {j})")));
            }
            if v < 0.0 {
                return Err(Error::invalid(format!("negative weight {v} at ({i}, {j})")));
            }
            if j > i && v != w[[j, i]] {
                return Err(Error::invalid(format!(
                    "asymmetric weights at ({i}, {j}): {v} vs {}",
                    w[[j, i]]
                )));
            }
        }
    }
    Ok(())
}

/// Combinatorial Laplacian `L = D − W`.
pub fn laplacian(w: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
    validate_adjacency(w)?;
    let mut l = w.mapv(|v| -v);
    for (i, row) in w.outer_iter().enumerate() {
        l[[i, i]] = row.sum();
    }
    Ok(l)
}

/// How the diagonal shift `ε` that turns a Laplacian into an SPD matrix is chosen.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", content = "value")]
pub enum DiagonalShift {
    /// `ε = c × mean(diag L)`; falls back to `c` itself for an edgeless layer.
    Relative(f64),
    Absolute(f64),
}

impl Default for DiagonalShift {
    fn default() -> Self {
        DiagonalShift::Relative(1e-6)
    }
}

impl DiagonalShift {
    pub fn epsilon_for(&self, l: ArrayView2<'_, f64>) -> f64 {
        match *self {
            DiagonalShift::Absolute(eps) => eps,
            DiagonalShift::Relative(c) => {
                let n = l.nrows().max(1) as f64;
                let mean_diag = l.diag().sum() / n;
                if mean_diag > 0.0 {
                    c * mean_diag
                } else {
                    c
                }
            }
        }
    }

    pub(crate) fn validate(&self) -> Result<()> {
        let v = match *self {
            DiagonalShift::Absolute(v) | DiagonalShift::Relative(v) => v,
        };
        if !(v > 0.0) || !v.is_finite() {
            return Err(Error::invalid(format!("diagonal shift must be positive, got {v}")));
        }
        Ok(())
    }
}

/// `L + εI`, certified SPD.
pub fn shifted_laplacian(l: ArrayView2<'_, f64>, epsilon: f64) -> Result<SpdMatrix> {
    if !(epsilon > 0.0) || !epsilon.is_finite() {
        return Err(Error::invalid(format!(
            "shift epsilon must be positive, got {epsilon}"
        )));
    }
    let mut shifted = l.to_owned();
    shifted.diag_mut().mapv_inplace(|d| d + epsilon);
    SpdMatrix::new(shifted)
}

/// Relative scale of the distance used in place of zero for duplicate points.
const DUPLICATE_DISTANCE_FACTOR: f64 = 1e-9;

/// Symmetric k-nearest-neighbour adjacency with reciprocal-distance weights.
///
/// Each point selects its `k` nearest other points (ties go to the smaller
/// index); an edge exists if either endpoint selected the other. Duplicate
/// points get weight `1/δ`, `δ = 1e-9 × median nonzero pairwise distance`.
pub fn knn_layer(points: ArrayView2<'_, f64>, k: usize) -> Result<Array2<f64>> {
    let n = points.nrows();
    if k == 0 {
        return Err(Error::invalid("k must be positive"));
    }
    if k >= n {
        return Err(Error::invalid(format!(
            "k={k} must be smaller than the number of points {n}"
        )));
    }
    if points.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("point cloud has non-finite coordinates"));
    }

    let mut dist = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        let pi = points.row(i);
        for j in (i + 1)..n {
            let d = pi
                .iter()
                .zip(points.row(j).iter())
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt();
            dist[[i, j]] = d;
            dist[[j, i]] = d;
        }
    }

    let duplicate_distance = {
        let mut nonzero: Vec<f64> = (0..n)
            .flat_map(|i| ((i + 1)..n).map(move |j| (i, j)))
            .map(|(i, j)| dist[[i, j]])
            .filter(|&d| d > 0.0)
            .collect();
        if nonzero.is_empty() {
            DUPLICATE_DISTANCE_FACTOR
        } else {
            let mid = nonzero.len() / 2;
            let (_, median, _) = nonzero.select_nth_unstable_by(mid, f64::total_cmp);
            DUPLICATE_DISTANCE_FACTOR * *median
        }
    };

    let mut w = Array2::<f64>::zeros((n, n));
    let mut candidates: Vec<(f64, usize)> = Vec::with_capacity(n - 1);
    for i in 0..n {
        candidates.clear();
        candidates.extend((0..n).filter(|&j| j != i).map(|j| (dist[[i, j]], j)));
        let by_distance_then_index =
            |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
        if k < candidates.len() {
            candidates.select_nth_unstable_by(k - 1, by_distance_then_index);
        }
        for &(d, j) in &candidates[..k] {
            let weight = 1.0 / if d > 0.0 { d } else { duplicate_distance };
            w[[i, j]] = weight;
            w[[j, i]] = weight;
        }
    }
    Ok(w)
}

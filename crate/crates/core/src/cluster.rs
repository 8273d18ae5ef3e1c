//! K-means, the spectral-clustering baseline, and nearest-center
//! classification of new samples.

use ndarray::{s, Array1, Array2, ArrayView1, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::embed::EmbedderModel;
use crate::error::{Error, Result};
use crate::spd::SpdMatrix;

/// Hard assignment of `N` points to `K` clusters plus the cluster centers.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition {
    pub assignments: Vec<usize>,
    /// `K × dim` centers.
    pub centers: Array2<f64>,
    /// Sum of squared distances of the points to their assigned centers.
    pub inertia: f64,
}

impl Partition {
    pub fn num_clusters(&self) -> usize {
        self.centers.nrows()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct KMeansConfig {
    pub restarts: usize,
    pub max_iterations: usize,
    /// Relative inertia improvement below which Lloyd iterations stop.
    pub tolerance: f64,
}

impl Default for KMeansConfig {
    fn default() -> Self {
        KMeansConfig {
            restarts: 10,
            max_iterations: 300,
            tolerance: 1e-9,
        }
    }
}

/// One Lloyd run: the final partition and the inertia after every
/// assignment step.
#[derive(Debug, Clone)]
pub struct LloydRun {
    pub partition: Partition,
    pub inertia_trace: Vec<f64>,
}

fn squared_distance(a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> f64 {
    a.iter().zip(b.iter()).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Index of the nearest center; ties go to the smaller index.
fn nearest(point: ArrayView1<'_, f64>, centers: ArrayView2<'_, f64>) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for (k, c) in centers.outer_iter().enumerate() {
        let d = squared_distance(point, c);
        if d < best.1 {
            best = (k, d);
        }
    }
    best
}

fn kmeans_plus_plus(points: ArrayView2<'_, f64>, k: usize, rng: &mut ChaCha8Rng) -> Array2<f64> {
    let n = points.nrows();
    let mut centers = Array2::<f64>::zeros((k, points.ncols()));
    let first = rng.random_range(0..n);
    centers.row_mut(0).assign(&points.row(first));
    let mut closest: Vec<f64> = points
        .outer_iter()
        .map(|p| squared_distance(p, points.row(first)))
        .collect();
    for c in 1..k {
        let total: f64 = closest.iter().sum();
        let chosen = if total > 0.0 {
            let mut target = rng.random::<f64>() * total;
            let mut idx = n - 1;
            for (i, &d) in closest.iter().enumerate() {
                if target < d {
                    idx = i;
                    break;
                }
                target -= d;
            }
            idx
        } else {
            rng.random_range(0..n)
        };
        centers.row_mut(c).assign(&points.row(chosen));
        for (i, p) in points.outer_iter().enumerate() {
            let d = squared_distance(p, points.row(chosen));
            if d < closest[i] {
                closest[i] = d;
            }
        }
    }
    centers
}

fn assign(points: ArrayView2<'_, f64>, centers: ArrayView2<'_, f64>) -> (Vec<usize>, Vec<f64>) {
    points
        .outer_iter()
        .map(|p| nearest(p, centers))
        .unzip()
}

fn inertia_of(points: ArrayView2<'_, f64>, assignments: &[usize], centers: ArrayView2<'_, f64>) -> f64 {
    points
        .outer_iter()
        .zip(assignments)
        .map(|(p, &a)| squared_distance(p, centers.row(a)))
        .sum()
}

/// Moves the point farthest from its center (among clusters with more than
/// one member) into each empty cluster.
fn repair_empty(assignments: &mut [usize], distances: &mut [f64], k: usize) {
    let mut sizes = vec![0usize; k];
    for &a in assignments.iter() {
        sizes[a] += 1;
    }
    for empty in 0..k {
        if sizes[empty] > 0 {
            continue;
        }
        let donor = (0..assignments.len())
            .filter(|&i| sizes[assignments[i]] > 1)
            .fold(None::<usize>, |best, i| match best {
                Some(b) if distances[b] >= distances[i] => Some(b),
                _ => Some(i),
            });
        if let Some(i) = donor {
            sizes[assignments[i]] -= 1;
            assignments[i] = empty;
            sizes[empty] = 1;
            distances[i] = 0.0;
        }
    }
}

fn centroids(points: ArrayView2<'_, f64>, assignments: &[usize], previous: &Array2<f64>) -> Array2<f64> {
    let k = previous.nrows();
    let mut sums = Array2::<f64>::zeros(previous.raw_dim());
    let mut counts = vec![0usize; k];
    for (p, &a) in points.outer_iter().zip(assignments) {
        let mut row = sums.row_mut(a);
        row += &p;
        counts[a] += 1;
    }
    for (c, &count) in counts.iter().enumerate() {
        if count > 0 {
            let mut row = sums.row_mut(c);
            row /= count as f64;
        } else {
            sums.row_mut(c).assign(&previous.row(c));
        }
    }
    sums
}

/// Lloyd iterations from the given initial centers.
pub fn lloyd(
    points: ArrayView2<'_, f64>,
    initial_centers: Array2<f64>,
    max_iterations: usize,
    tolerance: f64,
) -> Result<LloydRun> {
    if initial_centers.ncols() != points.ncols() {
        return Err(Error::invalid(format!(
            "centers have dimension {}, points have {}",
            initial_centers.ncols(),
            points.ncols()
        )));
    }
    let k = initial_centers.nrows();
    let mut centers = initial_centers;
    let mut trace = Vec::new();
    let mut assignments = Vec::new();
    for _ in 0..max_iterations.max(1) {
        let (mut a, mut d) = assign(points, centers.view());
        repair_empty(&mut a, &mut d, k);
        let inertia: f64 = d.iter().sum();
        assignments = a;
        centers = centroids(points, &assignments, &centers);
        let previous = trace.last().copied();
        trace.push(inertia);
        if let Some(prev) = previous {
            if prev - inertia <= tolerance * prev {
                break;
            }
        }
    }
    let inertia = inertia_of(points, &assignments, centers.view());
    Ok(LloydRun {
        partition: Partition {
            assignments,
            centers,
            inertia,
        },
        inertia_trace: trace,
    })
}

/// Best-of-`restarts` K-means with k-means++ seeding. Deterministic given `seed`.
pub fn kmeans(points: ArrayView2<'_, f64>, k: usize, restarts: usize, seed: u64) -> Result<Partition> {
    let cfg = KMeansConfig {
        restarts,
        ..KMeansConfig::default()
    };
    kmeans_with(points, k, &cfg, seed)
}

pub fn kmeans_with(points: ArrayView2<'_, f64>, k: usize, cfg: &KMeansConfig, seed: u64) -> Result<Partition> {
    let n = points.nrows();
    if k == 0 {
        return Err(Error::invalid("K must be at least 1"));
    }
    if k > n {
        return Err(Error::invalid(format!("K={k} exceeds the number of points {n}")));
    }
    if points.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("points have non-finite coordinates"));
    }
    let mut best: Option<Partition> = None;
    for restart in 0..cfg.restarts.max(1) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(restart as u64);
        let init = kmeans_plus_plus(points, k, &mut rng);
        let run = lloyd(points, init, cfg.max_iterations, cfg.tolerance)?;
        if best
            .as_ref()
            .is_none_or(|b| run.partition.inertia < b.inertia)
        {
            best = Some(run.partition);
        }
    }
    Ok(best.expect("at least one restart"))
}

/// K-means on the rows of the eigenvectors of the `k` smallest eigenvalues.
pub fn spectral_clustering(l: &SpdMatrix, k: usize, seed: u64) -> Result<Partition> {
    if k == 0 || k > l.dim() {
        return Err(Error::invalid(format!(
            "K={k} must lie in 1..={}",
            l.dim()
        )));
    }
    let eig = l.eig()?;
    let embedding = eig.vectors.slice(s![.., ..k]);
    kmeans(embedding, k, KMeansConfig::default().restarts, seed)
}

/// Index of the center nearest to `embedding`, ties to the smaller index.
pub fn nearest_center(embedding: ArrayView1<'_, f64>, centers: ArrayView2<'_, f64>) -> Result<usize> {
    if centers.nrows() == 0 {
        return Err(Error::invalid("no cluster centers"));
    }
    if embedding.len() != centers.ncols() {
        return Err(Error::invalid(format!(
            "embedding has dimension {}, centers have {}",
            embedding.len(),
            centers.ncols()
        )));
    }
    Ok(nearest(embedding, centers).0)
}

/// Cluster of a single feature vector.
pub fn classify(model: &EmbedderModel, centers: ArrayView2<'_, f64>, x: ArrayView1<'_, f64>) -> Result<usize> {
    if x.len() != model.input_dim() {
        return Err(Error::invalid(format!(
            "feature vector has length {}, model expects M={}",
            x.len(),
            model.input_dim()
        )));
    }
    let row = x.insert_axis(Axis(0));
    Ok(classify_rows(model, centers, row)?[0])
}

/// Cluster of every row of `x`.
pub fn classify_rows(
    model: &EmbedderModel,
    centers: ArrayView2<'_, f64>,
    x: ArrayView2<'_, f64>,
) -> Result<Vec<usize>> {
    if x.ncols() != model.input_dim() {
        return Err(Error::invalid(format!(
            "features have {} columns, model expects M={}",
            x.ncols(),
            model.input_dim()
        )));
    }
    if x.nrows() == 0 {
        return Ok(Vec::new());
    }
    let q = model.embed_whitened(x)?;
    q.outer_iter()
        .map(|row| nearest_center(row, centers))
        .collect()
}

/// Per-cluster sizes.
pub fn cluster_sizes(assignments: &[usize], k: usize) -> Array1<usize> {
    let mut sizes = Array1::zeros(k);
    for &a in assignments {
        sizes[a] += 1;
    }
    sizes
}

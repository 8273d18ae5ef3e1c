use std::collections::HashMap;
use std::fs;
use std::path::{Path, PathBuf};

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use super::text::{read_labels, read_matrix_csv, write_labels, write_matrix_csv};
use crate::error::{Error, Result};
use crate::graph::{FeatureMatrix, MultilayerGraph};

pub const MANIFEST_VERSION: u32 = 1;
pub const MANIFEST_FILE: &str = "manifest.json";
pub const FEATURES_FILE: &str = "features.csv";
pub const LABELS_FILE: &str = "labels.csv";

/// Graph, node features and optional ground-truth labels over the same nodes.
#[derive(Debug, Clone, PartialEq)]
pub struct DatasetBundle {
    pub graph: MultilayerGraph,
    pub features: FeatureMatrix,
    pub labels: Option<Vec<usize>>,
}

impl DatasetBundle {
    pub fn new(graph: MultilayerGraph, features: FeatureMatrix, labels: Option<Vec<usize>>) -> Result<Self> {
        let n = graph.num_vertices();
        if features.rows() != n {
            return Err(Error::invalid(format!(
                "graph has {n} vertices but features have {} rows",
                features.rows()
            )));
        }
        if let Some(l) = &labels {
            if l.len() != n {
                return Err(Error::invalid(format!(
                    "graph has {n} vertices but {} labels were given",
                    l.len()
                )));
            }
        }
        Ok(DatasetBundle {
            graph,
            features,
            labels,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.graph.num_vertices()
    }

    /// Number of distinct ground-truth classes.
    pub fn k_true(&self) -> Option<usize> {
        self.labels.as_ref().map(|l| {
            let mut v = l.clone();
            v.sort_unstable();
            v.dedup();
            v.len()
        })
    }

    /// Bundle restricted to `nodes`, in that order.
    pub fn subset(&self, nodes: &[usize]) -> Result<Self> {
        let graph = self.graph.induced(nodes)?;
        let features = self.features.select_rows(nodes);
        let labels = self
            .labels
            .as_ref()
            .map(|l| nodes.iter().map(|&i| l[i]).collect());
        DatasetBundle::new(graph, features, labels)
    }

    pub fn manifest(&self) -> Manifest {
        Manifest {
            version: MANIFEST_VERSION,
            n: self.num_nodes(),
            m: self.features.cols(),
            s: self.graph.num_layers(),
            k_true: self.k_true(),
            has_labels: self.labels.is_some(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Manifest {
    pub version: u32,
    pub n: usize,
    pub m: usize,
    pub s: usize,
    #[serde(skip_serializing_if = "Option::is_none", default)]
    pub k_true: Option<usize>,
    pub has_labels: bool,
}

pub fn layer_file_name(s: usize) -> String {
    format!("layer_{s}.tsv")
}

/// Explicit file locations for [`load_bundle`].
#[derive(Debug, Clone, Default)]
pub struct BundlePaths {
    pub layers: Vec<PathBuf>,
    pub features: PathBuf,
    pub labels: Option<PathBuf>,
    /// Skip one header line in the feature CSV.
    pub features_header: bool,
}

/// Writes `layer_<s>.tsv`, `features.csv`, `labels.csv` (when labels exist)
/// and `manifest.json` into `dir`.
pub fn save_bundle(bundle: &DatasetBundle, dir: &Path) -> Result<Vec<PathBuf>> {
    fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    let mut written = Vec::new();
    for (s, w) in bundle.graph.layers().iter().enumerate() {
        let path = dir.join(layer_file_name(s));
        write_edge_list(w, &path)?;
        written.push(path);
    }
    let features = dir.join(FEATURES_FILE);
    write_matrix_csv(bundle.features.as_array(), &features)?;
    written.push(features);
    let labels_path = dir.join(LABELS_FILE);
    if let Some(labels) = &bundle.labels {
        write_labels(labels, &labels_path)?;
        written.push(labels_path);
    } else if labels_path.exists() {
        fs::remove_file(&labels_path).map_err(|e| Error::io(&labels_path, e))?;
    }
    let manifest = dir.join(MANIFEST_FILE);
    let text = serde_json::to_string_pretty(&bundle.manifest()).expect("manifest serializes");
    fs::write(&manifest, text + "\n").map_err(|e| Error::io(&manifest, e))?;
    written.push(manifest);
    Ok(written)
}

pub fn read_manifest(dir: &Path) -> Result<Manifest> {
    let path = dir.join(MANIFEST_FILE);
    let text = fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Json { path, source: e })
}

/// Loads a directory written by [`save_bundle`].
pub fn load_bundle_dir(dir: &Path) -> Result<DatasetBundle> {
    let manifest = read_manifest(dir)?;
    if manifest.version != MANIFEST_VERSION {
        return Err(Error::invalid(format!(
            "unsupported bundle version {} in {}",
            manifest.version,
            dir.display()
        )));
    }
    let paths = BundlePaths {
        layers: (0..manifest.s).map(|s| dir.join(layer_file_name(s))).collect(),
        features: dir.join(FEATURES_FILE),
        labels: manifest.has_labels.then(|| dir.join(LABELS_FILE)),
        features_header: false,
    };
    let bundle = load_bundle(&paths)?;
    if bundle.num_nodes() != manifest.n || bundle.features.cols() != manifest.m {
        return Err(Error::invalid(format!(
            "manifest declares n={}, m={} but files hold n={}, m={}",
            manifest.n,
            manifest.m,
            bundle.num_nodes(),
            bundle.features.cols()
        )));
    }
    Ok(bundle)
}

/// Loads edge lists, features and optional labels; the node count comes
/// from the feature file.
pub fn load_bundle(paths: &BundlePaths) -> Result<DatasetBundle> {
    if paths.layers.is_empty() {
        return Err(Error::invalid("at least one layer file is required"));
    }
    let features = read_matrix_csv(&paths.features, paths.features_header)?;
    let n = features.nrows();
    let layers = paths
        .layers
        .iter()
        .map(|p| read_edge_list(p, n))
        .collect::<Result<Vec<_>>>()?;
    let labels = match &paths.labels {
        Some(p) => {
            let l = read_labels(p)?;
            if l.len() != n {
                return Err(Error::invalid(format!(
                    "{} has {} labels but the feature file has {n} rows",
                    p.display(),
                    l.len()
                )));
            }
            Some(l)
        }
        None => None,
    };
    DatasetBundle::new(
        MultilayerGraph::new(layers)?,
        FeatureMatrix::new(features)?,
        labels,
    )
}

/// One `i<TAB>j<TAB>w` line per undirected edge with `i < j`.
pub fn write_edge_list(w: &Array2<f64>, path: &Path) -> Result<()> {
    let mut out = String::new();
    let n = w.nrows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = w[[i, j]];
            if v != 0.0 {
                out.push_str(&format!("{i}\t{j}\t{v}\n"));
            }
        }
    }
    fs::write(path, out).map_err(|e| Error::io(path, e))
}

/// Parses an undirected edge list over `n` vertices into a symmetric
/// adjacency matrix. Repeated identical edges are ignored; repeated edges
/// with different weights are rejected.
pub fn read_edge_list(path: &Path, n: usize) -> Result<Array2<f64>> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let parse_err = |line: usize, message: String| Error::Parse {
        path: path.to_path_buf(),
        line,
        message,
    };
    let mut w = Array2::<f64>::zeros((n, n));
    let mut seen: HashMap<(usize, usize), f64> = HashMap::new();
    for (idx, raw) in text.lines().enumerate() {
        let line_no = idx + 1;
        let line = raw.trim_end_matches('\r');
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 3 {
            return Err(parse_err(
                line_no,
                format!("expected 3 tab-separated fields, found {}", fields.len()),
            ));
        }
        let index = |s: &str, what: &str| -> Result<usize> {
            let v: usize = s
                .trim()
                .parse()
                .map_err(|_| parse_err(line_no, format!("invalid {what} index {s:?}")))?;
            if v >= n {
                return Err(parse_err(
                    line_no,
                    format!("{what} index {v} out of range for {n} vertices"),
                ));
            }
            Ok(v)
        };
        let i = index(fields[0], "source")?;
        let j = index(fields[1], "target")?;
        let weight: f64 = fields[2]
            .trim()
            .parse()
            .map_err(|_| parse_err(line_no, format!("invalid weight {:?}", fields[2])))?;
        if i == j {
            return Err(parse_err(line_no, format!("self-loop at vertex {i}")));
        }
        if !weight.is_finite() || weight < 0.0 {
            return Err(parse_err(line_no, format!("weight {weight} must be finite and nonnegative")));
        }
        let key = (i.min(j), i.max(j));
        if let Some(&previous) = seen.get(&key) {
            if previous != weight {
                return Err(parse_err(
                    line_no,
                    format!(
                        "conflicting duplicate edge ({}, {}): {previous} vs {weight}",
                        key.0, key.1
                    ),
                ));
            }
            continue;
        }
        seen.insert(key, weight);
        w[[i, j]] = weight;
        w[[j, i]] = weight;
    }
    Ok(w)
}

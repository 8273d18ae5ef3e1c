//! Agreement scores between two partitions: Purity, NMI, adjusted Rand index.
//!
//! All three ignore the actual label values; only the grouping matters.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Counts of items per (predicted cluster, true class) pair.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContingencyTable {
    /// `counts[p][t]`, rows indexed by predicted cluster in ascending label order.
    pub counts: Vec<Vec<u64>>,
    pub n: u64,
}

impl ContingencyTable {
    pub fn new(pred: &[usize], truth: &[usize]) -> Result<Self> {
        if pred.len() != truth.len() {
            return Err(Error::invalid(format!(
                "label length mismatch: predicted {}, truth {}",
                pred.len(),
                truth.len()
            )));
        }
        let pred_index = dense_index(pred);
        let truth_index = dense_index(truth);
        let mut counts = vec![vec![0u64; truth_index.len()]; pred_index.len()];
        for (p, t) in pred.iter().zip(truth) {
            counts[pred_index[p]][truth_index[t]] += 1;
        }
        Ok(ContingencyTable {
            counts,
            n: pred.len() as u64,
        })
    }

    pub fn num_pred(&self) -> usize {
        self.counts.len()
    }

    pub fn num_true(&self) -> usize {
        self.counts.first().map_or(0, Vec::len)
    }

    fn row_sums(&self) -> Vec<u64> {
        self.counts.iter().map(|r| r.iter().sum()).collect()
    }

    fn col_sums(&self) -> Vec<u64> {
        let mut sums = vec![0u64; self.num_true()];
        for row in &self.counts {
            for (s, &c) in sums.iter_mut().zip(row) {
                *s += c;
            }
        }
        sums
    }
}

fn dense_index(labels: &[usize]) -> BTreeMap<usize, usize> {
    let mut map = BTreeMap::new();
    for &l in labels {
        map.entry(l).or_insert(0);
    }
    for (i, v) in map.values_mut().enumerate() {
        *v = i;
    }
    map
}

/// Fraction of items belonging to the majority true class of their
/// predicted cluster. Not symmetric in its arguments.
pub fn purity(pred: &[usize], truth: &[usize]) -> Result<f64> {
    let table = ContingencyTable::new(pred, truth)?;
    if table.n == 0 {
        return Ok(1.0);
    }
    let majority: u64 = table
        .counts
        .iter()
        .map(|row| row.iter().copied().max().unwrap_or(0))
        .sum();
    Ok(majority as f64 / table.n as f64)
}

fn entropy(counts: &[u64], n: f64) -> f64 {
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n;
            -p * p.ln()
        })
        .sum()
}

/// Mutual information normalized by the arithmetic mean of the two
/// entropies (natural log). Two single-cluster partitions score 1.
pub fn nmi(pred: &[usize], truth: &[usize]) -> Result<f64> {
    let table = ContingencyTable::new(pred, truth)?;
    if table.n == 0 {
        return Ok(1.0);
    }
    let n = table.n as f64;
    let rows = table.row_sums();
    let cols = table.col_sums();
    let h_pred = entropy(&rows, n);
    let h_true = entropy(&cols, n);
    let denom = 0.5 * (h_pred + h_true);
    if denom == 0.0 {
        // Both partitions are a single cluster.
        return Ok(1.0);
    }
    let mut mi = 0.0;
    for (i, row) in table.counts.iter().enumerate() {
        for (j, &c) in row.iter().enumerate() {
            if c > 0 {
                let c = c as f64;
                mi += c / n * (c * n / (rows[i] as f64 * cols[j] as f64)).ln();
            }
        }
    }
    Ok((mi / denom).clamp(0.0, 1.0))
}

fn choose2(x: u64) -> f64 {
    let x = x as f64;
    x * (x - 1.0) / 2.0
}

/// Hubert–Arabie adjusted Rand index.
///
/// When the maximum and expected index coincide the score is 1 for identical
/// groupings and 0 otherwise.
pub fn adjusted_rand(pred: &[usize], truth: &[usize]) -> Result<f64> {
    let table = ContingencyTable::new(pred, truth)?;
    let index: f64 = table.counts.iter().flatten().map(|&c| choose2(c)).sum();
    let sum_rows: f64 = table.row_sums().into_iter().map(choose2).sum();
    let sum_cols: f64 = table.col_sums().into_iter().map(choose2).sum();
    let total = choose2(table.n);
    let expected = if total > 0.0 {
        sum_rows * sum_cols / total
    } else {
        0.0
    };
    let max = 0.5 * (sum_rows + sum_cols);
    if max == expected {
        let identical = table
            .counts
            .iter()
            .all(|row| row.iter().filter(|&&c| c > 0).count() <= 1)
            && table.num_pred() == table.num_true();
        return Ok(if identical { 1.0 } else { 0.0 });
    }
    Ok((index - expected) / (max - expected))
}

/// Serializable metrics summary.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub purity: f64,
    pub nmi: f64,
    pub ari: f64,
    pub n: usize,
    pub k_pred: usize,
    pub k_true: usize,
}

impl MetricsReport {
    pub fn compute(pred: &[usize], truth: &[usize]) -> Result<Self> {
        let table = ContingencyTable::new(pred, truth)?;
        Ok(MetricsReport {
            purity: purity(pred, truth)?,
            nmi: nmi(pred, truth)?,
            ari: adjusted_rand(pred, truth)?,
            n: pred.len(),
            k_pred: table.num_pred(),
            k_true: table.num_true(),
        })
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("metrics serialize")
    }
}

//! Layer aggregation: merge per-layer shifted Laplacians into one SPD matrix.

use std::fmt;
use std::str::FromStr;

use ndarray::Array2;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::{laplacian, shifted_laplacian, DiagonalShift, MultilayerGraph};
use crate::spd::{congruence, relative_frobenius_error, spd_exp, spd_log, SpdMatrix};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "snake_case")]
pub enum AggregationMethod {
    #[default]
    Geometric,
    Arithmetic,
}

impl fmt::Display for AggregationMethod {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            AggregationMethod::Geometric => "geometric",
            AggregationMethod::Arithmetic => "arithmetic",
        })
    }
}

impl FromStr for AggregationMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "geometric" => Ok(AggregationMethod::Geometric),
            "arithmetic" => Ok(AggregationMethod::Arithmetic),
            other => Err(Error::invalid(format!(
                "unknown aggregation method {other:?} (expected geometric or arithmetic)"
            ))),
        }
    }
}

/// Parameters of the Karcher gradient flow.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct AggregationConfig {
    /// Diagonal shift applied to every layer Laplacian.
    pub shift: DiagonalShift,
    /// Step size β.
    pub step_size: f64,
    pub max_iterations: usize,
    /// Stop once `‖L_{t+1} − L_t‖_F / ‖L_t‖_F` drops below this.
    pub convergence_tol: f64,
    /// Scale the summed logarithms by `1/S`. Without it the flow is only
    /// stationary at the mean for `S = 1`.
    pub normalize_by_layers: bool,
}

impl Default for AggregationConfig {
    fn default() -> Self {
        AggregationConfig {
            shift: DiagonalShift::default(),
            step_size: 1.0,
            max_iterations: 1,
            convergence_tol: 1e-8,
            normalize_by_layers: true,
        }
    }
}

impl AggregationConfig {
    /// Tolerance-driven configuration used when an accurate mean is required.
    pub fn converged() -> Self {
        AggregationConfig {
            max_iterations: 100,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.shift.validate()?;
        if !(self.step_size > 0.0) || !self.step_size.is_finite() {
            return Err(Error::invalid(format!(
                "step size must be positive, got {}",
                self.step_size
            )));
        }
        if self.max_iterations == 0 {
            return Err(Error::invalid("max_iterations must be at least 1"));
        }
        if !(self.convergence_tol > 0.0) {
            return Err(Error::invalid(format!(
                "convergence tolerance must be positive, got {}",
                self.convergence_tol
            )));
        }
        Ok(())
    }
}

/// Outcome of the Karcher flow.
#[derive(Debug, Clone)]
pub struct KarcherOutcome {
    pub mean: SpdMatrix,
    pub iterations: usize,
    /// Relative Frobenius change of each iteration.
    pub changes: Vec<f64>,
    pub converged: bool,
}

fn check_same_dims(mats: &[SpdMatrix]) -> Result<usize> {
    let first = mats
        .first()
        .ok_or_else(|| Error::invalid("cannot average an empty list of matrices"))?;
    let n = first.dim();
    if let Some((s, m)) = mats.iter().enumerate().find(|(_, m)| m.dim() != n) {
        return Err(Error::invalid(format!(
            "matrix {s} has dimension {}, expected {n}",
            m.dim()
        )));
    }
    Ok(n)
}

/// `(1/S) Σ Lˢ`.
pub fn arithmetic_mean(laplacians: &[SpdMatrix]) -> Result<SpdMatrix> {
    let n = check_same_dims(laplacians)?;
    let mut sum = Array2::<f64>::zeros((n, n));
    for l in laplacians {
        sum += l.as_array();
    }
    sum /= laplacians.len() as f64;
    SpdMatrix::new(sum)
}

/// Geometric (Karcher) mean by the Riemannian gradient flow
/// `L ← L^{1/2} Exp(β/S Σ Log(L^{-1/2} Lˢ L^{-1/2})) L^{1/2}`, started at `Σ Lˢ`.
pub fn geometric_mean(laplacians: &[SpdMatrix], cfg: &AggregationConfig) -> Result<SpdMatrix> {
    Ok(karcher_flow(laplacians, cfg)?.mean)
}

pub fn karcher_flow(laplacians: &[SpdMatrix], cfg: &AggregationConfig) -> Result<KarcherOutcome> {
    cfg.validate()?;
    let n = check_same_dims(laplacians)?;
    let layers = laplacians.len() as f64;
    let scale = if cfg.normalize_by_layers {
        cfg.step_size / layers
    } else {
        cfg.step_size
    };

    let mut start = Array2::<f64>::zeros((n, n));
    for l in laplacians {
        start += l.as_array();
    }
    let mut current = SpdMatrix::new(start)?;
    let mut changes = Vec::new();
    let mut converged = false;

    for _ in 0..cfg.max_iterations {
        let root = current.sqrt()?;
        let inv_root = current.inv_sqrt()?;
        let mut tangent = Array2::<f64>::zeros((n, n));
        for l in laplacians {
            let whitened = SpdMatrix::new(congruence(&inv_root, l.as_array())).map_err(|e| {
                Error::NumericalFailure {
                    context: "geometric_mean",
                    diagnostics: format!("whitened layer lost definiteness: {e}"),
                }
            })?;
            tangent += &spd_log(&whitened)?;
        }
        tangent *= scale;
        let step = spd_exp(tangent.view())?;
        let next = SpdMatrix::new(congruence(&root, step.as_array()))?;

        let change = relative_frobenius_error(next.view(), current.view());
        changes.push(change);
        current = next;
        if change < cfg.convergence_tol {
            converged = true;
            break;
        }
    }

    Ok(KarcherOutcome {
        mean: current,
        iterations: changes.len(),
        changes,
        converged,
    })
}

/// Shifted Laplacian of every layer.
pub fn shifted_laplacians(g: &MultilayerGraph, shift: DiagonalShift) -> Result<Vec<SpdMatrix>> {
    shift.validate()?;
    g.layers()
        .iter()
        .map(|w| {
            let l = laplacian(w.view())?;
            shifted_laplacian(l.view(), shift.epsilon_for(l.view()))
        })
        .collect()
}

/// Representative SPD matrix of a multilayer graph.
pub fn aggregate_graph(
    g: &MultilayerGraph,
    method: AggregationMethod,
    cfg: &AggregationConfig,
) -> Result<SpdMatrix> {
    cfg.validate()?;
    let layers = shifted_laplacians(g, cfg.shift)?;
    if layers.len() == 1 {
        return Ok(layers.into_iter().next().expect("one layer"));
    }
    match method {
        AggregationMethod::Arithmetic => arithmetic_mean(&layers),
        AggregationMethod::Geometric => geometric_mean(&layers, cfg),
    }
}

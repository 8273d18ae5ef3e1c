use std::path::Path;

use ndarray::{Array1, Array2, ArrayView2, Axis};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::graph::FeatureMatrix;

/// Hidden layer widths of the default network.
pub const DEFAULT_HIDDEN: [usize; 3] = [400, 200, 100];

const INITIAL_PRELU_SLOPE: f64 = 0.25;
const MODEL_FORMAT: &str = "orthonet-model";
const MODEL_VERSION: u32 = 1;

/// One fully connected layer, `z = a W + b` with `W` shaped `in × out`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DenseLayer {
    pub weights: Array2<f64>,
    pub bias: Array1<f64>,
}

/// Dense feed-forward map `R^M → R^K` with a PReLU after every hidden layer
/// and a linear output layer.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbedderModel {
    layer_sizes: Vec<usize>,
    layers: Vec<DenseLayer>,
    prelu_slopes: Vec<f64>,
    /// Lower Cholesky factor `R` of `YᵀY` on the training set, used to whiten
    /// embeddings of new samples.
    whitening: Option<Array2<f64>>,
}

/// Gradient of a scalar with respect to every parameter, in the layout of
/// [`EmbedderModel::parameters`].
pub type ParameterGradient = Vec<f64>;

/// Intermediate values of a forward pass.
struct Tape {
    /// Input of each dense layer (`inputs[0]` is X).
    inputs: Vec<Array2<f64>>,
    /// Pre-activation of each hidden layer.
    pre_activations: Vec<Array2<f64>>,
    output: Array2<f64>,
}

impl EmbedderModel {
    /// `[input, hidden..., output]` sizes; weights drawn uniformly from
    /// `±1/√fan_in`, PReLU slopes start at 0.25.
    pub fn new(layer_sizes: &[usize], seed: u64) -> Result<Self> {
        validate_sizes(layer_sizes)?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let layers = layer_sizes
            .windows(2)
            .map(|w| {
                let (fan_in, fan_out) = (w[0], w[1]);
                let bound = 1.0 / (fan_in as f64).sqrt();
                let weights =
                    Array2::from_shape_fn((fan_in, fan_out), |_| rng.random_range(-bound..=bound));
                let bias = Array1::from_shape_fn(fan_out, |_| rng.random_range(-bound..=bound));
                DenseLayer { weights, bias }
            })
            .collect::<Vec<_>>();
        let prelu_slopes = vec![INITIAL_PRELU_SLOPE; layers.len() - 1];
        Ok(EmbedderModel {
            layer_sizes: layer_sizes.to_vec(),
            layers,
            prelu_slopes,
            whitening: None,
        })
    }

    /// Default architecture `M-400-200-100-K`.
    pub fn with_default_architecture(input_dim: usize, output_dim: usize, seed: u64) -> Result<Self> {
        let mut sizes = vec![input_dim];
        sizes.extend_from_slice(&DEFAULT_HIDDEN);
        sizes.push(output_dim);
        Self::new(&sizes, seed)
    }

    pub fn from_parts(layers: Vec<DenseLayer>, prelu_slopes: Vec<f64>) -> Result<Self> {
        let first = layers
            .first()
            .ok_or_else(|| Error::invalid("a model needs at least one layer"))?;
        let mut sizes = vec![first.weights.nrows()];
        for (i, layer) in layers.iter().enumerate() {
            if layer.weights.nrows() != *sizes.last().expect("nonempty") {
                return Err(Error::invalid(format!(
                    "layer {i} expects {} inputs but previous layer has {} outputs",
                    layer.weights.nrows(),
                    sizes.last().expect("nonempty")
                )));
            }
            if layer.bias.len() != layer.weights.ncols() {
                return Err(Error::invalid(format!(
                    "layer {i} bias has length {}, expected {}",
                    layer.bias.len(),
                    layer.weights.ncols()
                )));
            }
            sizes.push(layer.weights.ncols());
        }
        validate_sizes(&sizes)?;
        if prelu_slopes.len() != layers.len() - 1 {
            return Err(Error::invalid(format!(
                "expected {} PReLU slopes, got {}",
                layers.len() - 1,
                prelu_slopes.len()
            )));
        }
        let model = EmbedderModel {
            layer_sizes: sizes,
            layers,
            prelu_slopes,
            whitening: None,
        };
        model.check_finite()?;
        Ok(model)
    }

    pub fn layer_sizes(&self) -> &[usize] {
        &self.layer_sizes
    }

    pub fn input_dim(&self) -> usize {
        self.layer_sizes[0]
    }

    pub fn output_dim(&self) -> usize {
        *self.layer_sizes.last().expect("validated nonempty")
    }

    pub fn layers(&self) -> &[DenseLayer] {
        &self.layers
    }

    pub fn prelu_slopes(&self) -> &[f64] {
        &self.prelu_slopes
    }

    pub fn whitening(&self) -> Option<&Array2<f64>> {
        self.whitening.as_ref()
    }

    pub fn set_whitening(&mut self, r: Option<Array2<f64>>) {
        self.whitening = r;
    }

    /// Number of trainable parameters `B`.
    pub fn param_count(&self) -> usize {
        self.layers
            .iter()
            .map(|l| l.weights.len() + l.bias.len())
            .sum::<usize>()
            + self.prelu_slopes.len()
    }

    /// Flattened parameters: per layer, weights in row-major order then bias;
    /// PReLU slopes last.
    pub fn parameters(&self) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.param_count());
        for l in &self.layers {
            out.extend(l.weights.iter().copied());
            out.extend(l.bias.iter().copied());
        }
        out.extend_from_slice(&self.prelu_slopes);
        out
    }

    pub fn set_parameters(&mut self, params: &[f64]) -> Result<()> {
        if params.len() != self.param_count() {
            return Err(Error::invalid(format!(
                "expected {} parameters, got {}",
                self.param_count(),
                params.len()
            )));
        }
        let mut offset = 0;
        for l in &mut self.layers {
            for w in l.weights.iter_mut() {
                *w = params[offset];
                offset += 1;
            }
            for b in l.bias.iter_mut() {
                *b = params[offset];
                offset += 1;
            }
        }
        self.prelu_slopes.copy_from_slice(&params[offset..]);
        Ok(())
    }

    fn check_finite(&self) -> Result<()> {
        if self.parameters().iter().any(|v| !v.is_finite()) {
            return Err(Error::invalid("model has non-finite parameters"));
        }
        Ok(())
    }

    fn check_input(&self, x: ArrayView2<'_, f64>) -> Result<()> {
        if x.ncols() != self.input_dim() {
            return Err(Error::invalid(format!(
                "feature dimension mismatch: model expects M={}, got {}",
                self.input_dim(),
                x.ncols()
            )));
        }
        Ok(())
    }

    /// `Y = f_θ(X)`, one output row per input row.
    pub fn forward(&self, x: &FeatureMatrix) -> Result<Array2<f64>> {
        self.forward_view(x.view())
    }

    pub fn forward_view(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        self.check_input(x)?;
        let mut a = x.to_owned();
        let last = self.layers.len() - 1;
        for (i, layer) in self.layers.iter().enumerate() {
            let mut z = a.dot(&layer.weights);
            z += &layer.bias;
            if i < last {
                let slope = self.prelu_slopes[i];
                z.mapv_inplace(|v| if v > 0.0 { v } else { slope * v });
            }
            a = z;
        }
        Ok(a)
    }

    fn forward_tape(&self, x: ArrayView2<'_, f64>) -> Result<Tape> {
        self.check_input(x)?;
        let last = self.layers.len() - 1;
        let mut inputs = Vec::with_capacity(self.layers.len());
        let mut pre_activations = Vec::with_capacity(last);
        let mut a = x.to_owned();
        for (i, layer) in self.layers.iter().enumerate() {
            let mut z = a.dot(&layer.weights);
            z += &layer.bias;
            inputs.push(a);
            if i < last {
                let slope = self.prelu_slopes[i];
                a = z.mapv(|v| if v > 0.0 { v } else { slope * v });
                pre_activations.push(z);
            } else {
                a = z;
            }
        }
        Ok(Tape {
            inputs,
            pre_activations,
            output: a,
        })
    }

    /// Forward pass plus the reverse-mode gradient of `⟨upstream, f_θ(X)⟩`.
    pub fn forward_backward<F>(
        &self,
        x: ArrayView2<'_, f64>,
        upstream_of: F,
    ) -> Result<(Array2<f64>, ParameterGradient)>
    where
        F: FnOnce(&Array2<f64>) -> Result<Array2<f64>>,
    {
        let tape = self.forward_tape(x)?;
        let upstream = upstream_of(&tape.output)?;
        let grad = self.backward(&tape, upstream)?;
        Ok((tape.output, grad))
    }

    /// Gradient of `⟨upstream, f_θ(X)⟩` with respect to all parameters.
    pub fn backprop(&self, x: &FeatureMatrix, upstream: &Array2<f64>) -> Result<ParameterGradient> {
        let tape = self.forward_tape(x.view())?;
        self.backward(&tape, upstream.clone())
    }

    fn backward(&self, tape: &Tape, upstream: Array2<f64>) -> Result<ParameterGradient> {
        if upstream.dim() != tape.output.dim() {
            return Err(Error::invalid(format!(
                "upstream gradient is {:?}, expected {:?}",
                upstream.dim(),
                tape.output.dim()
            )));
        }
        let n_layers = self.layers.len();
        let mut weight_grads: Vec<Array2<f64>> = Vec::with_capacity(n_layers);
        let mut bias_grads: Vec<Array1<f64>> = Vec::with_capacity(n_layers);
        let mut slope_grads = vec![0.0; self.prelu_slopes.len()];

        let mut delta = upstream;
        for i in (0..n_layers).rev() {
            let layer = &self.layers[i];
            weight_grads.push(tape.inputs[i].t().dot(&delta));
            bias_grads.push(delta.sum_axis(Axis(0)));
            if i == 0 {
                break;
            }
            // Back through the PReLU of hidden layer i-1.
            let mut upstream_act = delta.dot(&layer.weights.t());
            let z = &tape.pre_activations[i - 1];
            let slope = self.prelu_slopes[i - 1];
            let mut slope_grad = 0.0;
            ndarray::Zip::from(&mut upstream_act).and(z).for_each(|g, &zv| {
                if zv <= 0.0 {
                    slope_grad += *g * zv;
                    *g *= slope;
                }
            });
            slope_grads[i - 1] = slope_grad;
            delta = upstream_act;
        }
        weight_grads.reverse();
        bias_grads.reverse();

        let mut flat = Vec::with_capacity(self.param_count());
        for (w, b) in weight_grads.iter().zip(&bias_grads) {
            flat.extend(w.iter().copied());
            flat.extend(b.iter().copied());
        }
        flat.extend_from_slice(&slope_grads);
        Ok(flat)
    }

    /// Whitened embedding `f_θ(X) R⁻ᵀ` using the stored training-time factor.
    pub fn embed_whitened(&self, x: ArrayView2<'_, f64>) -> Result<Array2<f64>> {
        let r = self.whitening.as_ref().ok_or_else(|| {
            Error::invalid("model has no stored Cholesky factor; train it before embedding new data")
        })?;
        let y = self.forward_view(x)?;
        Ok(super::objective::right_solve_lower_transpose(&y, r))
    }

    pub fn to_json(&self) -> Result<String> {
        let doc = ModelDocument {
            format: MODEL_FORMAT.to_string(),
            version: MODEL_VERSION,
            layer_sizes: self.layer_sizes.clone(),
            layers: self
                .layers
                .iter()
                .map(|l| LayerDocument {
                    weights: rows_of(&l.weights),
                    bias: l.bias.to_vec(),
                })
                .collect(),
            prelu_slopes: self.prelu_slopes.clone(),
            cholesky_factor: self.whitening.as_ref().map(rows_of),
        };
        serde_json::to_string_pretty(&doc).map_err(|e| Error::Json {
            path: "<model>".into(),
            source: e,
        })
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let doc: ModelDocument = serde_json::from_str(text).map_err(|e| Error::Json {
            path: "<model>".into(),
            source: e,
        })?;
        Self::from_document(doc)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        let text = self.to_json()?;
        std::fs::write(path, text + "\n").map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let doc: ModelDocument = serde_json::from_str(&text).map_err(|e| Error::Json {
            path: path.to_path_buf(),
            source: e,
        })?;
        Self::from_document(doc)
    }

    fn from_document(doc: ModelDocument) -> Result<Self> {
        if doc.format != MODEL_FORMAT {
            return Err(Error::invalid(format!(
                "unexpected model format {:?}",
                doc.format
            )));
        }
        if doc.version != MODEL_VERSION {
            return Err(Error::invalid(format!(
                "unsupported model version {}",
                doc.version
            )));
        }
        let layers = doc
            .layers
            .into_iter()
            .enumerate()
            .map(|(i, l)| {
                Ok(DenseLayer {
                    weights: matrix_from_rows(&l.weights, &format!("layer {i} weights"))?,
                    bias: Array1::from(l.bias),
                })
            })
            .collect::<Result<Vec<_>>>()?;
        let mut model = Self::from_parts(layers, doc.prelu_slopes)?;
        if model.layer_sizes != doc.layer_sizes {
            return Err(Error::invalid(format!(
                "layer_sizes {:?} disagree with weight shapes {:?}",
                doc.layer_sizes, model.layer_sizes
            )));
        }
        if let Some(rows) = doc.cholesky_factor {
            let r = matrix_from_rows(&rows, "cholesky_factor")?;
            let k = model.output_dim();
            if r.dim() != (k, k) {
                return Err(Error::invalid(format!(
                    "cholesky_factor is {:?}, expected {k}x{k}",
                    r.dim()
                )));
            }
            model.whitening = Some(r);
        }
        Ok(model)
    }
}

fn validate_sizes(sizes: &[usize]) -> Result<()> {
    if sizes.len() < 2 {
        return Err(Error::invalid(
            "layer_sizes needs at least an input and an output size",
        ));
    }
    if sizes.contains(&0) {
        return Err(Error::invalid(format!("layer sizes must be positive: {sizes:?}")));
    }
    Ok(())
}

/// On-disk model layout.
#[derive(Serialize, Deserialize)]
struct ModelDocument {
    format: String,
    version: u32,
    layer_sizes: Vec<usize>,
    layers: Vec<LayerDocument>,
    prelu_slopes: Vec<f64>,
    cholesky_factor: Option<Vec<Vec<f64>>>,
}

#[derive(Serialize, Deserialize)]
struct LayerDocument {
    /// `in × out`, one inner array per input unit.
    weights: Vec<Vec<f64>>,
    bias: Vec<f64>,
}

fn rows_of(a: &Array2<f64>) -> Vec<Vec<f64>> {
    a.outer_iter().map(|r| r.to_vec()).collect()
}

fn matrix_from_rows(rows: &[Vec<f64>], what: &str) -> Result<Array2<f64>> {
    let n = rows.len();
    let m = rows.first().map_or(0, Vec::len);
    if rows.iter().any(|r| r.len() != m) {
        return Err(Error::invalid(format!("{what}: ragged rows")));
    }
    let flat: Vec<f64> = rows.iter().flatten().copied().collect();
    Array2::from_shape_vec((n, m), flat).map_err(|e| Error::invalid(format!("{what}: {e}")))
}

use ndarray::{Array2, ArrayView2};
use serde::{Deserialize, Serialize};

use super::model::EmbedderModel;
use super::objective::{evaluate, gram_cholesky, loss, right_solve_lower_transpose};
use super::optim::{AmsGrad, AmsGradConfig};
use crate::error::{Error, Result};
use crate::graph::FeatureMatrix;
use crate::spd::SpdMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct TrainConfig {
    pub learning_rate: f64,
    pub amsgrad_beta1: f64,
    pub amsgrad_beta2: f64,
    pub amsgrad_eps: f64,
    pub max_steps: usize,
    /// Stop when the loss changes by less than this fraction over
    /// `plateau_window` steps.
    pub loss_plateau_tol: f64,
    pub plateau_window: usize,
    /// Seed for weight initialization.
    pub seed: u64,
    /// Relative diagonal jitter for the Gram factorization fallback.
    pub cholesky_jitter: f64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        TrainConfig {
            learning_rate: 1e-3,
            amsgrad_beta1: 0.9,
            amsgrad_beta2: 0.999,
            amsgrad_eps: 1e-8,
            max_steps: 2000,
            loss_plateau_tol: 1e-7,
            plateau_window: 50,
            seed: 0,
            cholesky_jitter: 1e-10,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.learning_rate > 0.0) || !self.learning_rate.is_finite() {
            return Err(Error::invalid(format!(
                "learning rate must be positive, got {}",
                self.learning_rate
            )));
        }
        if self.max_steps == 0 {
            return Err(Error::invalid("max_steps must be at least 1"));
        }
        if self.plateau_window == 0 {
            return Err(Error::invalid("plateau_window must be at least 1"));
        }
        for (name, beta) in [("beta1", self.amsgrad_beta1), ("beta2", self.amsgrad_beta2)] {
            if !(0.0..1.0).contains(&beta) {
                return Err(Error::invalid(format!("AmsGrad {name} must lie in [0, 1), got {beta}")));
            }
        }
        if !(self.amsgrad_eps > 0.0) || self.cholesky_jitter < 0.0 {
            return Err(Error::invalid("AmsGrad epsilon must be positive and jitter nonnegative"));
        }
        Ok(())
    }

    fn optimizer(&self) -> AmsGradConfig {
        AmsGradConfig {
            learning_rate: self.learning_rate,
            beta1: self.amsgrad_beta1,
            beta2: self.amsgrad_beta2,
            epsilon: self.amsgrad_eps,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingResult {
    /// `Y = f_θ(X)`.
    pub raw_output: Array2<f64>,
    /// Lower-triangular `R` with `RRᵀ = YᵀY`.
    pub cholesky_factor: Array2<f64>,
    /// `Q = Y R⁻ᵀ`, semi-orthogonal.
    pub whitened: Array2<f64>,
    pub final_loss: f64,
    /// Loss at every gradient step taken.
    pub loss_history: Vec<f64>,
}

/// Semi-orthogonal factor of `Y` by two Cholesky passes; returns `(R, Q)`
/// with `Y = Q Rᵀ`.
pub fn whiten(y: ArrayView2<'_, f64>, jitter: f64) -> Result<(Array2<f64>, Array2<f64>)> {
    let first = gram_cholesky(y, jitter)?;
    let q1 = right_solve_lower_transpose(&y.to_owned(), &first);
    let second = gram_cholesky(q1.view(), jitter)?;
    let q = right_solve_lower_transpose(&q1, &second);
    Ok((first.dot(&second), q))
}

/// Full-batch AmsGrad descent on the implicitly orthogonal objective.
///
/// On success the model holds the trained parameters and the training-time
/// Cholesky factor.
pub fn train(
    model: &mut EmbedderModel,
    x: &FeatureMatrix,
    l: &SpdMatrix,
    cfg: &TrainConfig,
) -> Result<EmbeddingResult> {
    cfg.validate()?;
    if x.rows() != l.dim() {
        return Err(Error::invalid(format!(
            "features have {} rows but the Laplacian is {}x{}",
            x.rows(),
            l.dim(),
            l.dim()
        )));
    }
    let mut optimizer = AmsGrad::new(cfg.optimizer(), model.param_count());
    let mut params = model.parameters();
    let mut history: Vec<f64> = Vec::with_capacity(cfg.max_steps);

    for step in 0..cfg.max_steps {
        let mut value = f64::NAN;
        let (_, grad) = model.forward_backward(x.view(), |y| {
            let eval = evaluate(y.view(), l, cfg.cholesky_jitter)?;
            value = eval.value;
            Ok(eval.jacobian)
        })?;
        if !value.is_finite() {
            return Err(Error::TrainingDiverged {
                step,
                reason: format!("loss is {value}"),
            });
        }
        if grad.iter().any(|g| !g.is_finite()) {
            return Err(Error::TrainingDiverged {
                step,
                reason: "gradient has non-finite entries".into(),
            });
        }
        history.push(value);
        if step % 100 == 0 {
            log::debug!("step {step}: loss {value:.6e}");
        }
        if history.len() > cfg.plateau_window {
            let earlier = history[history.len() - 1 - cfg.plateau_window];
            if (earlier - value).abs() <= cfg.loss_plateau_tol * earlier.abs() {
                log::debug!("loss plateau at step {step}");
                break;
            }
        }
        optimizer.update(&mut params, &grad);
        model.set_parameters(&params)?;
    }

    let raw_output = model.forward(x)?;
    let (final_loss, _) = loss(raw_output.view(), l, cfg.cholesky_jitter)?;
    if !final_loss.is_finite() {
        return Err(Error::TrainingDiverged {
            step: history.len(),
            reason: format!("final loss is {final_loss}"),
        });
    }
    let (cholesky_factor, whitened) = whiten(raw_output.view(), cfg.cholesky_jitter)?;
    model.set_whitening(Some(cholesky_factor.clone()));
    Ok(EmbeddingResult {
        raw_output,
        cholesky_factor,
        whitened,
        final_loss,
        loss_history: history,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spd::relative_frobenius_error;
    use ndarray::array;

    #[test]
    fn whitening_is_orthonormal_for_ill_conditioned_input() {
        let y = array![[1.0, 1.0], [1.0, 1.0 + 1e-7], [2.0, 2.0], [0.0, 1e-7]];
        let (r, q) = whiten(y.view(), 1e-10).unwrap();
        let qtq = q.t().dot(&q);
        assert!(relative_frobenius_error(qtq.view(), Array2::eye(2).view()) < 1e-6);
        assert!(r[[0, 1]] == 0.0 && r[[0, 0]] > 0.0 && r[[1, 1]] > 0.0);
        let back = q.dot(&r.t());
        assert!(relative_frobenius_error(back.view(), y.view()) < 1e-8);
    }

    #[test]
    fn config_validation() {
        assert!(TrainConfig::default().validate().is_ok());
        let bad = TrainConfig {
            learning_rate: 0.0,
            ..TrainConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = TrainConfig {
            max_steps: 0,
            ..TrainConfig::default()
        };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn mismatched_rows_rejected() {
        let mut m = EmbedderModel::new(&[2, 1], 0).unwrap();
        let x = FeatureMatrix::new(Array2::zeros((3, 2))).unwrap();
        let l = SpdMatrix::new(Array2::eye(4)).unwrap();
        assert!(train(&mut m, &x, &l, &TrainConfig::default()).is_err());
    }
}

//! Dense embedding network trained with the implicitly orthogonal spectral
//! objective.

mod model;
mod objective;
mod optim;
mod train;

pub use model::{DenseLayer, EmbedderModel, ParameterGradient, DEFAULT_HIDDEN};
pub use objective::{
    cholesky_lower, gram_cholesky, invert_lower, loss, loss_jacobian, right_solve_lower_transpose,
};
pub use optim::{AmsGrad, AmsGradConfig};
pub use train::{train, whiten, EmbeddingResult, TrainConfig};

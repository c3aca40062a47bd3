//! Fitting node distributions to directed hop distances.
//!
//! Each ordered pair contributes `((1 + tau KL_uv)^-1 - d_uv^-beta)^2`, with
//! unreachable pairs targeting 0. Parameters are updated with Adam, after
//! an optional rescaling of the gradient by the inverse Fisher metric.

mod adam;
mod loss;
mod model;
mod train;

pub use adam::Adam;
pub use loss::{gradients, loss, pair_term, target, term_from_kl, Gradient, LossValue};
pub use model::{
    init_model, Divergence, EmbeddingModel, ModelMeta, INIT_MU_RANGE, INIT_SIGMA_RANGE, INIT_TAU,
    TAU_MIN,
};
pub use train::{
    apply_natural_gradient, checkpoint_pearson, gradient_descent_step, train, TrainConfig,
    TrainReport,
};

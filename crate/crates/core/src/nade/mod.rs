//! Per-node conditional density estimators.
//!
//! Each node gets a small tanh network mapping its (standardized) parent
//! values to the parameters of a Gaussian or Bernoulli distribution.

mod mechanism;
mod mlp;
mod train;

pub use mechanism::{
    draw, draw_within, softplus, DistParams, HeadKind, Mechanism, Samples, Standardization, LOGIT_CLAMP, SIGMA_FLOOR,
    SUPPORT_ATTEMPTS,
};
pub use mlp::{LayerJson, Mlp, Trace};
pub use train::{fit, fit_with_history, samples_from, Fit, TrainConfig, MIN_ROWS};

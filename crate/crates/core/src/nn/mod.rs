//! Numerical core: GRU encoder, additive attention, task heads, losses,
//! hand-derived gradients, and Adam.

mod adam;
mod backward;
mod forward;
mod params;

pub use adam::{adam_step, AdamState, ADAM_BETA1, ADAM_BETA2, ADAM_EPS};
pub use backward::{batch_gradients, item_gradients, BatchItem};
pub use forward::{
    attention, bigru, binary_cross_entropy, categorical_cross_entropy, dropout_mask, forward,
    gru_step, item_loss, log_sum_exp, selu, selu_derivative, sigmoid, softmax, ForwardCache,
    GruStepCache, Prediction, PROB_EPS, SELU_ALPHA, SELU_LAMBDA,
};
pub use params::{
    init_params, AttentionParams, GenreHeadParams, GruDirectionParams, HyperConfig, InitScheme,
    ModelDims, ModelParams, TaskKind,
};

//! Attention-pooled quality predictor.
//!
//! A three-stage convolutional encoder reduces the image to a feature map at
//! 1/4 resolution. A 1×1 head turns the same features into an iris heatmap,
//! which weights a spatial average of the features. A linear head with a
//! sigmoid maps the pooled vector to a quality score.

mod checkpoint;
mod loss;
mod network;
mod optim;
mod pooling;
mod train;

pub use checkpoint::{load_checkpoint, save_checkpoint, Checkpoint, CHECKPOINT_VERSION};
pub use loss::{loss, loss_and_gradients, LossValue};
pub use network::{
    backward, forward, predict, ForwardCache, ModelConfig, ModelParams, Prediction, DOWNSAMPLE,
};
pub use optim::{adam_step, AdamState};
pub use pooling::attention_pool;
pub use train::{
    anneal_lambda, load_training_samples, lr_schedule, mask_target, predict_record, train,
    EpochLog, TrainConfig, TrainOutcome, TrainingSample,
};

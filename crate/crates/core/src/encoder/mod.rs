//! Feed-forward encoder with L2-normalized output and two cosine class
//! heads, trained by plain SGD through the dual-branch margin loss.

mod backprop;
mod checkpoint;
mod model;
mod train;

pub use backprop::{loss_and_gradients, parameters_mut, train_step, Gradients};
pub use checkpoint::{load_checkpoint, read_checkpoint, save_checkpoint, write_checkpoint, CHECKPOINT_MAGIC};
pub use model::{forward, init_model, DualHeadModel, ForwardCache, Layer};
pub use train::{adapt, learning_rate_at, train, Stage, TrainConfig, TrainHistory};

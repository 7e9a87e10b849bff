//! A small BERT-style encoder: attention, positional encoding, the post-norm
//! block stack, MLM pretraining, classification fine-tuning and checkpoints.
//!
//! All arithmetic is `f64` and single-threaded so results are reproducible
//! bit for bit.

pub mod attention;
pub mod checkpoint;
pub mod encoder;
pub mod params;
pub mod tensor;
pub mod train;

pub use attention::{
    multi_head_attention, positional_encoding, scaled_dot_attention,
    scaled_dot_attention_with_weights, AttentionInputs, HeadParams, MultiHeadParams,
    PositionalEncodingTable,
};
pub use checkpoint::Checkpoint;
pub use encoder::{classifier_logits, encoder_forward, mlm_logits, mlm_loss};
pub use params::{EncoderParams, LayerParams, ModelConfig};
pub use tensor::Matrix;
pub use train::{
    finetune, loss_and_gradients, make_windows, mlm_corrupt, predict, pretrain, train_step,
    wrap_sequence, AdamW, Batch, ClassExample, MlmExample, PretrainOutcome, TrainState,
    TrainingConfig,
};

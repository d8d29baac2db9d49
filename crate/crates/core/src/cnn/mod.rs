//! Hybrid classifier: one 3D convolution layer (bias + ReLU) feeding one
//! fully-connected layer. The convolution runs digitally or through the
//! optical model; the head is always digital.

mod bank;
mod eval;
mod model;
mod train;

pub use bank::{
    decode_head, decode_kernels, encode_head, encode_kernels, export_head, export_kernels,
    import_head, import_kernels, HEAD_MAGIC, KERNEL_BANK_MAGIC,
};
pub use eval::{argmax, evaluate, predict, predict_logits, EvalMode, EvalReport};
pub use model::{
    conv_layer_digital, forward_digital, forward_hybrid, param_count, ClassifierHead,
    DigitalConvLayer, KernelSet, Model,
};
pub use train::{
    adam_step, batch_gradients, softmax, train, EpochRecord, Gradients, ModelSpec, Sample, TrainConfig,
    TrainLog, TrainOutcome,
};

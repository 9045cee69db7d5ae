//! Feedforward ReLU networks trained with mini-batch Adam on squared error.

mod classifier;
mod io;
mod mlp;
mod train;

pub use classifier::{sign_accuracy, train_classifier, LabeledData, REQUIRED_ACCURACY};
pub use io::{load_mlp, load_regressor, save_mlp, save_regressor};
pub use mlp::{AdamConfig, AdamState, Gradients, Layer, Mlp, MlpSpec};
pub use train::{train, Dataset, Regressor, Standardizer, TrainConfig, TrainHistory};

//! Study targets: the dispersion surrogate, the digit classifier with its
//! IDX data files, and external programs.

pub mod classifier;
pub mod dispersion;
pub mod external;
pub mod idx;

pub use classifier::{
    bootstrap_precision, evaluate, train_classifier, train_with_stream, Classifier, PrecisionSample, TrainConfig, Trained,
};
pub use dispersion::{eval_dispersion, eval_dispersion_discretized, DispersionConstants, DispersionInputs};
pub use external::ExternalModel;
pub use idx::{load_idx, Dataset};

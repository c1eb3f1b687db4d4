//! RBF-kernel support vector classification.

pub mod kernel;
pub mod multiclass;
pub mod smo;

pub use kernel::{rbf_kernel, squared_distance, GammaMode, KernelParams};
pub use multiclass::{predict, train_one_vs_one, MulticlassSvmModel};
pub use smo::{decision_function, train_binary, BinarySvmModel, TrainOptions, TrainingInfo};

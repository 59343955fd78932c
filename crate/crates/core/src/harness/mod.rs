//! Training loop, metrics, leave-one-session-out cross-validation and grid sweeps.

pub mod cv;
pub mod metrics;
pub mod sweep;
pub mod train;

pub use cv::{cross_validate, single_fold, CvResult};
pub use metrics::{accuracy_from_confusion, confusion_matrix, ua_from_confusion, unweighted_accuracy, Summary};
pub use sweep::{sweep, SweepCell, SweepGrid, SweepMode, SweepResult};
pub use train::{derive_seed, evaluate, train_fold, FoldResult};

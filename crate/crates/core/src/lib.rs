//! Lightweight speech-emotion classification heads over frozen
//! self-supervised frame features.
//!
//! The pipeline for one utterance is: learned layer mixing, optional
//! projection with channel dropout, a pooling method (mean, mean-std,
//! correlation or attentive correlation), and a linear classifier trained
//! with label-smoothed cross-entropy. Gradients are derived by hand per
//! operation (see [`grad`]), and [`harness`] runs leave-one-session-out
//! cross-validation and hyperparameter sweeps.

pub mod attention;
pub mod cli;
pub mod config;
pub mod data;
pub mod error;
pub mod grad;
pub mod harness;
pub mod head;
pub mod model;
pub mod numeric;
pub mod pooling;
pub mod report;

#[cfg(test)]
mod testutil;

pub use config::TrainConfig;
pub use error::{Error, Result};

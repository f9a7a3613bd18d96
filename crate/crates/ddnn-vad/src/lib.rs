//! Frame-level voice activity detection built on a denoising deep neural
//! network: acoustic feature extraction, unsupervised denoising greedy
//! layer-wise pretraining against paired noisy/clean speech, supervised
//! fine-tuning, and a train/eval/predict pipeline.

pub mod dataset;
pub mod error;
pub mod eval;
pub mod features;
pub mod finetune;
pub mod linalg;
pub mod network;
pub mod par;
pub mod pipeline;
pub mod pretrain;

pub use error::{Error, Result};

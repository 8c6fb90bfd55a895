//! Audiovisual violence detection toolkit.
//!
//! The crate covers the whole pipeline from decoded media to a trained
//! fusion classifier:
//!
//! * [`data`]: clip manifests, train/validation splits and the binary
//!   embedding store shared with external encoders.
//! * [`audio`] and [`video`]: deterministic preprocessing into log-mel
//!   examples and normalized 224 x 224 frame stacks.
//! * [`augment`]: label-preserving audio and video augmentation and the
//!   dataset expansion policy.
//! * [`nn`]: dense layers, dropout, softmax cross-entropy and Adam.
//! * [`fusion`]: encoders and the intermediate, late and hybrid fusion heads.
//! * [`harness`]: metrics, experiments, strategy comparison and random
//!   search, plus a synthetic benchmark with known Bayes rates.

pub mod audio;
pub mod augment;
pub mod data;
pub mod error;
pub mod fusion;
pub mod harness;
pub mod nn;
pub mod seed;
pub mod tensor_io;
pub mod video;

pub use data::{ClipEntry, ClipManifest, EmbeddingRecord, EmbeddingStore, Label, Modality, Split};
pub use error::{Error, ErrorClass, Result};
pub use fusion::{FusionHead, HeadConfig, Prediction, Strategy};
pub use harness::{ExperimentConfig, MetricsReport};
pub use nn::TrainingConfig;

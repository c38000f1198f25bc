//! Audio event classification from audio and EEG features, and
//! audio/EEG shared-space correlation learning with cross-modal retrieval.
//!
//! * [`dataset`]: paired corpus model, synthetic generator, folds, file formats.
//! * [`numlin`]: eigen/SVD helpers, inverse square roots, PCA.
//! * [`classifiers`]: softmax and one-vs-rest kernel SVM heads, evaluation.
//! * [`corr`]: CCA, Deep CCA and its category-based variant.
//! * [`retrieval`]: cosine ranking, MRR1, MAP, component sweeps.
//! * [`pipeline`]: end-to-end experiment runs and reports.

pub mod dataset;
pub mod error;
pub mod numlin;
pub mod seeds;

pub use error::{Error, Result};
pub mod classifiers;
pub mod corr;
pub mod retrieval;
pub mod cli;

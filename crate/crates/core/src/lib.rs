//! Ensembles of small feed-forward classifiers trained with a
//! negative-correlation diversity penalty, plus calibration diagnostics
//! (reliability diagrams, ECE, per-class confidence reports).
//!
//! Modules, bottom-up:
//!
//! - [`nn`]: dense MLP with softmax output, cross-entropy, backprop, momentum SGD.
//! - [`ensemble`]: the diversity term, per-member loss, synchronous minibatch training, mean prediction.
//! - [`calibration`]: binning, ECE, reliability rows, per-class report.
//! - [`data`]: CSV, Gaussian blobs, splits, minibatch streams.
//! - [`cli`]: the `ncens` command-line surface.

pub mod calibration;
pub mod cli;
pub mod data;
pub mod ensemble;
pub mod error;
pub mod io;
pub mod matrix;
pub mod nn;
pub mod rng;
pub mod svg;

pub use calibration::{EceWeighting, EvaluationReport};
pub use data::{BlobSpec, Dataset};
pub use ensemble::{Ensemble, EnsembleConfig};
pub use error::{Error, Result};
pub use matrix::Matrix;
pub use nn::{Activation, NetworkParams, SgdConfig};

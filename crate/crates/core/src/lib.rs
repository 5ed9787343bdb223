//! Detection of malicious shell commands and the binaries that carry them.
//!
//! The crate is organised as a pipeline:
//!
//! - [`corpus`] pulls shell commands out of binaries (printable-string scan plus
//!   pattern rules), classic pcap captures and plain command lists.
//! - [`featurize`] turns commands into sparse n-gram count vectors, at term or
//!   character granularity, over a vocabulary built from either the full corpus or
//!   the malicious half only.
//! - [`reduce`] fits a PCA projection that keeps a target fraction of variance.
//! - [`models`] holds logistic regression, a random forest and a five-hidden-layer
//!   perceptron behind one predict contract.
//! - [`eval`] runs stratified k-fold cross-validation and reports accuracy, F1,
//!   FNR and FPR.
//! - [`filelevel`] lifts everything to per-file samples and synthesises benign
//!   pseudo-files.
//! - [`pipeline`] glues the stages together and reads/writes the model file.

pub mod corpus;
pub mod error;
pub mod eval;
pub mod featurize;
pub mod filelevel;
pub mod models;
pub mod pipeline;
pub mod reduce;
pub mod surrogate;

pub use error::{Error, Result};

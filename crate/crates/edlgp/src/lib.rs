//! EDLGP: evolutionary deep learning with strongly-typed genetic programming.
//!
//! The library evolves tree-shaped image-classification pipelines. A tree reads
//! raw image channels at its leaves, pushes them through image filters and
//! feature descriptors, trains classifiers at its inner nodes and sums the
//! per-class probability vectors of its branches at the root. Fitness is
//! k-fold cross-validation accuracy on a (typically small) training set.
//!
//! Modules map onto the stages of that pipeline:
//!
//! * [`primitives`] / [`tree`] / [`sexpr`] — the typed tree language and its
//!   canonical text form,
//! * [`genetics`] / [`evolve`] — initialization, selection, variation and the
//!   generational loop,
//! * [`image`] / [`features`] — the deterministic image and descriptor
//!   primitives,
//! * [`classifiers`] — decision-tree ensembles, logistic regression and a
//!   linear SVM, trained from scratch,
//! * [`pipeline`] — tree execution, cross-validation fitness and caching,
//! * [`dataset`] — IDX/CIFAR/PGM loaders and few-shot subsampling,
//! * [`config`] / [`runner`] — experiment configuration and the `evolve` /
//!   `evaluate` / `inspect` commands behind the CLI.

pub mod classifiers;
pub mod config;
pub mod dataset;
pub mod error;
pub mod evolve;
pub mod features;
pub mod genetics;
pub mod image;
pub mod pipeline;
pub mod primitives;
pub mod rng;
pub mod runner;
pub mod sexpr;
pub mod tree;
pub mod types;

pub use error::EdlgpError;
pub use types::{Channel, GpType, Layer, ParamValue};

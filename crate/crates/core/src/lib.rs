//! Dimensionality-reduction ensembles.
//!
//! Eight embedding methods (PCA, classical MDS, kernel PCA, ISOMAP, LLE,
//! Hessian LLE, Laplacian eigenmaps and t-SNE) built on a small dense linear
//! algebra kernel, an ensemble builder that concatenates their leading
//! components, a random-forest classifier, a simulation generator, dataset
//! loaders and the benchmark harness tying them together.

pub mod bench;
pub mod error;
pub mod embed;
pub mod ensemble;
pub mod forest;
pub mod ingest;
pub mod numcore;
pub mod preprocess;
pub mod seed;
pub mod simgen;

pub use error::{Error, Result};

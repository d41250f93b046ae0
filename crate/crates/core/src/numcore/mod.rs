//! Dense numeric kernel shared by every embedder.

mod distance;
mod eigen;
mod graph;
mod linalg;
mod matrix;

pub use distance::{pairwise_distances, DistanceMatrix, Metric};
pub use eigen::{
    canonical_sign, gen_sym_eigen, gen_sym_eigen_diag, residuals, sym_eigen, EigenPairs, Which,
    SYMMETRY_TOL,
};
pub use graph::{graph_shortest_paths, knn_graph, NeighborGraph, MIN_EDGE_WEIGHT};
pub use linalg::{cholesky_solve, householder_q, thin_svd, ThinSvd};
pub use matrix::{dot, norm2, squared_distance, DenseMatrix};

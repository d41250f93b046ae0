//! The eight embedding methods and their shared result type.

mod local;
mod spectral;
mod tsne;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numcore::{
    canonical_sign, knn_graph, pairwise_distances, sym_eigen, DenseMatrix, DistanceMatrix,
    EigenPairs, Metric, NeighborGraph, Which,
};

pub use local::{
    fit_hlle, fit_le, fit_lle, hessian_matrix, hlle_min_k, le_laplacian, lle_weights, HeatKernel,
    LocalConfig,
};
pub use spectral::{
    centered_kernel, fit_isomap, fit_kpca, fit_mds, fit_pca, Kernel, SpectralConfig,
};
pub use tsne::{conditional_affinities, fit_tsne, joint_affinities, kl_divergence};

/// Embedding methods in canonical order.
#[derive(
    Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize,
)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    Pca,
    Mds,
    Kpca,
    Isomap,
    Lle,
    Hlle,
    Le,
    Tsne,
}

impl Method {
    pub const ALL: [Method; 8] = [
        Method::Pca,
        Method::Mds,
        Method::Kpca,
        Method::Isomap,
        Method::Lle,
        Method::Hlle,
        Method::Le,
        Method::Tsne,
    ];

    /// Lowercase identifier used on the command line and in files.
    pub fn name(self) -> &'static str {
        match self {
            Method::Pca => "pca",
            Method::Mds => "mds",
            Method::Kpca => "kpca",
            Method::Isomap => "isomap",
            Method::Lle => "lle",
            Method::Hlle => "hlle",
            Method::Le => "le",
            Method::Tsne => "tsne",
        }
    }

    /// Display label for figures.
    pub fn label(self) -> &'static str {
        match self {
            Method::Pca => "PCA",
            Method::Mds => "MDS",
            Method::Kpca => "kPCA",
            Method::Isomap => "ISOMAP",
            Method::Lle => "LLE",
            Method::Hlle => "HLLE",
            Method::Le => "LE",
            Method::Tsne => "t-SNE",
        }
    }

    pub fn names() -> Vec<&'static str> {
        Self::ALL.iter().map(|m| m.name()).collect()
    }
}

impl fmt::Display for Method {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Method {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let lower = s.to_ascii_lowercase();
        let key = match lower.as_str() {
            "t-sne" => "tsne",
            "hllle" | "hll" => "hlle",
            other => other,
        };
        Method::ALL
            .into_iter()
            .find(|m| m.name() == key)
            .ok_or_else(|| {
                Error::InvalidArgument(format!(
                    "unknown method `{s}`; expected one of {}",
                    Method::names().join(", ")
                ))
            })
    }
}

/// Output of one embedding fit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmbeddingResult {
    pub method: Method,
    /// n x m coordinates.
    pub scores: DenseMatrix,
    /// Eigenvalues behind the retained components (empty for t-SNE).
    pub eigenvalues: Vec<f64>,
    pub params: BTreeMap<String, String>,
    /// Numeric diagnostics such as objective values or repair counts.
    pub metrics: BTreeMap<String, f64>,
    pub diagnostics: Vec<String>,
}

impl EmbeddingResult {
    fn new(method: Method, scores: DenseMatrix) -> Self {
        Self {
            method,
            scores,
            eigenvalues: Vec::new(),
            params: BTreeMap::new(),
            metrics: BTreeMap::new(),
            diagnostics: Vec::new(),
        }
    }

    fn param(mut self, key: &str, value: impl ToString) -> Self {
        self.params.insert(key.to_string(), value.to_string());
        self
    }

    pub fn n_rows(&self) -> usize {
        self.scores.rows()
    }

    pub fn dims(&self) -> usize {
        self.scores.cols()
    }
}

/// Settings for all eight methods.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize, Default)]
pub struct EmbedConfig {
    pub spectral: SpectralConfig,
    pub local: LocalConfig,
}

impl EmbedConfig {
    pub fn with_dims(mut self, m: usize) -> Self {
        self.spectral.output_dims = m;
        self.local.output_dims = m;
        self
    }

    pub fn with_seed(mut self, seed: u64) -> Self {
        self.local.seed = seed;
        self
    }
}

/// Fits `method` on the rows of `x`.
pub fn fit(method: Method, x: &DenseMatrix, cfg: &EmbedConfig) -> Result<EmbeddingResult> {
    match method {
        Method::Pca => fit_pca(x, &cfg.spectral),
        Method::Mds => {
            let d = pairwise_distances(x, Metric::Euclidean)?;
            fit_mds(&d, &cfg.spectral)
        }
        Method::Kpca => fit_kpca(x, &cfg.spectral),
        Method::Isomap => fit_isomap(x, &cfg.spectral),
        Method::Lle => fit_lle(x, &cfg.local),
        Method::Hlle => fit_hlle(x, &cfg.local),
        Method::Le => fit_le(x, &cfg.local),
        Method::Tsne => fit_tsne(x, &cfg.local),
    }
}

/// Symmetrized k-NN graph made connected by repeatedly adding the shortest
/// edge between two different components. Returns the added edges.
pub(crate) fn connected_knn_graph(
    d: &DistanceMatrix,
    k: usize,
) -> Result<(NeighborGraph, Vec<(usize, usize, f64)>)> {
    let mut g = knn_graph(d, k, true)?;
    let mut bridges = Vec::new();
    loop {
        let labels = g.components();
        if labels.iter().all(|&l| l == 0) {
            break;
        }
        let n = d.len();
        let mut best: Option<(f64, usize, usize)> = None;
        for i in 0..n {
            let row = d.row(i);
            for j in (i + 1)..n {
                if labels[i] != labels[j] && best.is_none_or(|b| row[j] < b.0) {
                    best = Some((row[j], i, j));
                }
            }
        }
        let (w, i, j) = best.expect("at least two components");
        g.add_edge(i, j, w);
        bridges.push((i, j, w));
    }
    Ok((g, bridges))
}

pub(crate) fn bridge_diagnostics(bridges: &[(usize, usize, f64)]) -> Vec<String> {
    bridges
        .iter()
        .map(|(i, j, w)| format!("connectivity repair: added edge {i}-{j} (length {w:.6e})"))
        .collect()
}

/// Smallest `count` eigenpairs of `a` restricted to the orthogonal
/// complement of the exact null vector `u` (unit norm).
pub(crate) fn smallest_deflated(
    a: &DenseMatrix,
    u: &[f64],
    count: usize,
) -> Result<EigenPairs> {
    let n = a.rows();
    let trace: f64 = (0..n).map(|i| a[(i, i)].abs()).sum();
    let shift = 1.0 + trace;
    let shifted = DenseMatrix::from_fn(n, n, |i, j| a[(i, j)] + shift * u[i] * u[j]);
    sym_eigen(&shifted, count, Which::Smallest)
}

/// Copies eigenvector columns into an n x m score matrix, scaling column j
/// by `scale[j]`.
pub(crate) fn scaled_columns(vectors: &DenseMatrix, scale: &[f64]) -> DenseMatrix {
    let n = vectors.rows();
    DenseMatrix::from_fn(n, scale.len(), |i, j| vectors[(i, j)] * scale[j])
}

pub(crate) fn sign_fix_columns(m: &mut DenseMatrix) {
    for j in 0..m.cols() {
        let mut c = m.column(j);
        canonical_sign(&mut c);
        for (i, v) in c.into_iter().enumerate() {
            m[(i, j)] = v;
        }
    }
}

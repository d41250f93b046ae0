//! PCA, classical MDS, kernel PCA and ISOMAP.

use serde::{Deserialize, Serialize};

use super::{bridge_diagnostics, connected_knn_graph, sign_fix_columns, EmbeddingResult, Method};
use crate::error::{Error, Result};
use crate::numcore::{
    graph_shortest_paths, pairwise_distances, squared_distance, sym_eigen, thin_svd, DenseMatrix,
    DistanceMatrix, Metric, Which,
};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Kernel {
    /// `exp(-sigma * |x - y|^2)`
    #[default]
    Rbf,
    /// Plain inner product; kernel PCA then coincides with PCA.
    Linear,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpectralConfig {
    pub output_dims: usize,
    pub kpca_sigma: f64,
    pub kpca_kernel: Kernel,
    pub isomap_k: usize,
}

impl Default for SpectralConfig {
    fn default() -> Self {
        Self {
            output_dims: 2,
            kpca_sigma: 0.2,
            kpca_kernel: Kernel::Rbf,
            isomap_k: 12,
        }
    }
}

impl SpectralConfig {
    pub fn validate(&self) -> Result<()> {
        if self.output_dims == 0 {
            return Err(Error::InvalidArgument("output_dims must be at least 1".into()));
        }
        if !(self.kpca_sigma > 0.0) || !self.kpca_sigma.is_finite() {
            return Err(Error::InvalidArgument(format!(
                "kpca_sigma must be positive, got {}",
                self.kpca_sigma
            )));
        }
        if self.isomap_k == 0 {
            return Err(Error::InvalidArgument("isomap_k must be at least 1".into()));
        }
        Ok(())
    }
}

fn need_rows(x: &DenseMatrix, min: usize, what: &str) -> Result<()> {
    if x.rows() < min {
        return Err(Error::Shape(format!(
            "{what} needs at least {min} rows, got {}",
            x.rows()
        )));
    }
    Ok(())
}

/// Principal component scores: the centered data projected onto the
/// leading eigenvectors of the sample covariance.
pub fn fit_pca(x: &DenseMatrix, cfg: &SpectralConfig) -> Result<EmbeddingResult> {
    cfg.validate()?;
    need_rows(x, 2, "PCA")?;
    let (n, p) = x.shape();
    let m = cfg.output_dims;
    let xc = x.centered();
    let r = m.min(n).min(p);
    let svd = thin_svd(&xc, r)?;
    let mut scores = DenseMatrix::zeros(n, m);
    for j in 0..r {
        for i in 0..n {
            scores[(i, j)] = svd.left[(i, j)] * svd.values[j];
        }
    }
    let mut eigenvalues: Vec<f64> = svd
        .values
        .iter()
        .map(|s| s * s / (n - 1) as f64)
        .collect();
    eigenvalues.resize(m, 0.0);

    let mut out = EmbeddingResult::new(Method::Pca, scores).param("m", m);
    let rank = svd.values.iter().filter(|&&s| s > 0.0).count();
    if rank < m {
        out.diagnostics.push(format!(
            "data rank {rank} is below m = {m}; trailing components are zero"
        ));
    }
    let total: f64 = (0..p)
        .map(|j| (0..n).map(|i| xc[(i, j)] * xc[(i, j)]).sum::<f64>())
        .sum::<f64>()
        / (n - 1) as f64;
    if total > 0.0 {
        out.metrics.insert(
            "explained_variance".into(),
            eigenvalues.iter().sum::<f64>() / total,
        );
    }
    out.eigenvalues = eigenvalues;
    Ok(out)
}

/// Classical (Torgerson) scaling of a distance matrix.
pub fn fit_mds(d: &DistanceMatrix, cfg: &SpectralConfig) -> Result<EmbeddingResult> {
    cfg.validate()?;
    let n = d.len();
    let m = cfg.output_dims;
    if m > n {
        return Err(Error::InvalidArgument(format!(
            "cannot embed {n} points in {m} dimensions"
        )));
    }
    if d.max() == 0.0 {
        return Err(Error::Data("all distances are zero".into()));
    }
    let sq: Vec<f64> = d.as_slice().iter().map(|v| v * v).collect();
    let b = double_center(&sq, n, -0.5);
    let mut out = top_scaled(Method::Mds, &b, m)?;
    out.params.insert("m".into(), m.to_string());
    Ok(out)
}

/// Kernel PCA on the double-centered kernel matrix.
pub fn fit_kpca(x: &DenseMatrix, cfg: &SpectralConfig) -> Result<EmbeddingResult> {
    cfg.validate()?;
    need_rows(x, 2, "kernel PCA")?;
    let n = x.rows();
    let m = cfg.output_dims;
    if m > n {
        return Err(Error::InvalidArgument(format!(
            "cannot embed {n} points in {m} dimensions"
        )));
    }
    let sigma = cfg.kpca_sigma;
    let mut k = vec![0.0; n * n];
    for i in 0..n {
        for j in i..n {
            let v = match cfg.kpca_kernel {
                Kernel::Rbf => (-sigma * squared_distance(x.row(i), x.row(j))).exp(),
                Kernel::Linear => crate::numcore::dot(x.row(i), x.row(j)),
            };
            k[i * n + j] = v;
            k[j * n + i] = v;
        }
    }
    let kc = double_center(&k, n, 1.0);
    let mut out = top_scaled(Method::Kpca, &kc, m)?;
    out.params.insert("m".into(), m.to_string());
    match cfg.kpca_kernel {
        Kernel::Rbf => {
            out.params.insert("kernel".into(), "rbf".into());
            out.params.insert("sigma".into(), sigma.to_string());
        }
        Kernel::Linear => {
            out.params.insert("kernel".into(), "linear".into());
        }
    }
    Ok(out)
}

/// Double-centered kernel `scale * J A J` for row-major symmetric `a`.
pub fn centered_kernel(a: &DenseMatrix) -> DenseMatrix {
    double_center(a.as_slice(), a.rows(), 1.0)
}

/// ISOMAP: classical scaling of geodesic distances over the k-NN graph.
pub fn fit_isomap(x: &DenseMatrix, cfg: &SpectralConfig) -> Result<EmbeddingResult> {
    cfg.validate()?;
    let n = x.rows();
    let k = cfg.isomap_k;
    if n <= k {
        return Err(Error::InvalidArgument(format!(
            "ISOMAP needs more than k = {k} points, got {n}"
        )));
    }
    let d = pairwise_distances(x, Metric::Euclidean)?;
    let (g, bridges) = connected_knn_graph(&d, k)?;
    let dg = graph_shortest_paths(&g)?;
    let mds = fit_mds(&dg, cfg)?;

    let mut out = EmbeddingResult::new(Method::Isomap, mds.scores)
        .param("k", k)
        .param("m", cfg.output_dims);
    out.eigenvalues = mds.eigenvalues;
    out.metrics = mds.metrics;
    out.diagnostics = mds.diagnostics;
    out.diagnostics.extend(bridge_diagnostics(&bridges));
    out.metrics
        .insert("connectivity_repairs".into(), bridges.len() as f64);
    let dy = pairwise_distances(&out.scores, Metric::Euclidean)?;
    let r = upper_correlation(&dg, &dy);
    out.metrics.insert("residual_variance".into(), 1.0 - r * r);
    Ok(out)
}

/// `scale * J A J` with `J = I - 11^T/n`.
fn double_center(a: &[f64], n: usize, scale: f64) -> DenseMatrix {
    let row_means: Vec<f64> = (0..n)
        .map(|i| a[i * n..(i + 1) * n].iter().sum::<f64>() / n as f64)
        .collect();
    let grand = row_means.iter().sum::<f64>() / n as f64;
    let mut out = DenseMatrix::zeros(n, n);
    for i in 0..n {
        for j in i..n {
            let v = scale * (a[i * n + j] - row_means[i] - row_means[j] + grand);
            out[(i, j)] = v;
            out[(j, i)] = v;
        }
    }
    out
}

/// Leading eigenvectors scaled by the square roots of their eigenvalues,
/// with negative eigenvalues clipped to zero.
fn top_scaled(method: Method, b: &DenseMatrix, m: usize) -> Result<EmbeddingResult> {
    let pairs = sym_eigen(b, m, Which::Largest)?;
    let clipped = pairs.values.iter().filter(|&&v| v < 0.0).count();
    let scale: Vec<f64> = pairs.values.iter().map(|v| v.max(0.0).sqrt()).collect();
    let mut scores = super::scaled_columns(&pairs.vectors, &scale);
    sign_fix_columns(&mut scores);
    let mut out = EmbeddingResult::new(method, scores);
    if clipped > 0 {
        out.diagnostics.push(format!(
            "{clipped} negative eigenvalue(s) clipped to zero"
        ));
    }
    out.metrics
        .insert("clipped_eigenvalues".into(), clipped as f64);
    out.eigenvalues = pairs.values;
    Ok(out)
}

fn upper_correlation(a: &DistanceMatrix, b: &DistanceMatrix) -> f64 {
    let n = a.len();
    let (mut sa, mut sb, mut count) = (0.0, 0.0, 0.0);
    for i in 0..n {
        for j in (i + 1)..n {
            sa += a.get(i, j);
            sb += b.get(i, j);
            count += 1.0;
        }
    }
    if count == 0.0 {
        return 0.0;
    }
    let (ma, mb) = (sa / count, sb / count);
    let (mut sab, mut saa, mut sbb) = (0.0, 0.0, 0.0);
    for i in 0..n {
        for j in (i + 1)..n {
            let (x, y) = (a.get(i, j) - ma, b.get(i, j) - mb);
            sab += x * y;
            saa += x * x;
            sbb += y * y;
        }
    }
    if saa == 0.0 || sbb == 0.0 {
        0.0
    } else {
        sab / (saa * sbb).sqrt()
    }
}

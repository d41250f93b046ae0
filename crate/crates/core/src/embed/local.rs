//! Neighbourhood-based embedders: LLE, Hessian LLE and Laplacian eigenmaps.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{
    bridge_diagnostics, connected_knn_graph, smallest_deflated, EmbeddingResult, Method,
};
use crate::error::{Error, Result};
use crate::numcore::{
    canonical_sign, cholesky_solve, dot, householder_q, knn_graph, pairwise_distances,
    thin_svd, DenseMatrix, Metric,
};

/// Edge weighting for Laplacian eigenmaps.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum HeatKernel {
    /// `t` = mean squared edge length of the neighbour graph.
    #[default]
    Adaptive,
    Fixed(f64),
    /// Every edge weighs 1.
    Binary,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct LocalConfig {
    pub output_dims: usize,
    pub k: usize,
    /// LLE Tikhonov term as a fraction of the local Gram trace.
    pub lle_reg_tol: f64,
    pub le_heat: HeatKernel,
    pub tsne_perplexity: f64,
    pub tsne_iters: usize,
    pub tsne_learning_rate: f64,
    pub tsne_early_exaggeration: f64,
    /// Iterations run with exaggerated affinities and low momentum.
    pub tsne_exaggeration_iters: usize,
    pub seed: u64,
}

impl Default for LocalConfig {
    fn default() -> Self {
        Self {
            output_dims: 2,
            k: 12,
            lle_reg_tol: 1e-3,
            le_heat: HeatKernel::Adaptive,
            tsne_perplexity: 80.0,
            tsne_iters: 1000,
            tsne_learning_rate: 200.0,
            tsne_early_exaggeration: 12.0,
            tsne_exaggeration_iters: 250,
            seed: 0,
        }
    }
}

impl LocalConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidArgument(msg));
        if self.output_dims == 0 {
            return bad("output_dims must be at least 1".into());
        }
        if self.k == 0 {
            return bad("k must be at least 1".into());
        }
        if !(self.lle_reg_tol > 0.0) {
            return bad(format!("lle_reg_tol must be positive, got {}", self.lle_reg_tol));
        }
        if let HeatKernel::Fixed(t) = self.le_heat {
            if !(t > 0.0) || !t.is_finite() {
                return bad(format!("le_heat_t must be positive, got {t}"));
            }
        }
        if !(self.tsne_perplexity > 0.0) {
            return bad(format!(
                "perplexity must be positive, got {}",
                self.tsne_perplexity
            ));
        }
        if self.tsne_iters == 0 {
            return bad("tsne_iters must be at least 1".into());
        }
        if !(self.tsne_learning_rate > 0.0) {
            return bad("tsne_learning_rate must be positive".into());
        }
        if !(self.tsne_early_exaggeration >= 1.0) {
            return bad("tsne_early_exaggeration must be at least 1".into());
        }
        Ok(())
    }

    fn check_k(&self, n: usize, extra: usize, what: &str) -> Result<()> {
        if self.k + extra > n {
            return Err(Error::InvalidArgument(format!(
                "{what} with k = {} needs at least {} points, got {n}",
                self.k,
                self.k + extra
            )));
        }
        Ok(())
    }
}

/// Reconstruction weights of every point from its `k` nearest neighbours.
/// Row `i` lists `(neighbour, weight)` pairs summing to one.
pub fn lle_weights(x: &DenseMatrix, k: usize, reg_tol: f64) -> Result<Vec<Vec<(usize, f64)>>> {
    let (n, dim) = x.shape();
    let d = pairwise_distances(x, Metric::Euclidean)?;
    let g = knn_graph(&d, k, false)?;
    (0..n)
        .into_par_iter()
        .map(|i| {
            let nb: Vec<usize> = g.neighbors(i).iter().map(|e| e.0).collect();
            let xi = x.row(i);
            let z: Vec<Vec<f64>> = nb
                .iter()
                .map(|&j| x.row(j).iter().zip(xi).map(|(a, b)| a - b).collect())
                .collect();
            let mut gram = vec![0.0; k * k];
            for a in 0..k {
                for b in a..k {
                    let v = dot(&z[a], &z[b]);
                    gram[a * k + b] = v;
                    gram[b * k + a] = v;
                }
            }
            let trace: f64 = (0..k).map(|a| gram[a * k + a]).sum();
            let ridge = if trace == 0.0 {
                reg_tol
            } else if k > dim {
                reg_tol * trace
            } else {
                1e-12 * trace
            };
            for a in 0..k {
                gram[a * k + a] += ridge;
            }
            let w = cholesky_solve(&gram, k, &vec![1.0; k])
                .ok_or(Error::SingularGram { point: i })?;
            let total: f64 = w.iter().sum();
            if !(total.abs() > 0.0) || !total.is_finite() {
                return Err(Error::SingularGram { point: i });
            }
            Ok(nb.into_iter().zip(w.into_iter().map(|v| v / total)).collect())
        })
        .collect()
}

/// Locally linear embedding.
pub fn fit_lle(x: &DenseMatrix, cfg: &LocalConfig) -> Result<EmbeddingResult> {
    cfg.validate()?;
    let n = x.rows();
    let m = cfg.output_dims;
    cfg.check_k(n, 2, "LLE")?;
    if m + 1 > n {
        return Err(Error::InvalidArgument(format!(
            "cannot embed {n} points in {m} dimensions"
        )));
    }
    let w = lle_weights(x, cfg.k, cfg.lle_reg_tol)?;

    // M = (I - W)^T (I - W)
    let mut cost = DenseMatrix::zeros(n, n);
    for (i, row) in w.iter().enumerate() {
        cost[(i, i)] += 1.0;
        for &(j, wij) in row {
            cost[(i, j)] -= wij;
            cost[(j, i)] -= wij;
        }
        for &(a, wa) in row {
            for &(b, wb) in row {
                cost[(a, b)] += wa * wb;
            }
        }
    }
    let u = vec![1.0 / (n as f64).sqrt(); n];
    let pairs = smallest_deflated(&cost, &u, m)?;
    let scale = vec![(n as f64).sqrt(); m];
    let scores = super::scaled_columns(&pairs.vectors, &scale);

    let mut err = 0.0;
    for (i, row) in w.iter().enumerate() {
        let mut r = x.row(i).to_vec();
        for &(j, wij) in row {
            for (rv, xv) in r.iter_mut().zip(x.row(j)) {
                *rv -= wij * xv;
            }
        }
        err += dot(&r, &r);
    }

    let mut out = EmbeddingResult::new(Method::Lle, scores)
        .param("k", cfg.k)
        .param("m", m)
        .param("reg_tol", cfg.lle_reg_tol);
    out.eigenvalues = pairs.values;
    out.metrics.insert("reconstruction_error".into(), err);
    Ok(out)
}

/// Minimum neighbourhood size for a quadratic basis in `m` dimensions.
pub fn hlle_min_k(m: usize) -> usize {
    1 + m + m * (m + 1) / 2
}

/// Accumulated Hessian estimator `H = sum_i H_i^T H_i` over all
/// neighbourhoods.
pub fn hessian_matrix(x: &DenseMatrix, k: usize, m: usize) -> Result<DenseMatrix> {
    let (n, dim) = x.shape();
    let need = hlle_min_k(m);
    if k < need {
        return Err(Error::InvalidArgument(format!(
            "HLLE with m = {m} needs k >= {need}, got k = {k}"
        )));
    }
    if dim < m {
        return Err(Error::InvalidArgument(format!(
            "HLLE cannot find {m} tangent directions in {dim}-dimensional data"
        )));
    }
    let d = pairwise_distances(x, Metric::Euclidean)?;
    let g = knn_graph(&d, k, false)?;
    let dp = m * (m + 1) / 2;
    let blocks: Vec<(Vec<usize>, DenseMatrix)> = (0..n)
        .into_par_iter()
        .map(|i| {
            let nb: Vec<usize> = g.neighbors(i).iter().map(|e| e.0).collect();
            let local = x.select_rows(&nb).centered();
            let svd = thin_svd(&local, m)?;
            let mut basis = DenseMatrix::zeros(k, 1 + m + dp);
            for r in 0..k {
                basis[(r, 0)] = 1.0;
                let mut c = 1 + m;
                for a in 0..m {
                    let ua = svd.left[(r, a)];
                    basis[(r, 1 + a)] = ua;
                    for b in a..m {
                        basis[(r, c)] = ua * svd.left[(r, b)];
                        c += 1;
                    }
                }
            }
            let q = householder_q(&basis)?;
            let hess = DenseMatrix::from_fn(k, dp, |r, c| q[(r, 1 + m + c)]);
            Ok((nb, hess))
        })
        .collect::<Result<_>>()?;

    let mut h = DenseMatrix::zeros(n, n);
    for (nb, hess) in &blocks {
        for (a, &ia) in nb.iter().enumerate() {
            for (b, &ib) in nb.iter().enumerate() {
                h[(ia, ib)] += dot(hess.row(a), hess.row(b));
            }
        }
    }
    Ok(h)
}

/// Hessian locally linear embedding. Score columns are orthonormal.
pub fn fit_hlle(x: &DenseMatrix, cfg: &LocalConfig) -> Result<EmbeddingResult> {
    cfg.validate()?;
    let n = x.rows();
    let m = cfg.output_dims;
    cfg.check_k(n, 1, "HLLE")?;
    if m + 2 > n {
        return Err(Error::InvalidArgument(format!(
            "cannot embed {n} points in {m} dimensions"
        )));
    }
    let h = hessian_matrix(x, cfg.k, m)?;
    let u = vec![1.0 / (n as f64).sqrt(); n];
    let pairs = smallest_deflated(&h, &u, m + 1)?;
    let scores = pairs.vectors.leading_columns(m);

    let mut out = EmbeddingResult::new(Method::Hlle, scores)
        .param("k", cfg.k)
        .param("m", m);
    let gap = pairs.values[m] - pairs.values[m - 1];
    out.metrics.insert("eigen_gap".into(), gap);
    if gap < 1e-12 {
        out.diagnostics.push(format!(
            "null space is degenerate: eigenvalue gap {gap:e} after component {m}"
        ));
    }
    out.eigenvalues = pairs.values[..m].to_vec();
    Ok(out)
}

/// Graph Laplacian `L = D - W` of the connected, symmetrized k-NN graph and
/// the degree vector.
pub fn le_laplacian(x: &DenseMatrix, cfg: &LocalConfig) -> Result<(DenseMatrix, Vec<f64>, Vec<String>)> {
    let n = x.rows();
    let d = pairwise_distances(x, Metric::Euclidean)?;
    let (g, bridges) = connected_knn_graph(&d, cfg.k)?;
    let t = match cfg.le_heat {
        HeatKernel::Fixed(t) => t,
        HeatKernel::Adaptive => {
            let (mut s, mut c) = (0.0, 0usize);
            for i in 0..n {
                for &(_, w) in g.neighbors(i) {
                    s += w * w;
                    c += 1;
                }
            }
            if s > 0.0 {
                s / c as f64
            } else {
                1.0
            }
        }
        HeatKernel::Binary => f64::INFINITY,
    };
    let mut l = DenseMatrix::zeros(n, n);
    let mut degree = vec![0.0; n];
    for (i, deg) in degree.iter_mut().enumerate() {
        for &(j, dist) in g.neighbors(i) {
            let w = if t.is_infinite() {
                1.0
            } else {
                (-dist * dist / t).exp()
            };
            l[(i, j)] = -w;
            *deg += w;
        }
        l[(i, i)] = *deg;
        if !(*deg > 0.0) {
            return Err(Error::Data(format!(
                "point {i} has zero total heat weight (t = {t:e}); use a larger heat parameter"
            )));
        }
    }
    let mut notes = bridge_diagnostics(&bridges);
    if !t.is_infinite() {
        notes.push(format!("heat kernel t = {t:.6e}"));
    }
    Ok((l, degree, notes))
}

/// Laplacian eigenmaps: smallest nontrivial solutions of `L y = lambda D y`.
pub fn fit_le(x: &DenseMatrix, cfg: &LocalConfig) -> Result<EmbeddingResult> {
    cfg.validate()?;
    let n = x.rows();
    let m = cfg.output_dims;
    cfg.check_k(n, 1, "Laplacian eigenmaps")?;
    if m + 1 > n {
        return Err(Error::InvalidArgument(format!(
            "cannot embed {n} points in {m} dimensions"
        )));
    }
    let (l, degree, notes) = le_laplacian(x, cfg)?;
    let inv_sqrt: Vec<f64> = degree.iter().map(|v| 1.0 / v.sqrt()).collect();
    let c = DenseMatrix::from_fn(n, n, |i, j| inv_sqrt[i] * l[(i, j)] * inv_sqrt[j]);
    let total: f64 = degree.iter().sum();
    let u: Vec<f64> = degree.iter().map(|v| (v / total).sqrt()).collect();
    let pairs = smallest_deflated(&c, &u, m)?;

    let mut scores = DenseMatrix::zeros(n, m);
    for j in 0..m {
        let mut y: Vec<f64> = (0..n).map(|i| pairs.vectors[(i, j)] * inv_sqrt[i]).collect();
        canonical_sign(&mut y);
        for (i, v) in y.into_iter().enumerate() {
            scores[(i, j)] = v;
        }
    }
    let mut out = EmbeddingResult::new(Method::Le, scores)
        .param("k", cfg.k)
        .param("m", m)
        .param(
            "heat",
            match cfg.le_heat {
                HeatKernel::Adaptive => "adaptive".to_string(),
                HeatKernel::Fixed(t) => t.to_string(),
                HeatKernel::Binary => "binary".to_string(),
            },
        );
    out.metrics.insert(
        "connectivity_repairs".into(),
        notes.iter().filter(|s| s.starts_with("connectivity")).count() as f64,
    );
    out.diagnostics = notes;
    out.eigenvalues = pairs.values;
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn grid(side: usize) -> DenseMatrix {
        DenseMatrix::from_fn(side * side, 2, |i, j| {
            if j == 0 {
                (i / side) as f64
            } else {
                (i % side) as f64 * 1.1
            }
        })
    }

    #[test]
    fn weight_rows_sum_to_one() {
        let w = lle_weights(&grid(6), 5, 1e-3).unwrap();
        for row in &w {
            assert_eq!(row.len(), 5);
            assert!((row.iter().map(|e| e.1).sum::<f64>() - 1.0).abs() < 1e-10);
        }
    }

    #[test]
    fn hlle_rejects_small_k() {
        let cfg = LocalConfig {
            k: 5,
            ..Default::default()
        };
        let err = fit_hlle(&grid(5), &cfg).unwrap_err().to_string();
        assert!(err.contains("k >= 6"), "{err}");
    }

    #[test]
    fn laplacian_rows_sum_to_zero() {
        let (l, deg, _) = le_laplacian(&grid(5), &LocalConfig::default()).unwrap();
        for i in 0..25 {
            assert!(l.row(i).iter().sum::<f64>().abs() < 1e-10);
            assert!(deg[i] > 0.0);
        }
        assert!(l.asymmetry().0 == 0.0);
    }

    #[test]
    fn outputs_have_requested_shape() {
        let x = grid(7);
        let cfg = LocalConfig {
            k: 8,
            ..Default::default()
        };
        for r in [
            fit_lle(&x, &cfg).unwrap(),
            fit_hlle(&x, &cfg).unwrap(),
            fit_le(&x, &cfg).unwrap(),
        ] {
            assert_eq!(r.scores.shape(), (49, 2));
        }
    }
}

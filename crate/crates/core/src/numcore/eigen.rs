//! Dense symmetric eigensolver.
//!
//! The matrix is reduced to tridiagonal form with Householder reflections and
//! the tridiagonal eigenvalues are found with the implicitly shifted QL
//! iteration. When most of the spectrum is requested, the QL rotations are
//! accumulated into the explicit orthogonal factor. When only a few pairs are
//! wanted, their tridiagonal eigenvectors come from inverse iteration and are
//! mapped back through the stored reflectors, which avoids the O(n^3) vector
//! accumulation.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::matrix::{dot, DenseMatrix};
use crate::error::{Error, Result};

/// Relative symmetry tolerance accepted by the solvers.
pub const SYMMETRY_TOL: f64 = 1e-10;

const MAX_QL_ITERATIONS: usize = 60;
const INVERSE_ITERATIONS: usize = 4;
/// Below this order every eigenvector is accumulated explicitly.
const FULL_ACCUMULATION_ORDER: usize = 64;
/// Rows are updated in parallel once the trailing block reaches this order.
const PAR_ORDER: usize = 256;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Which {
    Largest,
    Smallest,
}

/// Eigenvalues in request order and unit eigenvectors as matching columns.
#[derive(Debug, Clone, PartialEq)]
pub struct EigenPairs {
    pub values: Vec<f64>,
    pub vectors: DenseMatrix,
}

impl EigenPairs {
    pub fn len(&self) -> usize {
        self.values.len()
    }

    pub fn is_empty(&self) -> bool {
        self.values.is_empty()
    }

    pub fn vector(&self, j: usize) -> Vec<f64> {
        self.vectors.column(j)
    }
}

/// Flips `v` so its largest-magnitude entry (first one on ties) is positive.
pub fn canonical_sign(v: &mut [f64]) {
    let mut best = 0.0;
    let mut idx = 0;
    for (i, x) in v.iter().enumerate() {
        if x.abs() > best {
            best = x.abs();
            idx = i;
        }
    }
    if v.get(idx).is_some_and(|&x| x < 0.0) {
        v.iter_mut().for_each(|x| *x = -*x);
    }
}

/// `count` eigenpairs from the requested end of the spectrum of symmetric `a`.
pub fn sym_eigen(a: &DenseMatrix, count: usize, which: Which) -> Result<EigenPairs> {
    let n = a.rows();
    a.check_symmetric(SYMMETRY_TOL * a.max_abs().max(1.0))?;
    a.check_finite()?;
    if count == 0 || count > n {
        return Err(Error::InvalidArgument(format!(
            "requested {count} eigenpairs of a {n}x{n} matrix"
        )));
    }

    let mut work = a.clone();
    symmetrize_in_place(&mut work);
    let tri = tridiagonalize(work);

    let (ascending_values, columns) = if n <= FULL_ACCUMULATION_ORDER || 4 * count >= n {
        full_spectrum(&tri)?
    } else {
        let mut d = tri.diag.clone();
        let mut e = tri.off.clone();
        e.push(0.0);
        tql(&mut d, &mut e, None)?;
        d.sort_by(f64::total_cmp);
        let wanted: Vec<usize> = match which {
            Which::Smallest => (0..count).collect(),
            Which::Largest => (n - count..n).collect(),
        };
        let values: Vec<f64> = wanted.iter().map(|&i| d[i]).collect();
        let tri_vectors = inverse_iteration(&tri.diag, &tri.off, &values);
        let vectors: Vec<Vec<f64>> = tri_vectors
            .into_iter()
            .map(|y| tri.apply_q(y))
            .collect();
        // keep the same layout as the full path: all n slots addressable
        let mut all_values = vec![f64::NAN; n];
        let mut all_vectors = vec![Vec::new(); n];
        for ((slot, v), x) in wanted.iter().zip(values).zip(vectors) {
            all_values[*slot] = v;
            all_vectors[*slot] = x;
        }
        (all_values, all_vectors)
    };

    let order: Vec<usize> = match which {
        Which::Smallest => (0..count).collect(),
        Which::Largest => (n - count..n).rev().collect(),
    };
    let mut values = Vec::with_capacity(count);
    let mut out = DenseMatrix::zeros(n, count);
    for (j, &src) in order.iter().enumerate() {
        values.push(ascending_values[src]);
        let mut v = columns[src].clone();
        let norm = dot(&v, &v).sqrt();
        if norm > 0.0 {
            v.iter_mut().for_each(|x| *x /= norm);
        }
        canonical_sign(&mut v);
        for (i, x) in v.into_iter().enumerate() {
            out[(i, j)] = x;
        }
    }
    Ok(EigenPairs {
        values,
        vectors: out,
    })
}

/// Smallest `count` pairs of `L y = lambda D y` for symmetric `L` and
/// positive diagonal `D`. Vectors are D-orthonormal.
pub fn gen_sym_eigen(l: &DenseMatrix, d: &DenseMatrix, count: usize) -> Result<EigenPairs> {
    let n = l.rows();
    if d.shape() != (n, n) || !l.is_square() {
        return Err(Error::Shape(format!(
            "L is {:?} but D is {:?}",
            l.shape(),
            d.shape()
        )));
    }
    let mut diag = Vec::with_capacity(n);
    for i in 0..n {
        for j in 0..n {
            if i != j && d[(i, j)] != 0.0 {
                return Err(Error::InvalidArgument(format!(
                    "D must be diagonal; entry ({i}, {j}) is {}",
                    d[(i, j)]
                )));
            }
        }
        let v = d[(i, i)];
        if !(v > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "D must have a strictly positive diagonal; D[{i}][{i}] = {v}"
            )));
        }
        diag.push(v);
    }
    gen_sym_eigen_diag(l, &diag, count)
}

/// [`gen_sym_eigen`] with `D` given by its diagonal.
pub fn gen_sym_eigen_diag(l: &DenseMatrix, d: &[f64], count: usize) -> Result<EigenPairs> {
    let n = l.rows();
    l.check_symmetric(SYMMETRY_TOL * l.max_abs().max(1.0))?;
    if let Some(i) = d.iter().position(|&v| !(v > 0.0) || !v.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "D must have a strictly positive diagonal; D[{i}][{i}] = {}",
            d[i]
        )));
    }
    // Cholesky factor of a diagonal D is its square root: C = D^{-1/2} L D^{-1/2}.
    let inv_sqrt: Vec<f64> = d.iter().map(|v| 1.0 / v.sqrt()).collect();
    let c = DenseMatrix::from_fn(n, n, |i, j| inv_sqrt[i] * l[(i, j)] * inv_sqrt[j]);
    let pairs = sym_eigen(&c, count, Which::Smallest)?;
    let mut vectors = pairs.vectors;
    for j in 0..count {
        let mut y: Vec<f64> = (0..n).map(|i| vectors[(i, j)] * inv_sqrt[i]).collect();
        canonical_sign(&mut y);
        for (i, v) in y.into_iter().enumerate() {
            vectors[(i, j)] = v;
        }
    }
    Ok(EigenPairs {
        values: pairs.values,
        vectors,
    })
}

fn symmetrize_in_place(m: &mut DenseMatrix) {
    let n = m.rows();
    for i in 0..n {
        for j in (i + 1)..n {
            let v = 0.5 * (m[(i, j)] + m[(j, i)]);
            m[(i, j)] = v;
            m[(j, i)] = v;
        }
    }
}

/// Householder reduction `A = Q T Q^T`.
struct Tridiagonal {
    n: usize,
    diag: Vec<f64>,
    off: Vec<f64>,
    /// Reflector k acts on indices k+1..n as `I - tau v v^T` with `v[0] = 1`.
    reflectors: Vec<(f64, Vec<f64>)>,
}

fn tridiagonalize(mut a: DenseMatrix) -> Tridiagonal {
    let n = a.rows();
    let mut diag = vec![0.0; n];
    let mut off = vec![0.0; n.saturating_sub(1)];
    let mut reflectors = Vec::with_capacity(n.saturating_sub(2));

    for k in 0..n.saturating_sub(2) {
        diag[k] = a[(k, k)];
        let x: Vec<f64> = a.row(k)[k + 1..].to_vec();
        let m = x.len();
        let tail_sq: f64 = x[1..].iter().map(|v| v * v).sum();
        if tail_sq == 0.0 {
            off[k] = x[0];
            reflectors.push((0.0, vec![0.0; m]));
            continue;
        }
        let alpha = -(x[0] * x[0] + tail_sq).sqrt().copysign(x[0]);
        let tau = (alpha - x[0]) / alpha;
        let scale = 1.0 / (x[0] - alpha);
        let mut v = x;
        v[0] = 1.0;
        v[1..].iter_mut().for_each(|t| *t *= scale);
        off[k] = alpha;

        // p = tau * S v over the trailing block S = A[k+1.., k+1..]
        let base = k + 1;
        let cols = n;
        let data = a.as_mut_slice();
        let trailing = &data[base * cols..];
        let row_dot = |i: usize| tau * dot(&trailing[i * cols + base..(i + 1) * cols], &v);
        let p: Vec<f64> = if m >= PAR_ORDER {
            (0..m).into_par_iter().map(row_dot).collect()
        } else {
            (0..m).map(row_dot).collect()
        };
        let half = 0.5 * tau * dot(&p, &v);
        let w: Vec<f64> = p.iter().zip(&v).map(|(pi, vi)| pi - half * vi).collect();

        // S -= v w^T + w v^T
        let trailing = &mut data[base * cols..];
        let update = |(i, row): (usize, &mut [f64])| {
            let (vi, wi) = (v[i], w[i]);
            for ((s, &wj), &vj) in row[base..].iter_mut().zip(&w).zip(&v) {
                *s -= vi * wj + wi * vj;
            }
        };
        if m >= PAR_ORDER {
            trailing
                .par_chunks_mut(cols)
                .take(m)
                .enumerate()
                .for_each(update);
        } else {
            trailing.chunks_mut(cols).take(m).enumerate().for_each(update);
        }
        reflectors.push((tau, v));
    }
    if n >= 2 {
        diag[n - 2] = a[(n - 2, n - 2)];
        off[n - 2] = a[(n - 1, n - 2)];
    }
    diag[n - 1] = a[(n - 1, n - 1)];

    Tridiagonal {
        n,
        diag,
        off,
        reflectors,
    }
}

impl Tridiagonal {
    /// `Q y`.
    fn apply_q(&self, mut y: Vec<f64>) -> Vec<f64> {
        for (k, (tau, v)) in self.reflectors.iter().enumerate().rev() {
            if *tau == 0.0 {
                continue;
            }
            let tail = &mut y[k + 1..];
            let s = tau * dot(v, tail);
            for (t, vi) in tail.iter_mut().zip(v) {
                *t -= s * vi;
            }
        }
        y
    }

    /// Explicit `Q^T`, row i holding column i of `Q`.
    fn q_transpose(&self) -> Vec<Vec<f64>> {
        let n = self.n;
        let mut q: Vec<Vec<f64>> = (0..n)
            .map(|i| {
                let mut r = vec![0.0; n];
                r[i] = 1.0;
                r
            })
            .collect();
        // Q = H_0 H_1 ... ; accumulate from the right-most reflector
        for (k, (tau, v)) in self.reflectors.iter().enumerate().rev() {
            if *tau == 0.0 {
                continue;
            }
            let base = k + 1;
            let mut u = vec![0.0; n - base];
            for (vi, row) in v.iter().zip(&q[base..]) {
                for (uj, &x) in u.iter_mut().zip(&row[base..]) {
                    *uj += vi * x;
                }
            }
            for (vi, row) in v.iter().zip(&mut q[base..]) {
                let f = tau * vi;
                for (x, uj) in row[base..].iter_mut().zip(&u) {
                    *x -= f * uj;
                }
            }
        }
        // transpose so that row i is the i-th basis column
        let mut qt = vec![vec![0.0; n]; n];
        for (i, row) in q.iter().enumerate() {
            for (j, &x) in row.iter().enumerate() {
                qt[j][i] = x;
            }
        }
        qt
    }
}

/// All eigenvalues ascending with their eigenvectors (row per vector).
fn full_spectrum(tri: &Tridiagonal) -> Result<(Vec<f64>, Vec<Vec<f64>>)> {
    let mut d = tri.diag.clone();
    let mut e = tri.off.clone();
    e.push(0.0);
    let mut z = tri.q_transpose();
    tql(&mut d, &mut e, Some(&mut z))?;
    let mut idx: Vec<usize> = (0..tri.n).collect();
    idx.sort_by(|&a, &b| d[a].total_cmp(&d[b]).then(a.cmp(&b)));
    let values = idx.iter().map(|&i| d[i]).collect();
    let vectors = idx.iter().map(|&i| std::mem::take(&mut z[i])).collect();
    Ok((values, vectors))
}

/// Implicit-shift QL on a symmetric tridiagonal matrix with diagonal `d` and
/// off-diagonal `e` (`e[i]` couples i and i+1, `e[n-1] = 0`). When `z` is
/// given, row i of `z` is rotated along with eigenvector i.
fn tql(d: &mut [f64], e: &mut [f64], mut z: Option<&mut Vec<Vec<f64>>>) -> Result<()> {
    let n = d.len();
    // Running norm of the part already processed, as in EISPACK tql2, so
    // clusters of eigenvalues near zero still split.
    let mut tst = 0.0_f64;
    for l in 0..n {
        tst = tst.max(d[l].abs() + e[l].abs());
        let mut iter = 0;
        loop {
            let mut m = l;
            while m + 1 < n {
                let dd = d[m].abs() + d[m + 1].abs();
                if e[m].abs() <= f64::EPSILON * dd.max(tst) {
                    break;
                }
                m += 1;
            }
            if m == l {
                break;
            }
            iter += 1;
            if iter > MAX_QL_ITERATIONS {
                return Err(Error::NoConvergence(format!(
                    "QL iteration did not converge for eigenvalue {l}"
                )));
            }
            let mut g = (d[l + 1] - d[l]) / (2.0 * e[l]);
            let mut r = g.hypot(1.0);
            g = d[m] - d[l] + e[l] / (g + r.copysign(g));
            let (mut s, mut c, mut p) = (1.0, 1.0, 0.0);
            let mut i = m;
            let mut deflated = false;
            while i > l {
                i -= 1;
                let f = s * e[i];
                let b = c * e[i];
                r = f.hypot(g);
                e[i + 1] = r;
                if r == 0.0 {
                    d[i + 1] -= p;
                    e[m] = 0.0;
                    deflated = true;
                    break;
                }
                s = f / r;
                c = g / r;
                g = d[i + 1] - p;
                r = (d[i] - g) * s + 2.0 * c * b;
                p = s * r;
                d[i + 1] = g + p;
                g = c * r - b;
                if let Some(z) = z.as_deref_mut() {
                    let (lo, hi) = z.split_at_mut(i + 1);
                    let zi = &mut lo[i];
                    let zi1 = &mut hi[0];
                    for (a, b) in zi.iter_mut().zip(zi1.iter_mut()) {
                        let f = *b;
                        *b = s * *a + c * f;
                        *a = c * *a - s * f;
                    }
                }
            }
            if deflated {
                continue;
            }
            d[l] -= p;
            e[l] = g;
            e[m] = 0.0;
        }
    }
    Ok(())
}

/// Tridiagonal eigenvectors for the given ascending eigenvalues by inverse
/// iteration, reorthogonalizing within clusters of close eigenvalues.
fn inverse_iteration(diag: &[f64], off: &[f64], values: &[f64]) -> Vec<Vec<f64>> {
    let n = diag.len();
    let mut norm = 0.0_f64;
    for i in 0..n {
        let mut s = diag[i].abs();
        if i > 0 {
            s += off[i - 1].abs();
        }
        if i + 1 < n {
            s += off[i].abs();
        }
        norm = norm.max(s);
    }
    let norm = norm.max(f64::MIN_POSITIVE);
    let ortol = 1e-3 * norm;
    let pertol = 10.0 * f64::EPSILON * norm;

    let mut vectors: Vec<Vec<f64>> = Vec::with_capacity(values.len());
    let mut cluster_start = 0;
    let mut prev_shift = f64::NEG_INFINITY;
    for (j, &lambda) in values.iter().enumerate() {
        if j > 0 && lambda - values[j - 1] > ortol {
            cluster_start = j;
        }
        let mut shift = lambda;
        if j > cluster_start && shift - prev_shift < pertol {
            shift = prev_shift + pertol;
        }
        prev_shift = shift;

        let lu = TridiagLu::factor(diag, off, shift, norm);
        let mut y = start_vector(n, j);
        for _ in 0..INVERSE_ITERATIONS {
            lu.solve(&mut y);
            for prev in &vectors[cluster_start..j] {
                let proj = dot(prev, &y);
                for (a, b) in y.iter_mut().zip(prev) {
                    *a -= proj * b;
                }
            }
            let scale = y.iter().fold(0.0_f64, |m, v| m.max(v.abs()));
            if scale > 0.0 && scale.is_finite() {
                y.iter_mut().for_each(|v| *v /= scale);
            } else {
                y = start_vector(n, j + 1);
            }
        }
        let norm_y = dot(&y, &y).sqrt();
        y.iter_mut().for_each(|v| *v /= norm_y);
        vectors.push(y);
    }
    vectors
}

/// Deterministic, nowhere-zero starting vector.
fn start_vector(n: usize, salt: usize) -> Vec<f64> {
    let mut state = 0x9E37_79B9_7F4A_7C15_u64 ^ (salt as u64).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    (0..n)
        .map(|_| {
            state ^= state << 13;
            state ^= state >> 7;
            state ^= state << 17;
            0.5 + (state >> 11) as f64 / (1u64 << 53) as f64
        })
        .collect()
}

/// LU factorization with partial pivoting of `T - shift I`.
struct TridiagLu {
    lower: Vec<f64>,
    diag: Vec<f64>,
    up1: Vec<f64>,
    up2: Vec<f64>,
    swapped: Vec<bool>,
}

impl TridiagLu {
    fn factor(diag: &[f64], off: &[f64], shift: f64, norm: f64) -> Self {
        let n = diag.len();
        let mut d: Vec<f64> = diag.iter().map(|v| v - shift).collect();
        let mut lower = off.to_vec();
        let mut up1 = off.to_vec();
        let mut up2 = vec![0.0; n.saturating_sub(2)];
        let mut swapped = vec![false; n.saturating_sub(1)];
        for i in 0..n.saturating_sub(1) {
            if d[i].abs() >= lower[i].abs() {
                if d[i] != 0.0 {
                    let fact = lower[i] / d[i];
                    lower[i] = fact;
                    d[i + 1] -= fact * up1[i];
                }
            } else {
                let fact = d[i] / lower[i];
                d[i] = lower[i];
                lower[i] = fact;
                let temp = up1[i];
                up1[i] = d[i + 1];
                d[i + 1] = temp - fact * d[i + 1];
                if i + 2 < n {
                    up2[i] = up1[i + 1];
                    up1[i + 1] *= -fact;
                }
                swapped[i] = true;
            }
        }
        let tiny = f64::EPSILON * norm;
        for v in &mut d {
            if v.abs() < tiny {
                *v = if *v < 0.0 { -tiny } else { tiny };
            }
        }
        Self {
            lower,
            diag: d,
            up1,
            up2,
            swapped,
        }
    }

    fn solve(&self, b: &mut [f64]) {
        let n = b.len();
        for i in 0..n.saturating_sub(1) {
            if self.swapped[i] {
                let t = b[i];
                b[i] = b[i + 1];
                b[i + 1] = t - self.lower[i] * b[i];
            } else {
                b[i + 1] -= self.lower[i] * b[i];
            }
        }
        for i in (0..n).rev() {
            let mut s = b[i];
            if i + 1 < n {
                s -= self.up1[i] * b[i + 1];
            }
            if i + 2 < n {
                s -= self.up2[i] * b[i + 2];
            }
            b[i] = s / self.diag[i];
        }
    }
}

/// `max_i |(A v - lambda v)_i|` for each pair.
pub fn residuals(a: &DenseMatrix, pairs: &EigenPairs) -> Vec<f64> {
    (0..pairs.len())
        .map(|j| {
            let v = pairs.vector(j);
            let av = a.mul_vec(&v);
            av.iter()
                .zip(&v)
                .map(|(x, y)| (x - pairs.values[j] * y).abs())
                .fold(0.0, f64::max)
        })
        .collect()
}

//! Small dense factorizations: one-sided Jacobi SVD, Householder QR and
//! Cholesky solves.

use super::eigen::canonical_sign;
use super::matrix::{dot, DenseMatrix};
use crate::error::{Error, Result};

const MAX_JACOBI_SWEEPS: usize = 80;

/// Leading singular triplets: `values` descending, `left` is rows x count,
/// `right` is cols x count.
#[derive(Debug, Clone)]
pub struct ThinSvd {
    pub values: Vec<f64>,
    pub left: DenseMatrix,
    pub right: DenseMatrix,
}

/// Thin SVD by one-sided (Hestenes) Jacobi rotations.
///
/// Left vectors belonging to zero singular values are returned as zero
/// columns. Each right vector is sign-normalized so its largest-magnitude
/// entry is positive.
pub fn thin_svd(a: &DenseMatrix, count: usize) -> Result<ThinSvd> {
    let (rows, cols) = a.shape();
    if count == 0 || count > rows.min(cols) {
        return Err(Error::InvalidArgument(format!(
            "count {count} must be in 1..={} for a {rows}x{cols} matrix",
            rows.min(cols)
        )));
    }
    a.check_finite()?;
    if rows < cols {
        let t = thin_svd(&a.transpose(), count)?;
        let mut out = ThinSvd {
            values: t.values,
            left: t.right,
            right: t.left,
        };
        // re-normalize against the new right factor
        for j in 0..count {
            let mut v = out.right.column(j);
            let before = v.clone();
            canonical_sign(&mut v);
            if v != before {
                for i in 0..out.right.rows() {
                    out.right[(i, j)] = -out.right[(i, j)];
                }
                for i in 0..out.left.rows() {
                    out.left[(i, j)] = -out.left[(i, j)];
                }
            }
        }
        return Ok(out);
    }

    // Columns of A and of V stored contiguously.
    let mut u: Vec<Vec<f64>> = (0..cols).map(|j| a.column(j)).collect();
    let mut v: Vec<Vec<f64>> = (0..cols)
        .map(|j| {
            let mut e = vec![0.0; cols];
            e[j] = 1.0;
            e
        })
        .collect();
    let tol = f64::EPSILON * (rows as f64).sqrt();
    // Columns below this squared norm are numerically zero; rotating them
    // against the rest only shuffles rounding noise.
    let fro2: f64 = u.iter().map(|c| dot(c, c)).sum();
    let negligible = (f64::EPSILON * f64::EPSILON * fro2).max(f64::MIN_POSITIVE);
    let mut converged = false;
    for _ in 0..MAX_JACOBI_SWEEPS {
        let mut rotated = false;
        for p in 0..cols {
            for q in (p + 1)..cols {
                let alpha = dot(&u[p], &u[p]);
                let beta = dot(&u[q], &u[q]);
                let gamma = dot(&u[p], &u[q]);
                if gamma == 0.0
                    || alpha <= negligible
                    || beta <= negligible
                    || gamma.abs() <= tol * (alpha * beta).sqrt()
                {
                    continue;
                }
                rotated = true;
                let zeta = (beta - alpha) / (2.0 * gamma);
                let t = zeta.signum() / (zeta.abs() + (1.0 + zeta * zeta).sqrt());
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = c * t;
                rotate(&mut u, p, q, c, s);
                rotate(&mut v, p, q, c, s);
            }
        }
        if !rotated {
            converged = true;
            break;
        }
    }
    if !converged {
        return Err(Error::NoConvergence("one-sided Jacobi SVD".into()));
    }

    let sigma: Vec<f64> = u.iter().map(|c| dot(c, c).sqrt()).collect();
    let mut order: Vec<usize> = (0..cols).collect();
    order.sort_by(|&x, &y| sigma[y].total_cmp(&sigma[x]).then(x.cmp(&y)));
    let scale = sigma.iter().fold(0.0_f64, |m, &s| m.max(s));
    let cutoff = scale * f64::EPSILON * (rows.max(cols) as f64);

    let mut values = Vec::with_capacity(count);
    let mut left = DenseMatrix::zeros(rows, count);
    let mut right = DenseMatrix::zeros(cols, count);
    for (j, &src) in order.iter().take(count).enumerate() {
        let s = sigma[src];
        let mut vj = v[src].clone();
        let flip = {
            let before = vj.clone();
            canonical_sign(&mut vj);
            vj != before
        };
        let sign = if flip { -1.0 } else { 1.0 };
        if s > cutoff {
            values.push(s);
            for (i, x) in u[src].iter().enumerate() {
                left[(i, j)] = sign * x / s;
            }
        } else {
            values.push(0.0);
        }
        for (i, x) in vj.into_iter().enumerate() {
            right[(i, j)] = x;
        }
    }
    Ok(ThinSvd {
        values,
        left,
        right,
    })
}

fn rotate(cols: &mut [Vec<f64>], p: usize, q: usize, c: f64, s: f64) {
    let (lo, hi) = cols.split_at_mut(q);
    for (x, y) in lo[p].iter_mut().zip(hi[0].iter_mut()) {
        let (a, b) = (*x, *y);
        *x = c * a - s * b;
        *y = s * a + c * b;
    }
}

/// Orthonormal factor `Q` (rows x cols) of a Householder QR of a tall matrix.
/// Rank-deficient input still yields orthonormal columns.
pub fn householder_q(a: &DenseMatrix) -> Result<DenseMatrix> {
    let (m, n) = a.shape();
    if m < n {
        return Err(Error::Shape(format!(
            "QR needs at least as many rows as columns, got {m}x{n}"
        )));
    }
    let mut cols: Vec<Vec<f64>> = (0..n).map(|j| a.column(j)).collect();
    let mut reflectors: Vec<(f64, Vec<f64>)> = Vec::with_capacity(n);
    for k in 0..n {
        let x = &cols[k][k..];
        let tail_sq: f64 = x[1..].iter().map(|v| v * v).sum();
        if tail_sq == 0.0 {
            reflectors.push((0.0, Vec::new()));
            continue;
        }
        let alpha = -(x[0] * x[0] + tail_sq).sqrt().copysign(x[0]);
        let tau = (alpha - x[0]) / alpha;
        let scale = 1.0 / (x[0] - alpha);
        let mut v: Vec<f64> = x.to_vec();
        v[0] = 1.0;
        v[1..].iter_mut().for_each(|t| *t *= scale);
        for col in cols.iter_mut().skip(k) {
            let tail = &mut col[k..];
            let s = tau * dot(&v, tail);
            for (t, vi) in tail.iter_mut().zip(&v) {
                *t -= s * vi;
            }
        }
        reflectors.push((tau, v));
    }
    // Q e_j for j < n, applying reflectors in reverse order
    let mut q = DenseMatrix::zeros(m, n);
    for j in 0..n {
        let mut e = vec![0.0; m];
        e[j] = 1.0;
        for (k, (tau, v)) in reflectors.iter().enumerate().rev() {
            if *tau == 0.0 {
                continue;
            }
            let tail = &mut e[k..];
            let s = tau * dot(v, tail);
            for (t, vi) in tail.iter_mut().zip(v) {
                *t -= s * vi;
            }
        }
        for (i, x) in e.into_iter().enumerate() {
            q[(i, j)] = x;
        }
    }
    Ok(q)
}

/// Solves `G x = b` for symmetric positive-definite `G` (row-major, order n).
/// Returns `None` when a pivot is not positive.
pub fn cholesky_solve(g: &[f64], n: usize, b: &[f64]) -> Option<Vec<f64>> {
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let mut s = g[i * n + j];
            for k in 0..j {
                s -= l[i * n + k] * l[j * n + k];
            }
            if i == j {
                if !(s > 0.0) {
                    return None;
                }
                l[i * n + i] = s.sqrt();
            } else {
                l[i * n + j] = s / l[j * n + j];
            }
        }
    }
    let mut y = b.to_vec();
    for i in 0..n {
        let mut s = y[i];
        for k in 0..i {
            s -= l[i * n + k] * y[k];
        }
        y[i] = s / l[i * n + i];
    }
    for i in (0..n).rev() {
        let mut s = y[i];
        for k in (i + 1)..n {
            s -= l[k * n + i] * y[k];
        }
        y[i] = s / l[i * n + i];
    }
    Some(y)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn diagonal_singular_values() {
        let a = DenseMatrix::from_diagonal(&[2.0, 1.0]);
        let s = thin_svd(&a, 2).unwrap();
        assert_eq!(s.values, vec![2.0, 1.0]);
    }

    #[test]
    fn rank_one_has_one_nonzero_value() {
        let u = [1.0, 2.0, -1.0, 0.5];
        let v = [3.0, -1.0, 2.0];
        let a = DenseMatrix::from_fn(4, 3, |i, j| u[i] * v[j]);
        let s = thin_svd(&a, 3).unwrap();
        assert!(s.values[0] > 1.0);
        assert_eq!(s.values[1], 0.0);
        assert_eq!(s.values[2], 0.0);
    }

    #[test]
    fn wide_matrix_goes_through_transpose() {
        let a = DenseMatrix::from_rows(&[[1.0, 0.0, 2.0], [0.0, 3.0, 0.0]]).unwrap();
        let s = thin_svd(&a, 2).unwrap();
        assert!((s.values[0] - 3.0).abs() < 1e-12);
        assert!((s.values[1] - 5f64.sqrt()).abs() < 1e-12);
        for j in 0..2 {
            let v = s.right.column(j);
            let av = a.mul_vec(&v);
            for i in 0..2 {
                assert!((av[i] - s.values[j] * s.left[(i, j)]).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn q_is_orthonormal_even_when_rank_deficient() {
        let a = DenseMatrix::from_rows(&[
            [1.0, 2.0, 0.0],
            [1.0, 2.0, 0.0],
            [1.0, 2.0, 0.0],
            [1.0, 2.0, 0.0],
        ])
        .unwrap();
        let q = householder_q(&a).unwrap();
        let qtq = q.transpose().matmul(&q).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                let want = if i == j { 1.0 } else { 0.0 };
                assert!((qtq[(i, j)] - want).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn cholesky_round_trip() {
        let g = [4.0, 2.0, 2.0, 3.0];
        let x = cholesky_solve(&g, 2, &[1.0, 2.0]).unwrap();
        assert!((4.0 * x[0] + 2.0 * x[1] - 1.0).abs() < 1e-14);
        assert!((2.0 * x[0] + 3.0 * x[1] - 2.0).abs() < 1e-14);
        assert!(cholesky_solve(&[0.0], 1, &[1.0]).is_none());
    }
}

//! Independent reference implementations used as test oracles. None of these
//! share code paths with the library routines they check.
#![allow(dead_code)]

use drens::numcore::DenseMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

pub fn random_matrix(rng: &mut ChaCha8Rng, rows: usize, cols: usize) -> DenseMatrix {
    let data = (0..rows * cols).map(|_| rng.random_range(-1.0..1.0)).collect();
    DenseMatrix::new(rows, cols, data).unwrap()
}

pub fn random_symmetric(rng: &mut ChaCha8Rng, n: usize) -> DenseMatrix {
    let a = random_matrix(rng, n, n);
    DenseMatrix::from_fn(n, n, |i, j| 0.5 * (a[(i, j)] + a[(j, i)]))
}

/// Cyclic Jacobi eigenvalue algorithm; returns (values, vectors as columns)
/// sorted ascending.
pub fn jacobi_eigen(a: &DenseMatrix) -> (Vec<f64>, Vec<Vec<f64>>) {
    let n = a.rows();
    let mut m: Vec<Vec<f64>> = (0..n).map(|i| a.row(i).to_vec()).collect();
    let mut v: Vec<Vec<f64>> = (0..n)
        .map(|i| (0..n).map(|j| if i == j { 1.0 } else { 0.0 }).collect())
        .collect();
    for _sweep in 0..100 {
        let off: f64 = (0..n)
            .flat_map(|i| (0..n).filter(move |&j| j != i).map(move |j| (i, j)))
            .map(|(i, j)| m[i][j] * m[i][j])
            .sum();
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                if m[p][q].abs() < 1e-300 {
                    continue;
                }
                let theta = (m[q][q] - m[p][p]) / (2.0 * m[p][q]);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let (mkp, mkq) = (m[k][p], m[k][q]);
                    m[k][p] = c * mkp - s * mkq;
                    m[k][q] = s * mkp + c * mkq;
                }
                for k in 0..n {
                    let (mpk, mqk) = (m[p][k], m[q][k]);
                    m[p][k] = c * mpk - s * mqk;
                    m[q][k] = s * mpk + c * mqk;
                }
                for row in v.iter_mut() {
                    let (vp, vq) = (row[p], row[q]);
                    row[p] = c * vp - s * vq;
                    row[q] = s * vp + c * vq;
                }
            }
        }
    }
    let mut idx: Vec<usize> = (0..n).collect();
    idx.sort_by(|&x, &y| m[x][x].partial_cmp(&m[y][y]).unwrap());
    let values = idx.iter().map(|&i| m[i][i]).collect();
    let vectors = idx
        .iter()
        .map(|&j| (0..n).map(|i| v[i][j]).collect())
        .collect();
    (values, vectors)
}

/// Characteristic polynomial coefficients (monic, highest degree first) by
/// the Faddeev-LeVerrier recursion.
pub fn char_poly(a: &DenseMatrix) -> Vec<f64> {
    let n = a.rows();
    let mut coeffs = vec![1.0];
    let mut mk = DenseMatrix::zeros(n, n);
    for k in 1..=n {
        // M_k = A M_{k-1} + c_{n-k+1} I
        let mut next = a.matmul(&mk).unwrap();
        let c_prev = *coeffs.last().unwrap();
        for i in 0..n {
            next[(i, i)] += c_prev;
        }
        let am = a.matmul(&next).unwrap();
        let trace: f64 = (0..n).map(|i| am[(i, i)]).sum();
        coeffs.push(-trace / k as f64);
        mk = next;
    }
    coeffs
}

pub fn poly_eval(c: &[f64], x: f64) -> f64 {
    c.iter().fold(0.0, |acc, &ci| acc * x + ci)
}

/// All real roots of a polynomial known to have only real roots inside
/// [-bound, bound], found by dense sign scanning and bisection.
pub fn real_roots(c: &[f64], bound: f64) -> Vec<f64> {
    let steps = 200_000;
    let mut roots = Vec::new();
    let h = 2.0 * bound / steps as f64;
    let mut x0 = -bound;
    let mut f0 = poly_eval(c, x0);
    for s in 1..=steps {
        let x1 = -bound + s as f64 * h;
        let f1 = poly_eval(c, x1);
        if f0 == 0.0 {
            roots.push(x0);
        } else if f0 * f1 < 0.0 {
            let (mut lo, mut hi) = (x0, x1);
            for _ in 0..200 {
                let mid = 0.5 * (lo + hi);
                if poly_eval(c, lo) * poly_eval(c, mid) <= 0.0 {
                    hi = mid;
                } else {
                    lo = mid;
                }
            }
            roots.push(0.5 * (lo + hi));
        }
        x0 = x1;
        f0 = f1;
    }
    roots
}

/// Floyd-Warshall all-pairs shortest paths over an edge list.
pub fn floyd_warshall(n: usize, edges: &[(usize, usize, f64)]) -> Vec<Vec<f64>> {
    let mut d = vec![vec![f64::INFINITY; n]; n];
    for (i, row) in d.iter_mut().enumerate() {
        row[i] = 0.0;
    }
    for &(a, b, w) in edges {
        if w < d[a][b] {
            d[a][b] = w;
            d[b][a] = w;
        }
    }
    for k in 0..n {
        for i in 0..n {
            for j in 0..n {
                let via = d[i][k] + d[k][j];
                if via < d[i][j] {
                    d[i][j] = via;
                }
            }
        }
    }
    d
}

pub fn brute_distances(x: &DenseMatrix) -> Vec<Vec<f64>> {
    let n = x.rows();
    let mut d = vec![vec![0.0; n]; n];
    for i in 0..n {
        for j in 0..n {
            let mut s = 0.0;
            for k in 0..x.cols() {
                let t = x[(i, k)] - x[(j, k)];
                s += t * t;
            }
            d[i][j] = s.sqrt();
        }
    }
    d
}

pub fn pearson(a: &[f64], b: &[f64]) -> f64 {
    let n = a.len() as f64;
    let ma = a.iter().sum::<f64>() / n;
    let mb = b.iter().sum::<f64>() / n;
    let mut sab = 0.0;
    let mut saa = 0.0;
    let mut sbb = 0.0;
    for (x, y) in a.iter().zip(b) {
        sab += (x - ma) * (y - mb);
        saa += (x - ma) * (x - ma);
        sbb += (y - mb) * (y - mb);
    }
    sab / (saa * sbb).sqrt()
}

/// Upper-triangle pairwise Euclidean distances of the rows of `x`.
pub fn upper_distances(x: &DenseMatrix) -> Vec<f64> {
    let d = brute_distances(x);
    let n = d.len();
    let mut out = Vec::with_capacity(n * (n - 1) / 2);
    for (i, row) in d.iter().enumerate() {
        out.extend_from_slice(&row[i + 1..]);
    }
    out
}

/// Max |a - s b| over columns after choosing the per-column sign s that
/// best aligns b with a.
pub fn max_diff_up_to_sign(a: &DenseMatrix, b: &DenseMatrix) -> f64 {
    assert_eq!(a.shape(), b.shape());
    let mut worst = 0.0_f64;
    for j in 0..a.cols() {
        let dot: f64 = (0..a.rows()).map(|i| a[(i, j)] * b[(i, j)]).sum();
        let s = if dot < 0.0 { -1.0 } else { 1.0 };
        for i in 0..a.rows() {
            worst = worst.max((a[(i, j)] - s * b[(i, j)]).abs());
        }
    }
    worst
}

pub fn random_connected_edges(
    rng: &mut ChaCha8Rng,
    n: usize,
    extra: usize,
) -> Vec<(usize, usize, f64)> {
    let mut edges = Vec::new();
    // random spanning tree
    for i in 1..n {
        let j = rng.random_range(0..i);
        edges.push((i, j, rng.random_range(0.1..2.0)));
    }
    for _ in 0..extra {
        let a = rng.random_range(0..n);
        let b = rng.random_range(0..n);
        if a != b && !edges.iter().any(|&(x, y, _)| (x, y) == (a, b) || (x, y) == (b, a)) {
            edges.push((a, b, rng.random_range(0.1..2.0)));
        }
    }
    edges
}

/// Unrolled arc length of the spiral (t cos t, t sin t) from 0 to t.
pub fn spiral_arc_length(t: f64) -> f64 {
    0.5 * (t * (1.0 + t * t).sqrt() + t.asinh())
}

/// One-turn Swiss roll with a square intrinsic sheet. Returns the 3-D
/// points and the true intrinsic coordinates (arc length, height).
pub fn swiss_roll(n: usize, seed: u64) -> (DenseMatrix, DenseMatrix) {
    let mut r = rng(seed);
    let (t0, t1) = (1.5 * std::f64::consts::PI, 3.5 * std::f64::consts::PI);
    let width = spiral_arc_length(t1) - spiral_arc_length(t0);
    let mut x = Vec::with_capacity(3 * n);
    let mut truth = Vec::with_capacity(2 * n);
    for _ in 0..n {
        let t = r.random_range(t0..t1);
        let h = r.random_range(0.0..width);
        x.extend_from_slice(&[t * t.cos(), h, t * t.sin()]);
        truth.extend_from_slice(&[spiral_arc_length(t), h]);
    }
    (
        DenseMatrix::new(n, 3, x).unwrap(),
        DenseMatrix::new(n, 2, truth).unwrap(),
    )
}

/// Two Gaussian blobs in `dim` dimensions, the second shifted by `gap`
/// along every axis. Rows alternate between blobs; label = row % 2.
pub fn two_blobs(per_blob: usize, dim: usize, gap: f64, seed: u64) -> DenseMatrix {
    let mut r = rng(seed);
    let normal = rand_distr::Normal::new(0.0, 0.3).unwrap();
    DenseMatrix::from_fn(2 * per_blob, dim, |i, _| {
        use rand_distr::Distribution;
        normal.sample(&mut r) + if i % 2 == 1 { gap } else { 0.0 }
    })
}

/// Pearson correlation between the pairwise distances of two point sets.
pub fn distance_correlation(a: &DenseMatrix, b: &DenseMatrix) -> f64 {
    pearson(&upper_distances(a), &upper_distances(b))
}

/// Shannon entropy in bits of a discrete distribution.
pub fn entropy_bits(p: &[f64]) -> f64 {
    -p.iter()
        .filter(|&&v| v > 0.0)
        .map(|v| v * v.log2())
        .sum::<f64>()
}

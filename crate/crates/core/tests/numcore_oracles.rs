mod common;

use common::*;
use drens::numcore::{
    gen_sym_eigen, graph_shortest_paths, knn_graph, pairwise_distances, residuals, sym_eigen,
    thin_svd, DenseMatrix, Metric, NeighborGraph, Which,
};
use proptest::prelude::*;
use rand::Rng;

#[test]
fn pairwise_matches_double_loop() {
    let mut r = rng(11);
    let x = random_matrix(&mut r, 5, 3);
    let d = pairwise_distances(&x, Metric::Euclidean).unwrap();
    let oracle = brute_distances(&x);
    for i in 0..5 {
        for j in 0..5 {
            assert!((d.get(i, j) - oracle[i][j]).abs() < 1e-12);
        }
    }
}

#[test]
fn knn_matches_full_sort() {
    let mut r = rng(12);
    let x = random_matrix(&mut r, 20, 3);
    let d = pairwise_distances(&x, Metric::Euclidean).unwrap();
    let oracle = brute_distances(&x);
    for k in [1, 4, 19] {
        let g = knn_graph(&d, k, false).unwrap();
        for i in 0..20 {
            let mut order: Vec<usize> = (0..20).filter(|&j| j != i).collect();
            order.sort_by(|&a, &b| oracle[i][a].partial_cmp(&oracle[i][b]).unwrap().then(a.cmp(&b)));
            let got: Vec<usize> = g.neighbors(i).iter().map(|e| e.0).collect();
            assert_eq!(got, order[..k].to_vec(), "node {i}, k {k}");
        }
    }
}

#[test]
fn knn_degree_after_symmetrization_on_large_input() {
    let mut r = rng(13);
    let x = random_matrix(&mut r, 2000, 5);
    let d = pairwise_distances(&x, Metric::Euclidean).unwrap();
    let g = knn_graph(&d, 12, true).unwrap();
    assert!((0..2000).all(|i| g.degree(i) >= 12));
}

#[test]
fn quartic_root_oracle() {
    let mut r = rng(14);
    for _ in 0..5 {
        let a = random_symmetric(&mut r, 4);
        let c = char_poly(&a);
        let roots = real_roots(&c, 5.0);
        assert_eq!(roots.len(), 4, "expected four real roots");
        let p = sym_eigen(&a, 4, Which::Smallest).unwrap();
        for (got, want) in p.values.iter().zip(&roots) {
            assert!((got - want).abs() < 1e-8, "{got} vs {want}");
        }
    }
}

#[test]
fn eigen_residuals_on_100_random_matrices() {
    let mut r = rng(15);
    for t in 0..100 {
        let n = 1 + (t * 49) / 99;
        let a = random_symmetric(&mut r, n);
        for which in [Which::Largest, Which::Smallest] {
            let count = 1 + r.random_range(0..n);
            let p = sym_eigen(&a, count, which).unwrap();
            for res in residuals(&a, &p) {
                assert!(res < 1e-8, "n={n} residual {res}");
            }
            for j in 0..count {
                let v = p.vector(j);
                let norm: f64 = v.iter().map(|x| x * x).sum::<f64>().sqrt();
                assert!((norm - 1.0).abs() < 1e-10);
            }
        }
    }
}

#[test]
fn partial_spectrum_matches_jacobi_on_larger_matrix() {
    let mut r = rng(16);
    let n = 240;
    let a = random_symmetric(&mut r, n);
    let (oracle, oracle_vecs) = jacobi_eigen(&a);
    let low = sym_eigen(&a, 3, Which::Smallest).unwrap();
    let high = sym_eigen(&a, 3, Which::Largest).unwrap();
    for j in 0..3 {
        assert!((low.values[j] - oracle[j]).abs() < 1e-9);
        assert!((high.values[j] - oracle[n - 1 - j]).abs() < 1e-9);
        let v = low.vector(j);
        let cos: f64 = v.iter().zip(&oracle_vecs[j]).map(|(a, b)| a * b).sum();
        assert!((cos.abs() - 1.0).abs() < 1e-8);
    }
    for res in residuals(&a, &low).into_iter().chain(residuals(&a, &high)) {
        assert!(res < 1e-8);
    }
}

#[test]
fn clustered_spectrum_partial_path() {
    // Nearly degenerate bottom: block-diagonal Laplacian of 3 weakly linked
    // cliques.
    let n = 150;
    let mut a = DenseMatrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            if i != j && i / 50 == j / 50 {
                a[(i, j)] = -1.0;
            }
        }
    }
    a[(49, 50)] = -1e-7;
    a[(50, 49)] = -1e-7;
    for i in 0..n {
        let s: f64 = (0..n).filter(|&j| j != i).map(|j| a[(i, j)]).sum();
        a[(i, i)] = -s;
    }
    let p = sym_eigen(&a, 4, Which::Smallest).unwrap();
    for res in residuals(&a, &p) {
        assert!(res < 1e-8, "residual {res}");
    }
    let vt = p.vectors.transpose();
    let gram = vt.matmul(&p.vectors).unwrap();
    for i in 0..4 {
        for j in 0..4 {
            let want = if i == j { 1.0 } else { 0.0 };
            assert!((gram[(i, j)] - want).abs() < 1e-8);
        }
    }
}

#[test]
fn generalized_matches_normalized_oracle() {
    let mut r = rng(17);
    let n = 6;
    let edges = random_connected_edges(&mut r, n, 5);
    let mut w = DenseMatrix::zeros(n, n);
    for &(a, b, wt) in &edges {
        w[(a, b)] = wt;
        w[(b, a)] = wt;
    }
    let deg: Vec<f64> = (0..n).map(|i| w.row(i).iter().sum()).collect();
    let l = DenseMatrix::from_fn(n, n, |i, j| if i == j { deg[i] } else { 0.0 } - w[(i, j)]);
    let d = DenseMatrix::from_diagonal(&deg);
    let p = gen_sym_eigen(&l, &d, n).unwrap();

    let normalized =
        DenseMatrix::from_fn(n, n, |i, j| l[(i, j)] / (deg[i].sqrt() * deg[j].sqrt()));
    let (vals, vecs) = jacobi_eigen(&normalized);
    for j in 0..n {
        assert!((p.values[j] - vals[j]).abs() < 1e-10);
        let y: Vec<f64> = (0..n).map(|i| vecs[j][i] / deg[i].sqrt()).collect();
        let got = p.vector(j);
        let s = if got.iter().zip(&y).map(|(a, b)| a * b).sum::<f64>() < 0.0 { -1.0 } else { 1.0 };
        for i in 0..n {
            assert!((got[i] - s * y[i]).abs() < 1e-8);
        }
        // residual of the generalized problem
        let ly = l.mul_vec(&got);
        for i in 0..n {
            assert!((ly[i] - p.values[j] * deg[i] * got[i]).abs() < 1e-8);
        }
    }
    assert!(p.values[0].abs() < 1e-10);
}

#[test]
fn identity_weighting_reduces_to_standard_problem() {
    let mut r = rng(18);
    let a = random_symmetric(&mut r, 7);
    let p = gen_sym_eigen(&a, &DenseMatrix::identity(7), 3).unwrap();
    let q = sym_eigen(&a, 3, Which::Smallest).unwrap();
    for j in 0..3 {
        assert!((p.values[j] - q.values[j]).abs() < 1e-12);
    }
    assert!(max_diff_up_to_sign(&p.vectors, &q.vectors) < 1e-10);
}

#[test]
fn svd_matches_gram_eigenvalues() {
    let mut r = rng(19);
    let a = random_matrix(&mut r, 6, 4);
    let s = thin_svd(&a, 4).unwrap();
    let gram = a.transpose().matmul(&a).unwrap();
    let e = sym_eigen(&gram, 4, Which::Largest).unwrap();
    for j in 0..4 {
        assert!((s.values[j] * s.values[j] - e.values[j]).abs() < 1e-10);
        let v = s.right.column(j);
        let av = a.mul_vec(&v);
        for i in 0..6 {
            assert!((av[i] - s.values[j] * s.left[(i, j)]).abs() < 1e-8);
        }
    }
}

#[test]
fn svd_of_centered_wide_rank_deficient_block() {
    // 12 neighbours in 13 dimensions, centred: rank at most 11
    let mut r = rng(23);
    for trial in 0..20 {
        let raw = DenseMatrix::from_fn(12, 13, |_, j| {
            if j % 3 == 0 {
                r.random_range(1..=5) as f64
            } else {
                r.random_range(-1.0..1.0)
            }
        });
        let a = raw.centered();
        let s = thin_svd(&a, 2).unwrap();
        let (values, _) = jacobi_eigen(&a.matmul(&a.transpose()).unwrap());
        for j in 0..2 {
            let expected = values[values.len() - 1 - j].max(0.0).sqrt();
            assert!((s.values[j] - expected).abs() < 1e-9, "trial {trial}");
        }
    }
}

#[test]
fn shortest_paths_match_floyd_warshall() {
    let mut r = rng(20);
    for trial in 0..20 {
        let n = if trial == 0 { 30 } else { r.random_range(5..30) };
        let edges = random_connected_edges(&mut r, n, n);
        let g = NeighborGraph::from_edges(n, &edges).unwrap();
        let d = graph_shortest_paths(&g).unwrap();
        let oracle = floyd_warshall(n, &edges);
        for i in 0..n {
            for j in 0..n {
                assert!((d.get(i, j) - oracle[i][j]).abs() < 1e-12);
            }
        }
    }
}

#[test]
fn eigen_output_is_bit_identical_across_runs() {
    let mut r = rng(21);
    let a = random_symmetric(&mut r, 300);
    let p1 = sym_eigen(&a, 5, Which::Largest).unwrap();
    let p2 = sym_eigen(&a, 5, Which::Largest).unwrap();
    assert_eq!(p1, p2);
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn geodesics_satisfy_triangle_inequality(seed in 0u64..10_000, n in 4usize..25) {
        let mut r = rng(seed);
        let edges = random_connected_edges(&mut r, n, n / 2);
        let g = NeighborGraph::from_edges(n, &edges).unwrap();
        let d = graph_shortest_paths(&g).unwrap();
        for i in 0..n {
            for j in 0..n {
                for k in 0..n {
                    prop_assert!(d.get(i, j) <= d.get(i, k) + d.get(k, j) + 1e-12);
                }
            }
        }
    }

    #[test]
    fn symmetrization_is_idempotent(seed in 0u64..10_000, n in 3usize..30, k in 1usize..5) {
        let mut r = rng(seed);
        let x = random_matrix(&mut r, n, 2);
        let d = pairwise_distances(&x, Metric::Euclidean).unwrap();
        let k = k.min(n - 1);
        let once = knn_graph(&d, k, true).unwrap();
        prop_assert_eq!(once.symmetrized(), once.clone());
        for i in 0..n {
            for &(j, _) in once.neighbors(i) {
                prop_assert!(once.neighbors(j).iter().any(|e| e.0 == i));
            }
        }
    }
}

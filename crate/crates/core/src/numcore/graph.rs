//! k-nearest-neighbour graphs and geodesic (shortest-path) distances.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use rayon::prelude::*;

use super::distance::DistanceMatrix;
use crate::error::{Error, Result};

/// Weight stored for an edge between coincident points; edge weights are
/// kept strictly positive.
pub const MIN_EDGE_WEIGHT: f64 = 1e-12;

/// Weighted adjacency lists over `n` nodes.
///
/// A freshly built k-NN graph lists each node's neighbours nearest first.
/// A symmetrized graph lists neighbours in increasing index order.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborGraph {
    n: usize,
    k: usize,
    symmetric: bool,
    adjacency: Vec<Vec<(usize, f64)>>,
}

impl NeighborGraph {
    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn is_symmetric(&self) -> bool {
        self.symmetric
    }

    pub fn neighbors(&self, i: usize) -> &[(usize, f64)] {
        &self.adjacency[i]
    }

    pub fn degree(&self, i: usize) -> usize {
        self.adjacency[i].len()
    }

    pub fn edge_count(&self) -> usize {
        self.adjacency.iter().map(Vec::len).sum()
    }

    /// Builds a symmetric graph from an explicit undirected edge list.
    pub fn from_edges(n: usize, edges: &[(usize, usize, f64)]) -> Result<Self> {
        let mut adjacency = vec![Vec::new(); n];
        for &(a, b, w) in edges {
            if a >= n || b >= n || a == b {
                return Err(Error::InvalidArgument(format!("bad edge ({a}, {b})")));
            }
            if !(w > 0.0) || !w.is_finite() {
                return Err(Error::InvalidArgument(format!(
                    "edge ({a}, {b}) has non-positive weight {w}"
                )));
            }
            adjacency[a].push((b, w));
            adjacency[b].push((a, w));
        }
        for list in &mut adjacency {
            list.sort_by(|x, y| x.0.cmp(&y.0));
            list.dedup_by_key(|e| e.0);
        }
        Ok(Self {
            n,
            k: 0,
            symmetric: true,
            adjacency,
        })
    }

    /// Union symmetrization: an edge survives if either endpoint selected it.
    pub fn symmetrized(&self) -> Self {
        let mut adjacency: Vec<Vec<(usize, f64)>> = self.adjacency.clone();
        for (i, list) in self.adjacency.iter().enumerate() {
            for &(j, w) in list {
                adjacency[j].push((i, w));
            }
        }
        for list in &mut adjacency {
            list.sort_by(|a, b| a.0.cmp(&b.0));
            list.dedup_by_key(|e| e.0);
        }
        Self {
            n: self.n,
            k: self.k,
            symmetric: true,
            adjacency,
        }
    }

    /// Adds an undirected edge (used for connectivity repair).
    pub fn add_edge(&mut self, a: usize, b: usize, weight: f64) {
        let w = weight.max(MIN_EDGE_WEIGHT);
        for (from, to) in [(a, b), (b, a)] {
            let list = &mut self.adjacency[from];
            match list.binary_search_by(|e| e.0.cmp(&to)) {
                Ok(_) => {}
                Err(pos) => list.insert(pos, (to, w)),
            }
        }
    }

    /// Connected-component label per node, labels numbered in order of
    /// their lowest node index.
    pub fn components(&self) -> Vec<usize> {
        let mut labels = vec![usize::MAX; self.n];
        let mut next = 0;
        let mut stack = Vec::new();
        for start in 0..self.n {
            if labels[start] != usize::MAX {
                continue;
            }
            labels[start] = next;
            stack.push(start);
            while let Some(u) = stack.pop() {
                for &(v, _) in &self.adjacency[u] {
                    if labels[v] == usize::MAX {
                        labels[v] = next;
                        stack.push(v);
                    }
                }
            }
            next += 1;
        }
        labels
    }

    pub fn component_count(&self) -> usize {
        self.components().iter().max().map_or(0, |m| m + 1)
    }
}

/// Each node's `k` nearest other nodes under `d`, ties resolved toward the
/// lower index; with `symmetrize` the union rule is applied.
pub fn knn_graph(d: &DistanceMatrix, k: usize, symmetrize: bool) -> Result<NeighborGraph> {
    let n = d.len();
    if k == 0 || k >= n {
        return Err(Error::InvalidArgument(format!(
            "k must satisfy 1 <= k <= n-1 (k = {k}, n = {n})"
        )));
    }
    let adjacency: Vec<Vec<(usize, f64)>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let row = d.row(i);
            let mut cand: Vec<usize> = (0..n).filter(|&j| j != i).collect();
            let cmp = |a: &usize, b: &usize| row[*a].total_cmp(&row[*b]).then(a.cmp(b));
            cand.select_nth_unstable_by(k - 1, cmp);
            cand.truncate(k);
            cand.sort_unstable_by(cmp);
            cand.into_iter()
                .map(|j| (j, row[j].max(MIN_EDGE_WEIGHT)))
                .collect()
        })
        .collect();
    let g = NeighborGraph {
        n,
        k,
        symmetric: false,
        adjacency,
    };
    Ok(if symmetrize { g.symmetrized() } else { g })
}

#[derive(Copy, Clone, PartialEq)]
struct State {
    dist: f64,
    node: usize,
}

impl Eq for State {}

impl Ord for State {
    fn cmp(&self, other: &Self) -> Ordering {
        // min-heap on distance, then node index
        other
            .dist
            .total_cmp(&self.dist)
            .then_with(|| other.node.cmp(&self.node))
    }
}

impl PartialOrd for State {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

fn dijkstra(g: &NeighborGraph, source: usize) -> Vec<f64> {
    let mut dist = vec![f64::INFINITY; g.n];
    let mut heap = BinaryHeap::new();
    dist[source] = 0.0;
    heap.push(State {
        dist: 0.0,
        node: source,
    });
    while let Some(State { dist: du, node: u }) = heap.pop() {
        if du > dist[u] {
            continue;
        }
        for &(v, w) in &g.adjacency[u] {
            let nd = du + w;
            if nd < dist[v] {
                dist[v] = nd;
                heap.push(State { dist: nd, node: v });
            }
        }
    }
    dist
}

/// All-pairs shortest-path distances by Dijkstra from every source.
///
/// A disconnected graph yields [`Error::Disconnected`] carrying the component
/// labels; the caller decides how to repair it.
pub fn graph_shortest_paths(g: &NeighborGraph) -> Result<DistanceMatrix> {
    if !g.symmetric {
        return Err(Error::InvalidArgument(
            "shortest paths require a symmetrized graph".into(),
        ));
    }
    let labels = g.components();
    let count = labels.iter().max().map_or(0, |m| m + 1);
    if count > 1 {
        return Err(Error::Disconnected { count, labels });
    }
    let n = g.n;
    let rows: Vec<Vec<f64>> = (0..n).into_par_iter().map(|s| dijkstra(g, s)).collect();
    let mut data = rows.concat();
    // Path sums can differ in the last bit depending on direction.
    for i in 0..n {
        for j in (i + 1)..n {
            let v = data[i * n + j].min(data[j * n + i]);
            data[i * n + j] = v;
            data[j * n + i] = v;
        }
    }
    Ok(DistanceMatrix::from_raw(n, data))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::numcore::{pairwise_distances, DenseMatrix, Metric};

    fn line(points: &[f64]) -> DistanceMatrix {
        let rows: Vec<[f64; 1]> = points.iter().map(|&p| [p]).collect();
        pairwise_distances(&DenseMatrix::from_rows(&rows).unwrap(), Metric::Euclidean).unwrap()
    }

    #[test]
    fn collinear_k1() {
        let d = line(&[0.0, 1.0, 10.0]);
        let g = knn_graph(&d, 1, false).unwrap();
        assert_eq!(g.neighbors(0), &[(1, 1.0)]);
        assert_eq!(g.neighbors(1), &[(0, 1.0)]);
        assert_eq!(g.neighbors(2), &[(1, 9.0)]);
        let s = g.symmetrized();
        assert_eq!(s.neighbors(0), &[(1, 1.0)]);
        assert_eq!(s.neighbors(1), &[(0, 1.0), (2, 9.0)]);
        assert_eq!(s.neighbors(2), &[(1, 9.0)]);
        assert_eq!(s.edge_count(), 4);
    }

    #[test]
    fn ties_go_to_lower_index() {
        let d = line(&[0.0, -1.0, 1.0]);
        let g = knn_graph(&d, 1, false).unwrap();
        assert_eq!(g.neighbors(0)[0].0, 1);
    }

    #[test]
    fn k_bounds() {
        let d = line(&[0.0, 1.0, 2.0]);
        assert!(knn_graph(&d, 3, false).is_err());
        assert!(knn_graph(&d, 0, false).is_err());
        assert!(knn_graph(&d, 2, true).is_ok());
    }

    #[test]
    fn coincident_points_get_positive_weight() {
        let d = line(&[0.0, 0.0, 5.0]);
        let g = knn_graph(&d, 1, true).unwrap();
        assert!(g.neighbors(0)[0].1 > 0.0);
    }

    #[test]
    fn triangle_and_path() {
        let tri = NeighborGraph::from_edges(3, &[(0, 1, 1.0), (1, 2, 1.0), (0, 2, 1.0)]).unwrap();
        let d = graph_shortest_paths(&tri).unwrap();
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(d.get(i, j), if i == j { 0.0 } else { 1.0 });
            }
        }
        let path = NeighborGraph::from_edges(3, &[(0, 1, 1.0), (1, 2, 1.0)]).unwrap();
        assert_eq!(graph_shortest_paths(&path).unwrap().get(0, 2), 2.0);
    }

    #[test]
    fn disconnected_reports_components() {
        let g = NeighborGraph::from_edges(4, &[(0, 1, 1.0), (2, 3, 1.0)]).unwrap();
        match graph_shortest_paths(&g) {
            Err(Error::Disconnected { count, labels }) => {
                assert_eq!(count, 2);
                assert_eq!(labels, vec![0, 0, 1, 1]);
            }
            other => panic!("expected disconnection, got {other:?}"),
        }
    }
}

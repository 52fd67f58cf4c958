//! Mutual k-nearest-neighbor connectivity graph and its edge weights.

use std::path::Path;

use rayon::prelude::*;
use thiserror::Error;

use crate::dataset::{format_f64, sq_dist, write_text, DataMatrix, DatasetError};

pub const DEFAULT_KNN_K: usize = 30;

#[derive(Debug, Error)]
pub enum GraphError {
    #[error("k = {k} out of range 1..={max}")]
    KOutOfRange { k: usize, max: usize },
    #[error("mutual kNN needs at least 2 points, got {0}")]
    TooFewPoints(usize),
    #[error("graph has no edges")]
    NoEdges,
    #[error("graph has {graph} vertices but the data has {rows} rows")]
    VertexMismatch { graph: usize, rows: usize },
    #[error(transparent)]
    Data(#[from] DatasetError),
}

/// How pairwise-term weights are assigned to edges.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum WeightScheme {
    /// `N / (|E| * sqrt(deg(p) * deg(q)))`
    #[default]
    DegreeBalanced,
    /// `1 / |E|`
    Uniform,
}

impl WeightScheme {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::DegreeBalanced => "degree-balanced",
            Self::Uniform => "uniform",
        }
    }
}

impl std::str::FromStr for WeightScheme {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "degree-balanced" => Ok(Self::DegreeBalanced),
            "uniform" => Ok(Self::Uniform),
            other => Err(format!("unknown weight scheme '{other}' (expected degree-balanced or uniform)")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Edge {
    pub p: usize,
    pub q: usize,
    pub weight: f64,
}

/// Undirected graph stored as an edge list with `p < q`, sorted by `(p, q)`.
#[derive(Debug, Clone, PartialEq)]
pub struct NeighborGraph {
    n_vertices: usize,
    k: usize,
    edges: Vec<Edge>,
    degrees: Vec<usize>,
}

impl NeighborGraph {
    /// Build from `(p, q)` pairs with unit weight. Pairs are normalized to
    /// `p < q`; self-loops and duplicates are dropped.
    pub fn from_pairs(n_vertices: usize, pairs: impl IntoIterator<Item = (usize, usize)>) -> Self {
        let mut pairs: Vec<(usize, usize)> = pairs
            .into_iter()
            .filter(|(p, q)| p != q)
            .map(|(p, q)| (p.min(q), p.max(q)))
            .collect();
        pairs.sort_unstable();
        pairs.dedup();
        let mut degrees = vec![0; n_vertices];
        for &(p, q) in &pairs {
            degrees[p] += 1;
            degrees[q] += 1;
        }
        let edges = pairs.into_iter().map(|(p, q)| Edge { p, q, weight: 1.0 }).collect();
        Self { n_vertices, k: 0, edges, degrees }
    }

    pub fn n_vertices(&self) -> usize {
        self.n_vertices
    }

    /// Neighborhood size the graph was built with (0 when built from pairs).
    pub fn k(&self) -> usize {
        self.k
    }

    pub fn edges(&self) -> &[Edge] {
        &self.edges
    }

    pub fn n_edges(&self) -> usize {
        self.edges.len()
    }

    pub fn degrees(&self) -> &[usize] {
        &self.degrees
    }

    pub fn with_weights(mut self, weights: impl IntoIterator<Item = f64>) -> Self {
        for (e, w) in self.edges.iter_mut().zip(weights) {
            e.weight = w;
        }
        self
    }

    /// Edge list CSV `p,q,w`.
    pub fn write_edges_csv(&self, path: &Path) -> Result<(), GraphError> {
        let mut s = String::from("p,q,w\n");
        for e in &self.edges {
            s.push_str(&format!("{},{},{}\n", e.p, e.q, format_f64(e.weight)));
        }
        Ok(write_text(path, &s)?)
    }
}

/// Indices of the `k` nearest rows to `i` (excluding `i`), ties to smaller index.
pub(crate) fn k_nearest(x: &DataMatrix, i: usize, k: usize) -> Vec<usize> {
    let xi = x.row(i);
    let mut cand: Vec<(f64, usize)> = (0..x.rows()).filter(|&j| j != i).map(|j| (sq_dist(xi, x.row(j)), j)).collect();
    let cmp = |a: &(f64, usize), b: &(f64, usize)| a.0.total_cmp(&b.0).then(a.1.cmp(&b.1));
    if k < cand.len() {
        cand.select_nth_unstable_by(k - 1, cmp);
        cand.truncate(k);
    }
    cand.sort_unstable_by(cmp);
    cand.into_iter().map(|(_, j)| j).collect()
}

/// Exact mutual kNN graph: `(p, q)` is an edge iff each is among the other's
/// `k` nearest neighbors. Edges start with unit weight; see
/// [`assign_edge_weights`].
pub fn mutual_knn_graph(x: &DataMatrix, k: usize) -> Result<NeighborGraph, GraphError> {
    let n = x.rows();
    if n < 2 {
        return Err(GraphError::TooFewPoints(n));
    }
    if k == 0 || k > n - 1 {
        return Err(GraphError::KOutOfRange { k, max: n - 1 });
    }
    let mut neighbors: Vec<Vec<usize>> = (0..n).into_par_iter().map(|i| k_nearest(x, i, k)).collect();
    neighbors.iter_mut().for_each(|v| v.sort_unstable());
    let pairs = (0..n).flat_map(|p| {
        let neighbors = &neighbors;
        neighbors[p].iter().copied().filter(move |&q| q > p && neighbors[q].binary_search(&p).is_ok()).map(move |q| (p, q))
    });
    let mut g = NeighborGraph::from_pairs(n, pairs.collect::<Vec<_>>());
    g.k = k;
    Ok(g)
}

/// Euclidean minimum spanning tree of the rows by Prim's algorithm, O(N^2).
/// Ties go to the smaller vertex index. Returns `N - 1` pairs with `p < q`.
pub fn minimum_spanning_tree(x: &DataMatrix) -> Vec<(usize, usize)> {
    let n = x.rows();
    if n < 2 {
        return Vec::new();
    }
    let mut in_tree = vec![false; n];
    let mut best: Vec<(f64, usize)> = (0..n).map(|j| (sq_dist(x.row(0), x.row(j)), 0)).collect();
    in_tree[0] = true;
    let mut pairs = Vec::with_capacity(n - 1);
    for _ in 1..n {
        let next = (0..n)
            .filter(|&j| !in_tree[j])
            .min_by(|&a, &b| best[a].0.total_cmp(&best[b].0).then(a.cmp(&b)))
            .expect("vertices left");
        in_tree[next] = true;
        let parent = best[next].1;
        pairs.push((parent.min(next), parent.max(next)));
        let row = x.row(next);
        for j in 0..n {
            if !in_tree[j] {
                let d = sq_dist(row, x.row(j));
                if d < best[j].0 {
                    best[j] = (d, next);
                }
            }
        }
    }
    pairs.sort_unstable();
    pairs
}

/// Union of `graph` with the minimum spanning tree of `x`, so the result is
/// connected and has no isolated vertex. Weights are reset to 1; assign them
/// afterwards with [`assign_edge_weights`].
pub fn augment_with_mst(graph: NeighborGraph, x: &DataMatrix) -> Result<NeighborGraph, GraphError> {
    if graph.n_vertices != x.rows() {
        return Err(GraphError::VertexMismatch { graph: graph.n_vertices, rows: x.rows() });
    }
    let k = graph.k;
    let pairs = graph.edges.iter().map(|e| (e.p, e.q)).chain(minimum_spanning_tree(x));
    let mut g = NeighborGraph::from_pairs(graph.n_vertices, pairs.collect::<Vec<_>>());
    g.k = k;
    Ok(g)
}

/// Assign pairwise-term weights from vertex degrees.
pub fn assign_edge_weights(graph: NeighborGraph, scheme: WeightScheme) -> Result<NeighborGraph, GraphError> {
    if graph.edges.is_empty() {
        return Err(GraphError::NoEdges);
    }
    let n = graph.n_vertices as f64;
    let m = graph.edges.len() as f64;
    let weights: Vec<f64> = graph
        .edges
        .iter()
        .map(|e| match scheme {
            WeightScheme::DegreeBalanced => n / (m * ((graph.degrees[e.p] * graph.degrees[e.q]) as f64).sqrt()),
            WeightScheme::Uniform => 1.0 / m,
        })
        .collect();
    Ok(graph.with_weights(weights))
}

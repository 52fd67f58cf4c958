//! Robust Continuous Clustering.
//!
//! Every sample `x_i` owns a representative `u_i`, initialized to `x_i`. The
//! representatives minimize a data-fidelity term plus a Geman-McClure penalty
//! on the lengths of mutual-kNN edges. The penalty is optimized in its lifted
//! form, with one line-process variable `l` per edge:
//!
//! ```text
//! C(U, l) = 1/2 sum_i |x_i - u_i|^2
//!         + lambda/2 sum_(p,q) w_pq ( l_pq |u_p - u_q|^2 + mu (sqrt(l_pq) - 1)^2 )
//! ```
//!
//! For fixed `U` the optimal `l` has a closed form; for fixed `l` the optimal
//! `U` solves a sparse SPD system. Alternating the two is exact block
//! coordinate descent, so the objective never increases at a fixed `mu`. The
//! scale `mu` is annealed from large (nearly quadratic) to small (sharply
//! robust). Clusters are the connected components of edges whose
//! representatives end up closer than the cut threshold `delta`.

mod solver;

use std::path::Path;

use log::{debug, warn};
use thiserror::Error;

use crate::clustering::ClusteringResult;
use crate::dataset::{format_f64, sq_dist, write_text, DataMatrix, DatasetError};
use crate::graph::NeighborGraph;
use solver::{laplacian_spectral_norm, matrix_spectral_norm, solve_columns, ShiftedLaplacian};

const POWER_ITERS: usize = 50;
const STOP_REL_CHANGE: f64 = 1e-7;

#[derive(Debug, Error)]
pub enum RccError {
    #[error("shape mismatch: {0}")]
    Shape(String),
    #[error("linear solve did not reach tolerance {tol:e}: achieved relative residual {achieved:e}")]
    NotConverged { tol: f64, achieved: f64 },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error(transparent)]
    Data(#[from] DatasetError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct RccConfig {
    pub max_iters: usize,
    /// Alternations performed at each `mu` before it is halved.
    pub inner_iters_per_mu: usize,
    /// Relative residual required from every representative update.
    pub linear_solver_tolerance: f64,
    /// Multiplier on the mean nearest-mutual-neighbor distance giving `delta`.
    pub cluster_cut_factor: f64,
    /// Multiplier on the scale-free balance weight; see [`balance_weight`].
    pub lambda_scale: f64,
}

impl Default for RccConfig {
    fn default() -> Self {
        Self {
            max_iters: 100,
            inner_iters_per_mu: 4,
            linear_solver_tolerance: 1e-6,
            cluster_cut_factor: 1.0,
            lambda_scale: 4.0,
        }
    }
}

impl RccConfig {
    pub fn validate(&self) -> Result<(), RccError> {
        if self.max_iters == 0 || self.inner_iters_per_mu == 0 {
            return Err(RccError::Config("iteration counts must be >= 1".into()));
        }
        if !(self.linear_solver_tolerance > 0.0) || !(self.cluster_cut_factor > 0.0) || !(self.lambda_scale > 0.0) {
            return Err(RccError::Config("tolerance, cut factor and lambda scale must be > 0".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TraceEntry {
    pub iter: usize,
    pub mu: f64,
    pub objective: f64,
}

/// Solver state after a fit.
#[derive(Debug, Clone, PartialEq)]
pub struct RccState {
    /// Representatives, same shape as the input.
    pub u: DataMatrix,
    /// Line-process value per graph edge, in `(0, 1]`.
    pub line: Vec<f64>,
    pub mu: f64,
    pub lambda: f64,
    pub delta: f64,
    pub objective_trace: Vec<TraceEntry>,
}

impl RccState {
    /// Objective trace CSV `iter,mu,objective`.
    pub fn write_trace_csv(&self, path: &Path) -> Result<(), RccError> {
        let mut s = String::from("iter,mu,objective\n");
        for t in &self.objective_trace {
            s.push_str(&format!("{},{},{}\n", t.iter, format_f64(t.mu), format_f64(t.objective)));
        }
        Ok(write_text(path, &s)?)
    }
}

/// Geman-McClure penalty `mu y^2 / (mu + y^2)`.
pub fn geman_mcclure(y: f64, mu: f64) -> f64 {
    let y2 = y * y;
    if y2.is_infinite() {
        return mu;
    }
    mu * y2 / (mu + y2)
}

/// Penalty on the line process, `mu (sqrt(l) - 1)^2`.
pub fn line_penalty(l: f64, mu: f64) -> f64 {
    let t = l.sqrt() - 1.0;
    mu * t * t
}

/// Minimizer over `l` of `l * dist^2 + mu (sqrt(l) - 1)^2`.
pub fn optimal_line_process(dist: f64, mu: f64) -> f64 {
    let r = mu / (mu + dist * dist);
    r * r
}

fn check_shapes(x: &DataMatrix, u: &DataMatrix, graph: &NeighborGraph, line: &[f64]) -> Result<(), RccError> {
    if x.rows() != u.rows() || x.cols() != u.cols() {
        return Err(RccError::Shape(format!("X is {}x{}, U is {}x{}", x.rows(), x.cols(), u.rows(), u.cols())));
    }
    if graph.n_vertices() != x.rows() {
        return Err(RccError::Shape(format!("graph has {} vertices, X has {} rows", graph.n_vertices(), x.rows())));
    }
    if line.len() != graph.n_edges() {
        return Err(RccError::Shape(format!("{} line values for {} edges", line.len(), graph.n_edges())));
    }
    Ok(())
}

/// Lifted objective `C(U, l)` (squared pairwise distances).
pub fn lifted_objective(
    x: &DataMatrix,
    u: &DataMatrix,
    graph: &NeighborGraph,
    line: &[f64],
    mu: f64,
    lambda: f64,
) -> Result<f64, RccError> {
    check_shapes(x, u, graph, line)?;
    Ok(objective_unchecked(x, u, graph, line, mu, lambda))
}

fn objective_unchecked(x: &DataMatrix, u: &DataMatrix, graph: &NeighborGraph, line: &[f64], mu: f64, lambda: f64) -> f64 {
    let data: f64 = x.iter_rows().zip(u.iter_rows()).map(|(a, b)| sq_dist(a, b)).sum();
    let pair: f64 = graph
        .edges()
        .iter()
        .zip(line)
        .map(|(e, &l)| e.weight * (l * sq_dist(u.row(e.p), u.row(e.q)) + line_penalty(l, mu)))
        .sum();
    0.5 * data + 0.5 * lambda * pair
}

fn solver_iteration_cap(n: usize) -> usize {
    20 * n + 1000
}

/// Minimize the objective over `U` for fixed line variables:
/// solves `(I + lambda L) U = X`, with `L` the Laplacian of edge weights
/// `w * l`, to relative residual `tol`.
pub fn update_representatives(
    x: &DataMatrix,
    graph: &NeighborGraph,
    line: &[f64],
    lambda: f64,
    tol: f64,
) -> Result<DataMatrix, RccError> {
    check_shapes(x, x, graph, line)?;
    let mut u = x.clone();
    update_in_place(x, graph, line, lambda, tol, &mut u)?;
    Ok(u)
}

fn update_in_place(
    x: &DataMatrix,
    graph: &NeighborGraph,
    line: &[f64],
    lambda: f64,
    tol: f64,
    u: &mut DataMatrix,
) -> Result<f64, RccError> {
    if lambda == 0.0 || graph.n_edges() == 0 {
        u.as_mut_slice().copy_from_slice(x.as_slice());
        return Ok(0.0);
    }
    let op = ShiftedLaplacian::new(graph, line, lambda);
    let cols = x.cols();
    let achieved = solve_columns(&op, x.as_slice(), u.as_mut_slice(), cols, tol, solver_iteration_cap(x.rows()));
    if achieved > tol {
        return Err(RccError::NotConverged { tol, achieved });
    }
    Ok(achieved)
}

/// Relative Frobenius residual `||(I + lambda L) U - X|| / ||X||`.
pub fn representative_residual(x: &DataMatrix, u: &DataMatrix, graph: &NeighborGraph, line: &[f64], lambda: f64) -> f64 {
    let op = ShiftedLaplacian::new(graph, line, lambda);
    let (n, d) = (x.rows(), x.cols());
    let mut col = vec![0.0; n];
    let mut out = vec![0.0; n];
    let (mut res, mut total) = (0.0, 0.0);
    for j in 0..d {
        for i in 0..n {
            col[i] = u.get(i, j);
        }
        op.apply(&col, &mut out);
        for i in 0..n {
            let b = x.get(i, j);
            res += (out[i] - b) * (out[i] - b);
            total += b * b;
        }
    }
    if total == 0.0 {
        res.sqrt()
    } else {
        (res / total).sqrt()
    }
}

/// Balance weight `||X - mean||_2 / (r ||L||_2)` between the data and
/// pairwise terms, with `L` the Laplacian of the graph's edge weights and `r`
/// the mean nearest-mutual-neighbor distance.
///
/// Measuring `X` in units of `r` makes the weight invariant to translating
/// or rescaling the data. Returns 1 when any factor vanishes.
pub fn balance_weight(x: &DataMatrix, graph: &NeighborGraph) -> f64 {
    let mean = x.mean_row();
    let centered: Vec<f64> = x.iter_rows().flat_map(|r| r.iter().zip(&mean).map(|(v, m)| v - m)).collect();
    let xn = matrix_spectral_norm(&centered, x.rows(), x.cols(), POWER_ITERS);
    let an = laplacian_spectral_norm(graph, POWER_ITERS);
    let r = mean_nearest_neighbor_distance(x, graph);
    if an > 0.0 && xn > 0.0 && r > 0.0 {
        xn / (r * an)
    } else {
        1.0
    }
}

/// Mean distance from each non-isolated vertex to its nearest graph neighbor.
pub fn mean_nearest_neighbor_distance(x: &DataMatrix, graph: &NeighborGraph) -> f64 {
    let mut nearest = vec![f64::INFINITY; graph.n_vertices()];
    for e in graph.edges() {
        let d = sq_dist(x.row(e.p), x.row(e.q));
        nearest[e.p] = nearest[e.p].min(d);
        nearest[e.q] = nearest[e.q].min(d);
    }
    let finite: Vec<f64> = nearest.into_iter().filter(|d| d.is_finite()).map(f64::sqrt).collect();
    if finite.is_empty() {
        0.0
    } else {
        finite.iter().sum::<f64>() / finite.len() as f64
    }
}

/// Connected components of the graph restricted to edges whose
/// representatives are closer than `delta`. Components are numbered in order
/// of their smallest vertex.
pub fn extract_clusters(u: &DataMatrix, graph: &NeighborGraph, delta: f64) -> ClusteringResult {
    let n = graph.n_vertices();
    let mut parent: Vec<usize> = (0..n).collect();
    fn find(parent: &mut [usize], mut a: usize) -> usize {
        while parent[a] != a {
            parent[a] = parent[parent[a]];
            a = parent[a];
        }
        a
    }
    let cut = delta * delta;
    for e in graph.edges() {
        if sq_dist(u.row(e.p), u.row(e.q)) < cut {
            let (a, b) = (find(&mut parent, e.p), find(&mut parent, e.q));
            if a != b {
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let mut id = vec![usize::MAX; n];
    let mut next = 0;
    let labels = (0..n)
        .map(|i| {
            let root = find(&mut parent, i);
            if id[root] == usize::MAX {
                id[root] = next;
                next += 1;
            }
            id[root]
        })
        .collect();
    ClusteringResult::from_labels(labels)
}

/// Run the annealed alternating minimization and extract clusters.
///
/// Edge weights are taken from `graph` as-is; call
/// [`assign_edge_weights`](crate::graph::assign_edge_weights) first.
pub fn rcc_fit(x: &DataMatrix, graph: &NeighborGraph, cfg: &RccConfig) -> Result<(RccState, ClusteringResult), RccError> {
    cfg.validate()?;
    let n = x.rows();
    if graph.n_vertices() != n {
        return Err(RccError::Shape(format!("graph has {} vertices, X has {n} rows", graph.n_vertices())));
    }
    let m = graph.n_edges();
    let first = x.row(0);
    let zero_diameter = x.iter_rows().all(|r| r == first);

    if m == 0 || zero_diameter {
        let result = if zero_diameter {
            ClusteringResult::from_labels(vec![0; n])
        } else {
            warn!("mutual kNN graph has no edges; every sample is its own cluster");
            ClusteringResult::from_labels((0..n).collect())
        };
        let state = RccState {
            u: x.clone(),
            line: vec![1.0; m],
            mu: 0.0,
            lambda: 0.0,
            delta: 0.0,
            objective_trace: Vec::new(),
        };
        return Ok((state, result));
    }

    let max_edge_sq = graph.edges().iter().map(|e| sq_dist(x.row(e.p), x.row(e.q))).fold(0.0, f64::max);
    let delta = cfg.cluster_cut_factor * mean_nearest_neighbor_distance(x, graph);
    if max_edge_sq == 0.0 || delta == 0.0 {
        // every edge joins coincident points; nothing to optimize
        let result = extract_clusters(x, graph, f64::MIN_POSITIVE);
        let state = RccState { u: x.clone(), line: vec![1.0; m], mu: 0.0, lambda: 0.0, delta, objective_trace: Vec::new() };
        return Ok((state, result));
    }

    let lambda = cfg.lambda_scale * balance_weight(x, graph);
    let mu0 = 3.0 * max_edge_sq;
    let mu_floor = (0.5 * delta * delta).min(mu0);
    debug!("rcc: n={n} edges={m} lambda={lambda:.6e} mu0={mu0:.6e} delta={delta:.6e}");

    let mut u = x.clone();
    let mut line = vec![1.0; m];
    let mut mu = mu0;
    let mut trace = Vec::with_capacity(cfg.max_iters);
    let mut converged = false;
    let mut iterations = 0;

    for iter in 0..cfg.max_iters {
        let halvings = (iter / cfg.inner_iters_per_mu).min(1 << 10) as i32;
        mu = (mu0 * 0.5f64.powi(halvings)).max(mu_floor);

        for (l, e) in line.iter_mut().zip(graph.edges()) {
            *l = optimal_line_process(sq_dist(u.row(e.p), u.row(e.q)).sqrt(), mu).max(f64::MIN_POSITIVE);
        }
        update_in_place(x, graph, &line, lambda, cfg.linear_solver_tolerance, &mut u)?;
        let objective = objective_unchecked(x, &u, graph, &line, mu, lambda);
        iterations = iter + 1;

        let prev = trace.last().copied();
        trace.push(TraceEntry { iter, mu, objective });
        if mu <= mu_floor {
            if let Some(prev) = prev.filter(|p: &TraceEntry| p.mu == mu) {
                let change = (prev.objective - objective).abs() / objective.abs().max(f64::MIN_POSITIVE);
                if change < STOP_REL_CHANGE {
                    converged = true;
                    break;
                }
            }
        }
    }

    let mut result = extract_clusters(&u, graph, delta);
    result.iterations = iterations;
    result.converged = converged;
    result.objective = trace.last().map_or(0.0, |t| t.objective);
    debug!("rcc: {} clusters after {iterations} iterations", result.n_clusters);
    Ok((RccState { u, line, mu, lambda, delta, objective_trace: trace }, result))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::graph::{assign_edge_weights, mutual_knn_graph, WeightScheme};

    #[test]
    fn geman_mcclure_values() {
        assert_eq!(geman_mcclure(0.0, 3.0), 0.0);
        assert!(geman_mcclure(1e6, 1.0) >= 0.999999);
        assert_eq!(geman_mcclure(2.0, 4.0), 2.0);
        assert_eq!(geman_mcclure(-1.5, 2.0), geman_mcclure(1.5, 2.0));
        assert_eq!(geman_mcclure(f64::MAX, 2.0), 2.0);
    }

    #[test]
    fn line_process_values() {
        assert_eq!(optimal_line_process(0.0, 2.0), 1.0);
        assert!(optimal_line_process(1e12, 1.0) > 0.0);
        assert!(optimal_line_process(1e12, 1.0) < 1e-40);
        assert!((optimal_line_process(2.0, 4.0) - 0.25).abs() < 1e-15);
    }

    #[test]
    fn lifted_objective_hand_example() {
        let x = DataMatrix::from_rows(&[[0.0], [2.0]]).unwrap();
        let u = DataMatrix::from_rows(&[[0.5], [1.5]]).unwrap();
        let g = NeighborGraph::from_pairs(2, [(0, 1)]);
        let c = lifted_objective(&x, &u, &g, &[0.25], 1.0, 1.0).unwrap();
        assert!((c - 0.5).abs() < 1e-15);
    }

    #[test]
    fn lifted_objective_special_cases() {
        let x = DataMatrix::from_rows(&[[0.0, 1.0], [2.0, 0.0], [1.0, 1.0]]).unwrap();
        let g = assign_edge_weights(NeighborGraph::from_pairs(3, [(0, 1), (1, 2)]), WeightScheme::DegreeBalanced).unwrap();
        let expect: f64 = g.edges().iter().map(|e| e.weight * sq_dist(x.row(e.p), x.row(e.q))).sum::<f64>() * 0.7 / 2.0;
        let c = lifted_objective(&x, &x, &g, &[1.0, 1.0], 5.0, 0.7).unwrap();
        assert!((c - expect).abs() < 1e-12);

        let empty = NeighborGraph::from_pairs(3, []);
        let u = DataMatrix::from_rows(&[[0.0, 0.0], [2.0, 0.0], [1.0, 3.0]]).unwrap();
        assert!((lifted_objective(&x, &u, &empty, &[], 1.0, 1.0).unwrap() - 2.5).abs() < 1e-15);
        assert!(matches!(lifted_objective(&x, &u, &g, &[1.0], 1.0, 1.0), Err(RccError::Shape(_))));
    }

    #[test]
    fn update_closed_form_and_identity() {
        let x = DataMatrix::from_rows(&[[0.0], [3.0]]).unwrap();
        let g = NeighborGraph::from_pairs(2, [(0, 1)]);
        let u = update_representatives(&x, &g, &[1.0], 1.0, 1e-12).unwrap();
        assert!((u.get(0, 0) - 1.0).abs() < 1e-10 && (u.get(1, 0) - 2.0).abs() < 1e-10);
        let id = update_representatives(&x, &g, &[1.0], 0.0, 1e-6).unwrap();
        assert_eq!(id, x);
    }

    #[test]
    fn large_lambda_collapses_to_mean() {
        let x = DataMatrix::from_rows(&[[0.0, 1.0], [2.0, 5.0], [4.0, -1.0], [1.0, 1.0]]).unwrap();
        let g = NeighborGraph::from_pairs(4, [(0, 1), (1, 2), (2, 3)]);
        let u = update_representatives(&x, &g, &[1.0; 3], 1e7, 1e-9).unwrap();
        let mean = x.mean_row();
        for r in u.iter_rows() {
            assert!(sq_dist(r, &mean).sqrt() < 1e-3);
        }
    }

    #[test]
    fn extract_clusters_cases() {
        let g = NeighborGraph::from_pairs(5, [(0, 1), (1, 2), (3, 4)]);
        let same = DataMatrix::from_rows(&[[1.0]; 5]).unwrap();
        assert_eq!(extract_clusters(&same, &g, 0.1).labels, [0, 0, 0, 1, 1]);

        let spread = DataMatrix::from_rows(&[[0.0], [1.0], [2.0], [3.0], [4.0]]).unwrap();
        let r = extract_clusters(&spread, &g, 0.5);
        assert_eq!(r.n_clusters, 5);
        assert_eq!(r.labels, [0, 1, 2, 3, 4]);

        let delta = 0.1;
        let two = DataMatrix::from_rows(&[[0.0], [0.001], [10.0], [10.001], [0.002]]).unwrap();
        let g2 = NeighborGraph::from_pairs(5, [(0, 1), (1, 4), (2, 3), (0, 2)]);
        let r = extract_clusters(&two, &g2, delta);
        assert_eq!(r.labels, [0, 0, 1, 1, 0]);
    }

    #[test]
    fn identical_rows_form_one_cluster() {
        let x = DataMatrix::from_rows(&[[0.5, 0.5]; 50]).unwrap();
        let g = assign_edge_weights(mutual_knn_graph(&x, 5).unwrap(), WeightScheme::DegreeBalanced).unwrap();
        let (_, r) = rcc_fit(&x, &g, &RccConfig::default()).unwrap();
        assert_eq!(r.n_clusters, 1);
    }

    #[test]
    fn empty_graph_gives_singletons() {
        let x = DataMatrix::from_rows(&[[0.0], [1.0], [5.0]]).unwrap();
        let g = NeighborGraph::from_pairs(3, []);
        let (_, r) = rcc_fit(&x, &g, &RccConfig::default()).unwrap();
        assert_eq!(r.labels, [0, 1, 2]);
    }

    #[test]
    fn config_validation() {
        let bad = RccConfig { inner_iters_per_mu: 0, ..RccConfig::default() };
        assert!(bad.validate().is_err());
        let bad = RccConfig { linear_solver_tolerance: 0.0, ..RccConfig::default() };
        assert!(bad.validate().is_err());
        let bad = RccConfig { lambda_scale: -1.0, ..RccConfig::default() };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn balance_weight_ignores_shift_and_scale() {
        let rows: Vec<[f64; 2]> = (0..30).map(|i| [(i as f64 * 0.7).sin() * 3.0, (i as f64 * 1.3).cos() + i as f64 * 0.1]).collect();
        let x = DataMatrix::from_rows(&rows).unwrap();
        let moved: Vec<[f64; 2]> = rows.iter().map(|r| [r[0] * 250.0 + 1e3, r[1] * 250.0 - 7.0]).collect();
        let y = DataMatrix::from_rows(&moved).unwrap();
        let g = assign_edge_weights(mutual_knn_graph(&x, 5).unwrap(), WeightScheme::DegreeBalanced).unwrap();
        let (a, b) = (balance_weight(&x, &g), balance_weight(&y, &g));
        assert!((a - b).abs() < 1e-6 * a, "{a} vs {b}");
    }
}

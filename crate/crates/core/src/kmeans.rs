//! k-means with D²-weighted (k-means++) seeding and Lloyd refinement.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;
use thiserror::Error;

use crate::clustering::ClusteringResult;
use crate::dataset::{sq_dist, DataMatrix};

#[derive(Debug, Error)]
pub enum KmeansError {
    #[error("k = {k} out of range 1..={n}")]
    KOutOfRange { k: usize, n: usize },
    #[error("n_init must be at least 1")]
    NoRestarts,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KmeansConfig {
    pub k: usize,
    pub n_init: usize,
    pub max_iters: usize,
    pub seed: u64,
}

impl KmeansConfig {
    pub fn new(k: usize, seed: u64) -> Self {
        Self { k, n_init: 10, max_iters: 300, seed }
    }
}

/// Centers as a `k x D` row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Centers {
    pub k: usize,
    pub dim: usize,
    pub values: Vec<f64>,
}

impl Centers {
    pub fn row(&self, c: usize) -> &[f64] {
        &self.values[c * self.dim..(c + 1) * self.dim]
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RestartReport {
    pub restart: usize,
    pub seed: u64,
    pub iterations: usize,
    pub converged: bool,
    pub inertia: f64,
    /// Lloyd inertia after every assignment step.
    pub inertia_trace: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct KmeansReport {
    pub best_restart: usize,
    pub restarts: Vec<RestartReport>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct KmeansFit {
    pub result: ClusteringResult,
    pub centers: Centers,
    pub report: KmeansReport,
}

/// k-means++ seeding: the first center is a uniformly random row, each later
/// center is drawn with probability proportional to its squared distance to
/// the nearest chosen center. When every remaining distance is zero, the next
/// center is drawn uniformly from rows not yet chosen.
pub fn kmeanspp_seed<R: Rng + ?Sized>(x: &DataMatrix, k: usize, rng: &mut R) -> Result<Centers, KmeansError> {
    let n = x.rows();
    if k == 0 || k > n {
        return Err(KmeansError::KOutOfRange { k, n });
    }
    let mut chosen = Vec::with_capacity(k);
    let first = rng.random_range(0..n);
    chosen.push(first);
    let mut nearest: Vec<f64> = x.iter_rows().map(|r| sq_dist(r, x.row(first))).collect();
    while chosen.len() < k {
        let total: f64 = nearest.iter().sum();
        let next = if total > 0.0 {
            let target = rng.random::<f64>() * total;
            let mut acc = 0.0;
            let mut pick = None;
            for (i, &d) in nearest.iter().enumerate() {
                if d == 0.0 {
                    continue;
                }
                acc += d;
                pick = Some(i);
                if acc > target {
                    break;
                }
            }
            pick.expect("positive total has a positive entry")
        } else {
            let free: Vec<usize> = (0..n).filter(|i| !chosen.contains(i)).collect();
            free[rng.random_range(0..free.len())]
        };
        chosen.push(next);
        for (d, r) in nearest.iter_mut().zip(x.iter_rows()) {
            *d = d.min(sq_dist(r, x.row(next)));
        }
    }
    let dim = x.cols();
    let values = chosen.iter().flat_map(|&i| x.row(i).iter().copied()).collect();
    Ok(Centers { k, dim, values })
}

/// Nearest center and squared distance; ties go to the lower center index.
fn nearest_center(point: &[f64], centers: &Centers) -> (usize, f64) {
    let mut best = (0, f64::INFINITY);
    for c in 0..centers.k {
        let d = sq_dist(point, centers.row(c));
        if d < best.1 {
            best = (c, d);
        }
    }
    best
}

fn assign(x: &DataMatrix, centers: &Centers) -> Vec<(usize, f64)> {
    (0..x.rows()).into_par_iter().map(|i| nearest_center(x.row(i), centers)).collect()
}

fn update_centers(x: &DataMatrix, labels: &[usize], dists: &mut [f64], centers: &mut Centers) {
    let (k, dim) = (centers.k, centers.dim);
    let mut sums = vec![0.0; k * dim];
    let mut counts = vec![0usize; k];
    for (r, &l) in x.iter_rows().zip(labels) {
        counts[l] += 1;
        for (s, v) in sums[l * dim..(l + 1) * dim].iter_mut().zip(r) {
            *s += v;
        }
    }
    for c in 0..k {
        if counts[c] > 0 {
            let inv = counts[c] as f64;
            for (dst, s) in centers.values[c * dim..(c + 1) * dim].iter_mut().zip(&sums[c * dim..(c + 1) * dim]) {
                *dst = s / inv;
            }
        } else {
            // empty cluster: reseed at the point farthest from its own center
            let far = dists
                .iter()
                .enumerate()
                .fold((0, f64::NEG_INFINITY), |best, (i, &d)| if d > best.1 { (i, d) } else { best })
                .0;
            centers.values[c * dim..(c + 1) * dim].copy_from_slice(x.row(far));
            dists[far] = 0.0;
        }
    }
}

fn lloyd(x: &DataMatrix, mut centers: Centers, max_iters: usize) -> (Vec<usize>, Centers, RestartReport) {
    let mut labels: Vec<usize> = Vec::new();
    let mut trace = Vec::new();
    let mut converged = false;
    let mut iterations = 0;
    while iterations < max_iters {
        let assigned = assign(x, &centers);
        let new_labels: Vec<usize> = assigned.iter().map(|a| a.0).collect();
        let mut dists: Vec<f64> = assigned.iter().map(|a| a.1).collect();
        trace.push(dists.iter().sum());
        iterations += 1;
        if new_labels == labels {
            converged = true;
            break;
        }
        labels = new_labels;
        update_centers(x, &labels, &mut dists, &mut centers);
    }
    if !converged {
        // final assignment against the last centers
        let assigned = assign(x, &centers);
        labels = assigned.iter().map(|a| a.0).collect();
        trace.push(assigned.iter().map(|a| a.1).sum());
    }
    let inertia = *trace.last().unwrap_or(&0.0);
    let report = RestartReport { restart: 0, seed: 0, iterations, converged, inertia, inertia_trace: trace };
    (labels, centers, report)
}

/// Best of `n_init` seeded Lloyd runs by inertia. Restart `r` uses seed
/// `cfg.seed + r`; inertia ties keep the earliest restart.
pub fn kmeans_fit(x: &DataMatrix, cfg: &KmeansConfig) -> Result<KmeansFit, KmeansError> {
    let n = x.rows();
    if cfg.k == 0 || cfg.k > n {
        return Err(KmeansError::KOutOfRange { k: cfg.k, n });
    }
    if cfg.n_init == 0 {
        return Err(KmeansError::NoRestarts);
    }
    let runs: Vec<(Vec<usize>, Centers, RestartReport)> = (0..cfg.n_init)
        .map(|r| {
            let seed = cfg.seed.wrapping_add(r as u64);
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let init = kmeanspp_seed(x, cfg.k, &mut rng).expect("k validated");
            let (labels, centers, mut report) = lloyd(x, init, cfg.max_iters.max(1));
            report.restart = r;
            report.seed = seed;
            (labels, centers, report)
        })
        .collect();

    let best = runs
        .iter()
        .enumerate()
        .fold(0, |best, (i, run)| if run.2.inertia < runs[best].2.inertia { i } else { best });
    let restarts = runs.iter().map(|r| r.2.clone()).collect();
    let (labels, centers, report) = runs.into_iter().nth(best).expect("at least one restart");
    let result = ClusteringResult {
        labels,
        n_clusters: cfg.k,
        iterations: report.iterations,
        converged: report.converged,
        objective: report.inertia,
    };
    Ok(KmeansFit { result, centers, report: KmeansReport { best_restart: best, restarts } })
}

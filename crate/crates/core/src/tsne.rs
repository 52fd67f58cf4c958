//! Exact t-SNE with perplexity-calibrated Gaussian affinities.

use std::path::Path;

use log::warn;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use thiserror::Error;

use crate::dataset::{format_f64, sq_dist, write_text, DataMatrix, DatasetError};

const PERPLEXITY_TOL: f64 = 1e-5;
const BISECTION_ITERS: usize = 50;
const BRACKET_ITERS: usize = 200;
const P_FLOOR: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum TsneError {
    #[error("t-SNE needs at least {min} points, got {got}")]
    TooFewPoints { min: usize, got: usize },
    #[error("perplexity {perplexity} must be positive and below N = {n}")]
    BadPerplexity { perplexity: f64, n: usize },
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("q is zero where p = {p} is positive (entry {i},{j})")]
    ZeroQ { i: usize, j: usize, p: f64 },
    #[error("distribution shapes differ: {0} vs {1}")]
    Shape(usize, usize),
    #[error(transparent)]
    Data(#[from] DatasetError),
}

#[derive(Debug, Clone, PartialEq)]
pub struct TsneConfig {
    pub perplexity: f64,
    pub n_iters: usize,
    pub learning_rate: f64,
    pub exaggeration: f64,
    pub exaggeration_iters: usize,
    pub initial_momentum: f64,
    pub final_momentum: f64,
    pub momentum_switch_iter: usize,
    pub init_scale: f64,
    pub seed: u64,
}

impl Default for TsneConfig {
    fn default() -> Self {
        Self {
            perplexity: 30.0,
            n_iters: 1000,
            learning_rate: 200.0,
            exaggeration: 4.0,
            exaggeration_iters: 100,
            initial_momentum: 0.5,
            final_momentum: 0.8,
            momentum_switch_iter: 250,
            init_scale: 1e-4,
            seed: 0,
        }
    }
}

impl TsneConfig {
    fn validate(&self, n: usize) -> Result<(), TsneError> {
        if !(self.perplexity > 0.0) || self.perplexity >= n as f64 {
            return Err(TsneError::BadPerplexity { perplexity: self.perplexity, n });
        }
        let positive = [self.learning_rate, self.exaggeration, self.init_scale];
        if positive.iter().any(|v| !(*v > 0.0)) || self.n_iters == 0 {
            return Err(TsneError::Config("learning rate, exaggeration, init scale and iterations must be positive".into()));
        }
        Ok(())
    }
}

/// Result of calibrating one row of conditional affinities.
#[derive(Debug, Clone, PartialEq)]
pub struct ConditionalRow {
    /// Gaussian bandwidth; infinite when the row is uniform by degeneracy.
    pub sigma: f64,
    /// `p_{j|i}` for every other point, summing to 1.
    pub probs: Vec<f64>,
    /// `2^H` of the returned row, H in bits.
    pub perplexity: f64,
}

/// Row probabilities `exp(-beta d) / sum` and their Shannon entropy in nats.
fn gaussian_row(sq_dists: &[f64], beta: f64, d_min: f64) -> (Vec<f64>, f64) {
    let mut p: Vec<f64> = sq_dists.iter().map(|&d| (-beta * (d - d_min)).exp()).collect();
    let sum: f64 = p.iter().sum();
    let mean_d: f64 = p.iter().zip(sq_dists).map(|(pi, &d)| pi * (d - d_min)).sum::<f64>() / sum;
    p.iter_mut().for_each(|v| *v /= sum);
    (p, sum.ln() + beta * mean_d)
}

/// Find the bandwidth whose conditional distribution has the target
/// perplexity. `sq_dists` holds squared distances to the other points (the
/// point itself excluded).
///
/// Bisection runs on `ln(beta)`, `beta = 1 / (2 sigma^2)`: the bracket is first
/// grown geometrically, then halved until the log2-perplexity error drops
/// below 1e-5 or 50 halvings have been spent.
pub fn perplexity_search(sq_dists: &[f64], target: f64) -> Result<ConditionalRow, TsneError> {
    let m = sq_dists.len();
    if m < 1 {
        return Err(TsneError::TooFewPoints { min: 2, got: m + 1 });
    }
    if !(target > 0.0) || target > m as f64 {
        return Err(TsneError::BadPerplexity { perplexity: target, n: m + 1 });
    }
    let d_min = sq_dists.iter().copied().fold(f64::INFINITY, f64::min);
    let d_max = sq_dists.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if d_max == d_min {
        if d_max == 0.0 && m > 1 {
            warn!("all distances are zero; using a uniform conditional row");
        }
        return Ok(ConditionalRow { sigma: f64::INFINITY, probs: vec![1.0 / m as f64; m], perplexity: m as f64 });
    }

    let target_h = target.ln(); // entropy in nats for the target perplexity
    let tol_nats = PERPLEXITY_TOL * std::f64::consts::LN_2;
    let spread = d_max - d_min;
    let mut log_beta = (1.0 / spread).ln();
    let eval = |lb: f64| gaussian_row(sq_dists, lb.exp(), d_min);

    let (mut probs, mut h) = eval(log_beta);
    let (mut lo, mut hi) = (f64::NEG_INFINITY, f64::INFINITY);
    // entropy decreases as beta grows
    for _ in 0..BRACKET_ITERS {
        if (h - target_h).abs() < tol_nats {
            break;
        }
        if h > target_h {
            lo = log_beta;
        } else {
            hi = log_beta;
        }
        if lo.is_finite() && hi.is_finite() {
            break;
        }
        log_beta += if h > target_h { 1.0 } else { -1.0 };
        (probs, h) = eval(log_beta);
    }
    if lo.is_finite() && hi.is_finite() {
        for _ in 0..BISECTION_ITERS {
            if (h - target_h).abs() < tol_nats {
                break;
            }
            log_beta = 0.5 * (lo + hi);
            (probs, h) = eval(log_beta);
            if h > target_h {
                lo = log_beta;
            } else {
                hi = log_beta;
            }
        }
    }
    let sigma = (0.5 / log_beta.exp()).sqrt();
    Ok(ConditionalRow { sigma, probs, perplexity: h.exp() })
}

/// Symmetric joint affinities `P`, zero diagonal, summing to 1.
#[derive(Debug, Clone, PartialEq)]
pub struct AffinityMatrix {
    n: usize,
    values: Vec<f64>,
}

impl AffinityMatrix {
    pub fn n(&self) -> usize {
        self.n
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.n + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }
}

/// Calibrated conditionals, symmetrized as `(p_{j|i} + p_{i|j}) / 2N`.
/// Off-diagonal entries are floored at 1e-12 and the matrix renormalized.
pub fn build_affinities(x: &DataMatrix, perplexity: f64) -> Result<AffinityMatrix, TsneError> {
    let n = x.rows();
    if n < 3 {
        return Err(TsneError::TooFewPoints { min: 3, got: n });
    }
    if !(perplexity > 0.0) || perplexity >= n as f64 {
        return Err(TsneError::BadPerplexity { perplexity, n });
    }
    let rows: Vec<Vec<f64>> = (0..n)
        .into_par_iter()
        .map(|i| {
            let d: Vec<f64> = (0..n).filter(|&j| j != i).map(|j| sq_dist(x.row(i), x.row(j))).collect();
            perplexity_search(&d, perplexity).map(|r| r.probs)
        })
        .collect::<Result<_, _>>()?;
    let mut cond = vec![0.0; n * n];
    for (i, row) in rows.iter().enumerate() {
        for (slot, &p) in (0..n).filter(|&j| j != i).zip(row) {
            cond[i * n + slot] = p;
        }
    }
    let mut values = vec![0.0; n * n];
    let scale = 1.0 / (2.0 * n as f64);
    for i in 0..n {
        for j in 0..n {
            if i != j {
                values[i * n + j] = ((cond[i * n + j] + cond[j * n + i]) * scale).max(P_FLOOR);
            }
        }
    }
    let total: f64 = values.iter().sum();
    values.iter_mut().for_each(|v| *v /= total);
    Ok(AffinityMatrix { n, values })
}

/// `sum p log(p / q)` in nats over matching entries, with `0 log 0 = 0`.
pub fn kl_divergence(p: &[f64], q: &[f64]) -> Result<f64, TsneError> {
    if p.len() != q.len() {
        return Err(TsneError::Shape(p.len(), q.len()));
    }
    let mut kl = 0.0;
    for (idx, (&pi, &qi)) in p.iter().zip(q).enumerate() {
        if pi > 0.0 {
            if qi <= 0.0 {
                let n = (p.len() as f64).sqrt() as usize;
                let (i, j) = if n * n == p.len() { (idx / n, idx % n) } else { (idx, 0) };
                return Err(TsneError::ZeroQ { i, j, p: pi });
            }
            kl += pi * (pi / qi).ln();
        }
    }
    Ok(kl)
}

/// N x 2 embedding, one row per input sample.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding2D {
    pub points: Vec<[f64; 2]>,
}

impl Embedding2D {
    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn write_csv(&self, path: &Path) -> Result<(), TsneError> {
        let mut s = String::from("x,y\n");
        for p in &self.points {
            s.push_str(&format!("{},{}\n", format_f64(p[0]), format_f64(p[1])));
        }
        Ok(write_text(path, &s)?)
    }

    pub fn read_csv(path: &Path) -> Result<Self, TsneError> {
        let m = crate::dataset::read_matrix_csv(path)?;
        if m.cols() != 2 {
            return Err(TsneError::Shape(m.cols(), 2));
        }
        Ok(Self { points: m.iter_rows().map(|r| [r[0], r[1]]).collect() })
    }
}

/// Student-t joint distribution `Q` of a 2-D layout (row-major, zero
/// diagonal) together with the unnormalized kernel `(1 + d^2)^-1`.
pub fn student_t_affinities(y: &[[f64; 2]]) -> (Vec<f64>, Vec<f64>) {
    let n = y.len();
    let mut kernel = vec![0.0; n * n];
    for i in 0..n {
        for j in (i + 1)..n {
            let dx = y[i][0] - y[j][0];
            let dy = y[i][1] - y[j][1];
            let k = 1.0 / (1.0 + dx * dx + dy * dy);
            kernel[i * n + j] = k;
            kernel[j * n + i] = k;
        }
    }
    let z: f64 = kernel.iter().sum();
    let q = kernel.iter().map(|k| k / z).collect();
    (q, kernel)
}

/// KL(P || Q(y)) and its gradient
/// `4 sum_j (p_ij - q_ij)(y_i - y_j) / (1 + |y_i - y_j|^2)`.
/// `p_scale` multiplies `P` in the gradient only (early exaggeration); the
/// returned KL always uses the unscaled `P`.
pub fn kl_gradient(p: &AffinityMatrix, y: &[[f64; 2]], p_scale: f64) -> (f64, Vec<[f64; 2]>) {
    let n = y.len();
    let (q, kernel) = student_t_affinities(y);
    let grad: Vec<[f64; 2]> = (0..n)
        .into_par_iter()
        .map(|i| {
            let mut g = [0.0; 2];
            for j in 0..n {
                if j == i {
                    continue;
                }
                let m = 4.0 * (p_scale * p.get(i, j) - q[i * n + j]) * kernel[i * n + j];
                g[0] += m * (y[i][0] - y[j][0]);
                g[1] += m * (y[i][1] - y[j][1]);
            }
            g
        })
        .collect();
    let kl = p.values.iter().zip(&q).filter(|(pi, _)| **pi > 0.0).map(|(pi, qi)| pi * (pi / qi).ln()).sum();
    (kl, grad)
}

/// Output of [`tsne_embed`].
#[derive(Debug, Clone, PartialEq)]
pub struct TsneRun {
    pub embedding: Embedding2D,
    pub kl: f64,
    /// KL(P || Q) (unexaggerated) at the start of every iteration.
    pub kl_trace: Vec<f64>,
}

/// Embed rows of `x` in 2-D by gradient descent with momentum, per-coordinate
/// adaptive gains and early exaggeration. The layout is re-centered after
/// every step.
pub fn tsne_embed(x: &DataMatrix, cfg: &TsneConfig) -> Result<TsneRun, TsneError> {
    let n = x.rows();
    if n < 3 {
        return Err(TsneError::TooFewPoints { min: 3, got: n });
    }
    cfg.validate(n)?;
    let p = build_affinities(x, cfg.perplexity)?;

    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);
    let normal = Normal::new(0.0, cfg.init_scale).expect("init scale validated");
    let mut y: Vec<[f64; 2]> = (0..n).map(|_| [normal.sample(&mut rng), normal.sample(&mut rng)]).collect();
    let mut velocity = vec![[0.0; 2]; n];
    let mut gains = vec![[1.0; 2]; n];
    let mut kl_trace = Vec::with_capacity(cfg.n_iters);

    for iter in 0..cfg.n_iters {
        let scale = if iter < cfg.exaggeration_iters { cfg.exaggeration } else { 1.0 };
        let (kl, grad) = kl_gradient(&p, &y, scale);
        kl_trace.push(kl);
        let momentum = if iter < cfg.momentum_switch_iter { cfg.initial_momentum } else { cfg.final_momentum };
        for i in 0..n {
            for d in 0..2 {
                let same_sign = (grad[i][d] > 0.0) == (velocity[i][d] > 0.0);
                gains[i][d] = if same_sign { (gains[i][d] * 0.8f64).max(0.01) } else { gains[i][d] + 0.2 };
                velocity[i][d] = momentum * velocity[i][d] - cfg.learning_rate * gains[i][d] * grad[i][d];
                y[i][d] += velocity[i][d];
            }
        }
        let mean = y.iter().fold([0.0; 2], |a, p| [a[0] + p[0], a[1] + p[1]]);
        let mean = [mean[0] / n as f64, mean[1] / n as f64];
        y.iter_mut().for_each(|p| {
            p[0] -= mean[0];
            p[1] -= mean[1];
        });
    }
    let (kl, _) = kl_gradient(&p, &y, 1.0);
    Ok(TsneRun { embedding: Embedding2D { points: y }, kl, kl_trace })
}

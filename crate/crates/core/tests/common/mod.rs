//! Independent reference implementations used as test oracles. Nothing here
//! calls into the library's numerical code.

#![allow(dead_code)]

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rcclust::DataMatrix;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Rows of i.i.d. uniform values in `[-1, 1)`.
pub fn uniform_matrix(n: usize, d: usize, seed: u64) -> DataMatrix {
    let mut r = rng(seed);
    DataMatrix::new(n, d, (0..n * d).map(|_| r.random_range(-1.0..1.0)).collect()).unwrap()
}

/// Rows of i.i.d. standard normals (Box-Muller, independent of rand_distr).
pub fn normal_matrix(n: usize, d: usize, seed: u64) -> DataMatrix {
    let mut r = rng(seed);
    let vals = (0..n * d)
        .map(|_| {
            let u1: f64 = r.random_range(f64::EPSILON..1.0);
            let u2: f64 = r.random();
            (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
        })
        .collect();
    DataMatrix::new(n, d, vals).unwrap()
}

fn dist2(a: &[f64], b: &[f64]) -> f64 {
    let mut s = 0.0;
    for k in 0..a.len() {
        let t = a[k] - b[k];
        s += t * t;
    }
    s
}

/// Mutual kNN by exhaustive sort of every row's distances, ties to the
/// smaller index. Returns sorted `(p, q)` pairs with `p < q`.
pub fn brute_force_mutual_knn(x: &DataMatrix, k: usize) -> Vec<(usize, usize)> {
    let n = x.rows();
    let knn: Vec<Vec<usize>> = (0..n)
        .map(|i| {
            let mut all: Vec<(f64, usize)> = (0..n).filter(|&j| j != i).map(|j| (dist2(x.row(i), x.row(j)), j)).collect();
            all.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap().then(a.1.cmp(&b.1)));
            all.into_iter().take(k).map(|(_, j)| j).collect()
        })
        .collect();
    let mut pairs = Vec::new();
    for p in 0..n {
        for q in (p + 1)..n {
            if knn[p].contains(&q) && knn[q].contains(&p) {
                pairs.push((p, q));
            }
        }
    }
    pairs
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations, descending.
pub fn jacobi_eigenvalues(mut a: Vec<f64>, n: usize) -> Vec<f64> {
    for _sweep in 0..100 {
        let mut off = 0.0;
        for p in 0..n {
            for q in (p + 1)..n {
                off += a[p * n + q] * a[p * n + q];
            }
        }
        if off < 1e-30 {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[p * n + q];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let theta = (a[q * n + q] - a[p * n + p]) / (2.0 * apq);
                let t = theta.signum() / (theta.abs() + (theta * theta + 1.0).sqrt());
                let t = if theta == 0.0 { 1.0 } else { t };
                let c = 1.0 / (t * t + 1.0).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[k * n + p];
                    let akq = a[k * n + q];
                    a[k * n + p] = c * akp - s * akq;
                    a[k * n + q] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[p * n + k];
                    let aqk = a[q * n + k];
                    a[p * n + k] = c * apk - s * aqk;
                    a[q * n + k] = s * apk + c * aqk;
                }
            }
        }
    }
    let mut ev: Vec<f64> = (0..n).map(|i| a[i * n + i]).collect();
    ev.sort_by(|a, b| b.partial_cmp(a).unwrap());
    ev
}

/// Sample covariance (divisor N - 1) of the columns of `x`, row-major D x D.
pub fn covariance(x: &DataMatrix) -> Vec<f64> {
    let (n, d) = (x.rows(), x.cols());
    let mut mean = vec![0.0; d];
    for i in 0..n {
        for j in 0..d {
            mean[j] += x.get(i, j) / n as f64;
        }
    }
    let mut c = vec![0.0; d * d];
    for i in 0..n {
        for a in 0..d {
            let da = x.get(i, a) - mean[a];
            for b in a..d {
                c[a * d + b] += da * (x.get(i, b) - mean[b]);
            }
        }
    }
    for a in 0..d {
        for b in a..d {
            let v = c[a * d + b] / (n - 1) as f64;
            c[a * d + b] = v;
            c[b * d + a] = v;
        }
    }
    c
}

/// Mean silhouette coefficient of a 2-D layout.
pub fn silhouette(points: &[[f64; 2]], labels: &[usize]) -> f64 {
    let n = points.len();
    let k = labels.iter().max().unwrap() + 1;
    let mut total = 0.0;
    for i in 0..n {
        let mut sum = vec![0.0; k];
        let mut cnt = vec![0usize; k];
        for j in 0..n {
            if i != j {
                let d = ((points[i][0] - points[j][0]).powi(2) + (points[i][1] - points[j][1]).powi(2)).sqrt();
                sum[labels[j]] += d;
                cnt[labels[j]] += 1;
            }
        }
        let own = labels[i];
        if cnt[own] == 0 {
            continue;
        }
        let a = sum[own] / cnt[own] as f64;
        let b = (0..k).filter(|&c| c != own && cnt[c] > 0).map(|c| sum[c] / cnt[c] as f64).fold(f64::INFINITY, f64::min);
        total += (b - a) / a.max(b);
    }
    total / n as f64
}

/// Natural-log mutual information straight from label pairs.
pub fn naive_mi(a: &[usize], b: &[usize]) -> f64 {
    let n = a.len() as f64;
    let mut joint: HashMap<(usize, usize), f64> = HashMap::new();
    let mut ca: HashMap<usize, f64> = HashMap::new();
    let mut cb: HashMap<usize, f64> = HashMap::new();
    for (&x, &y) in a.iter().zip(b) {
        *joint.entry((x, y)).or_default() += 1.0;
        *ca.entry(x).or_default() += 1.0;
        *cb.entry(y).or_default() += 1.0;
    }
    joint.iter().map(|(&(x, y), &c)| (c / n) * (c * n / (ca[&x] * cb[&y])).ln()).sum()
}

/// Two labelings realizing a contingency table.
pub fn labels_from_table(table: &[Vec<u64>]) -> (Vec<usize>, Vec<usize>) {
    let (mut a, mut b) = (Vec::new(), Vec::new());
    for (i, row) in table.iter().enumerate() {
        for (j, &c) in row.iter().enumerate() {
            for _ in 0..c {
                a.push(i);
                b.push(j);
            }
        }
    }
    (a, b)
}

/// Exact KL(P || Q(y)) for a dense row-major `P`.
pub fn naive_kl(p: &[f64], y: &[[f64; 2]]) -> f64 {
    let n = y.len();
    let mut z = 0.0;
    for i in 0..n {
        for j in 0..n {
            if i != j {
                z += 1.0 / (1.0 + (y[i][0] - y[j][0]).powi(2) + (y[i][1] - y[j][1]).powi(2));
            }
        }
    }
    let mut kl = 0.0;
    for i in 0..n {
        for j in 0..n {
            let pij = p[i * n + j];
            if i != j && pij > 0.0 {
                let q = 1.0 / (1.0 + (y[i][0] - y[j][0]).powi(2) + (y[i][1] - y[j][1]).powi(2)) / z;
                kl += pij * (pij / q).ln();
            }
        }
    }
    kl
}

/// Gaussian bandwidth giving a conditional row of the target perplexity,
/// found by 300 bisection steps directly on `sigma`.
pub fn sigma_oracle(sq_dists: &[f64], target: f64) -> f64 {
    let perplexity = |sigma: f64| {
        let w: Vec<f64> = sq_dists.iter().map(|d| (-d / (2.0 * sigma * sigma)).exp()).collect();
        let z: f64 = w.iter().sum();
        let h: f64 = w.iter().map(|v| v / z).filter(|&p| p > 0.0).map(|p| -p * p.log2()).sum();
        h.exp2()
    };
    let (mut lo, mut hi) = (1e-6f64, 1e6f64);
    for _ in 0..300 {
        let mid = (lo * hi).sqrt();
        if perplexity(mid) < target {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    (lo * hi).sqrt()
}

/// Apply `(I + lambda L) u` for the weighted Laplacian of an edge list.
pub fn shifted_laplacian_apply(edges: &[(usize, usize, f64)], lambda: f64, u: &[f64]) -> Vec<f64> {
    let mut out = u.to_vec();
    for &(p, q, w) in edges {
        let t = lambda * w * (u[p] - u[q]);
        out[p] += t;
        out[q] -= t;
    }
    out
}

/// Total Euclidean length of a minimum spanning tree, by Kruskal's algorithm
/// over all pairs.
pub fn kruskal_mst_length(x: &DataMatrix) -> f64 {
    let n = x.rows();
    let mut pairs: Vec<(f64, usize, usize)> =
        (0..n).flat_map(|p| ((p + 1)..n).map(move |q| (p, q))).map(|(p, q)| (dist2(x.row(p), x.row(q)).sqrt(), p, q)).collect();
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let mut parent: Vec<usize> = (0..n).collect();
    fn root(parent: &mut [usize], mut a: usize) -> usize {
        while parent[a] != a {
            a = parent[a];
        }
        a
    }
    let mut total = 0.0;
    for (d, p, q) in pairs {
        let (rp, rq) = (root(&mut parent, p), root(&mut parent, q));
        if rp != rq {
            parent[rp] = rq;
            total += d;
        }
    }
    total
}

/// Number of connected components of an edge list on `n` vertices.
pub fn component_count(n: usize, edges: &[(usize, usize)]) -> usize {
    let mut adj = vec![Vec::new(); n];
    for &(p, q) in edges {
        adj[p].push(q);
        adj[q].push(p);
    }
    let mut seen = vec![false; n];
    let mut count = 0;
    for s in 0..n {
        if seen[s] {
            continue;
        }
        count += 1;
        let mut stack = vec![s];
        seen[s] = true;
        while let Some(v) = stack.pop() {
            for &w in &adj[v] {
                if !seen[w] {
                    seen[w] = true;
                    stack.push(w);
                }
            }
        }
    }
    count
}

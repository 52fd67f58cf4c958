//! Sparse solves against `I + lambda * L`, where `L` is the weighted graph
//! Laplacian with per-edge coefficients `w * l`.

use rayon::prelude::*;

use crate::graph::NeighborGraph;

/// `I + lambda * L` in edge-list form.
pub(crate) struct ShiftedLaplacian<'a> {
    graph: &'a NeighborGraph,
    coeff: Vec<f64>,
    diag: Vec<f64>,
}

impl<'a> ShiftedLaplacian<'a> {
    pub(crate) fn new(graph: &'a NeighborGraph, line: &[f64], lambda: f64) -> Self {
        let coeff: Vec<f64> = graph.edges().iter().zip(line).map(|(e, l)| lambda * e.weight * l).collect();
        let mut diag = vec![1.0; graph.n_vertices()];
        for (e, c) in graph.edges().iter().zip(&coeff) {
            diag[e.p] += c;
            diag[e.q] += c;
        }
        Self { graph, coeff, diag }
    }

    pub(crate) fn apply(&self, v: &[f64], out: &mut [f64]) {
        out.copy_from_slice(v);
        for (e, c) in self.graph.edges().iter().zip(&self.coeff) {
            let t = c * (v[e.p] - v[e.q]);
            out[e.p] += t;
            out[e.q] -= t;
        }
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

/// Jacobi-preconditioned conjugate gradient from the initial guess in `x`.
/// Returns the achieved relative residual `||b - Ax|| / ||b||`, checked
/// against the true residual rather than the recurrence.
pub(crate) fn pcg(op: &ShiftedLaplacian<'_>, b: &[f64], x: &mut [f64], tol: f64, max_iters: usize) -> f64 {
    let n = b.len();
    let b_norm = norm(b);
    if b_norm == 0.0 {
        x.iter_mut().for_each(|v| *v = 0.0);
        return 0.0;
    }
    let mut r = vec![0.0; n];
    let mut z = vec![0.0; n];
    let mut p = vec![0.0; n];
    let mut ap = vec![0.0; n];
    let mut iters = 0;
    loop {
        op.apply(x, &mut ap);
        for i in 0..n {
            r[i] = b[i] - ap[i];
        }
        let true_rel = norm(&r) / b_norm;
        if true_rel <= tol || iters >= max_iters {
            return true_rel;
        }
        for i in 0..n {
            z[i] = r[i] / op.diag[i];
        }
        p.copy_from_slice(&z);
        let mut rz = dot(&r, &z);
        // aim a little below tol so the true residual passes after drift
        let target = 0.5 * tol * b_norm;
        while iters < max_iters {
            iters += 1;
            op.apply(&p, &mut ap);
            let pap = dot(&p, &ap);
            if pap <= 0.0 {
                break;
            }
            let alpha = rz / pap;
            for i in 0..n {
                x[i] += alpha * p[i];
                r[i] -= alpha * ap[i];
            }
            if norm(&r) <= target {
                break;
            }
            for i in 0..n {
                z[i] = r[i] / op.diag[i];
            }
            let rz_next = dot(&r, &z);
            let beta = rz_next / rz;
            rz = rz_next;
            for i in 0..n {
                p[i] = z[i] + beta * p[i];
            }
        }
    }
}

/// Solve `(I + lambda L) U = X` column by column, warm-started from `u`.
/// Returns the achieved relative Frobenius residual.
pub(crate) fn solve_columns(
    op: &ShiftedLaplacian<'_>,
    x: &[f64],
    u: &mut [f64],
    cols: usize,
    tol: f64,
    max_iters: usize,
) -> f64 {
    let n = op.diag.len();
    let results: Vec<(Vec<f64>, f64, f64)> = (0..cols)
        .into_par_iter()
        .map(|j| {
            let b: Vec<f64> = (0..n).map(|i| x[i * cols + j]).collect();
            let mut col: Vec<f64> = (0..n).map(|i| u[i * cols + j]).collect();
            let rel = pcg(op, &b, &mut col, tol, max_iters);
            let b_sq = dot(&b, &b);
            (col, rel * rel * b_sq, b_sq)
        })
        .collect();
    let (mut res_sq, mut b_sq) = (0.0, 0.0);
    for (j, (col, r, bb)) in results.into_iter().enumerate() {
        for (i, v) in col.into_iter().enumerate() {
            u[i * cols + j] = v;
        }
        res_sq += r;
        b_sq += bb;
    }
    if b_sq == 0.0 {
        0.0
    } else {
        (res_sq / b_sq).sqrt()
    }
}

/// Largest eigenvalue of the (unshifted) weighted Laplacian by power iteration.
pub(crate) fn laplacian_spectral_norm(graph: &NeighborGraph, iters: usize) -> f64 {
    let n = graph.n_vertices();
    let mut v: Vec<f64> = (0..n).map(|i| ((i + 1) as f64).sin()).collect();
    let mut w = vec![0.0; n];
    let mut est = 0.0;
    for _ in 0..iters {
        let nv = norm(&v);
        if nv == 0.0 {
            return 0.0;
        }
        v.iter_mut().for_each(|x| *x /= nv);
        w.iter_mut().for_each(|x| *x = 0.0);
        for e in graph.edges() {
            let t = e.weight * (v[e.p] - v[e.q]);
            w[e.p] += t;
            w[e.q] -= t;
        }
        est = norm(&w);
        std::mem::swap(&mut v, &mut w);
    }
    est
}

/// Largest singular value of a row-major `rows x cols` matrix by power
/// iteration on `X^T X`.
pub(crate) fn matrix_spectral_norm(x: &[f64], rows: usize, cols: usize, iters: usize) -> f64 {
    let mut v: Vec<f64> = (0..cols).map(|j| ((j + 1) as f64).sin() + 1.5).collect();
    let mut xv = vec![0.0; rows];
    let mut est = 0.0;
    for _ in 0..iters {
        let nv = norm(&v);
        if nv == 0.0 {
            return 0.0;
        }
        v.iter_mut().for_each(|t| *t /= nv);
        for (i, out) in xv.iter_mut().enumerate() {
            *out = dot(&x[i * cols..(i + 1) * cols], &v);
        }
        est = norm(&xv);
        v.iter_mut().for_each(|t| *t = 0.0);
        for (i, s) in xv.iter().enumerate() {
            for (t, a) in v.iter_mut().zip(&x[i * cols..(i + 1) * cols]) {
                *t += s * a;
            }
        }
    }
    est
}

//! Principal component analysis through a thin SVD of the centered data.

use std::path::Path;

use nalgebra::DMatrix;
use thiserror::Error;

use crate::dataset::{format_f64, write_text, DataMatrix, DatasetError};

#[derive(Debug, Error)]
pub enum PcaError {
    #[error("k = {k} out of range 1..={max}")]
    KOutOfRange { k: usize, max: usize },
    #[error("PCA needs at least 2 samples, got {0}")]
    TooFewSamples(usize),
    #[error("input has {got} columns but the model was fitted on {expected}")]
    DimensionMismatch { expected: usize, got: usize },
    #[error("singular value decomposition did not converge")]
    SvdFailed,
    #[error(transparent)]
    Data(#[from] DatasetError),
}

/// Fitted projection: `mean` is D-long, `components` holds k orthonormal rows
/// of length D, `explained_variance` is non-increasing.
#[derive(Debug, Clone, PartialEq)]
pub struct PcaModel {
    pub mean: Vec<f64>,
    pub components: Vec<Vec<f64>>,
    pub explained_variance: Vec<f64>,
}

impl PcaModel {
    pub fn n_components(&self) -> usize {
        self.components.len()
    }

    pub fn dim(&self) -> usize {
        self.mean.len()
    }

    /// Map projected coordinates back into the input space.
    pub fn inverse_transform(&self, z: &DataMatrix) -> Result<DataMatrix, PcaError> {
        if z.cols() != self.n_components() {
            return Err(PcaError::DimensionMismatch { expected: self.n_components(), got: z.cols() });
        }
        let mut out = Vec::with_capacity(z.rows() * self.dim());
        for r in z.iter_rows() {
            let mut x = self.mean.clone();
            for (c, comp) in r.iter().zip(&self.components) {
                for (xv, cv) in x.iter_mut().zip(comp) {
                    *xv += c * cv;
                }
            }
            out.extend(x);
        }
        Ok(DataMatrix::new(z.rows(), self.dim(), out)?)
    }

    /// CSV layout: header `kind,c0..`, one `mean` row, one `component<i>` row
    /// per component, and a `variance` row padded with empty cells.
    pub fn write_csv(&self, path: &Path) -> Result<(), PcaError> {
        let d = self.dim();
        let mut s = String::from("kind");
        for j in 0..d {
            s.push_str(&format!(",c{j}"));
        }
        s.push('\n');
        let mut line = |tag: String, vals: &[f64]| {
            s.push_str(&tag);
            for j in 0..d {
                s.push(',');
                if let Some(v) = vals.get(j) {
                    s.push_str(&format_f64(*v));
                }
            }
            s.push('\n');
        };
        line("mean".into(), &self.mean);
        for (i, c) in self.components.iter().enumerate() {
            line(format!("component{i}"), c);
        }
        line("variance".into(), &self.explained_variance);
        Ok(write_text(path, &s)?)
    }
}

/// Fit the top-`k` principal components.
///
/// Components are the leading right singular vectors of the column-centered
/// data, with the sign chosen so the largest-magnitude entry is positive.
/// Explained variance is `sigma^2 / (N - 1)`.
pub fn pca_fit(x: &DataMatrix, k: usize) -> Result<PcaModel, PcaError> {
    let (n, d) = (x.rows(), x.cols());
    if n < 2 {
        return Err(PcaError::TooFewSamples(n));
    }
    let max = n.min(d);
    if k == 0 || k > max {
        return Err(PcaError::KOutOfRange { k, max });
    }
    let mean = x.mean_row();
    let centered = DMatrix::from_fn(n, d, |i, j| x.get(i, j) - mean[j]);
    let svd = centered.svd(false, true);
    let v_t = svd.v_t.ok_or(PcaError::SvdFailed)?;
    let sigma = svd.singular_values;

    let mut order: Vec<usize> = (0..sigma.len()).collect();
    order.sort_by(|&a, &b| sigma[b].total_cmp(&sigma[a]).then(a.cmp(&b)));

    let mut components = Vec::with_capacity(k);
    let mut explained_variance = Vec::with_capacity(k);
    for &idx in order.iter().take(k) {
        let mut comp: Vec<f64> = v_t.row(idx).iter().copied().collect();
        let pivot = comp
            .iter()
            .enumerate()
            .fold((0, 0.0f64), |best, (j, v)| if v.abs() > best.1 { (j, v.abs()) } else { best })
            .0;
        if comp[pivot] < 0.0 {
            comp.iter_mut().for_each(|v| *v = -*v);
        }
        components.push(comp);
        explained_variance.push(sigma[idx] * sigma[idx] / (n - 1) as f64);
    }
    Ok(PcaModel { mean, components, explained_variance })
}

/// Project rows onto the model: `(X - mean) * components^T`.
pub fn pca_transform(model: &PcaModel, x: &DataMatrix) -> Result<DataMatrix, PcaError> {
    if x.cols() != model.dim() {
        return Err(PcaError::DimensionMismatch { expected: model.dim(), got: x.cols() });
    }
    let k = model.n_components();
    let mut out = Vec::with_capacity(x.rows() * k);
    let mut centered = vec![0.0; model.dim()];
    for r in x.iter_rows() {
        for ((c, v), m) in centered.iter_mut().zip(r).zip(&model.mean) {
            *c = v - m;
        }
        out.extend(model.components.iter().map(|comp| comp.iter().zip(&centered).map(|(a, b)| a * b).sum::<f64>()));
    }
    Ok(DataMatrix::new(x.rows(), k, out)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rank_one_line() {
        let x = DataMatrix::from_rows(&[[0.0, 0.0], [1.0, 2.0], [2.0, 4.0], [-1.0, -2.0]]).unwrap();
        let m = pca_fit(&x, 2).unwrap();
        let s5 = 5f64.sqrt();
        assert!((m.components[0][0] - 1.0 / s5).abs() < 1e-12);
        assert!((m.components[0][1] - 2.0 / s5).abs() < 1e-12);
        assert!(m.explained_variance[1].abs() < 1e-12);
    }

    #[test]
    fn mean_rows_project_to_zero() {
        let x = DataMatrix::from_rows(&[[1.0, 2.0, 3.0], [3.0, 2.0, 1.0], [0.0, 5.0, 1.0]]).unwrap();
        let m = pca_fit(&x, 2).unwrap();
        let mean = DataMatrix::from_rows(&[m.mean.clone(), m.mean.clone()]).unwrap();
        let z = pca_transform(&m, &mean).unwrap();
        assert!(z.as_slice().iter().all(|v| v.abs() < 1e-12));
    }

    #[test]
    fn symmetric_pair_projects_to_norm() {
        let a = [3.0, -4.0, 12.0];
        let x = DataMatrix::from_rows(&[a.map(|v| -v), a]).unwrap();
        let m = pca_fit(&x, 1).unwrap();
        let z = pca_transform(&m, &x).unwrap();
        assert!((z.get(0, 0).abs() - 13.0).abs() < 1e-10);
        assert!((z.get(0, 0) + z.get(1, 0)).abs() < 1e-10);
    }

    #[test]
    fn errors() {
        let x = DataMatrix::from_rows(&[[1.0, 2.0], [3.0, 4.0]]).unwrap();
        assert!(matches!(pca_fit(&x, 3), Err(PcaError::KOutOfRange { .. })));
        assert!(matches!(pca_fit(&x, 0), Err(PcaError::KOutOfRange { .. })));
        let one = DataMatrix::from_rows(&[[1.0, 2.0]]).unwrap();
        assert!(matches!(pca_fit(&one, 1), Err(PcaError::TooFewSamples(1))));
        let m = pca_fit(&x, 1).unwrap();
        let wrong = DataMatrix::from_rows(&[[1.0, 2.0, 3.0]]).unwrap();
        assert!(matches!(pca_transform(&m, &wrong), Err(PcaError::DimensionMismatch { .. })));
    }
}

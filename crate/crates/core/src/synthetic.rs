//! Synthetic data with known labels: Gaussian blobs and a small rendered
//! image dataset laid out like a real directory-per-class corpus.

use std::path::Path;

use image::{GrayImage, Luma};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};

use crate::dataset::{DataMatrix, DatasetError, LabelVector};

/// `n_clusters` isotropic Gaussian blobs of `per_cluster` points in `dim`
/// dimensions. Center `c` sits at `separation / sqrt(2)` along axis `c`, so
/// every pair of centers is exactly `separation` apart. Rows are grouped by
/// cluster.
pub fn gaussian_blobs(
    n_clusters: usize,
    per_cluster: usize,
    dim: usize,
    separation: f64,
    sigma: f64,
    seed: u64,
) -> (DataMatrix, LabelVector) {
    assert!(n_clusters >= 1 && n_clusters <= dim, "need one axis per center");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let noise = Normal::new(0.0, sigma).expect("sigma must be finite and non-negative");
    let offset = separation / std::f64::consts::SQRT_2;
    let mut values = Vec::with_capacity(n_clusters * per_cluster * dim);
    let mut labels = Vec::with_capacity(n_clusters * per_cluster);
    for c in 0..n_clusters {
        for _ in 0..per_cluster {
            for j in 0..dim {
                let center = if j == c { offset } else { 0.0 };
                values.push(center + noise.sample(&mut rng));
            }
            labels.push(c);
        }
    }
    let x = DataMatrix::new(n_clusters * per_cluster, dim, values).expect("finite blob data");
    (x, LabelVector::from_indices(labels))
}

/// Class names of the toy image dataset, in directory order.
pub const TOY_CLASSES: [&str; 3] = ["bar", "disc", "ring"];

fn render(class: usize, size: u32, rng: &mut ChaCha8Rng) -> GrayImage {
    let s = size as f64;
    let jitter = Normal::new(0.0, 0.04 * s).expect("valid");
    let (cx, cy) = (0.5 * s + jitter.sample(rng), 0.5 * s + jitter.sample(rng));
    let pixel_noise = Normal::new(0.0, 0.05).expect("valid");
    GrayImage::from_fn(size, size, |x, y| {
        let (dx, dy) = (x as f64 + 0.5 - cx, y as f64 + 0.5 - cy);
        let r = (dx * dx + dy * dy).sqrt() / s;
        let base = match class {
            0 => f64::from(u8::from(dy.abs() < 0.12 * s)) * 0.9,
            1 => f64::from(u8::from(r < 0.25)) * 0.9,
            _ => f64::from(u8::from((0.28..0.4).contains(&r))) * 0.9,
        };
        let v = (0.05 + base + pixel_noise.sample(rng)).clamp(0.0, 1.0);
        Luma([(v * 255.0).round() as u8])
    })
}

/// Write `per_class` PNGs of `size x size` pixels for each of the three toy
/// classes (a horizontal bar, a filled disc and a ring, each with positional
/// jitter and pixel noise) under `root/<class>/img_NNN.png`.
pub fn write_toy_image_dataset(root: &Path, per_class: usize, size: u32, seed: u64) -> Result<(), DatasetError> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    for (class, name) in TOY_CLASSES.iter().enumerate() {
        let dir = root.join(name);
        std::fs::create_dir_all(&dir).map_err(|source| DatasetError::Io { path: dir.clone(), source })?;
        for i in 0..per_class {
            let img = render(class, size, &mut rng);
            let path = dir.join(format!("img_{i:03}.png"));
            img.save(&path).map_err(|e| DatasetError::Undecodable { path: path.clone(), reason: e.to_string() })?;
        }
    }
    Ok(())
}

/// Labels drawn uniformly from `0..classes`.
pub fn random_labels(n: usize, classes: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.random_range(0..classes)).collect()
}

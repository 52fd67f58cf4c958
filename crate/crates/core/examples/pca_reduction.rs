//! Project noisy 50-D data that lives near a 3-D subspace and show how much
//! variance the leading components keep.
//!
//! cargo run --release --example pca_reduction

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rcclust::pca::{pca_fit, pca_transform};
use rcclust::DataMatrix;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (n, d) = (400, 50);
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let basis: Vec<Vec<f64>> = (0..3).map(|_| (0..d).map(|_| rng.random_range(-1.0..1.0)).collect()).collect();
    let mut values = Vec::with_capacity(n * d);
    for _ in 0..n {
        let coef: Vec<f64> = [5.0, 3.0, 1.5].iter().map(|s| s * rng.random_range(-1.0..1.0)).collect();
        for j in 0..d {
            let clean: f64 = coef.iter().zip(&basis).map(|(c, b)| c * b[j]).sum();
            values.push(clean + 0.05 * rng.random_range(-1.0..1.0));
        }
    }
    let x = DataMatrix::new(n, d, values)?;

    let model = pca_fit(&x, 6)?;
    let total: f64 = model.explained_variance.iter().sum();
    println!("component  variance   share");
    for (i, v) in model.explained_variance.iter().enumerate() {
        println!("{i:>9}  {v:>8.4}  {:>6.2}%", 100.0 * v / total);
    }

    let z = pca_transform(&model, &x)?;
    let back = model.inverse_transform(&z)?;
    let err = x.as_slice().iter().zip(back.as_slice()).map(|(a, b)| (a - b).powi(2)).sum::<f64>() / (n * d) as f64;
    println!("projected shape  {} x {}", z.rows(), z.cols());
    println!("reconstruction   mean squared error {err:.2e}");
    Ok(())
}

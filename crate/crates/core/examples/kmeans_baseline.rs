//! k-means++ with restarts on Gaussian blobs, sweeping k.
//!
//! cargo run --release --example kmeans_baseline

use rcclust::kmeans::{kmeans_fit, KmeansConfig};
use rcclust::metrics::ami;
use rcclust::synthetic::gaussian_blobs;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (x, truth) = gaussian_blobs(4, 60, 8, 4.0, 0.8, 2);
    println!("  k    inertia   best restart   AMI");
    for k in 2..=6 {
        let fit = kmeans_fit(&x, &KmeansConfig::new(k, 9))?;
        let best = &fit.report.restarts[fit.report.best_restart];
        println!(
            "{k:>3}  {:>9.2}   {:>12}   {:.4}",
            best.inertia,
            fit.report.best_restart,
            ami(truth.labels(), &fit.result.labels)?
        );
    }
    Ok(())
}

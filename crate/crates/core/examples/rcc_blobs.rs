//! Recover three well-separated Gaussian blobs with RCC and report AMI.
//!
//! cargo run --release --example rcc_blobs

use std::time::Instant;

use rcclust::graph::{assign_edge_weights, augment_with_mst, mutual_knn_graph, WeightScheme, DEFAULT_KNN_K};
use rcclust::metrics::ami;
use rcclust::rcc::{rcc_fit, RccConfig};
use rcclust::synthetic::gaussian_blobs;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let (x, truth) = gaussian_blobs(3, 100, 10, 10.0, 0.1, 7);
    let start = Instant::now();
    let graph = augment_with_mst(mutual_knn_graph(&x, DEFAULT_KNN_K)?, &x)?;
    let graph = assign_edge_weights(graph, WeightScheme::DegreeBalanced)?;
    let (state, result) = rcc_fit(&x, &graph, &RccConfig::default())?;
    println!("edges          {}", graph.n_edges());
    println!("lambda         {:.4}", state.lambda);
    println!("delta          {:.4}", state.delta);
    println!("final mu       {:.4e}", state.mu);
    println!("iterations     {} (converged: {})", result.iterations, result.converged);
    println!("clusters       {}", result.n_clusters);
    println!("AMI            {:.4}", ami(truth.labels(), &result.labels)?);
    println!("elapsed        {:.2?}", start.elapsed());
    Ok(())
}

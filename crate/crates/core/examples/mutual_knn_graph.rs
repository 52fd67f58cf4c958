//! Build a mutual kNN graph on two rings, inspect its degrees and weights,
//! then connect it with a minimum spanning tree.
//!
//! cargo run --release --example mutual_knn_graph

use rcclust::graph::{assign_edge_weights, augment_with_mst, mutual_knn_graph, WeightScheme};
use rcclust::DataMatrix;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mut rows = Vec::new();
    for (radius, count) in [(1.0, 40), (3.0, 80)] {
        for i in 0..count {
            let t = std::f64::consts::TAU * i as f64 / count as f64;
            rows.push([radius * t.cos(), radius * t.sin()]);
        }
    }
    let x = DataMatrix::from_rows(&rows)?;

    for k in [2, 5, 10] {
        let g = assign_edge_weights(mutual_knn_graph(&x, k)?, WeightScheme::DegreeBalanced)?;
        let deg = g.degrees();
        let isolated = deg.iter().filter(|&&d| d == 0).count();
        let cross = g.edges().iter().filter(|e| (e.p < 40) != (e.q < 40)).count();
        let (wmin, wmax) = g.edges().iter().fold((f64::MAX, 0.0f64), |(lo, hi), e| (lo.min(e.weight), hi.max(e.weight)));
        println!(
            "k={k:<3} edges {:>4}  max degree {:>2}  isolated {isolated}  ring-crossing {cross:>3}  weight range [{wmin:.4}, {wmax:.4}]",
            g.n_edges(),
            deg.iter().max().unwrap_or(&0),
        );
    }
    // with k = 2 the rings are separate components; the spanning tree joins them
    let g = augment_with_mst(mutual_knn_graph(&x, 2)?, &x)?;
    let cross = g.edges().iter().filter(|e| (e.p < 40) != (e.q < 40)).count();
    println!("k=2 + MST edges {:>4}  ring-crossing {cross}", g.n_edges());
    Ok(())
}

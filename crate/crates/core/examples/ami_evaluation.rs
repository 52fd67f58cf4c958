//! How AMI treats perfect, relabeled, coarsened, over-split and random
//! partitions, next to raw mutual information.
//!
//! cargo run --release --example ami_evaluation

use rcclust::metrics::ami_score;
use rcclust::synthetic::random_labels;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let truth: Vec<usize> = (0..300).map(|i| i / 100).collect();
    let cases: Vec<(&str, Vec<usize>)> = vec![
        ("identical", truth.clone()),
        ("relabeled", truth.iter().map(|&t| (t + 1) % 3).collect()),
        ("two classes merged", truth.iter().map(|&t| t.min(1)).collect()),
        ("each class split in 5", (0..300).map(|i| i / 20).collect()),
        ("one cluster", vec![0; 300]),
        ("random, 3 clusters", random_labels(300, 3, 1)),
        ("random, 30 clusters", random_labels(300, 30, 2)),
    ];
    println!("{:<24} {:>8} {:>8} {:>8}", "prediction", "MI", "EMI", "AMI");
    for (name, pred) in cases {
        let s = ami_score(&truth, &pred)?;
        println!("{name:<24} {:>8.4} {:>8.4} {:>8.4}", s.mi, s.emi, s.ami);
    }
    Ok(())
}

//! Majority-rule mapping, confusion matrix and per-class sensitivity and
//! specificity for an imperfect clustering of three classes.
//!
//! cargo run --release --example confusion_tables

use rcclust::metrics::{evaluate, macro_average};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let classes: Vec<String> = ["covid", "normal", "viral"].iter().map(|s| s.to_string()).collect();
    // 4 clusters: cluster 3 is a small, mostly "viral" splinter
    let mut truth = Vec::new();
    let mut pred = Vec::new();
    for (t, p, count) in [(0, 0, 40), (0, 1, 5), (1, 1, 45), (1, 2, 8), (2, 2, 30), (2, 3, 10), (2, 0, 2)] {
        truth.extend(std::iter::repeat_n(t, count));
        pred.extend(std::iter::repeat_n(p, count));
    }
    let report = evaluate(&truth, &classes, &pred)?;
    println!("cluster -> class: {:?}", report.mapping);
    println!("\nconfusion (rows = truth)");
    print!("{:>8}", "");
    for c in &classes {
        print!("{c:>8}");
    }
    println!();
    for (c, row) in classes.iter().zip(&report.confusion) {
        print!("{c:>8}");
        for v in row {
            print!("{v:>8}");
        }
        println!();
    }
    println!("\n{:<8} {:>12} {:>12}", "class", "sensitivity", "specificity");
    let (mut sens, mut spec) = (Vec::new(), Vec::new());
    for (name, r) in &report.per_class {
        let (se, sp) = (r.row_truth.sensitivity.unwrap_or(0.0), r.row_truth.specificity.unwrap_or(0.0));
        sens.push(se);
        spec.push(sp);
        println!("{name:<8} {:>12.4} {:>12.4}", se, sp);
    }
    println!("{:<8} {:>12.4} {:>12.4}", "macro", macro_average(&sens)?, macro_average(&spec)?);
    println!("\nAMI {:.4}, purity {:.4}", report.ami, report.purity);
    Ok(())
}

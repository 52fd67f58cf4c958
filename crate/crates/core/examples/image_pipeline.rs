//! Generate a small labeled image tree and run the full pipeline on it:
//! ingest, PCA, RCC and k-means++, t-SNE, evaluation and plots.
//!
//! cargo run --release --example image_pipeline [output-dir]

use std::path::PathBuf;

use rcclust::config::{Overrides, PipelineConfig};
use rcclust::pipeline::{run_pipeline, METRICS};
use rcclust::synthetic::write_toy_image_dataset;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = PathBuf::from(std::env::args().nth(1).unwrap_or_else(|| "toy-run".into()));
    let images = tempfile::tempdir()?;
    write_toy_image_dataset(images.path(), 40, 24, 3)?;

    let text = "resize = 24x24\npca_components = 30\nknn_k = 20\ntsne_perplexity = 20\ntsne_iters = 500\n";
    let overrides = Overrides { dataset_dir: Some(images.path().into()), output_dir: Some(out.clone()), seed: Some(1) };
    let cfg = PipelineConfig::parse_str(text, &overrides)?;
    for path in run_pipeline(&cfg)? {
        println!("wrote {}", path.display());
    }
    let metrics: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join(METRICS))?)?;
    for (alg, report) in metrics["algorithms"].as_object().into_iter().flatten() {
        println!("{alg:<10} AMI {:.4}  clusters {}", report["ami"].as_f64().unwrap_or(f64::NAN), report["n_clusters"]);
    }
    Ok(())
}

//! Embed three 20-D blobs in 2-D with t-SNE and write the layout as SVG.
//!
//! cargo run --release --example tsne_embedding [out.svg]

use rcclust::plot::render_scatter;
use rcclust::synthetic::gaussian_blobs;
use rcclust::tsne::{tsne_embed, TsneConfig};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let out = std::env::args().nth(1).unwrap_or_else(|| "tsne_blobs.svg".into());
    let (x, truth) = gaussian_blobs(3, 80, 20, 6.0, 1.0, 5);
    let cfg = TsneConfig { perplexity: 20.0, n_iters: 600, seed: 1, ..TsneConfig::default() };
    let run = tsne_embed(&x, &cfg)?;
    for (i, kl) in run.kl_trace.iter().enumerate().step_by(100) {
        println!("iter {i:>4}  KL {kl:.4}");
    }
    println!("final KL   {:.4}", run.kl);
    let names: Vec<String> = (0..3).map(|c| format!("blob {c}")).collect();
    let svg = render_scatter(&run.embedding.points, truth.labels(), &names, "t-SNE of three blobs");
    std::fs::write(&out, svg)?;
    println!("wrote {out}");
    Ok(())
}

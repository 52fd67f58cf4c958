//! End-to-end pipeline: ingest -> PCA -> normalize -> cluster -> t-SNE ->
//! evaluate -> plot.
//!
//! Every stage reads and writes plain files in one directory, so each can be
//! rerun on its own:
//!
//! | stage    | reads                                   | writes                                            |
//! |----------|-----------------------------------------|---------------------------------------------------|
//! | ingest   | image tree                              | `features.csv`, `labels_true.csv`                 |
//! | cluster  | `features.csv` (`labels_true.csv`)      | `labels_pred_<alg>.csv`, `rcc_trace.csv`, `rcc_edges.csv`, `kmeans_report.json` |
//! | embed    | `features.csv`                          | `embedding.csv`                                   |
//! | evaluate | `labels_true.csv`, `labels_pred_*.csv`  | `metrics.json`                                    |
//! | plot     | `embedding.csv`, label files            | `scatter_true.svg`, `scatter_<alg>.svg`           |

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use log::info;
use serde::Serialize;

use crate::config::{Algorithm, PipelineConfig};
use crate::dataset::{
    load_image_dataset, normalize, read_labels_csv, read_matrix_csv, write_labels_csv, write_matrix_csv, write_text,
    DataMatrix, IngestConfig, LabelVector,
};
use crate::graph::{assign_edge_weights, augment_with_mst, mutual_knn_graph};
use crate::kmeans::kmeans_fit;
use crate::metrics::{evaluate, EvaluationReport};
use crate::pca::{pca_fit, pca_transform};
use crate::plot::render_scatter;
use crate::rcc::rcc_fit;
use crate::tsne::{tsne_embed, Embedding2D};

pub const FEATURES: &str = "features.csv";
pub const LABELS_TRUE: &str = "labels_true.csv";
pub const EMBEDDING: &str = "embedding.csv";
pub const METRICS: &str = "metrics.json";
pub const CONFIG_RESOLVED: &str = "config_resolved.txt";

pub fn labels_pred_file(alg: Algorithm) -> String {
    format!("labels_pred_{}.csv", alg.as_str())
}

/// A stage failure, tagged with the stage name.
#[derive(Debug, thiserror::Error)]
#[error("{stage} stage failed: {source}")]
pub struct PipelineError {
    pub stage: &'static str,
    #[source]
    pub source: Box<dyn std::error::Error + Send + Sync>,
}

fn stage<E: std::error::Error + Send + Sync + 'static>(stage: &'static str) -> impl FnOnce(E) -> PipelineError {
    move |e| PipelineError { stage, source: Box::new(e) }
}

fn io_stage<'a>(stage_name: &'static str, path: &'a Path) -> impl FnOnce(std::io::Error) -> PipelineError + 'a {
    move |e| PipelineError {
        stage: stage_name,
        source: format!("{}: {e}", path.display()).into(),
    }
}

/// Load images, merge classes, project onto principal components and
/// normalize. Returns the clustering features and the ground truth.
pub fn ingest(cfg: &PipelineConfig) -> Result<(DataMatrix, LabelVector), PipelineError> {
    let ingest_cfg = IngestConfig {
        root_dir: cfg.dataset_dir.clone(),
        resize: cfg.resize,
        grayscale: cfg.grayscale,
        normalization_mode: cfg.normalization_mode,
    };
    let (pixels, labels) = load_image_dataset(&ingest_cfg).map_err(stage("ingest"))?;
    info!("ingest: {} images, {} pixels each, {} classes", pixels.rows(), pixels.cols(), labels.n_classes());
    let labels = if cfg.class_merge.is_empty() { labels } else { labels.merge_classes(&cfg.class_merge) };
    let model = pca_fit(&pixels, cfg.pca_components).map_err(stage("pca"))?;
    let projected = pca_transform(&model, &pixels).map_err(stage("pca"))?;
    let features = normalize(&projected, cfg.normalization_mode).map_err(stage("normalize"))?;
    Ok((features, labels))
}

pub fn run_ingest(cfg: &PipelineConfig, dir: &Path) -> Result<(), PipelineError> {
    let (features, labels) = ingest(cfg)?;
    write_matrix_csv(&features, &dir.join(FEATURES)).map_err(stage("ingest"))?;
    write_labels_csv(&labels, &dir.join(LABELS_TRUE)).map_err(stage("ingest"))?;
    Ok(())
}

pub fn run_cluster(cfg: &PipelineConfig, dir: &Path) -> Result<(), PipelineError> {
    let features = read_matrix_csv(&dir.join(FEATURES)).map_err(stage("cluster"))?;
    for &alg in &cfg.algorithms {
        let labels = match alg {
            Algorithm::Rcc => {
                let mut graph = mutual_knn_graph(&features, cfg.knn_k).map_err(stage("cluster"))?;
                if cfg.graph_mst {
                    graph = augment_with_mst(graph, &features).map_err(stage("cluster"))?;
                }
                let graph = if graph.n_edges() > 0 {
                    assign_edge_weights(graph, cfg.weight_scheme).map_err(stage("cluster"))?
                } else {
                    graph
                };
                graph.write_edges_csv(&dir.join("rcc_edges.csv")).map_err(stage("cluster"))?;
                let (state, result) = rcc_fit(&features, &graph, &cfg.rcc).map_err(stage("cluster"))?;
                state.write_trace_csv(&dir.join("rcc_trace.csv")).map_err(stage("cluster"))?;
                info!("cluster: rcc found {} clusters in {} iterations", result.n_clusters, result.iterations);
                result.to_label_vector()
            }
            Algorithm::KmeansPp => {
                let k = match cfg.kmeans_k {
                    Some(k) => k,
                    None => read_labels_csv(&dir.join(LABELS_TRUE)).map_err(stage("cluster"))?.n_classes(),
                };
                let fit = kmeans_fit(&features, &cfg.kmeans_config(k)).map_err(stage("cluster"))?;
                let report = serde_json::to_string_pretty(&fit.report).map_err(stage("cluster"))?;
                write_text(&dir.join("kmeans_report.json"), &(report + "\n")).map_err(stage("cluster"))?;
                info!("cluster: k-means++ inertia {:.6e}", fit.result.objective);
                fit.result.to_label_vector()
            }
        };
        write_labels_csv(&labels, &dir.join(labels_pred_file(alg))).map_err(stage("cluster"))?;
    }
    Ok(())
}

pub fn run_embed(cfg: &PipelineConfig, dir: &Path) -> Result<(), PipelineError> {
    let features = read_matrix_csv(&dir.join(FEATURES)).map_err(stage("embed"))?;
    let run = tsne_embed(&features, &cfg.tsne_config()).map_err(stage("embed"))?;
    info!("embed: final KL {:.6}", run.kl);
    run.embedding.write_csv(&dir.join(EMBEDDING)).map_err(stage("embed"))
}

/// Contents of `metrics.json`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricsFile {
    pub n_samples: usize,
    pub classes: Vec<String>,
    pub algorithms: BTreeMap<String, EvaluationReport>,
}

pub fn run_evaluate(cfg: &PipelineConfig, dir: &Path) -> Result<MetricsFile, PipelineError> {
    let truth = read_labels_csv(&dir.join(LABELS_TRUE)).map_err(stage("evaluate"))?;
    let mut algorithms = BTreeMap::new();
    for &alg in &cfg.algorithms {
        let pred = read_labels_csv(&dir.join(labels_pred_file(alg))).map_err(stage("evaluate"))?;
        let report = evaluate(truth.labels(), truth.class_names(), pred.labels()).map_err(stage("evaluate"))?;
        info!("evaluate: {} AMI = {:.4}", alg.as_str(), report.ami);
        algorithms.insert(alg.as_str().to_string(), report);
    }
    let file = MetricsFile { n_samples: truth.len(), classes: truth.class_names().to_vec(), algorithms };
    let json = serde_json::to_string_pretty(&file).map_err(stage("evaluate"))?;
    write_text(&dir.join(METRICS), &(json + "\n")).map_err(stage("evaluate"))?;
    Ok(file)
}

pub fn run_plot(cfg: &PipelineConfig, dir: &Path) -> Result<(), PipelineError> {
    let embedding = Embedding2D::read_csv(&dir.join(EMBEDDING)).map_err(stage("plot"))?;
    let truth = read_labels_csv(&dir.join(LABELS_TRUE)).map_err(stage("plot"))?;
    let mut panels = vec![("scatter_true.svg".to_string(), "ground truth".to_string(), truth)];
    for &alg in &cfg.algorithms {
        let pred = read_labels_csv(&dir.join(labels_pred_file(alg))).map_err(stage("plot"))?;
        panels.push((format!("scatter_{}.svg", alg.as_str()), format!("{} clusters", alg.as_str()), pred));
    }
    for (file, title, labels) in panels {
        if labels.len() != embedding.len() {
            return Err(PipelineError {
                stage: "plot",
                source: format!("{file}: {} labels for {} embedded points", labels.len(), embedding.len()).into(),
            });
        }
        let svg = render_scatter(&embedding.points, labels.labels(), labels.class_names(), &title);
        write_text(&dir.join(&file), &svg).map_err(stage("plot"))?;
    }
    Ok(())
}

/// Run every stage into a staging directory inside `cfg.output_dir` and move
/// the artifacts into place only when all stages succeed.
pub fn run_pipeline(cfg: &PipelineConfig) -> Result<Vec<PathBuf>, PipelineError> {
    let out = &cfg.output_dir;
    fs::create_dir_all(out).map_err(io_stage("setup", out))?;
    let staging = tempfile::Builder::new().prefix(".staging-").tempdir_in(out).map_err(io_stage("setup", out))?;
    let dir = staging.path();

    write_text(&dir.join(CONFIG_RESOLVED), &cfg.to_config_string()).map_err(stage("setup"))?;
    run_ingest(cfg, dir)?;
    run_cluster(cfg, dir)?;
    if cfg.tsne_enabled {
        run_embed(cfg, dir)?;
    }
    run_evaluate(cfg, dir)?;
    if cfg.tsne_enabled {
        run_plot(cfg, dir)?;
    }

    let mut names: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(io_stage("finalize", dir))?
        .map(|e| e.map(|e| e.path()))
        .collect::<Result<_, _>>()
        .map_err(io_stage("finalize", dir))?;
    names.sort();
    let mut written = Vec::with_capacity(names.len());
    for src in names {
        let dst = out.join(src.file_name().expect("file entry"));
        fs::rename(&src, &dst).map_err(io_stage("finalize", &dst))?;
        written.push(dst);
    }
    Ok(written)
}

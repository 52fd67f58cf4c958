//! Unsupervised clustering toolkit built around Robust Continuous Clustering.
//!
//! The crate covers the whole path from a directory of labeled images to an
//! evaluated clustering:
//!
//! - [`dataset`]: image ingestion, normalization, CSV matrix and label files
//! - [`pca`]: principal component projection
//! - [`graph`]: mutual k-nearest-neighbor graph and edge weights
//! - [`rcc`]: Robust Continuous Clustering with graduated non-convexity
//! - [`kmeans`]: k-means++ baseline
//! - [`tsne`]: exact t-SNE for 2-D visualization
//! - [`metrics`]: AMI, majority-rule confusion matrices, sensitivity/specificity
//! - [`plot`]: SVG scatter plots
//! - [`config`] and [`pipeline`]: the file-driven end-to-end run
//!
//! Runnable walkthroughs for each capability live in `examples/`.

pub mod clustering;
pub mod config;
pub mod dataset;
pub mod graph;
pub mod kmeans;
pub mod metrics;
pub mod pca;
pub mod pipeline;
pub mod plot;
pub mod rcc;
pub mod synthetic;
pub mod tsne;

pub use clustering::ClusteringResult;
pub use dataset::{DataMatrix, LabelVector, NormalizationMode};
pub use graph::NeighborGraph;

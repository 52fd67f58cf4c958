//! Output type shared by the clustering algorithms.

use crate::dataset::LabelVector;

/// Cluster label per sample plus solver bookkeeping.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusteringResult {
    /// Cluster index per sample, in `0..n_clusters`.
    pub labels: Vec<usize>,
    pub n_clusters: usize,
    /// Outer iterations performed (Lloyd steps or RCC alternations).
    pub iterations: usize,
    pub converged: bool,
    /// Final objective: lifted RCC objective or k-means inertia.
    pub objective: f64,
}

impl ClusteringResult {
    pub(crate) fn from_labels(labels: Vec<usize>) -> Self {
        let n_clusters = labels.iter().max().map_or(0, |m| m + 1);
        Self { labels, n_clusters, iterations: 0, converged: true, objective: 0.0 }
    }

    /// Labels with class names `cluster0`, `cluster1`, ...
    pub fn to_label_vector(&self) -> LabelVector {
        let names = (0..self.n_clusters.max(1)).map(|i| format!("cluster{i}")).collect();
        LabelVector::new(self.labels.clone(), names).expect("cluster labels are dense")
    }
}

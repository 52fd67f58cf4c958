//! Flat `key = value` pipeline configuration.
//!
//! ```text
//! # 2-class run
//! dataset_dir = /data/COVID-19 Radiography Database
//! algorithms = rcc, kmeanspp
//! class_merge = NORMAL -> non-COVID; Viral Pneumonia -> non-COVID
//! ```
//!
//! Unknown keys are rejected, absent keys take their defaults, and
//! [`PipelineConfig::to_config_string`] echoes every effective setting in a
//! form that parses back to the same value.

use std::path::{Path, PathBuf};

use thiserror::Error;

use crate::dataset::{format_f64, NormalizationMode};
use crate::graph::{WeightScheme, DEFAULT_KNN_K};
use crate::kmeans::KmeansConfig;
use crate::rcc::RccConfig;
use crate::tsne::TsneConfig;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: unknown key '{key}'")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: expected 'key = value'")]
    Syntax { line: usize },
    #[error("key '{key}': cannot parse '{value}': {reason}")]
    BadValue { key: String, value: String, reason: String },
    #[error("key '{key}': {reason}")]
    Range { key: String, reason: String },
    #[error("key '{0}' given more than once")]
    Duplicate(String),
    #[error("dataset_dir is required (set it in the file or pass --dataset-dir)")]
    MissingDatasetDir,
    #[error("cannot read config {path}: {reason}")]
    Io { path: PathBuf, reason: String },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Algorithm {
    Rcc,
    KmeansPp,
}

impl Algorithm {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::Rcc => "rcc",
            Self::KmeansPp => "kmeanspp",
        }
    }
}

impl std::str::FromStr for Algorithm {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "rcc" => Ok(Self::Rcc),
            "kmeanspp" | "km++" => Ok(Self::KmeansPp),
            other => Err(format!("unknown algorithm '{other}' (expected rcc or kmeanspp)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub dataset_dir: PathBuf,
    pub output_dir: PathBuf,
    pub resize: (u32, u32),
    pub grayscale: bool,
    pub pca_components: usize,
    pub normalization_mode: NormalizationMode,
    pub knn_k: usize,
    /// Union the mutual kNN graph with the data's minimum spanning tree.
    pub graph_mst: bool,
    pub weight_scheme: WeightScheme,
    pub algorithms: Vec<Algorithm>,
    /// `None` means one cluster per ground-truth class (after merging).
    pub kmeans_k: Option<usize>,
    pub kmeans_n_init: usize,
    pub kmeans_max_iters: usize,
    pub rcc: RccConfig,
    pub tsne_enabled: bool,
    pub tsne_perplexity: f64,
    pub tsne_iters: usize,
    pub tsne_learning_rate: f64,
    pub seed: u64,
    /// `(from, to)` class-name merges applied to ground-truth labels only.
    pub class_merge: Vec<(String, String)>,
}

/// Values given on the command line; they win over the file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub dataset_dir: Option<PathBuf>,
    pub output_dir: Option<PathBuf>,
    pub seed: Option<u64>,
}

impl PipelineConfig {
    pub fn with_dataset(dataset_dir: impl Into<PathBuf>) -> Self {
        let tsne = TsneConfig::default();
        Self {
            dataset_dir: dataset_dir.into(),
            output_dir: PathBuf::from("rcclust-out"),
            resize: (128, 128),
            grayscale: true,
            pca_components: 80,
            normalization_mode: NormalizationMode::GlobalNorm,
            knn_k: DEFAULT_KNN_K,
            graph_mst: true,
            weight_scheme: WeightScheme::DegreeBalanced,
            algorithms: vec![Algorithm::Rcc, Algorithm::KmeansPp],
            kmeans_k: None,
            kmeans_n_init: 10,
            kmeans_max_iters: 300,
            rcc: RccConfig::default(),
            tsne_enabled: true,
            tsne_perplexity: tsne.perplexity,
            tsne_iters: tsne.n_iters,
            tsne_learning_rate: tsne.learning_rate,
            seed: 0,
            class_merge: Vec::new(),
        }
    }

    pub fn kmeans_config(&self, k: usize) -> KmeansConfig {
        KmeansConfig { k, n_init: self.kmeans_n_init, max_iters: self.kmeans_max_iters, seed: self.seed }
    }

    pub fn tsne_config(&self) -> TsneConfig {
        TsneConfig {
            perplexity: self.tsne_perplexity,
            n_iters: self.tsne_iters,
            learning_rate: self.tsne_learning_rate,
            seed: self.seed,
            ..TsneConfig::default()
        }
    }

    /// Parse configuration text, then apply overrides and validate.
    pub fn parse_str(text: &str, overrides: &Overrides) -> Result<Self, ConfigError> {
        let mut cfg = Self::with_dataset(PathBuf::new());
        let mut seen: Vec<String> = Vec::new();
        for (idx, raw) in text.lines().enumerate() {
            let line = idx + 1;
            let content = raw.split_once('#').map_or(raw, |(before, _)| before).trim();
            if content.is_empty() {
                continue;
            }
            let (key, value) = content.split_once('=').ok_or(ConfigError::Syntax { line })?;
            let (key, value) = (key.trim(), value.trim());
            if seen.iter().any(|k| k == key) {
                return Err(ConfigError::Duplicate(key.to_string()));
            }
            cfg.set(key, value, line)?;
            seen.push(key.to_string());
        }
        if let Some(d) = &overrides.dataset_dir {
            cfg.dataset_dir = d.clone();
        }
        if let Some(o) = &overrides.output_dir {
            cfg.output_dir = o.clone();
        }
        if let Some(s) = overrides.seed {
            cfg.seed = s;
        }
        cfg.validate()?;
        Ok(cfg)
    }

    fn set(&mut self, key: &str, value: &str, line: usize) -> Result<(), ConfigError> {
        fn parse<T: std::str::FromStr>(key: &str, value: &str) -> Result<T, ConfigError>
        where
            T::Err: std::fmt::Display,
        {
            value.parse().map_err(|e: T::Err| ConfigError::BadValue {
                key: key.into(),
                value: value.into(),
                reason: e.to_string(),
            })
        }
        match key {
            "dataset_dir" => self.dataset_dir = PathBuf::from(value),
            "output_dir" => self.output_dir = PathBuf::from(value),
            "resize" => {
                let bad = || ConfigError::BadValue {
                    key: key.into(),
                    value: value.into(),
                    reason: "expected WIDTHxHEIGHT".into(),
                };
                let (w, h) = value.split_once('x').ok_or_else(bad)?;
                self.resize = (w.trim().parse().map_err(|_| bad())?, h.trim().parse().map_err(|_| bad())?);
            }
            "grayscale" => self.grayscale = parse(key, value)?,
            "pca_components" => self.pca_components = parse(key, value)?,
            "normalization_mode" => self.normalization_mode = parse(key, value)?,
            "knn_k" => self.knn_k = parse(key, value)?,
            "graph_mst" => self.graph_mst = parse(key, value)?,
            "weight_scheme" => self.weight_scheme = parse(key, value)?,
            "algorithms" => {
                let mut algs: Vec<Algorithm> =
                    value.split(',').map(str::trim).filter(|s| !s.is_empty()).map(|s| parse(key, s)).collect::<Result<_, _>>()?;
                algs.sort();
                algs.dedup();
                self.algorithms = algs;
            }
            "kmeans_k" => self.kmeans_k = if value == "auto" { None } else { Some(parse(key, value)?) },
            "kmeans_n_init" => self.kmeans_n_init = parse(key, value)?,
            "kmeans_max_iters" => self.kmeans_max_iters = parse(key, value)?,
            "rcc_max_iters" => self.rcc.max_iters = parse(key, value)?,
            "rcc_inner_iters" => self.rcc.inner_iters_per_mu = parse(key, value)?,
            "rcc_solver_tol" => self.rcc.linear_solver_tolerance = parse(key, value)?,
            "rcc_cut_factor" => self.rcc.cluster_cut_factor = parse(key, value)?,
            "rcc_lambda_scale" => self.rcc.lambda_scale = parse(key, value)?,
            "tsne" => self.tsne_enabled = parse(key, value)?,
            "tsne_perplexity" => self.tsne_perplexity = parse(key, value)?,
            "tsne_iters" => self.tsne_iters = parse(key, value)?,
            "tsne_learning_rate" => self.tsne_learning_rate = parse(key, value)?,
            "seed" => self.seed = parse(key, value)?,
            "class_merge" => {
                self.class_merge = value
                    .split(';')
                    .map(str::trim)
                    .filter(|s| !s.is_empty())
                    .map(|pair| {
                        pair.split_once("->").map(|(a, b)| (a.trim().to_string(), b.trim().to_string())).ok_or_else(|| {
                            ConfigError::BadValue {
                                key: key.into(),
                                value: pair.into(),
                                reason: "expected 'from -> to'".into(),
                            }
                        })
                    })
                    .collect::<Result<_, _>>()?;
            }
            _ => return Err(ConfigError::UnknownKey { line, key: key.to_string() }),
        }
        Ok(())
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let range = |key: &str, reason: &str| Err(ConfigError::Range { key: key.into(), reason: reason.into() });
        if self.dataset_dir.as_os_str().is_empty() {
            return Err(ConfigError::MissingDatasetDir);
        }
        if self.resize.0 == 0 || self.resize.1 == 0 {
            return range("resize", "width and height must be >= 1");
        }
        if self.pca_components == 0 {
            return range("pca_components", "must be >= 1");
        }
        if self.knn_k == 0 {
            return range("knn_k", "must be >= 1");
        }
        if self.algorithms.is_empty() {
            return range("algorithms", "select at least one of rcc, kmeanspp");
        }
        if self.kmeans_k == Some(0) {
            return range("kmeans_k", "must be >= 1 or 'auto'");
        }
        if self.kmeans_n_init == 0 {
            return range("kmeans_n_init", "must be >= 1");
        }
        if self.kmeans_max_iters == 0 {
            return range("kmeans_max_iters", "must be >= 1");
        }
        if self.rcc.max_iters == 0 {
            return range("rcc_max_iters", "must be >= 1");
        }
        if self.rcc.inner_iters_per_mu == 0 {
            return range("rcc_inner_iters", "must be >= 1");
        }
        if !(self.rcc.linear_solver_tolerance > 0.0) {
            return range("rcc_solver_tol", "must be > 0");
        }
        if !(self.rcc.cluster_cut_factor > 0.0) {
            return range("rcc_cut_factor", "must be > 0");
        }
        if !(self.rcc.lambda_scale > 0.0) {
            return range("rcc_lambda_scale", "must be > 0");
        }
        if !(self.tsne_perplexity > 0.0) {
            return range("tsne_perplexity", "must be > 0");
        }
        if self.tsne_iters == 0 {
            return range("tsne_iters", "must be >= 1");
        }
        if !(self.tsne_learning_rate > 0.0) {
            return range("tsne_learning_rate", "must be > 0");
        }
        Ok(())
    }

    /// Every effective setting, one `key = value` per line.
    pub fn to_config_string(&self) -> String {
        let algs: Vec<&str> = self.algorithms.iter().map(|a| a.as_str()).collect();
        let merge: Vec<String> = self.class_merge.iter().map(|(a, b)| format!("{a} -> {b}")).collect();
        let lines = [
            ("dataset_dir", self.dataset_dir.display().to_string()),
            ("output_dir", self.output_dir.display().to_string()),
            ("resize", format!("{}x{}", self.resize.0, self.resize.1)),
            ("grayscale", self.grayscale.to_string()),
            ("pca_components", self.pca_components.to_string()),
            ("normalization_mode", self.normalization_mode.as_str().to_string()),
            ("knn_k", self.knn_k.to_string()),
            ("graph_mst", self.graph_mst.to_string()),
            ("weight_scheme", self.weight_scheme.as_str().to_string()),
            ("algorithms", algs.join(", ")),
            ("kmeans_k", self.kmeans_k.map_or_else(|| "auto".to_string(), |k| k.to_string())),
            ("kmeans_n_init", self.kmeans_n_init.to_string()),
            ("kmeans_max_iters", self.kmeans_max_iters.to_string()),
            ("rcc_max_iters", self.rcc.max_iters.to_string()),
            ("rcc_inner_iters", self.rcc.inner_iters_per_mu.to_string()),
            ("rcc_solver_tol", format_f64(self.rcc.linear_solver_tolerance)),
            ("rcc_cut_factor", format_f64(self.rcc.cluster_cut_factor)),
            ("rcc_lambda_scale", format_f64(self.rcc.lambda_scale)),
            ("tsne", self.tsne_enabled.to_string()),
            ("tsne_perplexity", format_f64(self.tsne_perplexity)),
            ("tsne_iters", self.tsne_iters.to_string()),
            ("tsne_learning_rate", format_f64(self.tsne_learning_rate)),
            ("seed", self.seed.to_string()),
            ("class_merge", merge.join("; ")),
        ];
        lines.iter().map(|(k, v)| format!("{k} = {v}\n")).collect()
    }
}

/// Read and parse a configuration file.
pub fn parse_config(path: &Path, overrides: &Overrides) -> Result<PipelineConfig, ConfigError> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| ConfigError::Io { path: path.to_path_buf(), reason: e.to_string() })?;
    PipelineConfig::parse_str(&text, overrides)
}

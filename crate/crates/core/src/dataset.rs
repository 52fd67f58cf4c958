//! Feature matrices, label vectors, image-directory ingestion and CSV I/O.
//!
//! A dataset on disk is a directory with one subdirectory per class. Class
//! indices follow the alphabetical order of the subdirectory names and rows
//! within a class follow the lexicographic order of the file names, so two
//! loads of the same tree always produce identical matrices.

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use image::ImageFormat;
use rayon::prelude::*;
use thiserror::Error;

#[derive(Debug, Error)]
pub enum DatasetError {
    #[error("matrix must have at least one row and one column (got {rows}x{cols})")]
    EmptyMatrix { rows: usize, cols: usize },
    #[error("matrix buffer has {len} values, expected {rows}x{cols}")]
    ShapeMismatch { rows: usize, cols: usize, len: usize },
    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },
    #[error("dataset directory not found: {0}")]
    MissingDirectory(PathBuf),
    #[error("dataset directory {0} contains no class subdirectories")]
    NoClasses(PathBuf),
    #[error("class directory {0} contains no images")]
    EmptyClass(PathBuf),
    #[error("cannot decode image {path}: {reason}")]
    Undecodable { path: PathBuf, reason: String },
    #[error("invalid resize {width}x{height}")]
    InvalidResize { width: u32, height: u32 },
    #[error("{path}: line {line}: {reason}")]
    Csv { path: PathBuf, line: usize, reason: String },
    #[error("label {label} at row {row} is out of range for {classes} classes")]
    LabelOutOfRange { row: usize, label: usize, classes: usize },
    #[error("io error on {path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> DatasetError + '_ {
    move |source| DatasetError::Io { path: path.to_path_buf(), source }
}

/// Dense N×D matrix of finite reals, stored row-major. Rows are samples.
#[derive(Debug, Clone, PartialEq)]
pub struct DataMatrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
}

impl DataMatrix {
    pub fn new(rows: usize, cols: usize, values: Vec<f64>) -> Result<Self, DatasetError> {
        if rows == 0 || cols == 0 {
            return Err(DatasetError::EmptyMatrix { rows, cols });
        }
        if values.len() != rows * cols {
            return Err(DatasetError::ShapeMismatch { rows, cols, len: values.len() });
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(DatasetError::NonFinite { row: pos / cols, col: pos % cols });
        }
        Ok(Self { rows, cols, values })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self, DatasetError> {
        let n = rows.len();
        let d = rows.first().map_or(0, |r| r.as_ref().len());
        let mut values = Vec::with_capacity(n * d);
        for r in rows {
            let r = r.as_ref();
            if r.len() != d {
                return Err(DatasetError::ShapeMismatch { rows: n, cols: d, len: values.len() + r.len() });
            }
            values.extend_from_slice(r);
        }
        Self::new(n, d, values)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.cols..(i + 1) * self.cols]
    }

    pub(crate) fn row_mut(&mut self, i: usize) -> &mut [f64] {
        &mut self.values[i * self.cols..(i + 1) * self.cols]
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.values[i * self.cols + j]
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.values
    }

    pub(crate) fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.values
    }

    pub fn iter_rows(&self) -> std::slice::ChunksExact<'_, f64> {
        self.values.chunks_exact(self.cols)
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.values
    }

    pub fn column(&self, j: usize) -> Vec<f64> {
        self.iter_rows().map(|r| r[j]).collect()
    }

    /// Mean of all rows.
    pub fn mean_row(&self) -> Vec<f64> {
        let mut mean = vec![0.0; self.cols];
        for r in self.iter_rows() {
            for (m, v) in mean.iter_mut().zip(r) {
                *m += v;
            }
        }
        let n = self.rows as f64;
        mean.iter_mut().for_each(|m| *m /= n);
        mean
    }
}

/// Squared Euclidean distance between two equal-length slices.
pub fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

/// Integer class index per sample, with the ordered class names.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelVector {
    labels: Vec<usize>,
    class_names: Vec<String>,
}

impl LabelVector {
    pub fn new(labels: Vec<usize>, class_names: Vec<String>) -> Result<Self, DatasetError> {
        if class_names.is_empty() {
            return Err(DatasetError::LabelOutOfRange { row: 0, label: 0, classes: 0 });
        }
        if let Some((row, &label)) = labels.iter().enumerate().find(|(_, &l)| l >= class_names.len()) {
            return Err(DatasetError::LabelOutOfRange { row, label, classes: class_names.len() });
        }
        Ok(Self { labels, class_names })
    }

    /// Labels with generated class names `"0".."C-1"`, C = max label + 1.
    pub fn from_indices(labels: Vec<usize>) -> Self {
        let c = labels.iter().max().map_or(1, |m| m + 1);
        let class_names = (0..c).map(|i| i.to_string()).collect();
        Self { labels, class_names }
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn class_names(&self) -> &[String] {
        &self.class_names
    }

    pub fn n_classes(&self) -> usize {
        self.class_names.len()
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Relabel classes through a name mapping. Classes absent from the map keep
    /// their name. The merged classes are re-indexed alphabetically.
    pub fn merge_classes(&self, map: &[(String, String)]) -> Self {
        let target = |name: &str| -> String {
            map.iter().find(|(from, _)| from == name).map_or_else(|| name.to_string(), |(_, to)| to.clone())
        };
        let mut names: Vec<String> = self.class_names.iter().map(|n| target(n)).collect();
        names.sort();
        names.dedup();
        let remap: Vec<usize> = self
            .class_names
            .iter()
            .map(|n| names.binary_search(&target(n)).expect("merged name present"))
            .collect();
        Self { labels: self.labels.iter().map(|&l| remap[l]).collect(), class_names: names }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum NormalizationMode {
    None,
    GlobalNorm,
    ZScore,
}

impl NormalizationMode {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::None => "none",
            Self::GlobalNorm => "global-norm",
            Self::ZScore => "zscore",
        }
    }
}

impl std::str::FromStr for NormalizationMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "none" => Ok(Self::None),
            "global-norm" => Ok(Self::GlobalNorm),
            "zscore" => Ok(Self::ZScore),
            other => Err(format!("unknown normalization mode '{other}' (expected none, global-norm or zscore)")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct IngestConfig {
    pub root_dir: PathBuf,
    pub resize: (u32, u32),
    pub grayscale: bool,
    pub normalization_mode: NormalizationMode,
}

impl IngestConfig {
    pub fn new(root_dir: impl Into<PathBuf>) -> Self {
        Self {
            root_dir: root_dir.into(),
            resize: (128, 128),
            grayscale: true,
            normalization_mode: NormalizationMode::GlobalNorm,
        }
    }
}

fn sorted_entries(dir: &Path, want_dirs: bool) -> Result<Vec<PathBuf>, DatasetError> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).map_err(io_err(dir))? {
        let entry = entry.map_err(io_err(dir))?;
        let name = entry.file_name();
        if name.to_string_lossy().starts_with('.') {
            continue;
        }
        let ft = entry.file_type().map_err(io_err(dir))?;
        let path = entry.path();
        let is_dir = ft.is_dir() || (ft.is_symlink() && path.is_dir());
        if is_dir == want_dirs {
            out.push(path);
        }
    }
    out.sort_by(|a, b| a.file_name().cmp(&b.file_name()));
    Ok(out)
}

/// Load a directory-per-class image tree into a flattened pixel matrix.
///
/// Each image is converted to grayscale (or kept as interleaved RGB when
/// `grayscale` is false), resized with an area-averaging filter and scaled to
/// `[0, 1]`. Normalization is not applied here; see [`normalize`].
pub fn load_image_dataset(cfg: &IngestConfig) -> Result<(DataMatrix, LabelVector), DatasetError> {
    let (w, h) = cfg.resize;
    if w == 0 || h == 0 {
        return Err(DatasetError::InvalidResize { width: w, height: h });
    }
    if !cfg.root_dir.is_dir() {
        return Err(DatasetError::MissingDirectory(cfg.root_dir.clone()));
    }
    let class_dirs = sorted_entries(&cfg.root_dir, true)?;
    if class_dirs.is_empty() {
        return Err(DatasetError::NoClasses(cfg.root_dir.clone()));
    }

    let mut files = Vec::new();
    let mut class_names = Vec::with_capacity(class_dirs.len());
    for (class, dir) in class_dirs.iter().enumerate() {
        let images = sorted_entries(dir, false)?;
        if images.is_empty() {
            return Err(DatasetError::EmptyClass(dir.clone()));
        }
        class_names.push(dir.file_name().unwrap_or_default().to_string_lossy().into_owned());
        files.extend(images.into_iter().map(|p| (class, p)));
    }

    let channels = if cfg.grayscale { 1 } else { 3 };
    let rows: Vec<Vec<f64>> = files
        .par_iter()
        .map(|(_, path)| decode_image(path, w, h, cfg.grayscale))
        .collect::<Result<_, _>>()?;

    let d = (w as usize) * (h as usize) * channels;
    let mut values = Vec::with_capacity(rows.len() * d);
    for r in rows {
        values.extend(r);
    }
    let x = DataMatrix::new(files.len(), d, values)?;
    let labels = LabelVector::new(files.iter().map(|(c, _)| *c).collect(), class_names)?;
    Ok((x, labels))
}

fn decode_image(path: &Path, w: u32, h: u32, grayscale: bool) -> Result<Vec<f64>, DatasetError> {
    let undecodable = |reason: String| DatasetError::Undecodable { path: path.to_path_buf(), reason };
    let mut bytes = Vec::new();
    fs::File::open(path)
        .and_then(|mut f| f.read_to_end(&mut bytes))
        .map_err(io_err(path))?;
    let format = image::guess_format(&bytes).map_err(|e| undecodable(e.to_string()))?;
    if !matches!(format, ImageFormat::Png | ImageFormat::Jpeg) {
        return Err(undecodable(format!("unsupported format {format:?}; only PNG and JPEG are accepted")));
    }
    let img = image::load_from_memory_with_format(&bytes, format).map_err(|e| undecodable(e.to_string()))?;
    let (sw, sh) = (img.width() as usize, img.height() as usize);
    if grayscale {
        let luma = img.to_luma32f();
        let src: Vec<f64> = luma.into_raw().into_iter().map(|v| f64::from(v).clamp(0.0, 1.0)).collect();
        Ok(area_resize(&src, sw, sh, 1, w as usize, h as usize))
    } else {
        let rgb = img.to_rgb32f();
        let src: Vec<f64> = rgb.into_raw().into_iter().map(|v| f64::from(v).clamp(0.0, 1.0)).collect();
        Ok(area_resize(&src, sw, sh, 3, w as usize, h as usize))
    }
}

/// Per-axis overlap weights of a box filter mapping `src` cells onto `dst` cells.
fn box_weights(src: usize, dst: usize) -> Vec<Vec<(usize, f64)>> {
    let scale = src as f64 / dst as f64;
    (0..dst)
        .map(|o| {
            let lo = o as f64 * scale;
            let hi = (o + 1) as f64 * scale;
            let first = lo.floor() as usize;
            let last = (hi.ceil() as usize).min(src);
            let mut taps: Vec<(usize, f64)> = (first..last)
                .map(|i| {
                    let a = lo.max(i as f64);
                    let b = hi.min((i + 1) as f64);
                    (i, (b - a).max(0.0))
                })
                .filter(|&(_, wt)| wt > 0.0)
                .collect();
            let total: f64 = taps.iter().map(|t| t.1).sum();
            taps.iter_mut().for_each(|t| t.1 /= total);
            taps
        })
        .collect()
}

/// Area-averaging resample of an interleaved `channels`-plane image.
pub(crate) fn area_resize(src: &[f64], sw: usize, sh: usize, channels: usize, dw: usize, dh: usize) -> Vec<f64> {
    let wx = box_weights(sw, dw);
    let wy = box_weights(sh, dh);
    // horizontal pass then vertical pass; the box filter is separable
    let mut tmp = vec![0.0; sh * dw * channels];
    for y in 0..sh {
        for (ox, taps) in wx.iter().enumerate() {
            for c in 0..channels {
                tmp[(y * dw + ox) * channels + c] =
                    taps.iter().map(|&(x, wt)| wt * src[(y * sw + x) * channels + c]).sum();
            }
        }
    }
    let mut out = vec![0.0; dh * dw * channels];
    for (oy, taps) in wy.iter().enumerate() {
        for ox in 0..dw {
            for c in 0..channels {
                let v: f64 = taps.iter().map(|&(y, wt)| wt * tmp[(y * dw + ox) * channels + c]).sum();
                out[(oy * dw + ox) * channels + c] = v.clamp(0.0, 1.0);
            }
        }
    }
    out
}

/// Apply a normalization mode to a feature matrix.
///
/// `GlobalNorm` multiplies everything by one scalar so the mean row Euclidean
/// norm is 1; pairwise distance ratios are preserved. `ZScore` standardizes
/// every column with the population variance (divisor N); constant columns
/// become 0.
pub fn normalize(x: &DataMatrix, mode: NormalizationMode) -> Result<DataMatrix, DatasetError> {
    if x.rows == 0 || x.cols == 0 {
        return Err(DatasetError::EmptyMatrix { rows: x.rows, cols: x.cols });
    }
    let mut out = x.clone();
    match mode {
        NormalizationMode::None => {}
        NormalizationMode::GlobalNorm => {
            let mean_norm = x.iter_rows().map(|r| r.iter().map(|v| v * v).sum::<f64>().sqrt()).sum::<f64>()
                / x.rows as f64;
            if mean_norm > 0.0 {
                let s = 1.0 / mean_norm;
                out.values.iter_mut().for_each(|v| *v *= s);
            }
        }
        NormalizationMode::ZScore => {
            let mean = x.mean_row();
            let n = x.rows as f64;
            let mut var = vec![0.0; x.cols];
            for r in x.iter_rows() {
                for ((s, v), m) in var.iter_mut().zip(r).zip(&mean) {
                    *s += (v - m) * (v - m);
                }
            }
            let sd: Vec<f64> = var.iter().map(|s| (s / n).sqrt()).collect();
            for i in 0..x.rows {
                for ((v, m), s) in out.row_mut(i).iter_mut().zip(&mean).zip(&sd) {
                    *v = if *s > 0.0 { (*v - m) / s } else { 0.0 };
                }
            }
        }
    }
    Ok(out)
}

fn csv_err(path: &Path, line: usize, reason: impl Into<String>) -> DatasetError {
    DatasetError::Csv { path: path.to_path_buf(), line, reason: reason.into() }
}

/// Shortest decimal text that parses back to the same `f64`.
pub fn format_f64(v: f64) -> String {
    format!("{v:?}")
}

/// Write a matrix as CSV with header `c0,c1,...`.
pub fn write_matrix_csv(x: &DataMatrix, path: &Path) -> Result<(), DatasetError> {
    let mut out = String::with_capacity(x.values.len() * 12);
    let header: Vec<String> = (0..x.cols).map(|j| format!("c{j}")).collect();
    out.push_str(&header.join(","));
    out.push('\n');
    for r in x.iter_rows() {
        let cells: Vec<String> = r.iter().map(|&v| format_f64(v)).collect();
        out.push_str(&cells.join(","));
        out.push('\n');
    }
    write_text(path, &out)
}

pub(crate) fn write_text(path: &Path, text: &str) -> Result<(), DatasetError> {
    let mut f = fs::File::create(path).map_err(io_err(path))?;
    f.write_all(text.as_bytes()).map_err(io_err(path))
}

fn open_csv(path: &Path) -> Result<csv::Reader<fs::File>, DatasetError> {
    let f = fs::File::open(path).map_err(io_err(path))?;
    Ok(csv::ReaderBuilder::new().has_headers(true).flexible(true).trim(csv::Trim::All).from_reader(f))
}

/// Read a matrix written by [`write_matrix_csv`] (any header is accepted).
pub fn read_matrix_csv(path: &Path) -> Result<DataMatrix, DatasetError> {
    let mut rdr = open_csv(path)?;
    let width = rdr.headers().map_err(|e| csv_err(path, 1, e.to_string()))?.len();
    let mut values = Vec::new();
    let mut rows = 0;
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| csv_err(path, line, e.to_string()))?;
        if rec.len() != width {
            return Err(csv_err(path, line, format!("expected {width} cells, found {}", rec.len())));
        }
        for cell in rec.iter() {
            let v: f64 = cell.parse().map_err(|_| csv_err(path, line, format!("non-numeric cell '{cell}'")))?;
            values.push(v);
        }
        rows += 1;
    }
    DataMatrix::new(rows, width, values)
}

/// Write labels as `index,label,class_name`.
pub fn write_labels_csv(labels: &LabelVector, path: &Path) -> Result<(), DatasetError> {
    let f = fs::File::create(path).map_err(io_err(path))?;
    let mut w = csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(f);
    let csv_io = |e: csv::Error| csv_err(path, 0, e.to_string());
    w.write_record(["index", "label", "class_name"]).map_err(csv_io)?;
    for (i, &l) in labels.labels.iter().enumerate() {
        w.write_record([i.to_string(), l.to_string(), labels.class_names[l].clone()]).map_err(csv_io)?;
    }
    w.flush().map_err(io_err(path))
}

/// Read a labels file. Indices must run 0,1,2,... without gaps; class names
/// are recovered from the `class_name` column (classes that never occur get
/// their index as name).
pub fn read_labels_csv(path: &Path) -> Result<LabelVector, DatasetError> {
    let mut rdr = open_csv(path)?;
    let headers = rdr.headers().map_err(|e| csv_err(path, 1, e.to_string()))?.clone();
    if headers.iter().collect::<Vec<_>>() != ["index", "label", "class_name"] {
        return Err(csv_err(path, 1, "expected header 'index,label,class_name'"));
    }
    let mut labels = Vec::new();
    let mut names: Vec<Option<String>> = Vec::new();
    for (i, rec) in rdr.records().enumerate() {
        let line = i + 2;
        let rec = rec.map_err(|e| csv_err(path, line, e.to_string()))?;
        if rec.len() != 3 {
            return Err(csv_err(path, line, format!("expected 3 cells, found {}", rec.len())));
        }
        let index: usize = rec[0].parse().map_err(|_| csv_err(path, line, format!("bad index '{}'", &rec[0])))?;
        if index != i {
            return Err(csv_err(path, line, format!("index gap: expected {i}, found {index}")));
        }
        let label: usize = rec[1].parse().map_err(|_| csv_err(path, line, format!("bad label '{}'", &rec[1])))?;
        if names.len() <= label {
            names.resize(label + 1, None);
        }
        match &names[label] {
            Some(existing) if existing != &rec[2] => {
                return Err(csv_err(path, line, format!("label {label} named both '{existing}' and '{}'", &rec[2])));
            }
            Some(_) => {}
            None => names[label] = Some(rec[2].to_string()),
        }
        labels.push(label);
    }
    let class_names = names.into_iter().enumerate().map(|(i, n)| n.unwrap_or_else(|| i.to_string())).collect();
    LabelVector::new(labels, class_names)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn rejects_non_finite_and_empty() {
        assert!(DataMatrix::new(0, 3, vec![]).is_err());
        assert!(matches!(
            DataMatrix::new(1, 2, vec![1.0, f64::NAN]),
            Err(DatasetError::NonFinite { row: 0, col: 1 })
        ));
    }

    #[test]
    fn normalize_none_is_identity() {
        let x = DataMatrix::from_rows(&[[1.0, -2.0], [3.5, 0.25]]).unwrap();
        assert_eq!(normalize(&x, NormalizationMode::None).unwrap(), x);
    }

    #[test]
    fn global_norm_scales_mean_norm_to_one() {
        let x = DataMatrix::from_rows(&[[1.0, 0.0], [0.0, 3.0]]).unwrap();
        let y = normalize(&x, NormalizationMode::GlobalNorm).unwrap();
        assert!((y.get(0, 0) - 0.5).abs() < 1e-15);
        assert!((y.get(1, 1) - 1.5).abs() < 1e-15);
    }

    #[test]
    fn zscore_uses_population_variance() {
        let x = DataMatrix::from_rows(&[[1.0, 7.0], [2.0, 7.0], [3.0, 7.0]]).unwrap();
        let y = normalize(&x, NormalizationMode::ZScore).unwrap();
        let expected = 1.0 / (2.0f64 / 3.0).sqrt();
        assert!((y.get(0, 0) + expected).abs() < 1e-12);
        assert_eq!(y.get(1, 0), 0.0);
        assert!((y.get(2, 0) - expected).abs() < 1e-12);
        assert!((y.get(2, 0) - 1.2247).abs() < 1e-4);
        // constant column
        assert!(y.column(1).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn box_filter_averages_blocks() {
        // 4x4 -> 2x2 averages each 2x2 block
        let src: Vec<f64> = (0..16).map(|v| v as f64 / 15.0).collect();
        let out = area_resize(&src, 4, 4, 1, 2, 2);
        let block = |a: usize, b: usize, c: usize, d: usize| (src[a] + src[b] + src[c] + src[d]) / 4.0;
        assert!((out[0] - block(0, 1, 4, 5)).abs() < 1e-12);
        assert!((out[3] - block(10, 11, 14, 15)).abs() < 1e-12);
        // upsampling a constant stays constant
        let up = area_resize(&[0.3; 4], 2, 2, 1, 5, 3);
        assert!(up.iter().all(|v| (v - 0.3).abs() < 1e-12));
    }

    #[test]
    fn merge_classes_reindexes() {
        let lv = LabelVector::new(
            vec![0, 1, 2, 1],
            vec!["COVID".into(), "NORMAL".into(), "Viral Pneumonia".into()],
        )
        .unwrap();
        let merged = lv.merge_classes(&[
            ("NORMAL".into(), "non-COVID".into()),
            ("Viral Pneumonia".into(), "non-COVID".into()),
        ]);
        assert_eq!(merged.class_names(), ["COVID", "non-COVID"]);
        assert_eq!(merged.labels(), [0, 1, 1, 1]);
    }

    #[test]
    fn format_round_trips_extremes() {
        for v in [1e-300, -3.0e300, 0.1, 1.0 / 3.0, f64::MIN_POSITIVE, 5e-324] {
            assert_eq!(format_f64(v).parse::<f64>().unwrap(), v);
        }
        assert_eq!(format_f64(1e-300), "1e-300");
    }
}

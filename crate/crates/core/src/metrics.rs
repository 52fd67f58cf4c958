//! External clustering evaluation: contingency tables, mutual information
//! adjusted for chance, majority-rule confusion matrices and per-class
//! sensitivity / specificity.
//!
//! All information quantities are in nats.

use std::collections::BTreeMap;

use serde::Serialize;
use thiserror::Error;

#[derive(Debug, Error, PartialEq)]
pub enum MetricsError {
    #[error("labelings have different lengths ({0} vs {1})")]
    LengthMismatch(usize, usize),
    #[error("labelings are empty")]
    Empty,
    #[error("predicted cluster {0} has no class mapping")]
    Unmapped(usize),
    #[error("class index {index} out of range for {classes} classes")]
    ClassOutOfRange { index: usize, classes: usize },
    #[error("cannot average an empty list")]
    EmptyAverage,
}

/// Joint counts of two labelings. Rows follow the sorted distinct values of
/// the first labeling, columns those of the second.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContingencyTable {
    counts: Vec<Vec<u64>>,
    row_sums: Vec<u64>,
    col_sums: Vec<u64>,
    total: u64,
}

impl ContingencyTable {
    pub fn from_counts(counts: Vec<Vec<u64>>) -> Result<Self, MetricsError> {
        let cols = counts.first().map_or(0, Vec::len);
        let row_sums: Vec<u64> = counts.iter().map(|r| r.iter().sum()).collect();
        let col_sums: Vec<u64> = (0..cols).map(|j| counts.iter().map(|r| r[j]).sum()).collect();
        let total: u64 = row_sums.iter().sum();
        if total == 0 || counts.iter().any(|r| r.len() != cols) {
            return Err(MetricsError::Empty);
        }
        Ok(Self { counts, row_sums, col_sums, total })
    }

    pub fn counts(&self) -> &[Vec<u64>] {
        &self.counts
    }

    pub fn row_sums(&self) -> &[u64] {
        &self.row_sums
    }

    pub fn col_sums(&self) -> &[u64] {
        &self.col_sums
    }

    pub fn total(&self) -> u64 {
        self.total
    }

    pub fn transpose(&self) -> Self {
        let cols = self.col_sums.len();
        let counts = (0..cols).map(|j| self.counts.iter().map(|r| r[j]).collect()).collect();
        Self { counts, row_sums: self.col_sums.clone(), col_sums: self.row_sums.clone(), total: self.total }
    }
}

fn dense_ids(labels: &[usize]) -> (Vec<usize>, usize) {
    let mut distinct: Vec<usize> = labels.to_vec();
    distinct.sort_unstable();
    distinct.dedup();
    (labels.iter().map(|l| distinct.binary_search(l).expect("present")).collect(), distinct.len())
}

pub fn contingency(a: &[usize], b: &[usize]) -> Result<ContingencyTable, MetricsError> {
    if a.len() != b.len() {
        return Err(MetricsError::LengthMismatch(a.len(), b.len()));
    }
    if a.is_empty() {
        return Err(MetricsError::Empty);
    }
    let (ra, r) = dense_ids(a);
    let (rb, c) = dense_ids(b);
    let mut counts = vec![vec![0u64; c]; r];
    for (&i, &j) in ra.iter().zip(&rb) {
        counts[i][j] += 1;
    }
    ContingencyTable::from_counts(counts)
}

/// Entropy of a count vector, summed as `(c/N)(ln N - ln c)`.
fn entropy_of(counts: &[u64], total: u64) -> f64 {
    let ln_n = (total as f64).ln();
    let n = total as f64;
    counts.iter().filter(|&&c| c > 0).map(|&c| (c as f64 / n) * (ln_n - (c as f64).ln())).sum()
}

pub fn entropy(labels: &[usize]) -> f64 {
    let (ids, k) = dense_ids(labels);
    let mut counts = vec![0u64; k];
    ids.iter().for_each(|&i| counts[i] += 1);
    entropy_of(&counts, labels.len() as u64)
}

pub fn mutual_information(t: &ContingencyTable) -> f64 {
    let n = t.total as f64;
    let ln_n = n.ln();
    let mut mi = 0.0;
    for (row, &a) in t.counts.iter().zip(&t.row_sums) {
        for (&nij, &b) in row.iter().zip(&t.col_sums) {
            if nij > 0 {
                // same evaluation order as `entropy_of`, so MI(U, U) == H(U) exactly
                let term = ((nij as f64).ln() - (a as f64).ln()) + (ln_n - (b as f64).ln());
                mi += (nij as f64 / n) * term;
            }
        }
    }
    mi.max(0.0)
}

/// Expected mutual information under the permutation (hypergeometric) model
/// with the table's margins held fixed.
pub fn expected_mi(t: &ContingencyTable) -> f64 {
    let n = t.total as usize;
    let nf = n as f64;
    let mut log_fact = vec![0.0f64; n + 1];
    for k in 1..=n {
        log_fact[k] = log_fact[k - 1] + (k as f64).ln();
    }
    let mut emi = 0.0;
    for &a in &t.row_sums {
        let a = a as usize;
        for &b in &t.col_sums {
            let b = b as usize;
            let lo = 1.max((a + b).saturating_sub(n));
            let hi = a.min(b);
            let fixed = log_fact[a] + log_fact[b] + log_fact[n - a] + log_fact[n - b] - log_fact[n];
            for nij in lo..=hi {
                let log_p = fixed
                    - log_fact[nij]
                    - log_fact[a - nij]
                    - log_fact[b - nij]
                    - log_fact[n + nij - a - b];
                let term = (nij as f64 / nf) * ((nf * nij as f64) / (a as f64 * b as f64)).ln();
                emi += term * log_p.exp();
            }
        }
    }
    emi
}

/// Full AMI breakdown for two labelings.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AmiScore {
    pub ami: f64,
    pub mi: f64,
    pub emi: f64,
    pub entropy_a: f64,
    pub entropy_b: f64,
}

/// Adjusted mutual information with arithmetic-mean normalization,
/// `(MI - EMI) / (mean(H_a, H_b) - EMI)`. A denominator below 1e-12 yields 0.
/// Worse-than-chance agreement gives negative values; they are not clamped.
pub fn ami_score(a: &[usize], b: &[usize]) -> Result<AmiScore, MetricsError> {
    let t = contingency(a, b)?;
    let mi = mutual_information(&t);
    let emi = expected_mi(&t);
    let entropy_a = entropy_of(&t.row_sums, t.total);
    let entropy_b = entropy_of(&t.col_sums, t.total);
    let denom = 0.5 * (entropy_a + entropy_b) - emi;
    let ami = if denom.abs() < 1e-12 { 0.0 } else { (mi - emi) / denom };
    Ok(AmiScore { ami, mi, emi, entropy_a, entropy_b })
}

pub fn ami(a: &[usize], b: &[usize]) -> Result<f64, MetricsError> {
    ami_score(a, b).map(|s| s.ami)
}

/// Map each predicted cluster to its most frequent true class (ties to the
/// smaller class index). Keys are the cluster ids that occur in `pred`.
pub fn majority_map(pred: &[usize], truth: &[usize]) -> Result<BTreeMap<usize, usize>, MetricsError> {
    if pred.len() != truth.len() {
        return Err(MetricsError::LengthMismatch(pred.len(), truth.len()));
    }
    let mut tallies: BTreeMap<usize, BTreeMap<usize, usize>> = BTreeMap::new();
    for (&p, &t) in pred.iter().zip(truth) {
        *tallies.entry(p).or_default().entry(t).or_default() += 1;
    }
    Ok(tallies
        .into_iter()
        .map(|(cluster, counts)| {
            let best = counts.iter().fold((usize::MAX, 0), |best, (&class, &c)| if c > best.1 { (class, c) } else { best });
            (cluster, best.0)
        })
        .collect())
}

/// Square confusion matrix, rows = true class, columns = predicted class.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConfusionMatrix {
    pub classes: Vec<String>,
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn new(classes: Vec<String>, counts: Vec<Vec<u64>>) -> Self {
        Self { classes, counts }
    }

    pub fn n_classes(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn transpose(&self) -> Self {
        let c = self.n_classes();
        let counts = (0..c).map(|j| (0..c).map(|i| self.counts[i][j]).collect()).collect();
        Self { classes: self.classes.clone(), counts }
    }
}

pub fn confusion_matrix(
    pred: &[usize],
    truth: &[usize],
    mapping: &BTreeMap<usize, usize>,
    classes: &[String],
) -> Result<ConfusionMatrix, MetricsError> {
    if pred.len() != truth.len() {
        return Err(MetricsError::LengthMismatch(pred.len(), truth.len()));
    }
    let c = classes.len();
    let mut counts = vec![vec![0u64; c]; c];
    for (&p, &t) in pred.iter().zip(truth) {
        let mapped = *mapping.get(&p).ok_or(MetricsError::Unmapped(p))?;
        if t >= c || mapped >= c {
            return Err(MetricsError::ClassOutOfRange { index: t.max(mapped), classes: c });
        }
        counts[t][mapped] += 1;
    }
    Ok(ConfusionMatrix::new(classes.to_vec(), counts))
}

/// Which axis of the confusion matrix holds the ground truth when computing
/// per-class rates.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum TruthAxis {
    /// Rows are the true class (the standard reading).
    Rows,
    /// Columns are treated as the true class; equivalent to transposing first.
    Columns,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClassRates {
    /// `None` when the denominator is zero.
    pub sensitivity: Option<f64>,
    pub specificity: Option<f64>,
}

/// One-vs-rest sensitivity `TP / (TP + FN)` and specificity `TN / (TN + FP)`.
pub fn sensitivity_specificity(cm: &ConfusionMatrix, class: usize, axis: TruthAxis) -> Result<ClassRates, MetricsError> {
    let c = cm.n_classes();
    if class >= c {
        return Err(MetricsError::ClassOutOfRange { index: class, classes: c });
    }
    let m = match axis {
        TruthAxis::Rows => cm.counts.clone(),
        TruthAxis::Columns => cm.transpose().counts,
    };
    let total: u64 = m.iter().flatten().sum();
    let tp = m[class][class];
    let actual: u64 = m[class].iter().sum();
    let predicted: u64 = m.iter().map(|r| r[class]).sum();
    let fn_ = actual - tp;
    let fp = predicted - tp;
    let tn = total - tp - fn_ - fp;
    let ratio = |num: u64, den: u64| (den > 0).then(|| num as f64 / den as f64);
    Ok(ClassRates { sensitivity: ratio(tp, tp + fn_), specificity: ratio(tn, tn + fp) })
}

pub fn macro_average(values: &[f64]) -> Result<f64, MetricsError> {
    if values.is_empty() {
        return Err(MetricsError::EmptyAverage);
    }
    Ok(values.iter().sum::<f64>() / values.len() as f64)
}

/// Cluster purity: fraction of samples whose cluster's majority class is
/// their own class.
pub fn purity(pred: &[usize], truth: &[usize]) -> Result<f64, MetricsError> {
    if pred.is_empty() {
        return Err(MetricsError::Empty);
    }
    let map = majority_map(pred, truth)?;
    let hits = pred.iter().zip(truth).filter(|(p, t)| map[p] == **t).count();
    Ok(hits as f64 / pred.len() as f64)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PerClassRates {
    pub row_truth: ClassRates,
    pub column_truth: ClassRates,
}

/// Everything written to `metrics.json` for one predicted labeling.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvaluationReport {
    pub ami: f64,
    pub mi: f64,
    pub emi: f64,
    pub entropy_a: f64,
    pub entropy_b: f64,
    pub n_clusters: usize,
    pub purity: f64,
    /// Cluster id -> class name under the majority rule.
    pub mapping: BTreeMap<usize, String>,
    pub confusion: Vec<Vec<u64>>,
    pub classes: Vec<String>,
    pub per_class: BTreeMap<String, PerClassRates>,
}

/// Evaluate predicted clusters against ground truth; `entropy_a` refers to
/// the truth labeling.
pub fn evaluate(truth: &[usize], classes: &[String], pred: &[usize]) -> Result<EvaluationReport, MetricsError> {
    let score = ami_score(truth, pred)?;
    let mapping = majority_map(pred, truth)?;
    let cm = confusion_matrix(pred, truth, &mapping, classes)?;
    let mut per_class = BTreeMap::new();
    for (i, name) in classes.iter().enumerate() {
        per_class.insert(
            name.clone(),
            PerClassRates {
                row_truth: sensitivity_specificity(&cm, i, TruthAxis::Rows)?,
                column_truth: sensitivity_specificity(&cm, i, TruthAxis::Columns)?,
            },
        );
    }
    let n_clusters = mapping.len();
    Ok(EvaluationReport {
        ami: score.ami,
        mi: score.mi,
        emi: score.emi,
        entropy_a: score.entropy_a,
        entropy_b: score.entropy_b,
        n_clusters,
        purity: purity(pred, truth)?,
        mapping: mapping.iter().map(|(&k, &v)| (k, classes[v].clone())).collect(),
        confusion: cm.counts,
        classes: classes.to_vec(),
        per_class,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn contingency_examples() {
        let t = contingency(&[0, 1, 2], &[0, 1, 2]).unwrap();
        assert_eq!(t.counts(), [vec![1, 0, 0], vec![0, 1, 0], vec![0, 0, 1]]);
        let t = contingency(&[0, 0, 1, 1], &[1, 1, 0, 0]).unwrap();
        assert_eq!(t.counts(), [vec![0, 2], vec![2, 0]]);
        let t = contingency(&[0, 0, 0, 1], &[0, 1, 0, 1]).unwrap();
        assert_eq!(t.counts(), [vec![2, 1], vec![0, 1]]);
        assert_eq!(t.row_sums(), [3, 1]);
        assert_eq!(t.col_sums(), [2, 2]);
        assert_eq!(contingency(&[0], &[0, 1]), Err(MetricsError::LengthMismatch(1, 2)));
    }

    #[test]
    fn mi_examples() {
        let t = contingency(&[0, 0, 1, 1], &[0, 0, 1, 1]).unwrap();
        assert!((mutual_information(&t) - std::f64::consts::LN_2).abs() < 1e-15);
        let t = contingency(&[0, 0, 0, 0], &[0, 1, 2, 1]).unwrap();
        assert_eq!(mutual_information(&t), 0.0);
        let t = ContingencyTable::from_counts(vec![vec![2, 1], vec![0, 1]]).unwrap();
        let expected = 0.5 * (4.0f64 / 3.0).ln() + 0.25 * (2.0f64 / 3.0).ln() + 0.25 * 2f64.ln();
        assert!((mutual_information(&t) - expected).abs() < 1e-15);
        assert!((mutual_information(&t) - 0.2158).abs() < 1e-4);
    }

    #[test]
    fn emi_degenerate_and_symmetric() {
        let t = ContingencyTable::from_counts(vec![vec![3, 4, 5]]).unwrap();
        assert!(expected_mi(&t).abs() < 1e-15);
        let t = ContingencyTable::from_counts(vec![vec![3, 1, 0], vec![2, 5, 4], vec![0, 2, 7]]).unwrap();
        assert!((expected_mi(&t) - expected_mi(&t.transpose())).abs() < 1e-14);
    }

    #[test]
    fn ami_basics() {
        let a = [0, 0, 1, 1, 2, 2, 2];
        assert_eq!(ami(&a, &a).unwrap(), 1.0);
        let relabeled: Vec<usize> = a.iter().map(|&l| [7, 3, 5][l]).collect();
        assert!((ami(&a, &relabeled).unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(ami(&[4; 7], &a).unwrap(), 0.0);
        assert_eq!(ami(&[4; 7], &[1; 7]).unwrap(), 0.0);
    }

    #[test]
    fn majority_rule() {
        let m = majority_map(&[0, 1, 2], &[0, 1, 2]).unwrap();
        assert_eq!(m.into_iter().collect::<Vec<_>>(), [(0, 0), (1, 1), (2, 2)]);
        let m = majority_map(&[5, 5, 5, 5], &[0, 0, 0, 1]).unwrap();
        assert_eq!(m[&5], 0);
        let m = majority_map(&[5, 5, 5, 5], &[1, 0, 1, 0]).unwrap();
        assert_eq!(m[&5], 0);
        let m = majority_map(&[5, 5, 5, 5], &[2, 1, 2, 1]).unwrap();
        assert_eq!(m[&5], 1);
    }

    #[test]
    fn confusion_and_rates() {
        let classes = vec!["a".to_string(), "b".to_string()];
        let truth = [0, 0, 1, 1, 1];
        let map = majority_map(&truth, &truth).unwrap();
        let cm = confusion_matrix(&truth, &truth, &map, &classes).unwrap();
        assert_eq!(cm.counts, [vec![2, 0], vec![0, 3]]);
        for axis in [TruthAxis::Rows, TruthAxis::Columns] {
            let r = sensitivity_specificity(&cm, 1, axis).unwrap();
            assert_eq!((r.sensitivity, r.specificity), (Some(1.0), Some(1.0)));
        }
        let partial: BTreeMap<usize, usize> = [(0, 0)].into_iter().collect();
        assert_eq!(confusion_matrix(&truth, &truth, &partial, &classes), Err(MetricsError::Unmapped(1)));
    }

    #[test]
    fn undefined_rates_are_none() {
        let cm = ConfusionMatrix::new(vec!["a".into(), "b".into()], vec![vec![0, 0], vec![0, 4]]);
        let r = sensitivity_specificity(&cm, 0, TruthAxis::Rows).unwrap();
        assert_eq!(r.sensitivity, None);
        assert_eq!(r.specificity, Some(1.0));
        assert!(sensitivity_specificity(&cm, 2, TruthAxis::Rows).is_err());
    }

    #[test]
    fn macro_average_cases() {
        assert_eq!(macro_average(&[0.25]).unwrap(), 0.25);
        assert_eq!(macro_average(&[]), Err(MetricsError::EmptyAverage));
    }
}

//! Dataset representation, CSV ingestion, seeded splits and per-group views.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::rng;

/// Dense group identifier in `0..num_groups`.
pub type GroupId = usize;

/// Rows of (feature vector, group id, binary label). Immutable after
/// construction.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TabularDataset {
    features: Vec<f64>, // row-major, len n * dim
    dim: usize,
    groups: Vec<GroupId>,
    labels: Vec<u8>,
    num_groups: usize,
}

impl TabularDataset {
    pub fn new(
        features: Vec<f64>,
        dim: usize,
        groups: Vec<GroupId>,
        labels: Vec<u8>,
        num_groups: usize,
    ) -> Result<Self> {
        if dim == 0 {
            return Err(Error::Shape("feature dimension must be positive".into()));
        }
        if groups.is_empty() {
            return Err(Error::Data("dataset must contain at least one row".into()));
        }
        let n = groups.len();
        if labels.len() != n || features.len() != n * dim {
            return Err(Error::Shape(format!(
                "inconsistent lengths: {} features for dim {}, {} groups, {} labels",
                features.len(),
                dim,
                n,
                labels.len()
            )));
        }
        if num_groups == 0 {
            return Err(Error::Data("num_groups must be positive".into()));
        }
        if let Some(&g) = groups.iter().find(|&&g| g >= num_groups) {
            return Err(Error::Data(format!(
                "group id {g} out of range (num_groups = {num_groups})"
            )));
        }
        if labels.iter().any(|&y| y > 1) {
            return Err(Error::Data("labels must be 0 or 1".into()));
        }
        if features.iter().any(|v| !v.is_finite()) {
            return Err(Error::Data("features must be finite".into()));
        }
        Ok(Self {
            features,
            dim,
            groups,
            labels,
            num_groups,
        })
    }

    pub fn len(&self) -> usize {
        self.groups.len()
    }

    pub fn is_empty(&self) -> bool {
        false // n >= 1 is a construction invariant
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn num_groups(&self) -> usize {
        self.num_groups
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.features[i * self.dim..(i + 1) * self.dim]
    }

    pub fn groups(&self) -> &[GroupId] {
        &self.groups
    }

    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    /// New dataset from the given row indices (rows may repeat).
    pub fn select(&self, indices: &[usize]) -> Result<Self> {
        let mut features = Vec::with_capacity(indices.len() * self.dim);
        let mut groups = Vec::with_capacity(indices.len());
        let mut labels = Vec::with_capacity(indices.len());
        for &i in indices {
            features.extend_from_slice(self.row(i));
            groups.push(self.groups[i]);
            labels.push(self.labels[i]);
        }
        Self::new(features, self.dim, groups, labels, self.num_groups)
    }

    /// Count of rows per group, indexed by group id.
    pub fn group_sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0usize; self.num_groups];
        for &g in &self.groups {
            sizes[g] += 1;
        }
        sizes
    }
}

/// Scores and labels of one group, sorted by score descending.
#[derive(Debug, Clone, PartialEq)]
pub struct GroupView {
    group: GroupId,
    scores: Vec<f64>,
    labels: Vec<u8>,
    cum_pos: Vec<usize>, // cum_pos[k] = positives among the top k scores
}

impl GroupView {
    /// Builds a view from (score, label) pairs, sorting by score descending.
    pub fn from_pairs(group: GroupId, mut pairs: Vec<(f64, u8)>) -> Result<Self> {
        if pairs.is_empty() {
            return Err(Error::CalibrationInput(format!(
                "group {group} has no rows"
            )));
        }
        if pairs.iter().any(|(s, _)| !s.is_finite()) {
            return Err(Error::Data(format!("group {group} has non-finite scores")));
        }
        if pairs.iter().any(|&(_, y)| y > 1) {
            return Err(Error::Data(format!("group {group} has non-binary labels")));
        }
        pairs.sort_by(|a, b| b.0.partial_cmp(&a.0).unwrap());
        let scores: Vec<f64> = pairs.iter().map(|&(s, _)| s).collect();
        let labels: Vec<u8> = pairs.iter().map(|&(_, y)| y).collect();
        let mut cum_pos = Vec::with_capacity(labels.len() + 1);
        cum_pos.push(0);
        let mut acc = 0usize;
        for &y in &labels {
            acc += y as usize;
            cum_pos.push(acc);
        }
        Ok(Self {
            group,
            scores,
            labels,
            cum_pos,
        })
    }

    pub fn group(&self) -> GroupId {
        self.group
    }

    pub fn len(&self) -> usize {
        self.scores.len()
    }

    pub fn is_empty(&self) -> bool {
        false // n >= 1 is a construction invariant
    }

    /// Scores in descending order.
    pub fn scores(&self) -> &[f64] {
        &self.scores
    }

    /// Labels permuted in lockstep with `scores`.
    pub fn labels(&self) -> &[u8] {
        &self.labels
    }

    pub fn max_score(&self) -> f64 {
        self.scores[0]
    }

    pub fn min_score(&self) -> f64 {
        *self.scores.last().unwrap()
    }

    /// Number of rows with score >= t.
    pub(crate) fn count_at_least(&self, t: f64) -> usize {
        self.scores.partition_point(|&s| s >= t)
    }

    /// Positives among the top `k` rows.
    pub(crate) fn positives_in_top(&self, k: usize) -> usize {
        self.cum_pos[k]
    }

    /// Candidate thresholds: the distinct score values in ascending order,
    /// paired with the empirical PPV of thresholding at each (>= semantics,
    /// so duplicates are always selected together).
    pub(crate) fn candidates(&self) -> Vec<(f64, f64)> {
        let n = self.len();
        let mut out = Vec::new();
        // walk descending scores; a candidate ends at the last duplicate
        let mut k = 0;
        while k < n {
            let v = self.scores[k];
            let mut end = k + 1;
            while end < n && self.scores[end] == v {
                end += 1;
            }
            out.push((v, self.cum_pos[end] as f64 / end as f64));
            k = end;
        }
        out.reverse();
        out
    }
}

/// Fractions and seed for a train/calibration/test split.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SplitSpec {
    pub train_frac: f64,
    pub calib_frac: f64,
    pub test_frac: f64,
    /// When true, each part is an independent bootstrap sample (parts may
    /// overlap); when false, a seeded shuffle is partitioned.
    pub with_replacement: bool,
    pub seed: u64,
}

impl SplitSpec {
    fn validate(&self) -> Result<()> {
        for (name, f) in [
            ("train_frac", self.train_frac),
            ("calib_frac", self.calib_frac),
            ("test_frac", self.test_frac),
        ] {
            if !(f > 0.0 && f <= 1.0) {
                return Err(Error::Config(format!("{name} must be in (0, 1], got {f}")));
            }
        }
        let sum = self.train_frac + self.calib_frac + self.test_frac;
        if !self.with_replacement && sum > 1.0 + 1e-9 {
            return Err(Error::Config(format!(
                "fractions sum to {sum} > 1 for a split without replacement"
            )));
        }
        Ok(())
    }
}

/// Splits a dataset into (train, calibration, test) parts of sizes
/// `round(frac * n)`. Deterministic given the spec.
pub fn split(
    ds: &TabularDataset,
    spec: &SplitSpec,
) -> Result<(TabularDataset, TabularDataset, TabularDataset)> {
    spec.validate()?;
    let n = ds.len();
    let sizes: Vec<usize> = [spec.train_frac, spec.calib_frac, spec.test_frac]
        .iter()
        .map(|f| (f * n as f64).round() as usize)
        .collect();
    if sizes.contains(&0) {
        return Err(Error::Config(format!(
            "split sizes {sizes:?} include an empty part for n = {n}"
        )));
    }
    let mut rng = rng::rng_from_seed(spec.seed);
    let mut parts = Vec::with_capacity(3);
    if spec.with_replacement {
        for &size in &sizes {
            let idx: Vec<usize> = (0..size).map(|_| rng::index_below(&mut rng, n)).collect();
            parts.push(ds.select(&idx)?);
        }
    } else {
        let total: usize = sizes.iter().sum();
        if total > n {
            return Err(Error::Config(format!(
                "rounded split sizes {sizes:?} sum to {total} > n = {n}"
            )));
        }
        let mut order: Vec<usize> = (0..n).collect();
        rng::shuffle(&mut rng, &mut order);
        let mut start = 0;
        for &size in &sizes {
            parts.push(ds.select(&order[start..start + size])?);
            start += size;
        }
    }
    let test = parts.pop().unwrap();
    let calib = parts.pop().unwrap();
    let train = parts.pop().unwrap();
    Ok((train, calib, test))
}

/// Partitions `(score, label)` rows by group and sorts each view by score
/// descending. Every group in the dataset's metadata must have at least one
/// row.
pub fn group_views(ds: &TabularDataset, scores: &[f64]) -> Result<BTreeMap<GroupId, GroupView>> {
    if scores.len() != ds.len() {
        return Err(Error::Shape(format!(
            "{} scores for {} rows",
            scores.len(),
            ds.len()
        )));
    }
    let mut buckets: Vec<Vec<(f64, u8)>> = vec![Vec::new(); ds.num_groups()];
    for (i, (&g, &y)) in ds.groups().iter().zip(ds.labels()).enumerate() {
        buckets[g].push((scores[i], y));
    }
    let mut views = BTreeMap::new();
    for (g, pairs) in buckets.into_iter().enumerate() {
        views.insert(g, GroupView::from_pairs(g, pairs)?);
    }
    Ok(views)
}

/// Column roles for CSV ingestion.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CsvSchema {
    pub group_column: String,
    pub label_column: String,
    pub numeric_features: Vec<String>,
    pub categorical_features: Vec<String>,
}

impl CsvSchema {
    fn validate(&self) -> Result<()> {
        if self.numeric_features.is_empty() && self.categorical_features.is_empty() {
            return Err(Error::Schema(
                "at least one feature column is required".into(),
            ));
        }
        Ok(())
    }
}

/// A loaded CSV dataset plus the encodings chosen while loading it.
#[derive(Debug, Clone)]
pub struct LoadedCsv {
    pub dataset: TabularDataset,
    /// Raw group labels in dense-id order (id = index).
    pub group_names: Vec<String>,
    /// Name of each feature column after encoding, in dataset column order.
    pub feature_names: Vec<String>,
    /// Dropped zero-variance numeric columns and similar notices.
    pub warnings: Vec<String>,
}

/// Loads an RFC-4180 CSV with a header row. Numeric features are z-scored
/// with statistics from the file itself; categorical features are one-hot
/// encoded over the distinct values present; group labels are mapped to
/// dense ids in first-appearance order.
pub fn load_csv(path: &Path, schema: &CsvSchema) -> Result<LoadedCsv> {
    schema.validate()?;
    let mut reader = csv::Reader::from_path(path)?;
    let headers = reader.headers()?.clone();
    let col = |name: &str| -> Result<usize> {
        headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::Schema(format!("column {name:?} not found in header")))
    };
    let group_idx = col(&schema.group_column)?;
    let label_idx = col(&schema.label_column)?;
    let numeric_idx: Vec<usize> = schema
        .numeric_features
        .iter()
        .map(|c| col(c))
        .collect::<Result<_>>()?;
    let categorical_idx: Vec<usize> = schema
        .categorical_features
        .iter()
        .map(|c| col(c))
        .collect::<Result<_>>()?;

    let mut groups: Vec<GroupId> = Vec::new();
    let mut labels: Vec<u8> = Vec::new();
    let mut numeric_raw: Vec<Vec<f64>> = vec![Vec::new(); numeric_idx.len()];
    let mut categorical_raw: Vec<Vec<usize>> = vec![Vec::new(); categorical_idx.len()];
    let mut group_names: Vec<String> = Vec::new();
    let mut categories: Vec<Vec<String>> = vec![Vec::new(); categorical_idx.len()];

    for (row_no, record) in reader.records().enumerate() {
        let record = record?;
        let field = |i: usize| -> Result<&str> {
            record
                .get(i)
                .ok_or_else(|| Error::Data(format!("row {}: missing field {i}", row_no + 2)))
        };
        let label_raw = field(label_idx)?.trim();
        let label = match label_raw {
            "0" => 0u8,
            "1" => 1u8,
            other => {
                return Err(Error::Data(format!(
                    "row {}: label must be 0 or 1, got {other:?}",
                    row_no + 2
                )))
            }
        };
        let group_raw = field(group_idx)?.trim().to_string();
        let gid = match group_names.iter().position(|g| *g == group_raw) {
            Some(id) => id,
            None => {
                group_names.push(group_raw);
                group_names.len() - 1
            }
        };
        for (k, &i) in numeric_idx.iter().enumerate() {
            let raw = field(i)?.trim();
            let v: f64 = raw.parse().map_err(|_| {
                Error::Data(format!(
                    "row {}: column {:?} is not numeric: {raw:?}",
                    row_no + 2,
                    schema.numeric_features[k]
                ))
            })?;
            numeric_raw[k].push(v);
        }
        for (k, &i) in categorical_idx.iter().enumerate() {
            let raw = field(i)?.trim().to_string();
            let cid = match categories[k].iter().position(|c| *c == raw) {
                Some(id) => id,
                None => {
                    categories[k].push(raw);
                    categories[k].len() - 1
                }
            };
            categorical_raw[k].push(cid);
        }
        groups.push(gid);
        labels.push(label);
    }

    let n = groups.len();
    if n == 0 {
        return Err(Error::Data("CSV contains no data rows".into()));
    }

    // z-score numeric columns; drop constants
    let mut warnings = Vec::new();
    let mut kept_numeric: Vec<(usize, f64, f64)> = Vec::new(); // (raw col index, mean, std)
    for (k, col) in numeric_raw.iter().enumerate() {
        let mean = col.iter().sum::<f64>() / n as f64;
        let var = col.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / n as f64;
        let std = var.sqrt();
        if std > 0.0 {
            kept_numeric.push((k, mean, std));
        } else {
            warnings.push(format!(
                "dropped zero-variance numeric column {:?}",
                schema.numeric_features[k]
            ));
        }
    }

    let mut feature_names: Vec<String> = kept_numeric
        .iter()
        .map(|&(k, _, _)| schema.numeric_features[k].clone())
        .collect();
    for (k, cats) in categories.iter().enumerate() {
        for c in cats {
            feature_names.push(format!("{}={}", schema.categorical_features[k], c));
        }
    }

    let dim = feature_names.len();
    if dim == 0 {
        return Err(Error::Data(
            "no usable feature columns after encoding".into(),
        ));
    }
    let mut features = Vec::with_capacity(n * dim);
    for row in 0..n {
        for &(k, mean, std) in &kept_numeric {
            features.push((numeric_raw[k][row] - mean) / std);
        }
        for (k, cats) in categories.iter().enumerate() {
            let hot = categorical_raw[k][row];
            for c in 0..cats.len() {
                features.push(if c == hot { 1.0 } else { 0.0 });
            }
        }
    }

    let num_groups = group_names.len();
    let dataset = TabularDataset::new(features, dim, groups, labels, num_groups)?;
    Ok(LoadedCsv {
        dataset,
        group_names,
        feature_names,
        warnings,
    })
}

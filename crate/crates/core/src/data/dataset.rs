use std::collections::HashMap;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use ndarray::{Array2, ArrayView2};

use super::CandidateSet;
use crate::{Error, Result};

/// Fully labeled data: `n x d` features and labels in `0..k`.
#[derive(Clone, Debug)]
pub struct LabeledDataset {
    pub features: Array2<f64>,
    pub labels: Vec<usize>,
    pub k: usize,
    /// Original label strings, indexed by class.
    pub class_names: Vec<String>,
}

impl LabeledDataset {
    pub fn new(features: Array2<f64>, labels: Vec<usize>, k: usize) -> Result<Self> {
        let class_names = (0..k).map(|c| c.to_string()).collect();
        Self::with_names(features, labels, class_names)
    }

    pub fn with_names(
        features: Array2<f64>,
        labels: Vec<usize>,
        class_names: Vec<String>,
    ) -> Result<Self> {
        let k = class_names.len();
        if features.nrows() == 0 {
            return Err(Error::EmptyDataset);
        }
        if features.nrows() != labels.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} feature rows but {} labels",
                features.nrows(),
                labels.len()
            )));
        }
        if k < 2 {
            return Err(Error::InvalidArgument(format!("need at least 2 classes, got {k}")));
        }
        if features.ncols() == 0 {
            return Err(Error::InvalidArgument("feature dimension is zero".into()));
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= k) {
            return Err(Error::InvalidArgument(format!("label {bad} outside 0..{k}")));
        }
        Ok(LabeledDataset {
            features,
            labels,
            k,
            class_names,
        })
    }

    pub fn n(&self) -> usize {
        self.features.nrows()
    }

    pub fn d(&self) -> usize {
        self.features.ncols()
    }

    pub fn class_index(&self, name: &str) -> Option<usize> {
        self.class_names.iter().position(|c| c == name)
    }
}

/// Partially labeled data: every row carries a set of candidate labels over `k` known classes.
#[derive(Clone, Debug)]
pub struct PartialDataset {
    pub features: Array2<f64>,
    pub candidates: Vec<CandidateSet>,
    pub k: usize,
}

impl PartialDataset {
    pub fn new(features: Array2<f64>, candidates: Vec<CandidateSet>, k: usize) -> Result<Self> {
        if features.nrows() != candidates.len() {
            return Err(Error::ShapeMismatch(format!(
                "{} feature rows but {} candidate sets",
                features.nrows(),
                candidates.len()
            )));
        }
        for (i, s) in candidates.iter().enumerate() {
            if s.universe() != k {
                return Err(Error::InvalidArgument(format!(
                    "row {i}: candidate universe {} != {k}",
                    s.universe()
                )));
            }
            if s.is_empty() {
                return Err(Error::EmptyCandidateSet);
            }
        }
        Ok(PartialDataset {
            features,
            candidates,
            k,
        })
    }

    pub fn n(&self) -> usize {
        self.features.nrows()
    }

    pub fn d(&self) -> usize {
        self.features.ncols()
    }
}

/// Reads a CSV with a header row; `label_column` names the class column and
/// every other column must be numeric.
///
/// Labels are mapped to dense indices in first-seen order.
pub fn load_csv(path: impl AsRef<Path>, label_column: &str) -> Result<LabeledDataset> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
    let headers = reader.headers()?.clone();
    let label_idx = headers
        .iter()
        .position(|h| h.trim() == label_column)
        .ok_or_else(|| Error::InvalidArgument(format!("no label column `{label_column}`")))?;
    let feature_names: Vec<String> = headers
        .iter()
        .enumerate()
        .filter(|&(i, _)| i != label_idx)
        .map(|(_, h)| h.trim().to_string())
        .collect();

    let mut values = Vec::new();
    let mut labels = Vec::new();
    let mut names: Vec<String> = Vec::new();
    let mut index: HashMap<String, usize> = HashMap::new();
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        let mut col = 0;
        for (i, cell) in record.iter().enumerate() {
            if i == label_idx {
                continue;
            }
            let v = parse_feature(cell, row, &feature_names[col])?;
            values.push(v);
            col += 1;
        }
        let raw = record.get(label_idx).unwrap_or("").trim().to_string();
        let next = names.len();
        let id = *index.entry(raw.clone()).or_insert_with(|| {
            names.push(raw);
            next
        });
        labels.push(id);
    }
    if labels.is_empty() {
        return Err(Error::EmptyDataset);
    }
    let features = Array2::from_shape_vec((labels.len(), feature_names.len()), values)
        .map_err(|e| Error::ShapeMismatch(e.to_string()))?;
    LabeledDataset::with_names(features, labels, names)
}

fn parse_feature(cell: &str, row: usize, column: &str) -> Result<f64> {
    match cell.trim().parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(Error::NonNumericFeature {
            row,
            column: column.to_string(),
            value: cell.to_string(),
        }),
    }
}

/// Reads a headered, all-numeric CSV into a matrix.
pub fn read_features_csv(path: impl AsRef<Path>) -> Result<Array2<f64>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut reader = csv::ReaderBuilder::new().has_headers(true).from_reader(file);
    let headers: Vec<String> = reader.headers()?.iter().map(|h| h.to_string()).collect();
    let mut values = Vec::new();
    let mut rows = 0;
    for (row, record) in reader.records().enumerate() {
        let record = record?;
        for (i, cell) in record.iter().enumerate() {
            values.push(parse_feature(cell, row, &headers[i])?);
        }
        rows += 1;
    }
    if rows == 0 {
        return Err(Error::EmptyDataset);
    }
    Array2::from_shape_vec((rows, headers.len()), values)
        .map_err(|e| Error::ShapeMismatch(e.to_string()))
}

pub fn write_features_csv(path: impl AsRef<Path>, features: ArrayView2<f64>) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path)?;
    w.write_record((0..features.ncols()).map(|j| format!("f{j}")))?;
    for row in features.rows() {
        w.write_record(row.iter().map(|v| v.to_string()))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// Writes features plus a trailing `label` column holding `class_names[label]`.
pub fn write_labeled_csv(
    path: impl AsRef<Path>,
    features: ArrayView2<f64>,
    labels: &[usize],
    class_names: &[String],
) -> Result<()> {
    let path = path.as_ref();
    let mut w = csv::Writer::from_path(path)?;
    let mut header: Vec<String> = (0..features.ncols()).map(|j| format!("f{j}")).collect();
    header.push("label".into());
    w.write_record(&header)?;
    for (row, &l) in features.rows().into_iter().zip(labels) {
        let mut rec: Vec<String> = row.iter().map(|v| v.to_string()).collect();
        rec.push(class_names[l].clone());
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

/// One line per row, candidate labels as comma-separated integers.
pub fn write_candidates(path: impl AsRef<Path>, candidates: &[CandidateSet]) -> Result<()> {
    let path = path.as_ref();
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    let mut w = BufWriter::new(file);
    for s in candidates {
        let line = s.iter().map(|l| l.to_string()).collect::<Vec<_>>().join(",");
        writeln!(w, "{line}").map_err(|e| Error::io(path, e))?;
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn read_candidates(path: impl AsRef<Path>, k: usize) -> Result<Vec<CandidateSet>> {
    let path = path.as_ref();
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        let labels = line
            .split(',')
            .map(str::trim)
            .filter(|s| !s.is_empty())
            .map(|s| {
                s.parse::<usize>().map_err(|_| {
                    Error::InvalidArgument(format!("line {}: bad candidate label {s:?}", i + 1))
                })
            })
            .collect::<Result<Vec<_>>>()?;
        out.push(CandidateSet::from_labels(k, &labels)?);
    }
    Ok(out)
}

pub fn write_partial(
    features_path: impl AsRef<Path>,
    candidates_path: impl AsRef<Path>,
    data: &PartialDataset,
) -> Result<()> {
    write_features_csv(features_path, data.features.view())?;
    write_candidates(candidates_path, &data.candidates)
}

pub fn read_partial(
    features_path: impl AsRef<Path>,
    candidates_path: impl AsRef<Path>,
    k: usize,
) -> Result<PartialDataset> {
    let features = read_features_csv(features_path)?;
    let candidates = read_candidates(candidates_path, k)?;
    PartialDataset::new(features, candidates, k)
}

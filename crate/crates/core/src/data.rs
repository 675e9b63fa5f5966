//! Datasets: CSV ingestion/export, seeded Gaussian-blob generation,
//! train/test splitting and minibatch index streams.

use std::collections::HashMap;
use std::path::Path;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;
use crate::rng::{seeded_rng, Gaussian};

#[derive(Debug, Clone, PartialEq)]
pub struct Dataset {
    features: Matrix,
    labels: Vec<usize>,
    class_count: usize,
    class_names: Option<Vec<String>>,
}

impl Dataset {
    pub fn new(
        features: Matrix,
        labels: Vec<usize>,
        class_count: usize,
        class_names: Option<Vec<String>>,
    ) -> Result<Self> {
        if labels.is_empty() {
            return Err(Error::EmptyInput("dataset has no samples".into()));
        }
        if features.rows() != labels.len() {
            return Err(Error::Shape(format!(
                "{} feature rows for {} labels",
                features.rows(),
                labels.len()
            )));
        }
        if let Some(&bad) = labels.iter().find(|&&y| y >= class_count) {
            return Err(Error::Index(format!(
                "label {bad} with {class_count} classes"
            )));
        }
        if let Some(names) = &class_names {
            if names.len() != class_count {
                return Err(Error::InvalidConfig(format!(
                    "{} class names for {class_count} classes",
                    names.len()
                )));
            }
        }
        Ok(Self {
            features,
            labels,
            class_count,
            class_names,
        })
    }

    pub fn features(&self) -> &Matrix {
        &self.features
    }

    pub fn labels(&self) -> &[usize] {
        &self.labels
    }

    pub fn class_count(&self) -> usize {
        self.class_count
    }

    pub fn class_names(&self) -> Option<&[String]> {
        self.class_names.as_deref()
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.features.cols()
    }

    /// Rows at `indices`, keeping class count and names.
    pub fn subset(&self, indices: &[usize]) -> Result<Dataset> {
        Dataset::new(
            self.features.select_rows(indices),
            indices.iter().map(|&i| self.labels[i]).collect(),
            self.class_count,
            self.class_names.clone(),
        )
    }

    /// CSV text: header `x0,…,x{d-1},label`, label last, class names when known.
    pub fn to_csv_string(&self) -> String {
        let mut out = String::new();
        for j in 0..self.dim() {
            out.push_str(&format!("x{j},"));
        }
        out.push_str("label\n");
        for (row, &y) in self.features.iter_rows().zip(&self.labels) {
            for v in row {
                out.push_str(&format!("{v},"));
            }
            match &self.class_names {
                Some(names) => out.push_str(&names[y]),
                None => out.push_str(&y.to_string()),
            }
            out.push('\n');
        }
        out
    }
}

/// Which CSV column holds the class label.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum LabelColumn {
    Name(String),
    Index(usize),
}

impl std::str::FromStr for LabelColumn {
    type Err = std::convert::Infallible;

    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        Ok(match s.parse::<usize>() {
            Ok(i) => LabelColumn::Index(i),
            Err(_) => LabelColumn::Name(s.to_string()),
        })
    }
}

impl Default for LabelColumn {
    fn default() -> Self {
        LabelColumn::Name("label".into())
    }
}

/// Reads a comma-separated file with an optional header row.
///
/// Labels that are all non-negative integers are used directly as class
/// indices. Otherwise they are treated as names and numbered in order of first
/// appearance, unless `class_names` fixes the mapping.
pub fn load_csv(
    path: impl AsRef<Path>,
    label_column: &LabelColumn,
    class_names: Option<&[String]>,
) -> Result<Dataset> {
    let path = path.as_ref();
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_csv(&text, label_column, class_names)
}

pub fn parse_csv(
    text: &str,
    label_column: &LabelColumn,
    class_names: Option<&[String]>,
) -> Result<Dataset> {
    let mut reader = csv::ReaderBuilder::new()
        .has_headers(false)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(text.as_bytes());
    let mut rows: Vec<(usize, Vec<String>)> = Vec::new();
    for (i, rec) in reader.records().enumerate() {
        let rec = rec.map_err(|e| Error::Parse {
            row: i + 1,
            message: e.to_string(),
        })?;
        if rec.iter().all(str::is_empty) {
            continue;
        }
        rows.push((i + 1, rec.iter().map(str::to_string).collect()));
    }
    let Some((_, first)) = rows.first() else {
        return Err(Error::EmptyInput("CSV file has no rows".into()));
    };
    let width = first.len();

    let (label_idx, has_header) = match label_column {
        LabelColumn::Name(name) => {
            let idx = first
                .iter()
                .position(|h| h == name)
                .ok_or_else(|| Error::Parse {
                    row: 1,
                    message: format!("no column named `{name}` in header"),
                })?;
            (idx, true)
        }
        LabelColumn::Index(idx) => {
            if *idx >= width {
                return Err(Error::Parse {
                    row: 1,
                    message: format!("label column {idx} but rows have {width} columns"),
                });
            }
            let header = first
                .iter()
                .enumerate()
                .any(|(j, cell)| j != *idx && cell.parse::<f64>().is_err());
            (*idx, header)
        }
    };
    let body = &rows[usize::from(has_header)..];
    if body.is_empty() {
        return Err(Error::EmptyInput(
            "CSV file has a header but no data rows".into(),
        ));
    }

    let mut features = Vec::with_capacity(body.len() * (width - 1));
    let mut raw_labels = Vec::with_capacity(body.len());
    for (line, cells) in body {
        if cells.len() != width {
            return Err(Error::Parse {
                row: *line,
                message: format!("expected {width} columns, found {}", cells.len()),
            });
        }
        for (j, cell) in cells.iter().enumerate() {
            if j == label_idx {
                raw_labels.push(cell.as_str());
                continue;
            }
            let v: f64 = cell.parse().map_err(|_| Error::Parse {
                row: *line,
                message: format!("column {j}: `{cell}` is not a number"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    row: *line,
                    message: format!("column {j}: non-finite value `{cell}`"),
                });
            }
            features.push(v);
        }
    }
    let lines: Vec<usize> = body.iter().map(|(l, _)| *l).collect();
    let (labels, class_count, names) = map_labels(&raw_labels, &lines, class_names)?;
    let features = Matrix::from_vec(body.len(), width - 1, features)?;
    Dataset::new(features, labels, class_count, names)
}

type LabelMapping = (Vec<usize>, usize, Option<Vec<String>>);

fn map_labels(
    raw: &[&str],
    lines: &[usize],
    class_names: Option<&[String]>,
) -> Result<LabelMapping> {
    if let Some(names) = class_names {
        let lookup: HashMap<&str, usize> = names
            .iter()
            .enumerate()
            .map(|(i, n)| (n.as_str(), i))
            .collect();
        let labels = raw
            .iter()
            .zip(lines)
            .map(|(cell, &line)| {
                lookup
                    .get(cell)
                    .copied()
                    .or_else(|| cell.parse::<usize>().ok().filter(|&i| i < names.len()))
                    .ok_or_else(|| Error::Parse {
                        row: line,
                        message: format!("label `{cell}` is not one of the class names"),
                    })
            })
            .collect::<Result<Vec<_>>>()?;
        return Ok((labels, names.len(), Some(names.to_vec())));
    }

    let numeric: Option<Vec<usize>> = raw.iter().map(|c| c.parse::<usize>().ok()).collect();
    if let Some(labels) = numeric {
        let k = labels.iter().max().map_or(0, |m| m + 1);
        return Ok((labels, k, None));
    }

    let mut order: Vec<String> = Vec::new();
    let mut lookup: HashMap<&str, usize> = HashMap::new();
    let mut labels = Vec::with_capacity(raw.len());
    for (cell, &line) in raw.iter().zip(lines) {
        if cell.is_empty() {
            return Err(Error::Parse {
                row: line,
                message: "empty label".into(),
            });
        }
        let next = order.len();
        let id = *lookup.entry(cell).or_insert_with(|| {
            order.push(cell.to_string());
            next
        });
        labels.push(id);
    }
    let k = order.len();
    Ok((labels, k, Some(order)))
}

pub fn save_csv(dataset: &Dataset, path: impl AsRef<Path>) -> Result<()> {
    crate::io::write_atomic(path.as_ref(), dataset.to_csv_string().as_bytes())
}

/// Isotropic Gaussian clusters around seeded centers.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlobSpec {
    pub classes: usize,
    pub per_class: usize,
    pub dim: usize,
    /// Center coordinates are uniform on `[-center_spread, center_spread)`.
    pub center_spread: f64,
    pub cluster_std: f64,
    pub seed: u64,
}

impl BlobSpec {
    pub fn validate(&self) -> Result<()> {
        if self.classes == 0 || self.per_class == 0 || self.dim == 0 {
            return Err(Error::InvalidConfig(
                "blob classes, per_class and dim must all be >= 1".into(),
            ));
        }
        if !(self.center_spread > 0.0 && self.center_spread.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "center_spread must be positive, got {}",
                self.center_spread
            )));
        }
        if !(self.cluster_std > 0.0 && self.cluster_std.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "cluster_std must be positive, got {}",
                self.cluster_std
            )));
        }
        Ok(())
    }
}

/// Cluster centers drawn by [`gen_blobs`] for `spec`, one row per class.
pub fn blob_centers(spec: &BlobSpec) -> Result<Matrix> {
    spec.validate()?;
    let mut gauss = Gaussian::new(seeded_rng(spec.seed));
    Ok(draw_centers(spec, &mut gauss))
}

fn draw_centers(spec: &BlobSpec, gauss: &mut Gaussian) -> Matrix {
    let data = (0..spec.classes * spec.dim)
        .map(|_| spec.center_spread * (2.0 * gauss.uniform() - 1.0))
        .collect();
    Matrix::from_vec(spec.classes, spec.dim, data).expect("finite centers")
}

fn draw_samples(
    spec: &BlobSpec,
    centers: &Matrix,
    per_class: usize,
    gauss: &mut Gaussian,
) -> Result<Dataset> {
    let n = spec.classes * per_class;
    let mut features = Vec::with_capacity(n * spec.dim);
    let mut labels = Vec::with_capacity(n);
    for c in 0..spec.classes {
        let center = centers.row(c);
        for _ in 0..per_class {
            features.extend(
                center
                    .iter()
                    .map(|&m| m + spec.cluster_std * gauss.standard()),
            );
            labels.push(c);
        }
    }
    Dataset::new(
        Matrix::from_vec(n, spec.dim, features)?,
        labels,
        spec.classes,
        None,
    )
}

/// `classes × per_class` samples, grouped by class in label order.
pub fn gen_blobs(spec: &BlobSpec) -> Result<Dataset> {
    spec.validate()?;
    let mut gauss = Gaussian::new(seeded_rng(spec.seed));
    let centers = draw_centers(spec, &mut gauss);
    draw_samples(spec, &centers, spec.per_class, &mut gauss)
}

/// Fresh samples around existing `centers` (one row per class) with the
/// spec's noise level, drawn from an independent stream seeded by `noise_seed`.
pub fn sample_blobs(
    spec: &BlobSpec,
    centers: &Matrix,
    per_class: usize,
    noise_seed: u64,
) -> Result<Dataset> {
    spec.validate()?;
    if centers.shape() != (spec.classes, spec.dim) {
        return Err(Error::Shape(format!(
            "centers are {:?}, spec needs {:?}",
            centers.shape(),
            (spec.classes, spec.dim)
        )));
    }
    if per_class == 0 {
        return Err(Error::InvalidConfig("per_class must be >= 1".into()));
    }
    let mut gauss = Gaussian::new(seeded_rng(noise_seed));
    draw_samples(spec, centers, per_class, &mut gauss)
}

/// Seeded permutation followed by a split; the test part holds
/// `round(n·test_fraction)` samples, clamped so both parts are non-empty.
pub fn shuffle_split(
    dataset: &Dataset,
    test_fraction: f64,
    seed: u64,
) -> Result<(Dataset, Dataset)> {
    if !(test_fraction > 0.0 && test_fraction < 1.0) {
        return Err(Error::InvalidConfig(format!(
            "test fraction must lie in (0, 1), got {test_fraction}"
        )));
    }
    let n = dataset.len();
    if n < 2 {
        return Err(Error::InvalidConfig(format!("cannot split {n} sample(s)")));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut seeded_rng(seed));
    let n_test = ((n as f64 * test_fraction).round() as usize).clamp(1, n - 1);
    let (test_idx, train_idx) = order.split_at(n_test);
    Ok((dataset.subset(train_idx)?, dataset.subset(test_idx)?))
}

/// Seeded permutation of `0..n` cut into chunks of `batch_size` (last may be short).
pub fn minibatch_indices(n: usize, batch_size: usize, epoch_seed: u64) -> Vec<Vec<usize>> {
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut seeded_rng(epoch_seed));
    order
        .chunks(batch_size.max(1))
        .map(<[usize]>::to_vec)
        .collect()
}

pub fn minibatches(dataset: &Dataset, batch_size: usize, epoch_seed: u64) -> Vec<Vec<usize>> {
    minibatch_indices(dataset.len(), batch_size, epoch_seed)
}

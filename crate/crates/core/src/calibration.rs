//! Confidence calibration: equal-width binning, per-bin accuracy and
//! confidence, expected calibration error, reliability rows and a per-class
//! accuracy/confidence report.
//!
//! Bins are half-open `[i/Q, (i+1)/Q)`, except that a confidence of exactly
//! `1.0` belongs to the top bin. Bin accuracy is the fraction of predictions
//! whose argmax equals the true label.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::matrix::Matrix;

pub const DEFAULT_BINS: usize = 10;

/// How bins are weighted when averaging `|acc − con|`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum EceWeighting {
    /// `Σ (|C_i| / n)·|acc − con|`, an expectation over samples.
    #[default]
    Standard,
    /// `Σ (|C_i| / Q)·|acc − con|`, the bin-count normalization. Not bounded by 1.
    Paper,
}

impl std::str::FromStr for EceWeighting {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "standard" => Ok(EceWeighting::Standard),
            "paper" => Ok(EceWeighting::Paper),
            other => Err(Error::InvalidConfig(format!(
                "unknown ECE weighting `{other}`"
            ))),
        }
    }
}

impl std::fmt::Display for EceWeighting {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            EceWeighting::Standard => "standard",
            EceWeighting::Paper => "paper",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PredictionRecord {
    pub probs: Vec<f64>,
    pub predicted: usize,
    pub confidence: f64,
    pub true_label: usize,
}

impl PredictionRecord {
    /// Argmax with ties resolved to the lowest index.
    pub fn new(probs: Vec<f64>, true_label: usize) -> Result<Self> {
        if probs.is_empty() {
            return Err(Error::EmptyInput("prediction with no classes".into()));
        }
        if true_label >= probs.len() {
            return Err(Error::Index(format!(
                "label {true_label} with {} classes",
                probs.len()
            )));
        }
        let mut predicted = 0;
        for (k, &p) in probs.iter().enumerate().skip(1) {
            if p > probs[predicted] {
                predicted = k;
            }
        }
        let confidence = probs[predicted];
        Ok(Self {
            probs,
            predicted,
            confidence,
            true_label,
        })
    }

    #[inline]
    pub fn is_correct(&self) -> bool {
        self.predicted == self.true_label
    }
}

pub fn make_records(probs: &Matrix, labels: &[usize]) -> Result<Vec<PredictionRecord>> {
    if probs.rows() != labels.len() {
        return Err(Error::Shape(format!(
            "{} probability rows for {} labels",
            probs.rows(),
            labels.len()
        )));
    }
    probs
        .iter_rows()
        .zip(labels)
        .map(|(row, &y)| PredictionRecord::new(row.to_vec(), y))
        .collect()
}

#[inline]
fn edge(i: usize, q: usize) -> f64 {
    i as f64 / q as f64
}

/// Bin holding `confidence` among `q` equal-width bins on `[0, 1]`.
pub fn bin_index(confidence: f64, q: usize) -> usize {
    let mut idx = ((confidence * q as f64).floor().max(0.0) as usize).min(q - 1);
    // Settle rounding near edges against the same edges that are reported.
    while idx > 0 && confidence < edge(idx, q) {
        idx -= 1;
    }
    while idx + 1 < q && confidence >= edge(idx + 1, q) {
        idx += 1;
    }
    idx
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BinStats {
    pub lo: f64,
    pub hi: f64,
    pub count: usize,
    pub acc: f64,
    pub con: f64,
}

/// `Q` equal-width confidence bins.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<BinStats>", into = "Vec<BinStats>")]
pub struct CalibrationBins {
    bins: Vec<BinStats>,
}

impl From<CalibrationBins> for Vec<BinStats> {
    fn from(b: CalibrationBins) -> Self {
        b.bins
    }
}

impl TryFrom<Vec<BinStats>> for CalibrationBins {
    type Error = Error;

    fn try_from(bins: Vec<BinStats>) -> Result<Self> {
        let q = bins.len();
        if q == 0 {
            return Err(Error::InvalidConfig("at least one bin required".into()));
        }
        for (i, b) in bins.iter().enumerate() {
            if b.lo != edge(i, q) || b.hi != edge(i + 1, q) {
                return Err(Error::InvalidConfig(format!(
                    "bin {i} spans [{}, {}), expected [{}, {})",
                    b.lo,
                    b.hi,
                    edge(i, q),
                    edge(i + 1, q)
                )));
            }
            if !(0.0..=1.0).contains(&b.acc) || !(0.0..=1.0).contains(&b.con) {
                return Err(Error::InvalidConfig(format!(
                    "bin {i} accuracy/confidence outside [0, 1]"
                )));
            }
        }
        Ok(Self { bins })
    }
}

impl CalibrationBins {
    pub fn q(&self) -> usize {
        self.bins.len()
    }

    pub fn n(&self) -> usize {
        self.bins.iter().map(|b| b.count).sum()
    }

    pub fn bins(&self) -> &[BinStats] {
        &self.bins
    }

    /// Prediction counts per bin.
    pub fn histogram(&self) -> Vec<usize> {
        self.bins.iter().map(|b| b.count).collect()
    }
}

pub fn bin_predictions(records: &[PredictionRecord], q: usize) -> Result<CalibrationBins> {
    if q == 0 {
        return Err(Error::InvalidConfig("bin count Q must be >= 1".into()));
    }
    let mut counts = vec![0usize; q];
    let mut correct = vec![0usize; q];
    let mut conf_sum = vec![0.0; q];
    for r in records {
        let i = bin_index(r.confidence, q);
        counts[i] += 1;
        correct[i] += usize::from(r.is_correct());
        conf_sum[i] += r.confidence;
    }
    let bins = (0..q)
        .map(|i| {
            let (acc, con) = if counts[i] == 0 {
                (0.0, 0.0)
            } else {
                (
                    correct[i] as f64 / counts[i] as f64,
                    conf_sum[i] / counts[i] as f64,
                )
            };
            BinStats {
                lo: edge(i, q),
                hi: edge(i + 1, q),
                count: counts[i],
                acc,
                con,
            }
        })
        .collect();
    Ok(CalibrationBins { bins })
}

pub fn ece(bins: &CalibrationBins, weighting: EceWeighting) -> Result<f64> {
    let n = bins.n();
    if n == 0 {
        return Err(Error::EmptyInput("ECE of zero predictions".into()));
    }
    let denom = match weighting {
        EceWeighting::Standard => n as f64,
        EceWeighting::Paper => bins.q() as f64,
    };
    Ok(bins
        .bins
        .iter()
        .map(|b| (b.count as f64 / denom) * (b.acc - b.con).abs())
        .sum())
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReliabilityRow {
    pub bin_mid: f64,
    pub acc: f64,
    pub con: f64,
    pub count: usize,
}

/// One row per bin, empty bins included.
pub fn reliability_rows(bins: &CalibrationBins) -> Vec<ReliabilityRow> {
    let q = bins.q() as f64;
    bins.bins
        .iter()
        .enumerate()
        .map(|(i, b)| ReliabilityRow {
            bin_mid: (i as f64 + 0.5) / q,
            acc: b.acc,
            con: b.con,
            count: b.count,
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassCalibrationRow {
    pub class: usize,
    pub count: usize,
    #[serde(rename = "acc")]
    pub accuracy: f64,
    #[serde(rename = "conf")]
    pub mean_confidence: f64,
}

/// Mean `|conf − acc|` over classes that have samples.
pub fn avg_class_gap(rows: &[ClassCalibrationRow]) -> f64 {
    let populated: Vec<_> = rows.iter().filter(|r| r.count > 0).collect();
    if populated.is_empty() {
        return 0.0;
    }
    populated
        .iter()
        .map(|r| (r.mean_confidence - r.accuracy).abs())
        .sum::<f64>()
        / populated.len() as f64
}

/// Accuracy and mean confidence grouped by true label.
pub fn per_class_report(
    records: &[PredictionRecord],
    k: usize,
) -> Result<(Vec<ClassCalibrationRow>, f64)> {
    if k == 0 {
        return Err(Error::InvalidConfig("class count K must be >= 1".into()));
    }
    let mut counts = vec![0usize; k];
    let mut correct = vec![0usize; k];
    let mut conf = vec![0.0; k];
    for r in records {
        let c = r.true_label;
        if c >= k {
            return Err(Error::Index(format!("label {c} with {k} classes")));
        }
        counts[c] += 1;
        correct[c] += usize::from(r.is_correct());
        conf[c] += r.confidence;
    }
    let rows: Vec<_> = (0..k)
        .map(|c| {
            let (accuracy, mean_confidence) = if counts[c] == 0 {
                (0.0, 0.0)
            } else {
                (
                    correct[c] as f64 / counts[c] as f64,
                    conf[c] / counts[c] as f64,
                )
            };
            ClassCalibrationRow {
                class: c,
                count: counts[c],
                accuracy,
                mean_confidence,
            }
        })
        .collect();
    let gap = avg_class_gap(&rows);
    Ok((rows, gap))
}

/// Identifies the run a report was produced from.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunInfo {
    pub mode: String,
    #[serde(rename = "M")]
    pub members: usize,
    pub lambda: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationReport {
    pub accuracy: f64,
    pub ece: f64,
    pub q: usize,
    pub weighting: EceWeighting,
    pub bins: CalibrationBins,
    pub per_class: Vec<ClassCalibrationRow>,
    pub avg_class_gap: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub run: Option<RunInfo>,
}

impl EvaluationReport {
    pub fn histogram(&self) -> Vec<usize> {
        self.bins.histogram()
    }

    pub fn reliability_rows(&self) -> Vec<ReliabilityRow> {
        reliability_rows(&self.bins)
    }

    /// Checks that the stored ECE and bin count agree with the stored bins.
    pub fn check_consistency(&self) -> Result<()> {
        if self.bins.q() != self.q {
            return Err(Error::InvalidConfig(format!(
                "q = {} but {} bins present",
                self.q,
                self.bins.q()
            )));
        }
        let recomputed = ece(&self.bins, self.weighting)?;
        if recomputed != self.ece {
            return Err(Error::InvalidConfig(format!(
                "stored ece {} differs from bins ({recomputed})",
                self.ece
            )));
        }
        Ok(())
    }
}

/// Records, bins, ECE, per-class rows and accuracy for one probability matrix.
pub fn evaluate(
    probs: &Matrix,
    labels: &[usize],
    q: usize,
    k: usize,
    weighting: EceWeighting,
) -> Result<EvaluationReport> {
    if labels.is_empty() {
        return Err(Error::EmptyInput("no predictions to evaluate".into()));
    }
    if probs.cols() != k {
        return Err(Error::Shape(format!(
            "probabilities have {} columns for {k} classes",
            probs.cols()
        )));
    }
    let records = make_records(probs, labels)?;
    let bins = bin_predictions(&records, q)?;
    let ece = ece(&bins, weighting)?;
    let (per_class, avg_class_gap) = per_class_report(&records, k)?;
    let correct = records.iter().filter(|r| r.is_correct()).count();
    Ok(EvaluationReport {
        accuracy: correct as f64 / records.len() as f64,
        ece,
        q,
        weighting,
        bins,
        per_class,
        avg_class_gap,
        run: None,
    })
}

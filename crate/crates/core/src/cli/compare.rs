//! Side-by-side accuracy/ECE table over several evaluation reports, with
//! optional per-class `acc (conf)` columns.

use std::path::Path;

use crate::calibration::{ClassCalibrationRow, EvaluationReport};

pub const DEFAULT_FLAG_THRESHOLD: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ConfidenceFlag {
    Over,
    Under,
    Calibrated,
}

impl ConfidenceFlag {
    pub fn classify(row: &ClassCalibrationRow, threshold: f64) -> Self {
        let gap = row.mean_confidence - row.accuracy;
        if gap.abs() <= threshold || row.count == 0 {
            ConfidenceFlag::Calibrated
        } else if gap > 0.0 {
            ConfidenceFlag::Over
        } else {
            ConfidenceFlag::Under
        }
    }

    fn marker(self) -> &'static str {
        match self {
            ConfidenceFlag::Over => "^",
            ConfidenceFlag::Under => "v",
            ConfidenceFlag::Calibrated => "",
        }
    }

    fn as_str(self) -> &'static str {
        match self {
            ConfidenceFlag::Over => "over",
            ConfidenceFlag::Under => "under",
            ConfidenceFlag::Calibrated => "",
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareRow {
    pub name: String,
    pub mode: String,
    pub members: Option<usize>,
    pub accuracy: f64,
    pub ece: f64,
    pub avg_class_gap: f64,
    pub per_class: Vec<(ClassCalibrationRow, ConfidenceFlag)>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CompareTable {
    pub rows: Vec<CompareRow>,
    pub threshold: f64,
    pub per_class: bool,
}

/// ECE as a percentage with one decimal.
pub fn format_percent(value: f64) -> String {
    format!("{:.1}%", 100.0 * value)
}

impl CompareTable {
    pub fn build(reports: &[(String, EvaluationReport)], threshold: f64, per_class: bool) -> Self {
        let rows = reports
            .iter()
            .map(|(name, r)| CompareRow {
                name: name.clone(),
                mode: r
                    .run
                    .as_ref()
                    .map_or_else(|| "-".into(), |i| i.mode.clone()),
                members: r.run.as_ref().map(|i| i.members),
                accuracy: r.accuracy,
                ece: r.ece,
                avg_class_gap: r.avg_class_gap,
                per_class: r
                    .per_class
                    .iter()
                    .map(|c| (*c, ConfidenceFlag::classify(c, threshold)))
                    .collect(),
            })
            .collect();
        Self {
            rows,
            threshold,
            per_class,
        }
    }

    fn class_count(&self) -> usize {
        self.rows
            .iter()
            .map(|r| r.per_class.len())
            .max()
            .unwrap_or(0)
    }

    fn cells(&self, row: &CompareRow) -> Vec<String> {
        let mut cells = vec![
            row.name.clone(),
            row.mode.clone(),
            row.members.map_or_else(|| "-".into(), |m| m.to_string()),
            format!("{:.4}", row.accuracy),
            format_percent(row.ece),
            format!("{:.3}", row.avg_class_gap),
        ];
        if self.per_class {
            for c in 0..self.class_count() {
                cells.push(match row.per_class.get(c) {
                    Some((r, flag)) => format!(
                        "{:.2} ({:.2}){}",
                        r.accuracy,
                        r.mean_confidence,
                        flag.marker()
                    ),
                    None => "-".into(),
                });
            }
        }
        cells
    }

    pub fn to_text(&self) -> String {
        let mut header: Vec<String> = ["run", "mode", "M", "accuracy", "ece", "avg_gap"]
            .iter()
            .map(|s| s.to_string())
            .collect();
        if self.per_class {
            header.extend((0..self.class_count()).map(|c| format!("class {c}")));
        }
        let body: Vec<Vec<String>> = self.rows.iter().map(|r| self.cells(r)).collect();
        let widths: Vec<usize> = (0..header.len())
            .map(|j| {
                body.iter()
                    .map(|r| r[j].chars().count())
                    .chain([header[j].len()])
                    .max()
                    .unwrap_or(0)
            })
            .collect();
        let line = |cells: &[String]| {
            cells
                .iter()
                .zip(&widths)
                .map(|(c, w)| format!("{c:<w$}"))
                .collect::<Vec<_>>()
                .join("  ")
                .trim_end()
                .to_string()
        };
        let mut out = line(&header);
        out.push('\n');
        for r in &body {
            out.push_str(&line(r));
            out.push('\n');
        }
        if self.per_class {
            out.push_str(&format!(
                "\nacc (conf); ^ over-confident, v under-confident: |conf - acc| > {}\n",
                self.threshold
            ));
        }
        out
    }

    pub fn to_csv(&self) -> String {
        let mut header = vec![
            "run".to_string(),
            "mode".into(),
            "M".into(),
            "accuracy".into(),
            "ece".into(),
            "ece_percent".into(),
            "avg_class_gap".into(),
        ];
        let k = self.class_count();
        if self.per_class {
            for c in 0..k {
                header.extend([
                    format!("class{c}_acc"),
                    format!("class{c}_conf"),
                    format!("class{c}_flag"),
                ]);
            }
        }
        let mut out = header.join(",");
        out.push('\n');
        for r in &self.rows {
            let mut cells = vec![
                csv_field(&r.name),
                r.mode.clone(),
                r.members.map(|m| m.to_string()).unwrap_or_default(),
                r.accuracy.to_string(),
                r.ece.to_string(),
                format!("{:.1}", 100.0 * r.ece),
                r.avg_class_gap.to_string(),
            ];
            if self.per_class {
                for c in 0..k {
                    match r.per_class.get(c) {
                        Some((row, flag)) => cells.extend([
                            row.accuracy.to_string(),
                            row.mean_confidence.to_string(),
                            flag.as_str().to_string(),
                        ]),
                        None => cells.extend([String::new(), String::new(), String::new()]),
                    }
                }
            }
            out.push_str(&cells.join(","));
            out.push('\n');
        }
        out
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

/// Label for a metrics file: its parent directory name when the file is the
/// default `metrics.json`, the file stem otherwise.
pub fn run_name(path: &Path) -> String {
    let stem = path.file_stem().map(|s| s.to_string_lossy().into_owned());
    match (stem.as_deref(), path.parent().and_then(Path::file_name)) {
        (Some("metrics"), Some(dir)) => dir.to_string_lossy().into_owned(),
        (Some(s), _) => s.to_string(),
        _ => path.display().to_string(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn class(accuracy: f64, mean_confidence: f64) -> ClassCalibrationRow {
        ClassCalibrationRow {
            class: 0,
            count: 10,
            accuracy,
            mean_confidence,
        }
    }

    #[test]
    fn percent_formatting() {
        assert_eq!(format_percent(0.043), "4.3%");
        assert_eq!(format_percent(0.025), "2.5%");
        assert_eq!(format_percent(0.0), "0.0%");
    }

    #[test]
    fn flags_follow_threshold() {
        assert_eq!(
            ConfidenceFlag::classify(&class(0.42, 0.64), 0.1),
            ConfidenceFlag::Over
        );
        assert_eq!(
            ConfidenceFlag::classify(&class(0.76, 0.66), 0.05),
            ConfidenceFlag::Under
        );
        assert_eq!(
            ConfidenceFlag::classify(&class(0.76, 0.66), 0.2),
            ConfidenceFlag::Calibrated
        );
        assert_eq!(
            ConfidenceFlag::classify(&class(0.68, 0.71), 0.1),
            ConfidenceFlag::Calibrated
        );
    }

    #[test]
    fn run_names() {
        assert_eq!(run_name(Path::new("out/nc7/metrics.json")), "nc7");
        assert_eq!(run_name(Path::new("out/pure.json")), "pure");
    }
}

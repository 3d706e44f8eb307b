//! Confusion-matrix metrics for verifying project-to-license output against
//! a labeled truth set.

use std::collections::{BTreeMap, HashSet};
use std::fmt::Write as _;
use std::path::Path;

use crate::error::{Error, Result};
use crate::p2l::P2LRecord;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ConfusionCounts {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
    pub tn: u64,
}

impl ConfusionCounts {
    pub fn new(tp: u64, fp: u64, fn_: u64, tn: u64) -> Self {
        ConfusionCounts { tp, fp, fn_, tn }
    }

    pub fn total(&self) -> u64 {
        self.tp + self.fp + self.fn_ + self.tn
    }
}

/// Accuracy, precision, recall and F1. A metric whose denominator is zero
/// is `None` rather than a crash.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MetricSet {
    pub accuracy: Option<f64>,
    pub precision: Option<f64>,
    pub recall: Option<f64>,
    pub f1: Option<f64>,
}

fn ratio(num: u64, den: u64) -> Option<f64> {
    (den > 0).then(|| num as f64 / den as f64)
}

pub fn compute_metrics(c: &ConfusionCounts) -> Result<MetricSet> {
    if c.total() == 0 {
        return Err(Error::EmptyCounts);
    }
    let accuracy = ratio(c.tp + c.tn, c.total());
    let precision = ratio(c.tp, c.tp + c.fp);
    let recall = ratio(c.tp, c.tp + c.fn_);
    let f1 = match (precision, recall) {
        (Some(p), Some(r)) if p + r > 0.0 => Some(2.0 * p * r / (p + r)),
        _ => None,
    };
    Ok(MetricSet {
        accuracy,
        precision,
        recall,
        f1,
    })
}

/// Percentage at two decimals, rounding half away from zero.
pub fn percent(value: f64) -> f64 {
    (value * 10_000.0).round() / 100.0
}

fn fmt_metric(m: Option<f64>) -> String {
    match m {
        Some(v) => format!("{:.2}%", percent(v)),
        None => "undefined".to_string(),
    }
}

impl MetricSet {
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "Accuracy   {}", fmt_metric(self.accuracy)).unwrap();
        writeln!(out, "Precision  {}", fmt_metric(self.precision)).unwrap();
        writeln!(out, "Recall     {}", fmt_metric(self.recall)).unwrap();
        writeln!(out, "F1 Score   {}", fmt_metric(self.f1)).unwrap();
        out
    }

    pub fn render_kv(&self) -> String {
        let mut out = String::new();
        for (key, value) in [
            ("accuracy", self.accuracy),
            ("precision", self.precision),
            ("recall", self.recall),
            ("f1", self.f1),
        ] {
            match value {
                Some(v) => writeln!(out, "{key}={:.2}", percent(v)).unwrap(),
                None => writeln!(out, "{key}=undefined").unwrap(),
            }
        }
        out
    }
}

/// Labeled truth: project id to has-license flag.
#[derive(Debug, Clone, Default)]
pub struct TruthSet {
    labels: BTreeMap<String, bool>,
}

impl TruthSet {
    pub fn insert(&mut self, project_id: &str, has_license: bool) -> Result<()> {
        if self
            .labels
            .insert(project_id.to_string(), has_license)
            .is_some()
        {
            return Err(Error::DuplicateTruth(project_id.to_string()));
        }
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }

    /// Two-column CSV with a `project_id,has_license` header; the flag is
    /// true/false, yes/no or 1/0.
    pub fn from_csv(path: &Path) -> Result<TruthSet> {
        let data = std::fs::read_to_string(path).map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        let mut truth = TruthSet::default();
        for (i, line) in data.lines().enumerate() {
            if i == 0 || line.trim().is_empty() {
                continue;
            }
            let parse_err = |reason: &str| Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                reason: reason.to_string(),
            };
            let (project, flag) = line
                .split_once(',')
                .ok_or_else(|| parse_err("expected project_id,has_license"))?;
            let has_license = match flag.trim().to_lowercase().as_str() {
                "true" | "yes" | "1" => true,
                "false" | "no" | "0" => false,
                other => return Err(parse_err(&format!("bad flag {other:?}"))),
            };
            truth.insert(project.trim(), has_license)?;
        }
        Ok(truth)
    }
}

/// Compare predicted records against truth. A project is predicted-positive
/// iff it has at least one record. Projects absent from truth are ignored
/// and counted separately (returned alongside the counts).
pub fn compare_against_truth(
    predicted: &[P2LRecord],
    truth: &TruthSet,
) -> (ConfusionCounts, usize) {
    let positives: HashSet<&str> = predicted.iter().map(|r| r.project_id()).collect();
    let labeled: HashSet<&str> = truth.labels.keys().map(String::as_str).collect();
    let ignored = positives.iter().filter(|p| !labeled.contains(*p)).count();
    let mut counts = ConfusionCounts::default();
    for (project, &has_license) in &truth.labels {
        let predicted_positive = positives.contains(project.as_str());
        match (predicted_positive, has_license) {
            (true, true) => counts.tp += 1,
            (true, false) => counts.fp += 1,
            (false, true) => counts.fn_ += 1,
            (false, false) => counts.tn += 1,
        }
    }
    (counts, ignored)
}

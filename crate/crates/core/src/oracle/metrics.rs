use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

use crate::category::MistakeCategory;

use super::DiagnosticReport;

/// Recorded in every summary so readers know how the average row was formed.
pub const AVERAGE_CONVENTION: &str = "unweighted mean over categories with at least one tp, fp or fn";

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MetricError {
    #[error("cannot summarize zero reports")]
    EmptyInput,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Counts {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl Counts {
    pub fn new(tp: usize, fp: usize, fn_: usize) -> Self {
        Self { tp, fp, fn_ }
    }

    pub fn is_empty(&self) -> bool {
        self.tp + self.fp + self.fn_ == 0
    }

    /// 1.0 when nothing was claimed.
    pub fn precision(&self) -> f64 {
        ratio(self.tp, self.tp + self.fp)
    }

    /// 1.0 when nothing was there to find.
    pub fn recall(&self) -> f64 {
        ratio(self.tp, self.tp + self.fn_)
    }

    pub fn f1(&self) -> f64 {
        harmonic(self.precision(), self.recall())
    }

    fn add(&mut self, other: Counts) {
        self.tp += other.tp;
        self.fp += other.fp;
        self.fn_ += other.fn_;
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        1.0
    } else {
        num as f64 / den as f64
    }
}

/// 0.0 when both inputs are zero.
pub(crate) fn harmonic(p: f64, r: f64) -> f64 {
    if p + r == 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CategoryMetrics {
    pub counts: Counts,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

impl CategoryMetrics {
    fn from_counts(counts: Counts) -> Self {
        Self {
            counts,
            precision: counts.precision(),
            recall: counts.recall(),
            f1: counts.f1(),
        }
    }

    /// No truth and no hallucination fell into this category.
    pub fn is_empty(&self) -> bool {
        self.counts.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricSummary {
    /// Category-mean precision, recall and F1 (the "Average" row).
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub per_category: BTreeMap<MistakeCategory, CategoryMetrics>,
    /// Counts pooled over every category.
    pub totals: Counts,
    pub reports: usize,
    pub average: String,
}

impl MetricSummary {
    pub fn micro(&self) -> CategoryMetrics {
        CategoryMetrics::from_counts(self.totals)
    }
}

/// Per-report counts split by category: true positives and misses go to
/// the truth's category, hallucinations to the finding's.
pub fn category_counts(report: &DiagnosticReport) -> BTreeMap<MistakeCategory, Counts> {
    let mut out: BTreeMap<MistakeCategory, Counts> = BTreeMap::new();
    for (t, _) in &report.matched {
        out.entry(t.category).or_default().tp += 1;
    }
    for t in &report.missed {
        out.entry(t.category).or_default().fn_ += 1;
    }
    for f in &report.hallucinated {
        out.entry(f.category).or_default().fp += 1;
    }
    out
}

pub fn summarize(reports: &[DiagnosticReport]) -> Result<MetricSummary, MetricError> {
    if reports.is_empty() {
        return Err(MetricError::EmptyInput);
    }
    let mut pooled: BTreeMap<MistakeCategory, Counts> =
        MistakeCategory::ALL.iter().map(|c| (*c, Counts::default())).collect();
    for r in reports {
        for (c, n) in category_counts(r) {
            pooled.get_mut(&c).expect("all categories present").add(n);
        }
    }
    let per_category: BTreeMap<_, _> = pooled
        .into_iter()
        .map(|(c, n)| (c, CategoryMetrics::from_counts(n)))
        .collect();
    let mut totals = Counts::default();
    for m in per_category.values() {
        totals.add(m.counts);
    }
    let supported: Vec<&CategoryMetrics> = per_category.values().filter(|m| !m.is_empty()).collect();
    let mean = |f: fn(&CategoryMetrics) -> f64| {
        if supported.is_empty() {
            1.0
        } else {
            supported.iter().map(|m| f(m)).sum::<f64>() / supported.len() as f64
        }
    };
    Ok(MetricSummary {
        precision: mean(|m| m.precision),
        recall: mean(|m| m.recall),
        f1: mean(|m| m.f1),
        per_category,
        totals,
        reports: reports.len(),
        average: AVERAGE_CONVENTION.to_string(),
    })
}

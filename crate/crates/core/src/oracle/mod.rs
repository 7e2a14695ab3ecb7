//! Rule-based judge: structural diff against the reference schema,
//! matching of findings to ground truth, and precision/recall/F1.

mod diff;
mod judge;
mod matching;
mod metrics;
mod table;

use serde::{Deserialize, Serialize};

use crate::category::MistakeCategory;

pub use diff::diff_schemas;
pub use judge::{
    check_summary, judge_with_llm, parse_judge_output, report_document, report_from_judge, JudgeError, JudgeInputs,
};
pub use matching::{match_findings, DiagnosticReport, MatchMode};
pub use metrics::{category_counts, summarize, CategoryMetrics, Counts, MetricError, MetricSummary, AVERAGE_CONVENTION};
pub use table::{render_csv, render_table, to_percent};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Polarity {
    ErrorFound,
    ConfirmedCorrect,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Finding {
    pub category: MistakeCategory,
    pub focal: String,
    pub polarity: Polarity,
    pub explanation: String,
    #[serde(default)]
    pub evidence: String,
}

impl Finding {
    pub fn error(category: MistakeCategory, focal: impl Into<String>, explanation: impl Into<String>) -> Self {
        Self {
            category,
            focal: focal.into(),
            polarity: Polarity::ErrorFound,
            explanation: explanation.into(),
            evidence: String::new(),
        }
    }

    pub fn confirmed(category: MistakeCategory, focal: impl Into<String>, explanation: impl Into<String>) -> Self {
        Self {
            polarity: Polarity::ConfirmedCorrect,
            ..Self::error(category, focal, explanation)
        }
    }

    pub fn is_error(&self) -> bool {
        self.polarity == Polarity::ErrorFound
    }
}

/// Oracle report for every variant of one source schema, in input order.
pub fn evaluate_corpus(
    reference: &crate::model::EerdSchema,
    rubrics: &crate::rubric::RubricPackage,
    variants: &[crate::forge::MistakenVariant],
    mode: MatchMode,
    exec: crate::exec::Execution,
) -> Vec<DiagnosticReport> {
    crate::exec::map_ordered(variants, exec, |v| {
        match_findings(&diff_schemas(reference, &v.schema, rubrics), &v.mistakes, mode)
    })
}

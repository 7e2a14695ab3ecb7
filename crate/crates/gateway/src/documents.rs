//! Typed shapes of the structured documents models are asked to return.

use serde::de::DeserializeOwned;
use serde::{Deserialize, Deserializer, Serialize};

/// A document type that [`crate::ModelHandle::complete_structured`] can parse.
pub trait StructuredDocument: DeserializeOwned {
    const SCHEMA_ID: &'static str;

    /// Appended to the prompt on the single repair attempt.
    fn format_reminder() -> &'static str {
        "Your previous answer could not be parsed. Respond with strictly minified JSON only, following the output format above, with no prose before or after it."
    }

    fn parse(text: &str) -> Result<Self, String> {
        serde_json::from_str(text.trim()).map_err(|e| e.to_string())
    }
}

/// A metric cell in `summary_metrics`. The published format uses
/// descriptive strings (`"int"`, `"float (3 decimals)"`) as placeholders, so
/// both numbers and free text are accepted; only numeric values are checked.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum MetricCell {
    Number(f64),
    Text(String),
}

impl MetricCell {
    pub fn as_f64(&self) -> Option<f64> {
        match self {
            MetricCell::Number(n) => Some(*n),
            MetricCell::Text(t) => t.trim().parse().ok(),
        }
    }
}

impl<'de> Deserialize<'de> for MetricCell {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        let v = serde_json::Value::deserialize(d)?;
        match v {
            serde_json::Value::Number(n) => Ok(MetricCell::Number(n.as_f64().unwrap_or(f64::NAN))),
            serde_json::Value::String(s) => Ok(MetricCell::Text(s)),
            other => Err(serde::de::Error::custom(format!(
                "metric must be a number or string, got {other}"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MistakeEvaluation {
    pub mistake_type: String,
    pub llm_feedback_detected: bool,
    #[serde(default)]
    pub deepseek_feedback_detected: Option<bool>,
    #[serde(default)]
    pub llm_feedback_phrase: String,
    #[serde(default)]
    pub deepseek_feedback_phrase: String,
    #[serde(default)]
    pub ideal_feedback: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FalsePositive {
    pub claim_phrase: String,
    pub source: String,
    #[serde(default)]
    pub why_incorrect: String,
}

#[allow(non_snake_case)]
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct SummaryMetrics {
    #[serde(default)]
    pub TP_llm_feedback: Option<MetricCell>,
    #[serde(default)]
    pub FN_llm_feedback: Option<MetricCell>,
    #[serde(default)]
    pub FP_llm_feedback: Option<MetricCell>,
    #[serde(default)]
    pub TP_deepseek_feedback: Option<MetricCell>,
    #[serde(default)]
    pub FN_deepseek_feedback: Option<MetricCell>,
    #[serde(default)]
    pub FP_deepseek_feedback: Option<MetricCell>,
    #[serde(default)]
    pub precision_llm_feedback: Option<MetricCell>,
    #[serde(default)]
    pub recall_llm_feedback: Option<MetricCell>,
    #[serde(default)]
    pub f1_score_llm_feedback: Option<MetricCell>,
    #[serde(default)]
    pub precision_deepseek_feedback: Option<MetricCell>,
    #[serde(default)]
    pub recall_deepseek_feedback: Option<MetricCell>,
    #[serde(default)]
    pub f1_score_deepseek_feedback: Option<MetricCell>,
}

/// Output of the evaluation (judge) prompt.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvaluationOutput {
    pub mistake_evaluation: Vec<MistakeEvaluation>,
    #[serde(default)]
    pub false_positives: Vec<FalsePositive>,
    #[serde(default)]
    pub summary_metrics: Option<SummaryMetrics>,
}

impl StructuredDocument for EvaluationOutput {
    const SCHEMA_ID: &'static str = "evaluation";
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StatementItem {
    pub description: String,
    #[serde(default)]
    pub rubrics: Vec<String>,
    #[serde(default)]
    pub questions: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RelevantStatementsOutput {
    #[serde(rename = "relevant-statements")]
    pub relevant_statements: Vec<StatementItem>,
}

impl StructuredDocument for RelevantStatementsOutput {
    const SCHEMA_ID: &'static str = "relevant_statements";
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeedbackOutput {
    pub feedback: String,
    #[serde(default)]
    pub entities: Vec<String>,
    #[serde(default)]
    pub attributes: Vec<String>,
}

impl StructuredDocument for FeedbackOutput {
    const SCHEMA_ID: &'static str = "inference_feedback";
}

/// Reasoning output. Accepts `{"reasoning": ..}` and the nested
/// `{"output": {"reasoning": ..}}` shape of the reasoning prompt.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReasoningOutput {
    pub reasoning: String,
}

impl StructuredDocument for ReasoningOutput {
    const SCHEMA_ID: &'static str = "inference_reasoning";

    fn parse(text: &str) -> Result<Self, String> {
        let v: serde_json::Value = serde_json::from_str(text.trim()).map_err(|e| e.to_string())?;
        let found = v
            .get("reasoning")
            .or_else(|| v.get("output").and_then(|o| o.get("reasoning")))
            .and_then(|r| r.as_str())
            .ok_or_else(|| "missing `reasoning` string".to_string())?;
        let stripped = found
            .trim()
            .trim_start_matches("<think>")
            .trim_end_matches("</think>")
            .trim()
            .to_string();
        Ok(ReasoningOutput {
            reasoning: stripped,
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratedMistake {
    #[serde(rename = "type")]
    pub kind: String,
    pub original: String,
    pub modified: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GeneratedErd {
    pub mistake_id: u64,
    pub focal_relation: String,
    pub description: String,
    pub mistakes: Vec<GeneratedMistake>,
    pub mistaken_erd: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MistakenErdsOutput {
    pub mistaken_erds: Vec<GeneratedErd>,
}

impl StructuredDocument for MistakenErdsOutput {
    const SCHEMA_ID: &'static str = "mistaken_erds";
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RevisedTrace {
    pub revised_text: String,
}

impl StructuredDocument for RevisedTrace {
    const SCHEMA_ID: &'static str = "revised_trace";
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StyleScore {
    pub coherence: f64,
    pub readability: f64,
}

impl StructuredDocument for StyleScore {
    const SCHEMA_ID: &'static str = "style_score";
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reasoning_accepts_nested_and_think_wrapped() {
        let r = ReasoningOutput::parse(r#"{"output":{"reasoning":"<think>weak needs owner</think>"}}"#).unwrap();
        assert_eq!(r.reasoning, "weak needs owner");
        let r = ReasoningOutput::parse(r#"{"reasoning":"plain"}"#).unwrap();
        assert_eq!(r.reasoning, "plain");
        assert!(ReasoningOutput::parse("no json").is_err());
    }

    #[test]
    fn metric_cells_accept_numbers_and_text() {
        let m: SummaryMetrics =
            serde_json::from_str(r#"{"TP_llm_feedback":2,"precision_llm_feedback":"0.667","FN_llm_feedback":"int"}"#).unwrap();
        assert_eq!(m.TP_llm_feedback.unwrap().as_f64(), Some(2.0));
        assert_eq!(m.precision_llm_feedback.unwrap().as_f64(), Some(0.667));
        assert_eq!(m.FN_llm_feedback.unwrap().as_f64(), None);
    }

    #[test]
    fn relevant_statements_use_hyphenated_key() {
        let r = RelevantStatementsOutput::parse(
            r#"{"relevant-statements":[{"description":"d","rubrics":["r"],"questions":[]}]}"#,
        )
        .unwrap();
        assert_eq!(r.relevant_statements.len(), 1);
    }
}

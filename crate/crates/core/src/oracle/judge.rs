//! LLM judge path: fills the evaluation prompt, parses the judge's
//! document and turns it into a [`DiagnosticReport`] with locally
//! recomputed counts.

use eerd_gateway::documents::{EvaluationOutput, FalsePositive, MetricCell, MistakeEvaluation, SummaryMetrics};
use eerd_gateway::{fills, GatewayError, ModelHandle, PromptTemplate, StructuredDocument, TemplateId};

use crate::category::MistakeCategory;
use crate::forge::MistakeRecord;
use crate::model::{name_key, render_schema, EerdSchema};
use crate::rubric::{render_statements, RubricPackage};

use super::metrics::Counts;
use super::{DiagnosticReport, Finding};

#[derive(Debug, thiserror::Error)]
pub enum JudgeError {
    #[error(transparent)]
    Gateway(GatewayError),
    #[error("judge output is malformed: {0}")]
    MalformedJudgeOutput(String),
}

impl From<GatewayError> for JudgeError {
    fn from(e: GatewayError) -> Self {
        match e {
            GatewayError::MalformedOutput { reason, .. } => JudgeError::MalformedJudgeOutput(reason),
            other => JudgeError::Gateway(other),
        }
    }
}

pub struct JudgeInputs<'a> {
    pub reference: &'a EerdSchema,
    pub submitted: &'a EerdSchema,
    pub rubrics: &'a RubricPackage,
    pub feedback: &'a str,
    pub truth: &'a [MistakeRecord],
}

fn is_llm_source(source: &str) -> bool {
    let s = source.to_lowercase();
    !s.contains("deepseek")
}

fn close(cell: &Option<MetricCell>, expected: f64, tol: f64) -> Result<(), f64> {
    match cell.as_ref().and_then(MetricCell::as_f64) {
        Some(v) if (v - expected).abs() > tol => Err(v),
        _ => Ok(()),
    }
}

/// Checks numeric `summary_metrics` cells against the counts implied by
/// the arrays. Placeholder strings such as `"int"` are not checked.
pub fn check_summary(out: &EvaluationOutput) -> Result<(), String> {
    let Some(m) = &out.summary_metrics else {
        return Ok(());
    };
    let side = |detected: Vec<Option<bool>>, fp: usize| {
        let tp = detected.iter().filter(|d| **d == Some(true)).count();
        let fn_ = detected.iter().filter(|d| **d == Some(false)).count();
        Counts::new(tp, fp, fn_)
    };
    let fps = |llm: bool| out.false_positives.iter().filter(|f| is_llm_source(&f.source) == llm).count();
    let llm = side(out.mistake_evaluation.iter().map(|e| Some(e.llm_feedback_detected)).collect(), fps(true));
    let deep = side(out.mistake_evaluation.iter().map(|e| e.deepseek_feedback_detected).collect(), fps(false));
    let checks: [(&str, &Option<MetricCell>, f64, f64); 12] = [
        ("TP_llm_feedback", &m.TP_llm_feedback, llm.tp as f64, 0.0),
        ("FN_llm_feedback", &m.FN_llm_feedback, llm.fn_ as f64, 0.0),
        ("FP_llm_feedback", &m.FP_llm_feedback, llm.fp as f64, 0.0),
        ("precision_llm_feedback", &m.precision_llm_feedback, llm.precision(), 1e-3),
        ("recall_llm_feedback", &m.recall_llm_feedback, llm.recall(), 1e-3),
        ("f1_score_llm_feedback", &m.f1_score_llm_feedback, llm.f1(), 1e-3),
        ("TP_deepseek_feedback", &m.TP_deepseek_feedback, deep.tp as f64, 0.0),
        ("FN_deepseek_feedback", &m.FN_deepseek_feedback, deep.fn_ as f64, 0.0),
        ("FP_deepseek_feedback", &m.FP_deepseek_feedback, deep.fp as f64, 0.0),
        ("precision_deepseek_feedback", &m.precision_deepseek_feedback, deep.precision(), 1e-3),
        ("recall_deepseek_feedback", &m.recall_deepseek_feedback, deep.recall(), 1e-3),
        ("f1_score_deepseek_feedback", &m.f1_score_deepseek_feedback, deep.f1(), 1e-3),
    ];
    let has_deepseek = out.mistake_evaluation.iter().any(|e| e.deepseek_feedback_detected.is_some());
    for (name, cell, expected, tol) in checks {
        if name.contains("deepseek") && !has_deepseek {
            continue;
        }
        close(cell, expected, tol).map_err(|got| format!("{name} is {got} but the arrays imply {expected}"))?;
    }
    Ok(())
}

/// Strict parse of a judge document: well-formed, and any numeric summary
/// consistent with its own arrays.
pub fn parse_judge_output(text: &str) -> Result<EvaluationOutput, JudgeError> {
    let out = EvaluationOutput::parse(text).map_err(JudgeError::MalformedJudgeOutput)?;
    check_summary(&out).map_err(JudgeError::MalformedJudgeOutput)?;
    Ok(out)
}

/// First declared element named in `text`, or the empty string.
fn mentioned_element(schema: &EerdSchema, text: &str) -> String {
    let t = name_key(text);
    schema
        .entity_names()
        .chain(schema.relationship_names())
        .filter(|n| {
            let k = name_key(n);
            t.match_indices(&k).any(|(i, _)| {
                let before = t[..i].chars().next_back().is_none_or(|c| !(c.is_alphanumeric() || c == '_'));
                let after = t[i + k.len()..].chars().next().is_none_or(|c| !(c.is_alphanumeric() || c == '_'));
                before && after
            })
        })
        .max_by_key(|n| n.len())
        .unwrap_or_default()
        .to_string()
}

/// Converts a parsed judge document. Each truth pairs with the first unused
/// evaluation entry of its category; hallucinations come from the LLM
/// side's false positives.
pub fn report_from_judge(out: &EvaluationOutput, inputs: &JudgeInputs<'_>) -> DiagnosticReport {
    let mut used = vec![false; out.mistake_evaluation.len()];
    let mut matched = Vec::new();
    let mut missed = Vec::new();
    for t in inputs.truth {
        let hit = out.mistake_evaluation.iter().enumerate().position(|(i, e)| {
            !used[i] && e.mistake_type.parse::<MistakeCategory>().ok() == Some(t.category)
        });
        match hit {
            Some(i) => {
                used[i] = true;
                let e = &out.mistake_evaluation[i];
                if e.llm_feedback_detected {
                    matched.push((t.clone(), Finding::error(t.category, &t.focal, &e.llm_feedback_phrase)));
                } else {
                    missed.push(t.clone());
                }
            }
            None => {
                log::warn!("judge gave no evaluation for {} on {}", t.category, t.focal);
                missed.push(t.clone());
            }
        }
    }
    let hallucinated: Vec<Finding> = out
        .false_positives
        .iter()
        .filter(|f| is_llm_source(&f.source))
        .map(|f| {
            let mut finding = Finding::error(
                MistakeCategory::classify_text(&f.claim_phrase),
                mentioned_element(inputs.reference, &f.claim_phrase),
                &f.claim_phrase,
            );
            finding.evidence = f.why_incorrect.clone();
            finding
        })
        .collect();
    let findings = matched.iter().map(|(_, f)| f.clone()).chain(hallucinated.iter().cloned()).collect();
    DiagnosticReport {
        findings,
        tp: matched.len(),
        fn_: missed.len(),
        fp: hallucinated.len(),
        matched,
        missed,
        hallucinated,
    }
}

/// Sends the evaluation prompt for one variant and converts the answer.
/// Counts always come from the arrays; a disagreeing summary is logged.
pub fn judge_with_llm(handle: &ModelHandle, inputs: &JudgeInputs<'_>) -> Result<DiagnosticReport, JudgeError> {
    let mut focals: Vec<&str> = Vec::new();
    for t in inputs.truth {
        if !focals.iter().any(|f| name_key(f) == name_key(&t.focal)) {
            focals.push(&t.focal);
        }
    }
    let statements = inputs.rubrics.relevant_for(focals.iter().copied());
    let f = fills([
        ("focal_relation", focals.join("; ")),
        (
            "mistake_type",
            inputs.truth.iter().map(|t| t.category.code()).collect::<Vec<_>>().join("; "),
        ),
        ("num_mistakes", inputs.truth.len().to_string()),
        ("relevant_statements", render_statements(&statements)),
        ("correct_erd", render_schema(inputs.reference)),
        ("mistaken_erd", render_schema(inputs.submitted)),
        ("response", inputs.feedback.replace('"', "'")),
        ("deepseek_feedback", String::new()),
    ]);
    let out: EvaluationOutput = handle.complete_structured(PromptTemplate::get(TemplateId::Evaluation), &f)?;
    if let Err(why) = check_summary(&out) {
        log::warn!("judge summary_metrics disagree with its arrays ({why}); using local counts");
    }
    Ok(report_from_judge(&out, inputs))
}

fn round3(x: f64) -> MetricCell {
    MetricCell::Number((x * 1000.0).round() / 1000.0)
}

/// Per-variant report in the judge's own output shape.
pub fn report_document(report: &DiagnosticReport, truth: &[MistakeRecord]) -> EvaluationOutput {
    let mut used = vec![false; report.matched.len()];
    let mistake_evaluation = truth
        .iter()
        .map(|t| {
            let hit = report
                .matched
                .iter()
                .enumerate()
                .position(|(i, (m, _))| !used[i] && m == t);
            let phrase = hit.map(|i| {
                used[i] = true;
                report.matched[i].1.explanation.clone()
            });
            MistakeEvaluation {
                mistake_type: t.category.code().to_string(),
                llm_feedback_detected: phrase.is_some(),
                deepseek_feedback_detected: None,
                llm_feedback_phrase: phrase.unwrap_or_default(),
                deepseek_feedback_phrase: String::new(),
                ideal_feedback: t.description.clone(),
            }
        })
        .collect();
    let false_positives = report
        .hallucinated
        .iter()
        .map(|f| FalsePositive {
            claim_phrase: f.explanation.clone(),
            source: "llm_feedback".into(),
            why_incorrect: if f.evidence.is_empty() {
                format!("no {} mistake on {} in the ground truth", f.category, f.focal)
            } else {
                f.evidence.clone()
            },
        })
        .collect();
    let c = Counts::new(report.tp, report.fp, report.fn_);
    EvaluationOutput {
        mistake_evaluation,
        false_positives,
        summary_metrics: Some(SummaryMetrics {
            TP_llm_feedback: Some(MetricCell::Number(c.tp as f64)),
            FN_llm_feedback: Some(MetricCell::Number(c.fn_ as f64)),
            FP_llm_feedback: Some(MetricCell::Number(c.fp as f64)),
            precision_llm_feedback: Some(round3(c.precision())),
            recall_llm_feedback: Some(round3(c.recall())),
            f1_score_llm_feedback: Some(round3(c.f1())),
            ..SummaryMetrics::default()
        }),
    }
}

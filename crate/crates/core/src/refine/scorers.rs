use std::collections::BTreeSet;

use eerd_gateway::documents::StyleScore;
use eerd_gateway::{fills, ModelHandle, PromptTemplate, TemplateId};

use crate::model::name_key;
use crate::oracle::{judge_with_llm, match_findings, Counts, JudgeInputs, MatchMode};
use crate::rubric::RubricPackage;

use super::{Claim, ItemContext, PortError, Scorer, Trace};

/// Position of the first statement covering each claim's focal; focals no
/// statement covers sort last.
fn ranks(claims: &[Claim], rubrics: &RubricPackage) -> Vec<usize> {
    claims
        .iter()
        .map(|c| rubrics.first_statement_for(&c.focal).unwrap_or(rubrics.statements.len()))
        .collect()
}

/// Fraction of claim pairs that appear in rubric statement order (ties count
/// as ordered). 1 for fewer than two claims.
pub fn order_concordance(claims: &[Claim], rubrics: &RubricPackage) -> f64 {
    let r = ranks(claims, rubrics);
    let n = r.len();
    if n < 2 {
        return 1.0;
    }
    let mut ordered = 0usize;
    for i in 0..n {
        for j in i + 1..n {
            if r[i] <= r[j] {
                ordered += 1;
            }
        }
    }
    ordered as f64 / (n * (n - 1) / 2) as f64
}

/// 1 minus the fraction of claims that repeat an earlier claim's category,
/// focal and polarity.
pub fn non_redundancy(claims: &[Claim]) -> f64 {
    if claims.is_empty() {
        return 1.0;
    }
    let mut seen = BTreeSet::new();
    let repeats = claims
        .iter()
        .filter(|c| !seen.insert((c.category, name_key(&c.focal), c.polarity)))
        .count();
    1.0 - repeats as f64 / claims.len() as f64
}

/// Mean of [`order_concordance`] and [`non_redundancy`].
pub fn structural_reward(trace: &Trace, rubrics: &RubricPackage) -> f64 {
    (order_concordance(&trace.claims, rubrics) + non_redundancy(&trace.claims)) / 2.0
}

fn claim_f1(trace: &Trace, ctx: &ItemContext<'_>) -> f64 {
    let r = match_findings(&trace.findings(), ctx.truth, MatchMode::Strict);
    Counts::new(r.tp, r.fp, r.fn_).f1()
}

/// Deterministic scorer: F1 of the trace's claims under strict matching and
/// the structural style reward.
#[derive(Debug, Clone, Copy, Default)]
pub struct OracleScorer;

impl Scorer for OracleScorer {
    fn f1(&self, trace: &Trace, ctx: &ItemContext<'_>) -> Result<f64, PortError> {
        Ok(claim_f1(trace, ctx))
    }

    fn reward(&self, trace: &Trace, ctx: &ItemContext<'_>) -> Result<f64, PortError> {
        Ok(structural_reward(trace, ctx.rubrics))
    }
}

/// Model-backed scorer. With a judge handle F1 comes from the evaluation
/// prompt over the markup-free text, otherwise from the claims. With a style
/// handle the reward is the mean of the returned coherence and readability,
/// clamped to [0, 1], otherwise the structural reward.
#[derive(Debug, Clone, Default)]
pub struct LlmScorer {
    pub judge: Option<ModelHandle>,
    pub style: Option<ModelHandle>,
}

impl Scorer for LlmScorer {
    fn f1(&self, trace: &Trace, ctx: &ItemContext<'_>) -> Result<f64, PortError> {
        let Some(handle) = &self.judge else {
            return Ok(claim_f1(trace, ctx));
        };
        let plain = trace.plain();
        let r = judge_with_llm(
            handle,
            &JudgeInputs {
                reference: ctx.reference,
                submitted: ctx.submitted,
                rubrics: ctx.rubrics,
                feedback: &plain,
                truth: ctx.truth,
            },
        )?;
        Ok(Counts::new(r.tp, r.fp, r.fn_).f1())
    }

    fn reward(&self, trace: &Trace, ctx: &ItemContext<'_>) -> Result<f64, PortError> {
        let Some(handle) = &self.style else {
            return Ok(structural_reward(trace, ctx.rubrics));
        };
        let f = fills([("trace", json_inner(&trace.plain()))]);
        let s: StyleScore = handle.complete_structured(PromptTemplate::get(TemplateId::StyleScore), &f)?;
        if !(s.coherence.is_finite() && s.readability.is_finite()) {
            return Err(PortError::Other("style score is not a finite number".into()));
        }
        Ok(((s.coherence + s.readability) / 2.0).clamp(0.0, 1.0))
    }
}

/// `text` escaped for use inside a JSON string literal, without the quotes.
pub(super) fn json_inner(text: &str) -> String {
    let quoted = serde_json::to_string(text).expect("strings always serialize");
    quoted[1..quoted.len() - 1].to_string()
}

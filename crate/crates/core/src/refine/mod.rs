//! Trace refinement: a factual audit loop that edits a reasoning or feedback
//! trace toward the ground truth until its F1 saturates, and a style polish
//! loop that only accepts edits raising a style reward without losing F1.
//!
//! Editors and scorers are ports so the loops can be driven by rule-based
//! implementations, scripted test doubles or the guide model.

mod editors;
mod engine;
mod markup;
mod scorers;
mod simulate;
mod stages;

use serde::{Deserialize, Serialize};

use crate::forge::MistakeRecord;
use crate::model::EerdSchema;
use crate::oracle::{judge_with_llm, Finding, JudgeError, JudgeInputs, Polarity};
use crate::rubric::RubricPackage;
use eerd_gateway::{GatewayError, ModelHandle};

pub use editors::{ClaimEditor, GuideEditor};
pub use engine::{factual_audit, style_polish, AuditConfig, HaltPolicy, HaltReason, PolishConfig, RefinementRun};
pub use markup::{extract_tagged, strip_markup, tag, Claim, MarkupError};
pub use scorers::{non_redundancy, order_concordance, structural_reward, LlmScorer, OracleScorer};
pub use simulate::SimulatedBaseModel;
pub use stages::{Refiner, TraceRefinement};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TraceKind {
    Reasoning,
    Feedback,
}

/// Text plus the claims extracted from it. `claims` always describes
/// `text`; every constructor re-extracts.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Trace {
    pub text: String,
    pub claims: Vec<Claim>,
    pub kind: TraceKind,
}

impl Trace {
    pub fn tagged(text: impl Into<String>, kind: TraceKind) -> Result<Self, MarkupError> {
        let text = text.into();
        let claims = extract_tagged(&text)?;
        Ok(Trace { text, claims, kind })
    }

    /// Trace whose claims came from somewhere other than inline markup.
    pub fn with_claims(text: impl Into<String>, claims: Vec<Claim>, kind: TraceKind) -> Self {
        Trace {
            text: text.into(),
            claims,
            kind,
        }
    }

    pub fn findings(&self) -> Vec<Finding> {
        self.claims.iter().map(|c| c.to_finding(&self.text)).collect()
    }

    /// Reader-facing text without markup.
    pub fn plain(&self) -> String {
        strip_markup(&self.text)
    }
}

/// Everything an editor or scorer may consult about one corpus item.
#[derive(Debug, Clone, Copy)]
pub struct ItemContext<'a> {
    pub reference: &'a EerdSchema,
    pub submitted: &'a EerdSchema,
    pub rubrics: &'a RubricPackage,
    pub truth: &'a [MistakeRecord],
}

#[derive(Debug, thiserror::Error)]
pub enum PortError {
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error(transparent)]
    Markup(#[from] MarkupError),
    #[error(transparent)]
    Judge(#[from] JudgeError),
    #[error("{0}")]
    Other(String),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Audit,
    Polish,
}

#[derive(Debug, thiserror::Error)]
pub enum RefineError {
    #[error("invalid refinement config: {0}")]
    Config(String),
    #[error("{stage:?} editor failed at iteration {iteration}: {source}")]
    Editor {
        stage: Stage,
        iteration: usize,
        source: PortError,
    },
    #[error("{stage:?} scorer failed at iteration {iteration}: {source}")]
    Scorer {
        stage: Stage,
        iteration: usize,
        source: PortError,
    },
}

pub trait Editor: Send + Sync {
    /// One factual editing pass: drop unsupported claims, add missed ones.
    fn audit(&self, trace: &Trace, ctx: &ItemContext<'_>) -> Result<Trace, PortError>;
    /// One stylistic pass that must leave factual claims intact.
    fn polish(&self, trace: &Trace, ctx: &ItemContext<'_>) -> Result<Trace, PortError>;
}

pub trait Scorer: Send + Sync {
    /// Diagnostic F1 of the trace's claims against the item's ground truth.
    fn f1(&self, trace: &Trace, ctx: &ItemContext<'_>) -> Result<f64, PortError>;
    /// Style reward in [0, 1].
    fn reward(&self, trace: &Trace, ctx: &ItemContext<'_>) -> Result<f64, PortError>;
}

/// How claims are obtained from free text.
#[derive(Debug, Clone, Copy)]
pub enum Extractor<'h> {
    /// Inline markup only; exact and pure.
    Tagged,
    /// The guide model's evaluation prompt. Matched and hallucinated
    /// judgements become claims; spans point at the quoted phrase when it
    /// occurs verbatim and cover the whole text otherwise.
    Judge(&'h ModelHandle),
}

pub fn extract_claims(text: &str, extractor: Extractor<'_>, ctx: &ItemContext<'_>) -> Result<Vec<Claim>, PortError> {
    match extractor {
        Extractor::Tagged => Ok(extract_tagged(text)?),
        Extractor::Judge(handle) => {
            let plain = strip_markup(text);
            let report = judge_with_llm(
                handle,
                &JudgeInputs {
                    reference: ctx.reference,
                    submitted: ctx.submitted,
                    rubrics: ctx.rubrics,
                    feedback: &plain,
                    truth: ctx.truth,
                },
            )?;
            let locate = |phrase: &str| -> std::ops::Range<usize> {
                match (!phrase.is_empty()).then(|| text.find(phrase)).flatten() {
                    Some(at) => at..at + phrase.len(),
                    None => 0..text.len(),
                }
            };
            Ok(report
                .matched
                .iter()
                .map(|(_, f)| f)
                .chain(&report.hallucinated)
                .map(|f| {
                    let span = locate(&f.explanation);
                    Claim {
                        category: f.category,
                        focal: f.focal.clone(),
                        polarity: Polarity::ErrorFound,
                        body: span.clone(),
                        span,
                    }
                })
                .collect())
        }
    }
}

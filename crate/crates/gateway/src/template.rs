//! Prompt templates.
//!
//! The bodies of the six published prompts are checked in verbatim under
//! `templates/` and are never reformatted. Placeholders are literal tokens
//! (some of them look like Python subscripts, e.g. `{row['mistaken_erd']}`),
//! so each template carries an explicit token table instead of treating every
//! `{...}` as a slot: the bodies are JSON-like and full of braces.

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::GatewayError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TemplateId {
    RelevantStatements,
    InferenceFeedback,
    InferenceReasoning,
    InferenceFeedbackWithReasoning,
    DataGeneration,
    Evaluation,
    Audit,
    Polish,
    StyleScore,
}

impl TemplateId {
    pub const ALL: [TemplateId; 9] = [
        TemplateId::RelevantStatements,
        TemplateId::InferenceFeedback,
        TemplateId::InferenceReasoning,
        TemplateId::InferenceFeedbackWithReasoning,
        TemplateId::DataGeneration,
        TemplateId::Evaluation,
        TemplateId::Audit,
        TemplateId::Polish,
        TemplateId::StyleScore,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            TemplateId::RelevantStatements => "relevant_statements",
            TemplateId::InferenceFeedback => "inference_feedback",
            TemplateId::InferenceReasoning => "inference_reasoning",
            TemplateId::InferenceFeedbackWithReasoning => "inference_feedback_with_reasoning",
            TemplateId::DataGeneration => "data_generation",
            TemplateId::Evaluation => "evaluation",
            TemplateId::Audit => "audit",
            TemplateId::Polish => "polish",
            TemplateId::StyleScore => "style_score",
        }
    }
}

impl fmt::Display for TemplateId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for TemplateId {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        TemplateId::ALL
            .into_iter()
            .find(|id| id.as_str() == s)
            .ok_or_else(|| format!("unknown template id `{s}`"))
    }
}

/// A named slot: `name` is the key callers fill, `token` is the literal text
/// replaced in the body.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Placeholder {
    pub name: &'static str,
    pub token: &'static str,
}

const fn ph(name: &'static str, token: &'static str) -> Placeholder {
    Placeholder { name, token }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct PromptTemplate {
    pub id: TemplateId,
    pub body: &'static str,
    pub placeholders: &'static [Placeholder],
}

pub type Fills = BTreeMap<String, String>;

const RELEVANT_STATEMENTS: PromptTemplate = PromptTemplate {
    id: TemplateId::RelevantStatements,
    body: include_str!("../templates/relevant_statements.txt"),
    placeholders: &[ph("erd", "{erd}"), ph("problem_statements", "{problem_statements}")],
};

const INFERENCE_FEEDBACK: PromptTemplate = PromptTemplate {
    id: TemplateId::InferenceFeedback,
    body: include_str!("../templates/inference_feedback.txt"),
    placeholders: &[
        ph("relevant_statements", "{relevant_statements}"),
        ph("submitted_erd", "{submitted_erd}"),
    ],
};

const INFERENCE_REASONING: PromptTemplate = PromptTemplate {
    id: TemplateId::InferenceReasoning,
    body: include_str!("../templates/inference_reasoning.txt"),
    placeholders: &[
        ph("relevant_statements", "{relevant_statements}"),
        ph("submitted_erd", "{submitted_erd}"),
    ],
};

const INFERENCE_FEEDBACK_WITH_REASONING: PromptTemplate = PromptTemplate {
    id: TemplateId::InferenceFeedbackWithReasoning,
    body: include_str!("../templates/inference_feedback_with_reasoning.txt"),
    placeholders: &[
        ph("relevant_statements", "{relevant_statements}"),
        ph("submitted_erd", "{submitted_erd}"),
        ph("reasoning", "{reasoning}"),
    ],
};

const DATA_GENERATION: PromptTemplate = PromptTemplate {
    id: TemplateId::DataGeneration,
    body: include_str!("../templates/data_generation.txt"),
    placeholders: &[
        ph("erd_grammar", "[ERD Grammar]"),
        ph("correct_erd", "[Correct ERD]"),
        ph("category1", "{category1}"),
        ph("description1", "{description1}"),
        ph("subtypes1", "{subtypes1}"),
        ph("category2", "{category2}"),
        ph("description2", "{description2}"),
        ph("subtypes2", "{subtypes2}"),
        ph("category3", "{category3}"),
        ph("description3", "{description3}"),
        ph("subtypes3", "{subtypes3}"),
        ph("batch_size", "{batch_size}"),
        ph("number_of_errors", "{number_of_errors}"),
        ph("start_index", "{start_index}"),
    ],
};

const EVALUATION: PromptTemplate = PromptTemplate {
    id: TemplateId::Evaluation,
    body: include_str!("../templates/evaluation.txt"),
    placeholders: &[
        ph("focal_relation", "{row['focal_relation']}"),
        ph("mistake_type", "{row['mistake_type']}"),
        ph("num_mistakes", "{row['num_mistakes']}"),
        ph("relevant_statements", "{relevant_statements}"),
        ph("correct_erd", "{correct_erd}"),
        ph("mistaken_erd", "{row['mistaken_erd']}"),
        ph("response", "{response}"),
        ph("deepseek_feedback", "{deepseek_feedback}"),
    ],
};

const AUDIT: PromptTemplate = PromptTemplate {
    id: TemplateId::Audit,
    body: include_str!("../templates/audit.txt"),
    placeholders: &[
        ph("relevant_statements", "{relevant_statements}"),
        ph("ground_truth", "{ground_truth}"),
        ph("trace", "{trace}"),
    ],
};

const POLISH: PromptTemplate = PromptTemplate {
    id: TemplateId::Polish,
    body: include_str!("../templates/polish.txt"),
    placeholders: &[ph("trace", "{trace}")],
};

const STYLE_SCORE: PromptTemplate = PromptTemplate {
    id: TemplateId::StyleScore,
    body: include_str!("../templates/style_score.txt"),
    placeholders: &[ph("trace", "{trace}")],
};

impl PromptTemplate {
    pub fn get(id: TemplateId) -> &'static PromptTemplate {
        match id {
            TemplateId::RelevantStatements => &RELEVANT_STATEMENTS,
            TemplateId::InferenceFeedback => &INFERENCE_FEEDBACK,
            TemplateId::InferenceReasoning => &INFERENCE_REASONING,
            TemplateId::InferenceFeedbackWithReasoning => &INFERENCE_FEEDBACK_WITH_REASONING,
            TemplateId::DataGeneration => &DATA_GENERATION,
            TemplateId::Evaluation => &EVALUATION,
            TemplateId::Audit => &AUDIT,
            TemplateId::Polish => &POLISH,
            TemplateId::StyleScore => &STYLE_SCORE,
        }
    }

    /// Replaces every placeholder token in a single left-to-right pass, so a
    /// filled value that happens to contain a token is never re-expanded.
    pub fn fill(&self, fills: &Fills) -> Result<String, GatewayError> {
        for p in self.placeholders {
            if !fills.contains_key(p.name) {
                return Err(GatewayError::Template {
                    template: self.id,
                    missing: p.name.to_string(),
                });
            }
        }
        let mut out = String::with_capacity(self.body.len());
        let mut rest = self.body;
        while !rest.is_empty() {
            let hit = self
                .placeholders
                .iter()
                .find(|p| rest.starts_with(p.token));
            match hit {
                Some(p) => {
                    out.push_str(&fills[p.name]);
                    rest = &rest[p.token.len()..];
                }
                None => {
                    let ch = rest.chars().next().expect("non-empty");
                    out.push(ch);
                    rest = &rest[ch.len_utf8()..];
                }
            }
        }
        Ok(out)
    }
}

/// Convenience for building fill maps in call sites and tests.
pub fn fills<I, K, V>(pairs: I) -> Fills
where
    I: IntoIterator<Item = (K, V)>,
    K: Into<String>,
    V: Into<String>,
{
    pairs
        .into_iter()
        .map(|(k, v)| (k.into(), v.into()))
        .collect()
}

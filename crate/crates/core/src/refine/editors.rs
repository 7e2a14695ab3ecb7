use eerd_gateway::documents::RevisedTrace;
use eerd_gateway::{fills, ModelHandle, PromptTemplate, TemplateId};

use crate::forge::MistakeRecord;
use crate::model::name_key;
use crate::oracle::Polarity;
use crate::rubric::render_statements;

use super::scorers::{json_inner, structural_reward};
use super::{tag, Editor, ItemContext, PortError, Trace};

/// Sentence stating a ground-truth mistake.
pub(super) fn mistake_sentence(m: &MistakeRecord) -> String {
    let d = m.description.trim().trim_end_matches('.');
    let mut chars = d.chars();
    match chars.next() {
        Some(first) => format!("{}{}.", first.to_uppercase(), chars.as_str()),
        None => format!("{} has a {} mistake.", m.focal, m.category.label().to_lowercase()),
    }
}

fn remove_span(text: &str, span: &std::ops::Range<usize>) -> String {
    let mut end = span.end;
    let mut start = span.start;
    if text[end..].starts_with(' ') {
        end += 1;
    } else if text[..start].ends_with(' ') {
        start -= 1;
    }
    format!("{}{}", &text[..start], &text[end..])
}

/// Indices of claims that strict matching would count as hallucinated, and
/// the ground-truth entries no claim matches, both in order.
fn audit_plan<'t>(trace: &Trace, truth: &'t [MistakeRecord]) -> (Vec<usize>, Vec<&'t MistakeRecord>) {
    let mut used = vec![false; truth.len()];
    let mut wrong = Vec::new();
    for (i, c) in trace.claims.iter().enumerate() {
        let same = |t: &MistakeRecord| t.category == c.category && name_key(&t.focal) == name_key(&c.focal);
        match c.polarity {
            Polarity::ErrorFound => match (0..truth.len()).find(|&k| !used[k] && same(&truth[k])) {
                Some(k) => used[k] = true,
                None => wrong.push(i),
            },
            Polarity::ConfirmedCorrect => {
                if truth.iter().any(same) {
                    wrong.push(i);
                }
            }
        }
    }
    let missed = truth.iter().zip(used).filter(|(_, u)| !u).map(|(t, _)| t).collect();
    (wrong, missed)
}

/// Rule-based editor over tagged traces.
///
/// `audit` applies at most `fixes_per_call` fixes: unsupported claims are
/// deleted first, then a sentence is appended for each missed mistake.
/// `polish` makes the single edit with the best structural reward among
/// removing one repeated claim and swapping one adjacent out-of-order pair,
/// and returns the input unchanged when neither applies.
#[derive(Debug, Clone, Copy)]
pub struct ClaimEditor {
    pub fixes_per_call: usize,
}

impl Default for ClaimEditor {
    fn default() -> Self {
        ClaimEditor { fixes_per_call: 1 }
    }
}

impl ClaimEditor {
    fn polish_candidates(trace: &Trace, ctx: &ItemContext<'_>) -> Vec<String> {
        let claims = &trace.claims;
        let text = &trace.text;
        let mut out = Vec::new();
        let mut seen = std::collections::BTreeSet::new();
        for c in claims {
            if !seen.insert((c.category, name_key(&c.focal), c.polarity)) {
                out.push(remove_span(text, &c.span));
            }
        }
        let rank = |f: &str| ctx.rubrics.first_statement_for(f).unwrap_or(ctx.rubrics.statements.len());
        for w in claims.windows(2) {
            let (a, b) = (&w[0], &w[1]);
            if rank(&a.focal) > rank(&b.focal) {
                out.push(format!(
                    "{}{}{}{}{}",
                    &text[..a.span.start],
                    &text[b.span.clone()],
                    &text[a.span.end..b.span.start],
                    &text[a.span.clone()],
                    &text[b.span.end..]
                ));
            }
        }
        out
    }
}

impl Editor for ClaimEditor {
    fn audit(&self, trace: &Trace, ctx: &ItemContext<'_>) -> Result<Trace, PortError> {
        let (wrong, missed) = audit_plan(trace, ctx.truth);
        let mut budget = self.fixes_per_call;
        let mut text = trace.text.clone();
        // Back to front so earlier spans stay valid.
        let removals: Vec<usize> = wrong.into_iter().take(budget).collect();
        budget -= removals.len();
        for &i in removals.iter().rev() {
            text = remove_span(&text, &trace.claims[i].span);
        }
        for m in missed.into_iter().take(budget) {
            if !text.is_empty() && !text.ends_with(char::is_whitespace) {
                text.push(' ');
            }
            text.push_str(&tag(m.category, &m.focal, Polarity::ErrorFound, &mistake_sentence(m)));
        }
        Ok(Trace::tagged(text, trace.kind)?)
    }

    fn polish(&self, trace: &Trace, ctx: &ItemContext<'_>) -> Result<Trace, PortError> {
        let mut best: Option<(f64, Trace)> = None;
        for text in Self::polish_candidates(trace, ctx) {
            let t = Trace::tagged(text, trace.kind)?;
            let r = structural_reward(&t, ctx.rubrics);
            if best.as_ref().is_none_or(|(b, _)| r > *b) {
                best = Some((r, t));
            }
        }
        Ok(best.map_or_else(|| trace.clone(), |(_, t)| t))
    }
}

/// Guide-model editor using the audit and polish prompts. The revised text
/// is re-read as tagged markup.
#[derive(Debug, Clone)]
pub struct GuideEditor {
    pub handle: ModelHandle,
}

impl GuideEditor {
    fn revise(&self, id: TemplateId, fills: eerd_gateway::Fills, trace: &Trace) -> Result<Trace, PortError> {
        let out: RevisedTrace = self.handle.complete_structured(PromptTemplate::get(id), &fills)?;
        Ok(Trace::tagged(out.revised_text, trace.kind)?)
    }
}

impl Editor for GuideEditor {
    fn audit(&self, trace: &Trace, ctx: &ItemContext<'_>) -> Result<Trace, PortError> {
        let focals: Vec<&str> = ctx.truth.iter().map(|t| t.focal.as_str()).collect();
        let statements = ctx.rubrics.relevant_for(focals);
        let truth = ctx
            .truth
            .iter()
            .map(|t| format!("{} on {}: {}", t.category.code(), t.focal, t.description))
            .collect::<Vec<_>>()
            .join("; ");
        let f = fills([
            ("relevant_statements", render_statements(&statements)),
            ("ground_truth", json_inner(&truth)),
            ("trace", json_inner(&trace.text)),
        ]);
        self.revise(TemplateId::Audit, f, trace)
    }

    fn polish(&self, trace: &Trace, _ctx: &ItemContext<'_>) -> Result<Trace, PortError> {
        self.revise(TemplateId::Polish, fills([("trace", json_inner(&trace.text))]), trace)
    }
}

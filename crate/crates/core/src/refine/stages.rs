use serde::{Deserialize, Serialize};

use super::{factual_audit, style_polish, AuditConfig, Editor, ItemContext, PolishConfig, RefineError, RefinementRun, Scorer, Trace, TraceKind};

/// The refinement stages one trace went through: an audit, then a polish
/// for reasoning traces when polishing is enabled.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TraceRefinement {
    pub variant_id: u64,
    pub kind: TraceKind,
    pub audit: RefinementRun,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub polish: Option<RefinementRun>,
}

impl TraceRefinement {
    pub fn final_trace(&self) -> &Trace {
        &self.polish.as_ref().unwrap_or(&self.audit).final_trace
    }

    /// Both stages folded into one run from the unrefined input to the
    /// final trace. Histories are concatenated; the halt reason is the last
    /// stage's.
    pub fn combined(&self) -> RefinementRun {
        let Some(p) = &self.polish else {
            return self.audit.clone();
        };
        let mut f1_history = self.audit.f1_history.clone();
        f1_history.extend_from_slice(&p.f1_history);
        RefinementRun {
            initial: self.audit.initial.clone(),
            final_trace: p.final_trace.clone(),
            f1_history,
            reward_history: p.reward_history.clone(),
            f1_optimal: self.audit.f1_optimal,
            final_f1: p.final_f1,
            halt_reason: p.halt_reason,
            iterations: self.audit.iterations + p.iterations,
        }
    }
}

#[derive(Clone, Copy)]
pub struct Refiner<'a> {
    pub editor: &'a dyn Editor,
    pub scorer: &'a dyn Scorer,
    pub audit: AuditConfig,
    /// `None` disables polishing. Feedback traces are never polished.
    pub polish: Option<PolishConfig>,
}

impl Refiner<'_> {
    pub fn refine(&self, variant_id: u64, trace: &Trace, ctx: &ItemContext<'_>) -> Result<TraceRefinement, RefineError> {
        let audit = factual_audit(trace, ctx, self.editor, self.scorer, &self.audit)?;
        let polish = match (trace.kind, self.polish) {
            (TraceKind::Reasoning, Some(cfg)) => Some(style_polish(
                &audit.final_trace,
                audit.f1_optimal,
                ctx,
                self.editor,
                self.scorer,
                &cfg,
            )?),
            _ => None,
        };
        Ok(TraceRefinement {
            variant_id,
            kind: trace.kind,
            audit,
            polish,
        })
    }
}

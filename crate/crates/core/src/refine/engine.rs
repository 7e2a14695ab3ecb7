use serde::{Deserialize, Serialize};

use super::{Editor, ItemContext, RefineError, Scorer, Stage, Trace};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HaltPolicy {
    /// Stop after `saturation_needed` consecutive sub-epsilon F1 changes.
    Stability,
    /// Stop as soon as precision and recall are both 1.
    PerfectScore,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AuditConfig {
    pub max_iterations: usize,
    pub epsilon: f64,
    pub saturation_needed: usize,
    pub halt_policy: HaltPolicy,
}

impl Default for AuditConfig {
    fn default() -> Self {
        AuditConfig {
            max_iterations: 5,
            epsilon: 0.05,
            saturation_needed: 2,
            halt_policy: HaltPolicy::Stability,
        }
    }
}

impl AuditConfig {
    pub fn validate(&self) -> Result<(), RefineError> {
        if self.max_iterations == 0 {
            return Err(RefineError::Config("max_iterations must be at least 1".into()));
        }
        if !(self.epsilon > 0.0 && self.epsilon.is_finite()) {
            return Err(RefineError::Config(format!("epsilon must be positive, got {}", self.epsilon)));
        }
        if self.saturation_needed == 0 {
            return Err(RefineError::Config("saturation_needed must be at least 1".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PolishConfig {
    pub max_iterations: usize,
}

impl Default for PolishConfig {
    fn default() -> Self {
        PolishConfig { max_iterations: 5 }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum HaltReason {
    Converged,
    MaxIter,
    F1Drop,
    RewardDrop,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RefinementRun {
    pub initial: Trace,
    #[serde(rename = "final")]
    pub final_trace: Trace,
    /// One entry per editor call.
    pub f1_history: Vec<f64>,
    /// Polish only: reward of the input first, then one entry per editor call.
    pub reward_history: Vec<f64>,
    /// Audit: F1 of the last iterate before the halting one. Polish: F1 of
    /// the last accepted candidate, or the floor it was given.
    pub f1_optimal: f64,
    /// F1 of `final_trace` as scored, or the floor when polish accepted
    /// nothing.
    pub final_f1: f64,
    pub halt_reason: HaltReason,
    pub iterations: usize,
}

/// Iterative factual audit. Every iteration edits the current trace and
/// scores it; the loop stops once the F1 change stays below epsilon for
/// `saturation_needed` consecutive iterations. The saturation check runs
/// before the previous score is updated, so on that exit `f1_optimal` is the
/// score of the iterate preceding the last one.
pub fn factual_audit(
    trace: &Trace,
    ctx: &ItemContext<'_>,
    editor: &dyn Editor,
    scorer: &dyn Scorer,
    config: &AuditConfig,
) -> Result<RefinementRun, RefineError> {
    config.validate()?;
    let mut current = trace.clone();
    let mut f1_prev = 0.0;
    let mut saturation = 0;
    let mut history = Vec::with_capacity(config.max_iterations);
    let mut halt = HaltReason::MaxIter;

    for iteration in 1..=config.max_iterations {
        current = editor.audit(&current, ctx).map_err(|source| RefineError::Editor {
            stage: Stage::Audit,
            iteration,
            source,
        })?;
        let f1_curr = scorer.f1(&current, ctx).map_err(|source| RefineError::Scorer {
            stage: Stage::Audit,
            iteration,
            source,
        })?;
        history.push(f1_curr);
        match config.halt_policy {
            HaltPolicy::Stability => {
                if (f1_curr - f1_prev).abs() < config.epsilon {
                    saturation += 1;
                    if saturation >= config.saturation_needed {
                        halt = HaltReason::Converged;
                        break;
                    }
                } else {
                    saturation = 0;
                }
            }
            HaltPolicy::PerfectScore => {
                if f1_curr >= 1.0 {
                    f1_prev = f1_curr;
                    halt = HaltReason::Converged;
                    break;
                }
            }
        }
        f1_prev = f1_curr;
    }

    Ok(RefinementRun {
        initial: trace.clone(),
        final_trace: current,
        final_f1: *history.last().expect("max_iterations >= 1"),
        iterations: history.len(),
        f1_history: history,
        reward_history: Vec::new(),
        f1_optimal: f1_prev,
        halt_reason: halt,
    })
}

/// Style polish. A candidate is accepted only when its F1 is at least
/// `f1_init` (the audit's `f1_optimal`) and its reward strictly exceeds the
/// last accepted reward, which starts at the input's own reward. The first
/// rejection halts the loop, so a stable reward ends it as converged.
pub fn style_polish(
    trace: &Trace,
    f1_init: f64,
    ctx: &ItemContext<'_>,
    editor: &dyn Editor,
    scorer: &dyn Scorer,
    config: &PolishConfig,
) -> Result<RefinementRun, RefineError> {
    if config.max_iterations == 0 {
        return Err(RefineError::Config("max_iterations must be at least 1".into()));
    }
    let score_err = |iteration| move |source| RefineError::Scorer {
        stage: Stage::Polish,
        iteration,
        source,
    };
    let mut reward_prev = scorer.reward(trace, ctx).map_err(score_err(0))?;
    let mut accepted = trace.clone();
    let mut accepted_f1 = f1_init;
    let mut f1_history = Vec::new();
    let mut reward_history = vec![reward_prev];
    let mut halt = HaltReason::MaxIter;

    for iteration in 1..=config.max_iterations {
        let candidate = editor.polish(&accepted, ctx).map_err(|source| RefineError::Editor {
            stage: Stage::Polish,
            iteration,
            source,
        })?;
        let f1 = scorer.f1(&candidate, ctx).map_err(score_err(iteration))?;
        let reward = scorer.reward(&candidate, ctx).map_err(score_err(iteration))?;
        f1_history.push(f1);
        reward_history.push(reward);
        if f1 < f1_init {
            halt = HaltReason::F1Drop;
            break;
        }
        if reward < reward_prev {
            halt = HaltReason::RewardDrop;
            break;
        }
        if reward == reward_prev {
            halt = HaltReason::Converged;
            break;
        }
        accepted = candidate;
        accepted_f1 = f1;
        reward_prev = reward;
    }

    Ok(RefinementRun {
        initial: trace.clone(),
        final_trace: accepted,
        iterations: f1_history.len(),
        f1_history,
        reward_history,
        f1_optimal: accepted_f1,
        final_f1: accepted_f1,
        halt_reason: halt,
    })
}

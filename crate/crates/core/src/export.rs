//! Alignment datasets: reasoning and feedback SFT examples, preference pairs
//! with refined traces as chosen, and their newline-delimited export.

use std::fs;
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};

use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use eerd_gateway::documents::{FeedbackOutput, ReasoningOutput};
use eerd_gateway::{fills, GatewayError, ModelHandle, PromptTemplate, StructuredDocument, TemplateId};

use crate::forge::{sha256_hex, MistakenVariant, Split};
use crate::model::render_schema;
use crate::refine::{RefinementRun, TraceKind};
use crate::rubric::{render_statements, RubricPackage};

#[derive(Debug, thiserror::Error)]
pub enum ExportError {
    #[error("variant {variant_id}: refinement run is incomplete ({why})")]
    IncompleteRun { variant_id: u64, why: String },
    #[error("variant {variant_id}: no aligned reasoning or refined feedback to train on")]
    MissingReasoning { variant_id: u64 },
    #[error("all {0} preference pairs were degenerate (chosen == rejected)")]
    AllPairsDegenerate(usize),
    #[error("nothing to export")]
    Empty,
    #[error("{path}: line {line}: {why}")]
    Record { path: PathBuf, line: usize, why: String },
    #[error(transparent)]
    Gateway(#[from] GatewayError),
    #[error("{path}: {source}")]
    Io { path: PathBuf, source: std::io::Error },
}

fn io_err(path: &Path) -> impl FnOnce(std::io::Error) -> ExportError + '_ {
    move |source| ExportError::Io {
        path: path.to_path_buf(),
        source,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TrainStage {
    Reasoning,
    Feedback,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DatasetStage {
    ReasoningSft,
    ReasoningDpo,
    FeedbackSft,
    FeedbackDpo,
}

impl DatasetStage {
    pub fn as_str(self) -> &'static str {
        match self {
            DatasetStage::ReasoningSft => "reasoning_sft",
            DatasetStage::ReasoningDpo => "reasoning_dpo",
            DatasetStage::FeedbackSft => "feedback_sft",
            DatasetStage::FeedbackDpo => "feedback_dpo",
        }
    }

    fn of(stage: TrainStage, preference: bool) -> Self {
        match (stage, preference) {
            (TrainStage::Reasoning, false) => DatasetStage::ReasoningSft,
            (TrainStage::Reasoning, true) => DatasetStage::ReasoningDpo,
            (TrainStage::Feedback, false) => DatasetStage::FeedbackSft,
            (TrainStage::Feedback, true) => DatasetStage::FeedbackDpo,
        }
    }
}

/// The model-facing input for one variant, independent of stage.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TaskInput {
    pub variant_id: u64,
    pub split: Split,
    /// Submitted diagram, rendered for a quoted prompt slot.
    pub submitted_erd: String,
    pub relevant_statements: String,
}

impl TaskInput {
    pub fn new(variant: &MistakenVariant, rubrics: &RubricPackage, split: Split) -> Self {
        TaskInput {
            variant_id: variant.variant_id,
            split,
            submitted_erd: render_schema(&variant.schema).replace('"', "'"),
            relevant_statements: render_statements(&rubrics.relevant_for(variant.focal_set())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptContext {
    pub prompt_template: TemplateId,
    pub task: TaskInput,
    /// Present exactly for feedback contexts.
    pub aligned_reasoning: Option<String>,
}

impl PromptContext {
    pub fn reasoning(task: TaskInput) -> Self {
        PromptContext {
            prompt_template: TemplateId::InferenceReasoning,
            task,
            aligned_reasoning: None,
        }
    }

    pub fn feedback(task: TaskInput, aligned_reasoning: String) -> Self {
        PromptContext {
            prompt_template: TemplateId::InferenceFeedbackWithReasoning,
            task,
            aligned_reasoning: Some(aligned_reasoning),
        }
    }

    pub fn stage(&self) -> TrainStage {
        if self.aligned_reasoning.is_some() {
            TrainStage::Feedback
        } else {
            TrainStage::Reasoning
        }
    }

    /// The filled inference prompt.
    pub fn prompt(&self) -> String {
        let mut f = fills([
            ("relevant_statements", self.task.relevant_statements.clone()),
            ("submitted_erd", self.task.submitted_erd.clone()),
        ]);
        if let Some(r) = &self.aligned_reasoning {
            f.insert("reasoning".into(), r.replace('"', "'"));
        }
        PromptTemplate::get(self.prompt_template)
            .fill(&f)
            .expect("context fills every placeholder of its template")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct SftExample {
    pub context: PromptContext,
    pub target: String,
    pub stage: TrainStage,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PreferencePair {
    pub context: PromptContext,
    pub chosen: String,
    pub rejected: String,
    pub stage: TrainStage,
}

/// One refined corpus item. `aligned_reasoning` is the reasoning-aligned
/// model's output and is only consulted for feedback datasets.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExportItem {
    pub task: TaskInput,
    pub run: RefinementRun,
    #[serde(default)]
    pub aligned_reasoning: Option<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExportOptions {
    /// Skip items whose split is `test`.
    pub split_guard: bool,
    /// Keep claim markup in targets instead of the reader-facing text.
    pub keep_markup: bool,
}

impl Default for ExportOptions {
    fn default() -> Self {
        ExportOptions {
            split_guard: true,
            keep_markup: false,
        }
    }
}

impl ExportOptions {
    fn admits(&self, item: &ExportItem) -> bool {
        !(self.split_guard && item.task.split == Split::Test)
    }
}

fn refined_text(item: &ExportItem, kind: TraceKind, opts: &ExportOptions) -> Result<String, ExportError> {
    let incomplete = |why: String| ExportError::IncompleteRun {
        variant_id: item.task.variant_id,
        why,
    };
    let trace = &item.run.final_trace;
    if trace.kind != kind {
        return Err(incomplete(format!("expected a {kind:?} trace, found {:?}", trace.kind)));
    }
    let text = if opts.keep_markup {
        trace.text.clone()
    } else {
        trace.plain()
    };
    if text.trim().is_empty() {
        return Err(incomplete("final text is empty".into()));
    }
    Ok(text)
}

fn initial_text(item: &ExportItem, opts: &ExportOptions) -> String {
    if opts.keep_markup {
        item.run.initial.text.clone()
    } else {
        item.run.initial.plain()
    }
}

fn feedback_context(item: &ExportItem) -> Result<PromptContext, ExportError> {
    match &item.aligned_reasoning {
        Some(r) if !r.trim().is_empty() => Ok(PromptContext::feedback(item.task.clone(), r.clone())),
        _ => Err(ExportError::MissingReasoning {
            variant_id: item.task.variant_id,
        }),
    }
}

/// One example per admitted item; the target is the refined reasoning.
pub fn build_reasoning_sft(items: &[ExportItem], opts: &ExportOptions) -> Result<Vec<SftExample>, ExportError> {
    items
        .iter()
        .filter(|i| opts.admits(i))
        .map(|i| {
            Ok(SftExample {
                context: PromptContext::reasoning(i.task.clone()),
                target: refined_text(i, TraceKind::Reasoning, opts)?,
                stage: TrainStage::Reasoning,
            })
        })
        .collect()
}

/// One example per admitted item; the context carries the aligned reasoning
/// in the prompt's reasoning slot and the target is the refined feedback.
pub fn build_feedback_train(items: &[ExportItem], opts: &ExportOptions) -> Result<Vec<SftExample>, ExportError> {
    items
        .iter()
        .filter(|i| opts.admits(i))
        .map(|i| {
            let context = feedback_context(i)?;
            let target = match refined_text(i, TraceKind::Feedback, opts) {
                Err(ExportError::IncompleteRun { variant_id, .. }) => return Err(ExportError::MissingReasoning { variant_id }),
                other => other?,
            };
            Ok(SftExample {
                context,
                target,
                stage: TrainStage::Feedback,
            })
        })
        .collect()
}

/// Where rejected responses come from.
#[derive(Debug, Clone, Copy)]
pub enum RejectedSource<'h> {
    /// The post-SFT model, prompted with the same context.
    ModelEndpoint(&'h ModelHandle),
    /// The unrefined trace; fully offline.
    InitialTrace,
}

impl RejectedSource<'_> {
    pub fn label(&self) -> &'static str {
        match self {
            RejectedSource::ModelEndpoint(_) => "model_endpoint",
            RejectedSource::InitialTrace => "initial_trace",
        }
    }

    pub fn temperature(&self) -> Option<f64> {
        match self {
            RejectedSource::ModelEndpoint(h) => Some(h.temperature()),
            RejectedSource::InitialTrace => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PairBuild {
    pub pairs: Vec<PreferencePair>,
    /// Variants whose chosen and rejected texts coincided.
    pub dropped: Vec<u64>,
}

/// The model's answer for a context. Structured answers are unwrapped to
/// their text field; anything else is taken verbatim.
fn sample_rejected(handle: &ModelHandle, context: &PromptContext) -> Result<String, GatewayError> {
    let raw = handle.complete_prompt(context.prompt_template, &context.prompt())?;
    let parsed = match context.stage() {
        TrainStage::Reasoning => ReasoningOutput::parse(&raw).map(|r| r.reasoning),
        TrainStage::Feedback => FeedbackOutput::parse(&raw).map(|f| f.feedback),
    };
    Ok(parsed.unwrap_or(raw))
}

/// Chosen is the refined trace, rejected comes from `source`. Degenerate
/// pairs are dropped and counted; losing every pair is an error.
pub fn build_preference_pairs(
    items: &[ExportItem],
    source: RejectedSource<'_>,
    stage: TrainStage,
    opts: &ExportOptions,
) -> Result<PairBuild, ExportError> {
    let kind = match stage {
        TrainStage::Reasoning => TraceKind::Reasoning,
        TrainStage::Feedback => TraceKind::Feedback,
    };
    let mut out = PairBuild {
        pairs: Vec::new(),
        dropped: Vec::new(),
    };
    let admitted: Vec<&ExportItem> = items.iter().filter(|i| opts.admits(i)).collect();
    for item in &admitted {
        let context = match stage {
            TrainStage::Reasoning => PromptContext::reasoning(item.task.clone()),
            TrainStage::Feedback => feedback_context(item)?,
        };
        let chosen = refined_text(item, kind, opts)?;
        let rejected = match source {
            RejectedSource::InitialTrace => initial_text(item, opts),
            RejectedSource::ModelEndpoint(h) => sample_rejected(h, &context)?,
        };
        if chosen == rejected {
            out.dropped.push(item.task.variant_id);
            continue;
        }
        out.pairs.push(PreferencePair {
            context,
            chosen,
            rejected,
            stage,
        });
    }
    if !out.dropped.is_empty() {
        log::info!("dropped {} degenerate {:?} preference pairs", out.dropped.len(), stage);
    }
    if out.pairs.is_empty() && !admitted.is_empty() {
        return Err(ExportError::AllPairsDegenerate(admitted.len()));
    }
    Ok(out)
}

/// A line of an exported dataset file.
pub trait DatasetRecord: Serialize + DeserializeOwned {
    fn validate(&self) -> Result<(), String>;
    fn stage(&self) -> DatasetStage;
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SftRecord {
    pub prompt: String,
    pub completion: String,
    pub stage: DatasetStage,
    pub variant_id: u64,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DpoRecord {
    pub prompt: String,
    pub chosen: String,
    pub rejected: String,
    pub stage: DatasetStage,
    pub variant_id: u64,
}

impl DatasetRecord for SftRecord {
    fn validate(&self) -> Result<(), String> {
        if self.prompt.is_empty() || self.completion.trim().is_empty() {
            return Err("prompt and completion must be non-empty".into());
        }
        if !matches!(self.stage, DatasetStage::ReasoningSft | DatasetStage::FeedbackSft) {
            return Err(format!("stage {} is not an SFT stage", self.stage.as_str()));
        }
        Ok(())
    }

    fn stage(&self) -> DatasetStage {
        self.stage
    }
}

impl DatasetRecord for DpoRecord {
    fn validate(&self) -> Result<(), String> {
        if self.prompt.is_empty() || self.chosen.trim().is_empty() || self.rejected.trim().is_empty() {
            return Err("prompt, chosen and rejected must be non-empty".into());
        }
        if self.chosen == self.rejected {
            return Err("chosen equals rejected".into());
        }
        if !matches!(self.stage, DatasetStage::ReasoningDpo | DatasetStage::FeedbackDpo) {
            return Err(format!("stage {} is not a preference stage", self.stage.as_str()));
        }
        Ok(())
    }

    fn stage(&self) -> DatasetStage {
        self.stage
    }
}

impl SftExample {
    pub fn to_record(&self) -> SftRecord {
        SftRecord {
            prompt: self.context.prompt(),
            completion: self.target.clone(),
            stage: DatasetStage::of(self.stage, false),
            variant_id: self.context.task.variant_id,
        }
    }
}

impl PreferencePair {
    pub fn to_record(&self) -> DpoRecord {
        DpoRecord {
            prompt: self.context.prompt(),
            chosen: self.chosen.clone(),
            rejected: self.rejected.clone(),
            stage: DatasetStage::of(self.stage, true),
            variant_id: self.context.task.variant_id,
        }
    }
}

/// Training schedule the datasets are meant for. Metadata only.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TrainPlan {
    pub sft_epochs: u32,
    pub dpo_steps: u32,
    pub notes: String,
}

impl Default for TrainPlan {
    fn default() -> Self {
        TrainPlan {
            sft_epochs: 1,
            dpo_steps: 50,
            notes: "SFT runs one epoch over each SFT file; DPO runs a fixed number of optimizer steps over each pairs file.".into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExportManifest {
    pub stage: DatasetStage,
    pub file: String,
    pub count: usize,
    pub sha256: String,
    pub train_plan: TrainPlan,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rejected_source: Option<String>,
    /// Sampling temperature of the rejected-response model, when one was used.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rejected_temperature: Option<f64>,
    #[serde(default)]
    pub dropped_pairs: usize,
}

/// Path of the manifest written next to `path`.
pub fn manifest_path(path: &Path) -> PathBuf {
    let mut s = path.as_os_str().to_os_string();
    s.push(".manifest.json");
    PathBuf::from(s)
}

/// Writes `bytes` to a sibling temp file and renames it into place.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), ExportError> {
    let mut tmp = path.as_os_str().to_os_string();
    tmp.push(".tmp");
    let tmp = PathBuf::from(tmp);
    let mut f = fs::File::create(&tmp).map_err(io_err(&tmp))?;
    f.write_all(bytes).map_err(io_err(&tmp))?;
    f.sync_all().map_err(io_err(&tmp))?;
    fs::rename(&tmp, path).map_err(io_err(path))
}

/// Writes one JSON object per line plus a manifest beside the file. The
/// manifest's `stage` is taken from the records, which must agree.
pub fn export_jsonl<R: DatasetRecord>(records: &[R], path: &Path, seed: u64) -> Result<ExportManifest, ExportError> {
    let first = records.first().ok_or(ExportError::Empty)?;
    let stage = first.stage();
    let mut body = Vec::new();
    for (i, r) in records.iter().enumerate() {
        let bad = |why: String| ExportError::Record {
            path: path.to_path_buf(),
            line: i + 1,
            why,
        };
        r.validate().map_err(bad)?;
        if r.stage() != stage {
            return Err(bad(format!("stage {} differs from {}", r.stage().as_str(), stage.as_str())));
        }
        serde_json::to_writer(&mut body, r).expect("records serialize");
        body.push(b'\n');
    }
    write_atomic(path, &body)?;
    let manifest = ExportManifest {
        stage,
        file: path.file_name().map(|n| n.to_string_lossy().into_owned()).unwrap_or_default(),
        count: records.len(),
        sha256: sha256_hex(&body),
        train_plan: TrainPlan::default(),
        seed,
        rejected_source: None,
        rejected_temperature: None,
        dropped_pairs: 0,
    };
    write_manifest(path, &manifest)?;
    Ok(manifest)
}

pub fn write_manifest(path: &Path, manifest: &ExportManifest) -> Result<(), ExportError> {
    let json = serde_json::to_vec_pretty(manifest).expect("manifest serializes");
    write_atomic(&manifest_path(path), &json)
}

/// Reads and validates every line of a dataset file.
pub fn import_jsonl<R: DatasetRecord>(path: &Path) -> Result<Vec<R>, ExportError> {
    let f = fs::File::open(path).map_err(io_err(path))?;
    let mut out = Vec::new();
    for (i, line) in BufReader::new(f).lines().enumerate() {
        let line = line.map_err(io_err(path))?;
        if line.trim().is_empty() {
            continue;
        }
        let bad = |why: String| ExportError::Record {
            path: path.to_path_buf(),
            line: i + 1,
            why,
        };
        let r: R = serde_json::from_str(&line).map_err(|e| bad(e.to_string()))?;
        r.validate().map_err(bad)?;
        out.push(r);
    }
    Ok(out)
}

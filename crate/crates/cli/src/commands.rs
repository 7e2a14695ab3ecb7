use std::collections::{BTreeMap, BTreeSet};
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use eerd_core::exec::{map_ordered, try_map_ordered, Execution};
use eerd_core::export::{
    build_feedback_train, build_preference_pairs, build_reasoning_sft, export_jsonl, write_atomic, write_manifest,
    DatasetStage, ExportItem, ExportManifest, ExportOptions, RejectedSource, SftExample, TaskInput, TrainStage,
};
use eerd_core::forge::{generate_corpus, sha256_hex, CorpusManifest, CorpusPlan, MistakenVariant, Split, VariantDocument};
use eerd_core::model::{parse_schema, EerdSchema};
use eerd_core::oracle::{
    diff_schemas, judge_with_llm, match_findings, render_csv, render_table, report_document, summarize,
    DiagnosticReport, JudgeInputs,
};
use eerd_core::refine::{
    ClaimEditor, Editor, GuideEditor, ItemContext, LlmScorer, OracleScorer, Refiner, Scorer, Trace, TraceKind,
    TraceRefinement,
};
use eerd_core::rubric::{load_rubrics, RubricPackage};
use eerd_gateway::documents::{FeedbackOutput, ReasoningOutput};
use eerd_gateway::{ModelHandle, ModelRole, PromptTemplate, TemplateId};

use crate::config::{JudgeMode, PipelineConfig, RejectedSourceKind, SchemaEntry};
use crate::error::{from_export, from_gateway, from_judge, from_refine, CliError};
use crate::manifest::RunManifest;

type SftBuilder = fn(&[ExportItem], &ExportOptions) -> Result<Vec<SftExample>, eerd_core::export::ExportError>;

pub struct Session {
    pub cfg: PipelineConfig,
    pub exec: Execution,
    pub mock: Option<ModelHandle>,
}

struct SchemaInput<'c> {
    entry: &'c SchemaEntry,
    schema: EerdSchema,
    rubrics: RubricPackage,
}

fn read_config_file(path: &Path) -> Result<String, CliError> {
    fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| CliError::pipeline(dir.display(), e))?;
    }
    write_atomic(path, bytes).map_err(|e| CliError::Pipeline(e.to_string()))
}

fn jsonl<T: Serialize>(rows: &[T]) -> Vec<u8> {
    let mut out = Vec::new();
    for r in rows {
        serde_json::to_writer(&mut out, r).expect("rows serialize");
        out.push(b'\n');
    }
    out
}

fn read_jsonl<T: for<'de> Deserialize<'de>>(path: &Path) -> Result<Vec<T>, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Pipeline(format!("missing upstream artifact {}: {e}", path.display())))?;
    text.lines()
        .enumerate()
        .filter(|(_, l)| !l.trim().is_empty())
        .map(|(i, l)| serde_json::from_str(l).map_err(|e| CliError::Pipeline(format!("{}:{}: {e}", path.display(), i + 1))))
        .collect()
}

/// Per-schema seed derived from the run seed and the schema name, so adding
/// or reordering schemas leaves other corpora unchanged.
fn schema_seed(seed: u64, name: &str) -> u64 {
    let h = sha256_hex(format!("{seed}:{name}").as_bytes());
    u64::from_str_radix(&h[..16], 16).expect("hex digest")
}

impl Session {
    fn out(&self) -> &Path {
        &self.cfg.output_dir
    }

    fn corpus_path(&self, name: &str) -> PathBuf {
        self.out().join("corpus").join(format!("{name}.variants.jsonl"))
    }

    fn refine_log(&self, name: &str, id: u64) -> PathBuf {
        self.out().join("refine").join(name).join(format!("{id}.json"))
    }

    fn inputs(&self) -> Result<Vec<SchemaInput<'_>>, CliError> {
        self.cfg
            .schemas
            .iter()
            .map(|entry| {
                let schema = parse_schema(&read_config_file(&entry.schema)?)
                    .map_err(|e| CliError::Config(format!("{}: {e}", entry.schema.display())))?;
                let rubrics = load_rubrics(&read_config_file(&entry.rubrics)?, &schema)
                    .map_err(|e| CliError::Config(format!("{}: {e}", entry.rubrics.display())))?;
                Ok(SchemaInput { entry, schema, rubrics })
            })
            .collect()
    }

    fn handle(&self, role: ModelRole) -> Result<ModelHandle, CliError> {
        match &self.mock {
            Some(m) => Ok(m.clone().with_role(role)),
            None => ModelHandle::from_env(role).map_err(|e| from_gateway(format!("{role:?} model"), e)),
        }
    }

    fn corpus(&self, name: &str) -> Result<Vec<(MistakenVariant, Split)>, CliError> {
        let docs: Vec<VariantDocument> = read_jsonl(&self.corpus_path(name))?;
        docs.iter()
            .map(|d| {
                MistakenVariant::from_document(d)
                    .map(|v| (v, d.split))
                    .map_err(|e| CliError::pipeline(self.corpus_path(name).display(), e))
            })
            .collect()
    }

    fn finish(&self, stage: &str, started: Instant, artifacts: &[PathBuf]) -> Result<(), CliError> {
        let mut m = RunManifest::load_or_new(self.out(), &self.cfg.hash());
        m.record(self.out(), stage, artifacts, started.elapsed().as_millis() as u64)?;
        m.save(self.out())
    }

    pub fn forge(&self) -> Result<(), CliError> {
        let started = Instant::now();
        let inputs = self.inputs()?;
        let mut plans = Vec::with_capacity(inputs.len());
        let mut start_id = 0u64;
        for i in &inputs {
            let p = &self.cfg.plan;
            let mut plan = CorpusPlan::new(p.one, p.two, p.three, start_id, schema_seed(self.cfg.seed, &i.entry.name));
            plan.balance_window = p.balance_window;
            start_id += plan.total() as u64;
            plans.push(plan);
        }
        let idx: Vec<usize> = (0..inputs.len()).collect();
        let corpora = try_map_ordered(&idx, self.exec, |&k| generate_corpus(&inputs[k].schema, &plans[k]))
            .map_err(|e| CliError::pipeline("forge", e))?;

        let mut artifacts = Vec::new();
        for ((input, plan), variants) in inputs.iter().zip(&plans).zip(&corpora) {
            let split = input.entry.split;
            let docs: Vec<VariantDocument> = variants.iter().map(|v| v.to_document(split)).collect();
            let path = self.corpus_path(&input.entry.name);
            write_file(&path, &jsonl(&docs))?;
            let manifest = CorpusManifest::new(&input.schema, plan, split, variants);
            let mpath = self.out().join("corpus").join(format!("{}.manifest.json", input.entry.name));
            write_file(&mpath, &serde_json::to_vec_pretty(&manifest).expect("manifest serializes"))?;
            println!("forged {} {:?} variants of {}", variants.len(), split, input.entry.name);
            artifacts.extend([path, mpath]);
        }
        self.finish("forge", started, &artifacts)
    }

    fn item_hash(&self, doc: &VariantDocument) -> String {
        let c = &self.cfg;
        let key = serde_json::json!({
            "variant": doc,
            "seed": c.seed,
            "audit": c.audit,
            "polish": c.polish,
            "judge": c.judge_mode,
            "fixes": c.fixes_per_call,
            "simulation": c.simulation,
        });
        sha256_hex(key.to_string().as_bytes())
    }

    fn initial_traces(&self, v: &MistakenVariant, input: &SchemaInput<'_>, base: Option<&ModelHandle>) -> Result<(Trace, Trace), CliError> {
        let Some(base) = base else {
            let sim = eerd_core::refine::SimulatedBaseModel {
                seed: self.cfg.seed,
                ..self.cfg.simulation
            };
            return Ok((
                sim.generate(v, &input.schema, &input.rubrics, TraceKind::Reasoning),
                sim.generate(v, &input.schema, &input.rubrics, TraceKind::Feedback),
            ));
        };
        let task = TaskInput::new(v, &input.rubrics, Split::Train);
        let fill = |_: TemplateId| {
            eerd_gateway::fills([
                ("relevant_statements", task.relevant_statements.clone()),
                ("submitted_erd", task.submitted_erd.clone()),
            ])
        };
        let ctx = |e| from_gateway(format!("variant {}", v.variant_id), e);
        let r: ReasoningOutput = base
            .complete_structured(PromptTemplate::get(TemplateId::InferenceReasoning), &fill(TemplateId::InferenceReasoning))
            .map_err(ctx)?;
        let f: FeedbackOutput = base
            .complete_structured(PromptTemplate::get(TemplateId::InferenceFeedback), &fill(TemplateId::InferenceFeedback))
            .map_err(ctx)?;
        let read = |text: String, kind| Trace::tagged(text.clone(), kind).unwrap_or_else(|_| Trace::with_claims(text, vec![], kind));
        Ok((read(r.reasoning, TraceKind::Reasoning), read(f.feedback, TraceKind::Feedback)))
    }

    pub fn refine(&self) -> Result<(), CliError> {
        let started = Instant::now();
        let inputs = self.inputs()?;
        let (guide, base) = match self.cfg.judge_mode {
            JudgeMode::Oracle => (None, None),
            JudgeMode::Llm => (Some(self.handle(ModelRole::Guide)?), Some(self.handle(ModelRole::Base)?)),
        };
        let claim_editor = ClaimEditor {
            fixes_per_call: self.cfg.fixes_per_call,
        };
        let (editor, scorer): (Box<dyn Editor>, Box<dyn Scorer>) = match &guide {
            None => (Box::new(claim_editor), Box::new(OracleScorer)),
            Some(g) => (
                Box::new(GuideEditor { handle: g.clone() }),
                Box::new(LlmScorer {
                    judge: Some(g.clone()),
                    style: Some(g.clone()),
                }),
            ),
        };
        let reasoning = Refiner {
            editor: editor.as_ref(),
            scorer: scorer.as_ref(),
            audit: self.cfg.audit,
            polish: self.cfg.polish.config(),
        };
        let feedback = Refiner { polish: None, ..reasoning };

        let mut artifacts = Vec::new();
        for input in &inputs {
            let name = &input.entry.name;
            let corpus = self.corpus(name)?;
            let logs = try_map_ordered(&corpus, self.exec, |(v, split)| {
                let path = self.refine_log(name, v.variant_id);
                let hash = self.item_hash(&v.to_document(*split));
                if let Some(done) = fs::read(&path)
                    .ok()
                    .and_then(|b| serde_json::from_slice::<ItemLog>(&b).ok())
                    .filter(|l| l.input_hash == hash)
                {
                    return Ok(done);
                }
                let (r0, f0) = self.initial_traces(v, input, base.as_ref())?;
                let ctx = ItemContext {
                    reference: &input.schema,
                    submitted: &v.schema,
                    rubrics: &input.rubrics,
                    truth: &v.mistakes,
                };
                let log = ItemLog {
                    variant_id: v.variant_id,
                    input_hash: hash,
                    reasoning: reasoning.refine(v.variant_id, &r0, &ctx).map_err(|e| from_refine(v.variant_id, e))?,
                    feedback: feedback.refine(v.variant_id, &f0, &ctx).map_err(|e| from_refine(v.variant_id, e))?,
                };
                write_file(&path, &serde_json::to_vec_pretty(&log).expect("log serializes"))?;
                Ok::<_, CliError>(log)
            })?;
            let summary = RefineSummary::of(&logs);
            let spath = self.out().join("refine").join(format!("{name}.summary.json"));
            write_file(&spath, &serde_json::to_vec_pretty(&summary).expect("summary serializes"))?;
            println!(
                "refined {} variants of {name}: reasoning halts {:?}, feedback halts {:?}",
                logs.len(),
                summary.reasoning_halts,
                summary.feedback_halts
            );
            artifacts.push(spath);
            artifacts.extend(logs.iter().map(|l| self.refine_log(name, l.variant_id)));
        }
        self.finish("refine", started, &artifacts)
    }

    pub fn export(&self, only: Option<DatasetStage>) -> Result<(), CliError> {
        let started = Instant::now();
        let inputs = self.inputs()?;
        let opts = ExportOptions::default();
        let mut reasoning_items = Vec::new();
        let mut feedback_items = Vec::new();
        let endpoint = match self.cfg.rejected_source {
            RejectedSourceKind::ModelEndpoint => Some((
                self.handle(ModelRole::ReasoningAligned)?,
                self.handle(ModelRole::FeedbackAligned)?,
            )),
            RejectedSourceKind::InitialTrace => None,
        };
        for input in &inputs {
            for (v, split) in self.corpus(&input.entry.name)? {
                let path = self.refine_log(&input.entry.name, v.variant_id);
                let bytes = fs::read(&path)
                    .map_err(|e| CliError::Pipeline(format!("missing refinement log {}: {e}", path.display())))?;
                let log: ItemLog = serde_json::from_slice(&bytes).map_err(|e| CliError::pipeline(path.display(), e))?;
                let task = TaskInput::new(&v, &input.rubrics, split);
                let aligned = match &endpoint {
                    None => log.reasoning.final_trace().plain(),
                    Some((pi_r, _)) if split == Split::Train => aligned_reasoning(pi_r, &task)?,
                    Some(_) => String::new(),
                };
                reasoning_items.push(ExportItem {
                    task: task.clone(),
                    run: log.reasoning.combined(),
                    aligned_reasoning: None,
                });
                feedback_items.push(ExportItem {
                    task,
                    run: log.feedback.combined(),
                    aligned_reasoning: Some(aligned),
                });
            }
        }

        let source = |stage| match (&endpoint, stage) {
            (None, _) => RejectedSource::InitialTrace,
            (Some((r, _)), TrainStage::Reasoning) => RejectedSource::ModelEndpoint(r),
            (Some((_, f)), TrainStage::Feedback) => RejectedSource::ModelEndpoint(f),
        };
        let dir = self.out().join("export");
        let wants = |s: DatasetStage| only.is_none_or(|o| o == s);
        let mut artifacts = Vec::new();
        let mut emit = |manifest: ExportManifest, path: PathBuf| -> Result<(), CliError> {
            write_manifest(&path, &manifest).map_err(from_export)?;
            println!("{}: {} records (dropped {})", manifest.stage.as_str(), manifest.count, manifest.dropped_pairs);
            artifacts.push(eerd_core::export::manifest_path(&path));
            artifacts.push(path);
            Ok(())
        };
        fs::create_dir_all(&dir).map_err(|e| CliError::pipeline(dir.display(), e))?;

        let sft_sets: [(DatasetStage, SftBuilder, &Vec<ExportItem>); 2] = [
            (DatasetStage::ReasoningSft, build_reasoning_sft, &reasoning_items),
            (DatasetStage::FeedbackSft, build_feedback_train, &feedback_items),
        ];
        for (stage, build, items) in sft_sets {
            if !wants(stage) {
                continue;
            }
            let examples: Vec<SftExample> = build(items, &opts).map_err(from_export)?;
            let recs: Vec<_> = examples.iter().map(SftExample::to_record).collect();
            let path = dir.join(format!("{}.jsonl", stage.as_str()));
            let m = export_jsonl(&recs, &path, self.cfg.seed).map_err(from_export)?;
            emit(m, path)?;
        }
        for (stage, train, items) in [
            (DatasetStage::ReasoningDpo, TrainStage::Reasoning, &reasoning_items),
            (DatasetStage::FeedbackDpo, TrainStage::Feedback, &feedback_items),
        ] {
            if !wants(stage) {
                continue;
            }
            let src = source(train);
            let built = build_preference_pairs(items, src, train, &opts).map_err(from_export)?;
            let recs: Vec<_> = built.pairs.iter().map(|p| p.to_record()).collect();
            let path = dir.join(format!("{}.jsonl", stage.as_str()));
            let mut m = export_jsonl(&recs, &path, self.cfg.seed).map_err(from_export)?;
            m.rejected_source = Some(src.label().to_string());
            m.rejected_temperature = src.temperature();
            m.dropped_pairs = built.dropped.len();
            emit(m, path)?;
        }
        self.finish("export", started, &artifacts)
    }

    pub fn eval(&self, source: EvalSource, split: Option<Split>) -> Result<(), CliError> {
        let started = Instant::now();
        let inputs = self.inputs()?;
        let guide = match (&source, self.cfg.judge_mode) {
            (EvalSource::Oracle, _) | (_, JudgeMode::Oracle) => None,
            (_, JudgeMode::Llm) => Some(self.handle(ModelRole::Guide)?),
        };
        let predictions: Option<BTreeMap<u64, String>> = match &source {
            EvalSource::Predictions(path) => Some(
                read_jsonl::<Prediction>(path)?
                    .into_iter()
                    .map(|p| (p.variant_id, p.feedback))
                    .collect(),
            ),
            _ => None,
        };

        let selected: Vec<&SchemaInput<'_>> = inputs
            .iter()
            .filter(|i| split.is_none_or(|s| s == i.entry.split))
            .collect();
        if selected.is_empty() {
            return Err(CliError::Config("no configured schema matches the requested split".into()));
        }
        let mut corpora = Vec::new();
        for input in &selected {
            corpora.push(self.corpus(&input.entry.name)?);
        }
        if let Some(preds) = &predictions {
            let expected: BTreeSet<u64> = corpora.iter().flatten().map(|(v, _)| v.variant_id).collect();
            let missing: Vec<String> = expected.iter().filter(|id| !preds.contains_key(id)).map(u64::to_string).collect();
            if !missing.is_empty() {
                return Err(CliError::Pipeline(format!(
                    "predictions are missing {} variant(s): {}",
                    missing.len(),
                    missing.join(", ")
                )));
            }
            let extra = preds.keys().filter(|id| !expected.contains(id)).count();
            if extra > 0 {
                log::warn!("ignoring {extra} prediction(s) for variants outside the evaluated split");
            }
        }

        let dir = self.out().join("eval");
        let mut all = Vec::new();
        let mut artifacts = Vec::new();
        for (input, corpus) in selected.iter().zip(&corpora) {
            let name = &input.entry.name;
            let reports = try_map_ordered(corpus, self.exec, |(v, _)| {
                let text = match &source {
                    EvalSource::Oracle => {
                        let f = diff_schemas(&input.schema, &v.schema, &input.rubrics);
                        return Ok(match_findings(&f, &v.mistakes, self.cfg.match_mode));
                    }
                    EvalSource::Predictions(_) => predictions.as_ref().expect("loaded")[&v.variant_id].clone(),
                    EvalSource::Refined => {
                        let path = self.refine_log(name, v.variant_id);
                        let bytes = fs::read(&path)
                            .map_err(|e| CliError::Pipeline(format!("missing refinement log {}: {e}", path.display())))?;
                        let log: ItemLog = serde_json::from_slice(&bytes).map_err(|e| CliError::pipeline(path.display(), e))?;
                        log.feedback.final_trace().text.clone()
                    }
                };
                match &guide {
                    None => {
                        let t = Trace::tagged(text, TraceKind::Feedback)
                            .map_err(|e| CliError::Pipeline(format!("variant {}: {e}", v.variant_id)))?;
                        Ok(match_findings(&t.findings(), &v.mistakes, self.cfg.match_mode))
                    }
                    Some(g) => {
                        let plain = eerd_core::refine::strip_markup(&text);
                        judge_with_llm(
                            g,
                            &JudgeInputs {
                                reference: &input.schema,
                                submitted: &v.schema,
                                rubrics: &input.rubrics,
                                feedback: &plain,
                                truth: &v.mistakes,
                            },
                        )
                        .map_err(|e| from_judge(v.variant_id, e))
                    }
                }
            })?;
            let docs = map_ordered(&reports.iter().zip(corpus).collect::<Vec<_>>(), self.exec, |(r, (v, _))| {
                let mut d = serde_json::to_value(report_document(r, &v.mistakes)).expect("report serializes");
                d["mistake_id"] = v.variant_id.into();
                d
            });
            let dpath = dir.join(format!("{name}.diagnostics.jsonl"));
            let rpath = dir.join(format!("{name}.reports.jsonl"));
            write_file(&dpath, &jsonl(&reports))?;
            write_file(&rpath, &jsonl(&docs))?;
            artifacts.extend([dpath, rpath]);
            all.extend(reports);
        }
        let summary = summarize(&all).map_err(|e| CliError::pipeline("eval", e))?;
        let csv = dir.join("summary.csv");
        let txt = dir.join("summary.txt");
        write_file(&csv, render_csv(&summary).as_bytes())?;
        let table = render_table(&summary);
        write_file(&txt, table.as_bytes())?;
        print!("{table}");
        artifacts.extend([csv, txt]);
        self.finish("eval", started, &artifacts)
    }

    pub fn report(&self, csv: bool) -> Result<(), CliError> {
        let dir = self.out().join("eval");
        let mut all: Vec<DiagnosticReport> = Vec::new();
        for s in &self.cfg.schemas {
            let path = dir.join(format!("{}.diagnostics.jsonl", s.name));
            if path.is_file() {
                all.extend(read_jsonl::<DiagnosticReport>(&path)?);
            }
        }
        if all.is_empty() {
            return Err(CliError::Pipeline(format!("no evaluation results under {}; run eval first", dir.display())));
        }
        let summary = summarize(&all).map_err(|e| CliError::pipeline("report", e))?;
        print!("{}", if csv { render_csv(&summary) } else { render_table(&summary) });
        Ok(())
    }
}

/// Reasoning from the reasoning-aligned model for a feedback context.
fn aligned_reasoning(handle: &ModelHandle, task: &TaskInput) -> Result<String, CliError> {
    let f = eerd_gateway::fills([
        ("relevant_statements", task.relevant_statements.clone()),
        ("submitted_erd", task.submitted_erd.clone()),
    ]);
    let out: ReasoningOutput = handle
        .complete_structured(PromptTemplate::get(TemplateId::InferenceReasoning), &f)
        .map_err(|e| from_gateway(format!("variant {}", task.variant_id), e))?;
    Ok(out.reasoning)
}

#[derive(Debug, Clone)]
pub enum EvalSource {
    /// The rule-based diff itself, scored against the injected truth.
    Oracle,
    /// Refined feedback from the refinement logs.
    Refined,
    /// One `{variant_id, feedback}` object per line.
    Predictions(PathBuf),
}

#[derive(Debug, Deserialize)]
struct Prediction {
    variant_id: u64,
    feedback: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ItemLog {
    pub variant_id: u64,
    pub input_hash: String,
    pub reasoning: TraceRefinement,
    pub feedback: TraceRefinement,
}

#[derive(Debug, Serialize)]
struct RefineSummary {
    count: usize,
    reasoning_halts: BTreeMap<String, usize>,
    feedback_halts: BTreeMap<String, usize>,
    mean_first_audit_f1: f64,
    mean_final_reasoning_f1: f64,
    mean_final_feedback_f1: f64,
}

impl RefineSummary {
    fn of(logs: &[ItemLog]) -> Self {
        let halt = |r: &TraceRefinement| {
            let run = r.polish.as_ref().unwrap_or(&r.audit);
            serde_json::to_value(run.halt_reason).expect("enum serializes").as_str().unwrap_or_default().to_string()
        };
        let mut reasoning_halts = BTreeMap::new();
        let mut feedback_halts = BTreeMap::new();
        for l in logs {
            *reasoning_halts.entry(halt(&l.reasoning)).or_default() += 1;
            *feedback_halts.entry(halt(&l.feedback)).or_default() += 1;
        }
        let n = logs.len().max(1) as f64;
        let mean = |f: &dyn Fn(&ItemLog) -> f64| logs.iter().map(f).sum::<f64>() / n;
        RefineSummary {
            count: logs.len(),
            reasoning_halts,
            feedback_halts,
            mean_first_audit_f1: mean(&|l| l.reasoning.audit.f1_history.first().copied().unwrap_or_default()),
            mean_final_reasoning_f1: mean(&|l| l.reasoning.combined().final_f1),
            mean_final_feedback_f1: mean(&|l| l.feedback.audit.final_f1),
        }
    }
}

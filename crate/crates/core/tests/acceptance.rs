//! End-to-end acceptance checks. Each criterion prints one PASS or FAIL
//! line; the test fails if any criterion does.
//!
//! The criteria run one after another inside a single test so that their
//! wall-clock budgets are not shared with other tests.

use std::collections::BTreeMap;
use std::io::Write;
use std::path::Path;
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use eerd_core::category::MistakeCategory;
use eerd_core::exec::Execution;
use eerd_core::export::{
    build_feedback_train, build_preference_pairs, build_reasoning_sft, export_jsonl, import_jsonl, manifest_path,
    write_manifest, DpoRecord, ExportItem, ExportManifest, ExportOptions, RejectedSource, SftRecord, TaskInput,
    TrainStage,
};
use eerd_core::fixtures;
use eerd_core::forge::{generate_corpus, CorpusPlan, MistakeRecord, MistakenVariant, Split};
use eerd_core::model::{parse_schema, serialize_schema};
use eerd_core::oracle::{
    diff_schemas, evaluate_corpus, match_findings, parse_judge_output, summarize, DiagnosticReport, Finding, MatchMode,
};
use eerd_core::refine::{
    factual_audit, style_polish, AuditConfig, ClaimEditor, Editor, ItemContext, OracleScorer, PolishConfig, PortError,
    Refiner, Scorer, SimulatedBaseModel, Trace, TraceKind, HaltReason,
};
use eerd_gateway::{PromptTemplate, TemplateId};

type Outcome = Result<String, String>;

fn ensure(cond: bool, why: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(why())
    }
}

fn within(elapsed: Duration, budget: Duration) -> Result<(), String> {
    ensure(elapsed < budget, || format!("took {elapsed:.2?}, budget {budget:?}"))
}

// ---------------------------------------------------------------------------
// Corpus

const PLAN: (usize, usize, usize) = (50, 50, 50);
const SEED: u64 = 42;

struct Corpus {
    schemas: Vec<(&'static str, Split, Vec<MistakenVariant>)>,
    digest: String,
}

fn forge_all(exec: Execution) -> Corpus {
    let mut hasher = Sha256::new();
    let mut start_id = 0;
    let mut schemas = Vec::new();
    let per_schema: Vec<_> = exec_forge(exec);
    for (name, variants) in per_schema {
        let split = fixtures::split_of(name);
        for v in &variants {
            assert_eq!(v.variant_id, start_id);
            start_id += 1;
            hasher.update(serde_json::to_vec(&v.to_document(split)).unwrap());
            hasher.update(b"\n");
        }
        schemas.push((name, split, variants));
    }
    Corpus {
        schemas,
        digest: hex::encode(hasher.finalize()),
    }
}

fn exec_forge(exec: Execution) -> Vec<(&'static str, Vec<MistakenVariant>)> {
    let per = PLAN.0 + PLAN.1 + PLAN.2;
    let jobs: Vec<(usize, &'static str)> = fixtures::SCHEMAS.iter().copied().enumerate().collect();
    eerd_core::exec::map_ordered(&jobs, exec, |(i, name)| {
        let plan = CorpusPlan::new(PLAN.0, PLAN.1, PLAN.2, (i * per) as u64, SEED.wrapping_add(*i as u64));
        (*name, generate_corpus(&fixtures::schema(name), &plan).expect("fixture forges"))
    })
}

fn corpus_protocol(corpus: &Corpus, elapsed: Duration) -> Outcome {
    let count = |s: Split| corpus.schemas.iter().filter(|c| c.1 == s).map(|c| c.2.len()).sum::<usize>();
    let (train, test) = (count(Split::Train), count(Split::Test));
    ensure((train, test) == (450, 150), || format!("split is {train}/{test}"))?;
    for (_, _, variants) in &corpus.schemas {
        for v in variants {
            let back = parse_schema(&serialize_schema(&v.schema)).map_err(|e| format!("variant {}: {e}", v.variant_id))?;
            ensure(back == v.schema, || format!("variant {} does not round-trip", v.variant_id))?;
        }
    }
    let again = forge_all(Execution::Sequential);
    ensure(again.digest == corpus.digest, || "re-run with the same seed differs".into())?;
    within(elapsed, Duration::from_secs(30))?;
    Ok(format!("450/150, sha256 {}..., {elapsed:.2?}", &corpus.digest[..12]))
}

fn oracle_self_consistency(corpus: &Corpus) -> Outcome {
    let t = Instant::now();
    let mut reports = Vec::new();
    for (name, _, variants) in &corpus.schemas {
        reports.extend(evaluate_corpus(
            &fixtures::schema(name),
            &fixtures::rubrics(name),
            variants,
            MatchMode::Strict,
            Execution::default(),
        ));
    }
    let elapsed = t.elapsed();
    let s = summarize(&reports).map_err(|e| e.to_string())?;
    let micro = s.micro();
    ensure(reports.len() == 600, || format!("{} reports", reports.len()))?;
    ensure(
        [s.precision, s.recall, s.f1, micro.precision, micro.recall, micro.f1].iter().all(|v| *v == 1.0),
        || format!("P/R/F1 = {}/{}/{}", s.precision, s.recall, s.f1),
    )?;
    within(elapsed, Duration::from_secs(10))?;
    Ok(format!("600 variants at 1.0, {elapsed:.2?}"))
}

fn fixture_progression() -> Outcome {
    use MistakeCategory::*;
    let expected: [&[MistakeCategory]; 5] = [
        &[],
        &[TotalParticipation],
        &[TotalParticipation, KeyAttribute],
        &[TotalParticipation, KeyAttribute, KeyAttribute],
        &[TotalParticipation, KeyAttribute, KeyAttribute, RelationshipType],
    ];
    let reference = fixtures::hospital_schema();
    let rubrics = fixtures::hospital_rubrics();
    for (n, ((schema, truth), want)) in fixtures::hospital_progression().into_iter().zip(expected).enumerate() {
        let findings = diff_schemas(&reference, &schema, &rubrics);
        let mut got: Vec<_> = findings.iter().filter(|f| f.is_error()).map(|f| f.category).collect();
        got.sort();
        let mut want = want.to_vec();
        want.sort();
        ensure(got == want, || format!("mistake {n}: found {got:?}, expected {want:?}"))?;
        let r = match_findings(&findings, &truth, MatchMode::Strict);
        ensure((r.tp, r.fp, r.fn_) == (n, 0, 0), || format!("mistake {n}: tp/fp/fn {}/{}/{}", r.tp, r.fp, r.fn_))?;
    }
    Ok("counts 0..4 with expected categories".into())
}

// ---------------------------------------------------------------------------
// Metrics

/// Reduced fraction over u128, enough for the counts generated here.
#[derive(Clone, Copy, PartialEq, Eq, Debug)]
struct Q(u128, u128);

fn gcd(a: u128, b: u128) -> u128 {
    if b == 0 { a } else { gcd(b, a % b) }
}

impl Q {
    fn new(n: u128, d: u128) -> Q {
        let g = gcd(n, d).max(1);
        Q(n / g, d / g)
    }
    fn add(self, o: Q) -> Q {
        Q::new(self.0 * o.1 + o.0 * self.1, self.1 * o.1)
    }
    fn div_int(self, k: u128) -> Q {
        Q::new(self.0, self.1 * k)
    }
    fn to_f64(self) -> f64 {
        self.0 as f64 / self.1 as f64
    }
}

/// Counts, per-category ratios and the category mean, recomputed by
/// walking every item individually.
fn brute_force(reports: &[DiagnosticReport]) -> (Q, Q, Q) {
    let mut tally: BTreeMap<MistakeCategory, [u128; 3]> = BTreeMap::new();
    for r in reports {
        for (t, _) in &r.matched {
            tally.entry(t.category).or_default()[0] += 1;
        }
        for f in &r.hallucinated {
            tally.entry(f.category).or_default()[1] += 1;
        }
        for t in &r.missed {
            tally.entry(t.category).or_default()[2] += 1;
        }
    }
    let live: Vec<[u128; 3]> = tally.into_values().filter(|c| c.iter().sum::<u128>() > 0).collect();
    if live.is_empty() {
        return (Q(1, 1), Q(1, 1), Q(1, 1));
    }
    let mut sums = (Q(0, 1), Q(0, 1), Q(0, 1));
    for [tp, fp, fn_] in &live {
        let p = if tp + fp == 0 { Q(1, 1) } else { Q::new(*tp, tp + fp) };
        let r = if tp + fn_ == 0 { Q(1, 1) } else { Q::new(*tp, tp + fn_) };
        let f = if p.0 == 0 && r.0 == 0 {
            Q(0, 1)
        } else {
            // 2pr / (p + r) with p = a/b, r = c/d is 2ac / (ad + cb).
            Q::new(2 * p.0 * r.0, p.0 * r.1 + r.0 * p.1)
        };
        sums = (sums.0.add(p), sums.1.add(r), sums.2.add(f));
    }
    let k = live.len() as u128;
    (sums.0.div_int(k), sums.1.div_int(k), sums.2.div_int(k))
}

fn random_reports(rng: &mut ChaCha8Rng) -> Vec<DiagnosticReport> {
    let truth = |c: MistakeCategory| MistakeRecord {
        category: c,
        focal: "x".into(),
        original: String::new(),
        modified: String::new(),
        description: String::new(),
    };
    (0..rng.random_range(1..6))
        .map(|_| {
            let mut r = DiagnosticReport {
                findings: vec![],
                matched: vec![],
                missed: vec![],
                hallucinated: vec![],
                tp: 0,
                fn_: 0,
                fp: 0,
            };
            for _ in 0..rng.random_range(0..8) {
                let c = MistakeCategory::ALL[rng.random_range(0..MistakeCategory::ALL.len())];
                match rng.random_range(0..3) {
                    0 => r.matched.push((truth(c), Finding::error(c, "x", ""))),
                    1 => r.hallucinated.push(Finding::error(c, "y", "")),
                    _ => r.missed.push(truth(c)),
                }
            }
            (r.tp, r.fp, r.fn_) = (r.matched.len(), r.hallucinated.len(), r.missed.len());
            r
        })
        .collect()
}

fn metric_equivalence() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for i in 0..1000 {
        let reports = random_reports(&mut rng);
        let s = summarize(&reports).map_err(|e| e.to_string())?;
        let (p, r, f) = brute_force(&reports);
        for (name, got, want) in [("precision", s.precision, p), ("recall", s.recall, r), ("f1", s.f1, f)] {
            ensure((got - want.to_f64()).abs() <= 1e-9, || {
                format!("config {i}: {name} {got} vs {}/{}", want.0, want.1)
            })?;
        }
    }
    Ok("1000 configurations within 1e-9".into())
}

// ---------------------------------------------------------------------------
// Refinement loops

/// Appends one marker per call so the scorer can tell iterations apart.
struct Step;

impl Editor for Step {
    fn audit(&self, t: &Trace, _: &ItemContext<'_>) -> Result<Trace, PortError> {
        Ok(Trace::with_claims(format!("{}+", t.text), vec![], t.kind))
    }
    fn polish(&self, t: &Trace, c: &ItemContext<'_>) -> Result<Trace, PortError> {
        self.audit(t, c)
    }
}

/// Entry `i` scores the trace carrying `i` markers.
struct Scripted {
    f1: Vec<f64>,
    reward: Vec<f64>,
}

impl Scorer for Scripted {
    fn f1(&self, t: &Trace, _: &ItemContext<'_>) -> Result<f64, PortError> {
        Ok(self.f1[t.text.matches('+').count()])
    }
    fn reward(&self, t: &Trace, _: &ItemContext<'_>) -> Result<f64, PortError> {
        Ok(self.reward[t.text.matches('+').count()])
    }
}

fn with_empty_ctx<T>(f: impl FnOnce(&ItemContext<'_>) -> T) -> T {
    let schema = fixtures::hospital_schema();
    let rubrics = fixtures::hospital_rubrics();
    f(&ItemContext {
        reference: &schema,
        submitted: &schema,
        rubrics: &rubrics,
        truth: &[],
    })
}

/// Line-by-line transcription of the audit pseudocode: saturation is
/// tested before `f1_prev` moves, two saturated steps end the loop.
fn audit_transcription(scores: &[f64], epsilon: f64, m: usize) -> (usize, f64) {
    let mut f1_prev = 0.0;
    let mut saturation_count = 0;
    let mut iter = 0;
    while iter < m {
        iter += 1;
        let f1_curr = scores[iter];
        if (f1_curr - f1_prev).abs() < epsilon {
            saturation_count += 1;
            if saturation_count >= 2 {
                break;
            }
        } else {
            saturation_count = 0;
        }
        f1_prev = f1_curr;
    }
    (iter, f1_prev)
}

/// Random walk with frequent small steps so every halting path is hit.
fn f1_sequence(rng: &mut ChaCha8Rng, len: usize) -> Vec<f64> {
    let mut v = vec![rng.random_range(0.0..1.0)];
    while v.len() < len {
        let last = *v.last().unwrap();
        let next: f64 = match rng.random_range(0..3) {
            0 => rng.random_range(0.0..1.0),
            1 => last + rng.random_range(-0.03..0.03),
            _ => last,
        };
        v.push(next.clamp(0.0, 1.0));
    }
    v
}

fn audit_conformance() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let mut converged = 0;
    for case in 0..200 {
        let epsilon = [0.01, 0.05, 0.2][case % 3];
        let m = 1 + case % 5;
        let scores = f1_sequence(&mut rng, m + 1);
        let cfg = AuditConfig {
            max_iterations: m,
            epsilon,
            ..AuditConfig::default()
        };
        let scorer = Scripted {
            f1: scores.clone(),
            reward: vec![0.0; m + 1],
        };
        let run = with_empty_ctx(|ctx| factual_audit(&Trace::with_claims("t", vec![], TraceKind::Reasoning), ctx, &Step, &scorer, &cfg))
            .map_err(|e| e.to_string())?;
        let (iters, optimal) = audit_transcription(&scores, epsilon, m);
        ensure(run.iterations == iters && run.f1_optimal == optimal, || {
            format!(
                "case {case} (eps {epsilon}, M {m}, {scores:?}): got ({}, {}), transcription ({iters}, {optimal})",
                run.iterations, run.f1_optimal
            )
        })?;
        converged += usize::from(run.halt_reason == HaltReason::Converged);
    }
    Ok(format!(
        "200 sequences, 0 mismatches ({converged} converged, {} max_iter)",
        200 - converged
    ))
}

/// Transcription of the polish loop. Returns the accepted index, the
/// number of candidates examined and the halt reason.
fn polish_transcription(f1: &[f64], reward: &[f64], f1_init: f64, m: usize) -> (usize, usize, HaltReason) {
    let mut reward_prev = reward[0];
    let mut accepted = 0;
    for iter in 1..=m {
        if f1[iter] < f1_init {
            return (accepted, iter, HaltReason::F1Drop);
        }
        if reward[iter] < reward_prev {
            return (accepted, iter, HaltReason::RewardDrop);
        }
        if reward[iter] == reward_prev {
            return (accepted, iter, HaltReason::Converged);
        }
        accepted = iter;
        reward_prev = reward[iter];
    }
    (accepted, m, HaltReason::MaxIter)
}

fn polish_conformance() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let mut halts: BTreeMap<String, usize> = BTreeMap::new();
    for case in 0..200 {
        let m = 1 + case % 5;
        // Coarse grids make ties, drops and rises all likely.
        let f1: Vec<f64> = (0..=m).map(|_| rng.random_range(0..=10) as f64 / 10.0).collect();
        let reward: Vec<f64> = (0..=m).map(|_| rng.random_range(0..=8) as f64 / 8.0).collect();
        let f1_init = rng.random_range(0..=(f1[0] * 10.0) as u32) as f64 / 10.0;
        let scorer = Scripted {
            f1: f1.clone(),
            reward: reward.clone(),
        };
        let run = with_empty_ctx(|ctx| {
            style_polish(
                &Trace::with_claims("t", vec![], TraceKind::Reasoning),
                f1_init,
                ctx,
                &Step,
                &scorer,
                &PolishConfig { max_iterations: m },
            )
        })
        .map_err(|e| e.to_string())?;
        let kept = run.final_trace.text.matches('+').count();
        let (want_kept, want_iters, want_halt) = polish_transcription(&f1, &reward, f1_init, m);
        let detail = || format!("case {case}: f1 {f1:?} reward {reward:?} floor {f1_init}");
        ensure(f1[kept] >= f1_init && run.final_f1 >= f1_init, || format!("{}: F1 fell below the floor", detail()))?;
        ensure(reward[kept] >= reward[0], || format!("{}: reward fell", detail()))?;
        ensure((kept, run.iterations, run.halt_reason) == (want_kept, want_iters, want_halt), || {
            format!("{}: got ({kept}, {}, {:?}), transcription ({want_kept}, {want_iters}, {want_halt:?})", detail(), run.iterations, run.halt_reason)
        })?;
        *halts.entry(format!("{want_halt:?}")).or_default() += 1;
    }
    Ok(format!("200 runs, no regressions, halts {halts:?}"))
}

// ---------------------------------------------------------------------------
// Pipeline

/// Reasoning items, feedback items and per-variant reports of refined feedback.
type Refined = (Vec<ExportItem>, Vec<ExportItem>, Vec<DiagnosticReport>);

fn refine_schema(name: &str, variants: &[MistakenVariant], split: Split) -> Result<Refined, String> {
    let reference = fixtures::schema(name);
    let rubrics = fixtures::rubrics(name);
    let sim = SimulatedBaseModel {
        seed: SEED,
        ..SimulatedBaseModel::default()
    };
    let editor = ClaimEditor::default();
    let refiner = Refiner {
        editor: &editor,
        scorer: &OracleScorer,
        audit: AuditConfig::default(),
        polish: Some(PolishConfig::default()),
    };
    let per_variant = eerd_core::exec::try_map_ordered(variants, Execution::default(), |v| {
        let ctx = ItemContext {
            reference: &reference,
            submitted: &v.schema,
            rubrics: &rubrics,
            truth: &v.mistakes,
        };
        let reasoning = refiner.refine(v.variant_id, &sim.generate(v, &reference, &rubrics, TraceKind::Reasoning), &ctx)?;
        let feedback = refiner.refine(v.variant_id, &sim.generate(v, &reference, &rubrics, TraceKind::Feedback), &ctx)?;
        Ok::<_, eerd_core::refine::RefineError>((reasoning, feedback))
    })
    .map_err(|e| e.to_string())?;
    let mut out = (Vec::new(), Vec::new(), Vec::new());
    for (v, (reasoning, feedback)) in variants.iter().zip(per_variant) {
        let task = TaskInput::new(v, &rubrics, split);
        let aligned = reasoning.final_trace().plain();
        let report = match_findings(&feedback.final_trace().findings(), &v.mistakes, MatchMode::Strict);
        out.0.push(ExportItem {
            task: task.clone(),
            run: reasoning.combined(),
            aligned_reasoning: None,
        });
        out.1.push(ExportItem {
            task,
            run: feedback.combined(),
            aligned_reasoning: Some(aligned),
        });
        out.2.push(report);
    }
    Ok(out)
}

fn export_pair(dir: &Path, stage: TrainStage, items: &[ExportItem], sft: Vec<SftRecord>) -> Result<(usize, usize, usize), String> {
    let opts = ExportOptions::default();
    let pairs = build_preference_pairs(items, RejectedSource::InitialTrace, stage, &opts).map_err(|e| e.to_string())?;
    let label = match stage {
        TrainStage::Reasoning => "reasoning",
        TrainStage::Feedback => "feedback",
    };
    let sft_path = dir.join(format!("{label}_sft.jsonl"));
    let dpo_path = dir.join(format!("{label}_dpo.jsonl"));
    export_jsonl(&sft, &sft_path, SEED).map_err(|e| e.to_string())?;
    let dpo: Vec<DpoRecord> = pairs.pairs.iter().map(|p| p.to_record()).collect();
    let mut manifest = export_jsonl(&dpo, &dpo_path, SEED).map_err(|e| e.to_string())?;
    manifest.dropped_pairs = pairs.dropped.len();
    manifest.rejected_source = Some(RejectedSource::InitialTrace.label().into());
    write_manifest(&dpo_path, &manifest).map_err(|e| e.to_string())?;

    let sft_back: Vec<SftRecord> = import_jsonl(&sft_path).map_err(|e| e.to_string())?;
    let dpo_back: Vec<DpoRecord> = import_jsonl(&dpo_path).map_err(|e| e.to_string())?;
    let m: ExportManifest = serde_json::from_slice(&std::fs::read(manifest_path(&dpo_path)).map_err(|e| e.to_string())?)
        .map_err(|e| e.to_string())?;
    ensure(sft_back == sft && dpo_back == dpo, || format!("{label} files do not read back"))?;
    ensure(sft_back.len() == dpo_back.len() + m.dropped_pairs, || {
        format!("{label}: |SFT| {} != |DPO| {} + dropped {}", sft_back.len(), dpo_back.len(), m.dropped_pairs)
    })?;
    Ok((sft_back.len(), dpo_back.len(), m.dropped_pairs))
}

fn end_to_end() -> Outcome {
    let t = Instant::now();
    let name = "company";
    let reference = fixtures::schema(name);
    let variants = generate_corpus(&reference, &CorpusPlan::new(PLAN.0, PLAN.1, PLAN.2, 0, SEED)).map_err(|e| e.to_string())?;
    let (reasoning, feedback, reports) = refine_schema(name, &variants, Split::Train)?;

    let dir = tempfile::tempdir().map_err(|e| e.to_string())?;
    let opts = ExportOptions::default();
    let r_sft = build_reasoning_sft(&reasoning, &opts).map_err(|e| e.to_string())?;
    let f_sft = build_feedback_train(&feedback, &opts).map_err(|e| e.to_string())?;
    let r = export_pair(dir.path(), TrainStage::Reasoning, &reasoning, r_sft.iter().map(|e| e.to_record()).collect())?;
    let f = export_pair(dir.path(), TrainStage::Feedback, &feedback, f_sft.iter().map(|e| e.to_record()).collect())?;

    let summary = summarize(&reports).map_err(|e| e.to_string())?;
    ensure(summary.f1 > 0.0 && summary.reports == variants.len(), || "evaluation summary is empty".into())?;
    let elapsed = t.elapsed();
    within(elapsed, Duration::from_secs(60))?;
    Ok(format!(
        "reasoning {}={}+{}, feedback {}={}+{}, refined feedback F1 {:.3}, {elapsed:.2?}",
        r.0, r.1, r.2, f.0, f.1, f.2, summary.f1
    ))
}

// ---------------------------------------------------------------------------
// Prompts

const GOLDEN: [(TemplateId, &str); 6] = [
    (TemplateId::DataGeneration, "e93f0b98b8c1159069a2d0d3e59383c062c2cfc253b9dcf1154e801fed7962ab"),
    (TemplateId::Evaluation, "859b730f3996e4a65806c693e52aec49715a6d0947842c3bd562fbac75d0b538"),
    (TemplateId::InferenceFeedback, "c50a66e361e412e9a4f6652dd25559946cc651d10b7f0e41c6eb0ba636d2cc20"),
    (TemplateId::InferenceFeedbackWithReasoning, "af7309d6672d429fb660c77430140717aa69760bcf4577f0e7aceeeb5758534e"),
    (TemplateId::InferenceReasoning, "3629e576077d8df4a4e2c216eeadaa4688dcf3e5a7cc52cd7834206427ec7639"),
    (TemplateId::RelevantStatements, "41ff1e0e9da45c36d2e80ac7f5b5a6377c2c8caf85bd2defb2b02345b812265c"),
];

/// The judge template's documented output shape with its placeholder values.
const DOCUMENTED_OUTPUT: &str = r#"{"mistake_evaluation":[{"mistake_type":"string","llm_feedback_detected":true,"deepseek_feedback_detected":true,"llm_feedback_phrase":"p","deepseek_feedback_phrase":"p","ideal_feedback":"i"}],"false_positives":[{"claim_phrase":"string","source":"llm_feedback or deepseek_feedback","why_incorrect":"short explanation"}],"summary_metrics":{"TP_llm_feedback":"int","FN_llm_feedback":"int","FP_llm_feedback":"int","TP_deepseek_feedback":"int","FN_deepseek_feedback":"int","FP_deepseek_feedback":"int","precision_llm_feedback":"float (3 decimals)","recall_llm_feedback":"float (3 decimals)","f1_score_llm_feedback":"float (3 decimals)","precision_deepseek_feedback":"float (3 decimals)","recall_deepseek_feedback":"float (3 decimals)","f1_score_deepseek_feedback":"float (3 decimals)"}}"#;

const CONTRADICTING_OUTPUT: &str = r#"{"mistake_evaluation":[{"mistake_type":"cardinality","llm_feedback_detected":true},{"mistake_type":"key_attribute","llm_feedback_detected":false}],"false_positives":[],"summary_metrics":{"TP_llm_feedback":2,"FN_llm_feedback":0,"FP_llm_feedback":0}}"#;

const CONSISTENT_OUTPUT: &str = r#"{"mistake_evaluation":[{"mistake_type":"cardinality","llm_feedback_detected":true},{"mistake_type":"key_attribute","llm_feedback_detected":false}],"false_positives":[],"summary_metrics":{"TP_llm_feedback":1,"FN_llm_feedback":1,"FP_llm_feedback":0,"precision_llm_feedback":1.0,"recall_llm_feedback":0.5,"f1_score_llm_feedback":0.667}}"#;

fn prompt_fidelity() -> Outcome {
    for (id, want) in GOLDEN {
        let got = hex::encode(Sha256::digest(PromptTemplate::get(id).body.as_bytes()));
        ensure(got == want, || format!("template {id} hashes to {got}"))?;
    }
    parse_judge_output(DOCUMENTED_OUTPUT).map_err(|e| format!("documented format rejected: {e}"))?;
    parse_judge_output(CONSISTENT_OUTPUT).map_err(|e| format!("consistent summary rejected: {e}"))?;
    ensure(parse_judge_output(CONTRADICTING_OUTPUT).is_err(), || "contradicting summary accepted".into())?;
    Ok("6 templates match, judge parser accepts the documented format".into())
}

// ---------------------------------------------------------------------------

#[test]
fn acceptance() {
    let mut results: Vec<(&str, Outcome)> = Vec::new();

    let t = Instant::now();
    let corpus = forge_all(Execution::default());
    let forge_time = t.elapsed();
    results.push(("corpus protocol", corpus_protocol(&corpus, forge_time)));
    results.push(("oracle self-consistency", oracle_self_consistency(&corpus)));
    results.push(("hospital fixture progression", fixture_progression()));
    results.push(("metric equivalence", metric_equivalence()));
    results.push(("audit loop conformance", audit_conformance()));
    results.push(("polish loop conformance", polish_conformance()));
    results.push(("end-to-end mock pipeline", end_to_end()));
    results.push(("prompt fidelity", prompt_fidelity()));

    // Written straight to stdout so the lines show without --nocapture.
    let mut out = std::io::stdout().lock();
    let mut failed = 0;
    for (name, r) in &results {
        let line = match r {
            Ok(detail) => format!("PASS {name}: {detail}"),
            Err(why) => {
                failed += 1;
                format!("FAIL {name}: {why}")
            }
        };
        writeln!(out, "{line}").unwrap();
    }
    out.flush().unwrap();
    drop(out);
    assert_eq!(failed, 0, "{failed} acceptance criteria failed");
}

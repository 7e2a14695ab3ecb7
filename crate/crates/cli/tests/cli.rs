use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures")
}

fn write_config(dir: &Path, extra: &str, rubric_override: Option<&str>) -> PathBuf {
    let fx = fixtures();
    let rub = |name: &str| {
        rubric_override
            .map(str::to_string)
            .unwrap_or_else(|| fx.join(format!("{name}.rubrics.json")).display().to_string())
    };
    let cfg = format!(
        r#"seed = 7
output_dir = "out"
rejected_source = "initial_trace"
jobs = 2
{extra}

[plan]
one = 3
two = 3
three = 2

[[schemas]]
name = "company"
schema = "{company}"
rubrics = "{company_r}"

[[schemas]]
name = "hospital"
schema = "{hospital}"
rubrics = "{hospital_r}"
split = "test"
"#,
        company = fx.join("company.schema.json").display(),
        company_r = rub("company"),
        hospital = fx.join("hospital.schema.json").display(),
        hospital_r = fx.join("hospital.rubrics.json").display(),
    );
    let path = dir.join("pipeline.toml");
    fs::write(&path, cfg).unwrap();
    path
}

fn run(cfg: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_eerd-pipeline"))
        .arg("--config")
        .arg(cfg)
        .args(args)
        .output()
        .unwrap()
}

fn ok(out: Output) -> Output {
    assert!(
        out.status.success(),
        "exit {:?}\nstdout: {}\nstderr: {}",
        out.status.code(),
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn manifest_without_timings(out_dir: &Path) -> serde_json::Value {
    let mut m: serde_json::Value = serde_json::from_slice(&fs::read(out_dir.join("run_manifest.json")).unwrap()).unwrap();
    m.as_object_mut().unwrap().remove("timings_ms");
    m
}

#[test]
fn missing_rubric_is_a_config_error_naming_the_file() {
    let dir = tempfile::tempdir().unwrap();
    let missing = dir.path().join("nowhere.rubrics.json");
    let cfg = write_config(dir.path(), "", Some(&missing.display().to_string()));
    let out = run(&cfg, &["forge"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nowhere.rubrics.json"));
}

#[test]
fn same_seed_gives_identical_artifacts() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let cfg = write_config(d.path(), "", None);
        for cmd in [&["forge"][..], &["refine"], &["export"], &["eval"]] {
            ok(run(&cfg, cmd));
        }
    }
    let ma = manifest_without_timings(&a.path().join("out"));
    assert_eq!(ma, manifest_without_timings(&b.path().join("out")));
    for stage in ["forge", "refine", "export", "eval"] {
        assert!(ma["stages"][stage].as_object().is_some_and(|m| !m.is_empty()), "{stage}");
    }
    let c = tempfile::tempdir().unwrap();
    let cfg = write_config(c.path(), "", None);
    ok(run(&cfg, &["forge", "--seed", "8"]));
    assert_ne!(
        fs::read(a.path().join("out/corpus/company.variants.jsonl")).unwrap(),
        fs::read(c.path().join("out/corpus/company.variants.jsonl")).unwrap()
    );
}

#[test]
fn interrupted_refine_resumes_to_the_same_result() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "", None);
    ok(run(&cfg, &["forge"]));
    ok(run(&cfg, &["refine", "--jobs", "1"]));
    let logs = dir.path().join("out/refine/company");
    let snapshot: Vec<(PathBuf, Vec<u8>)> = {
        let mut v: Vec<_> = fs::read_dir(&logs).unwrap().map(|e| e.unwrap().path()).collect();
        v.sort();
        v.into_iter().map(|p| (p.clone(), fs::read(&p).unwrap())).collect()
    };
    for (p, _) in snapshot.iter().step_by(2) {
        fs::remove_file(p).unwrap();
    }
    ok(run(&cfg, &["refine"]));
    for (p, bytes) in &snapshot {
        assert_eq!(&fs::read(p).unwrap(), bytes, "{}", p.display());
    }
}

#[test]
fn single_iteration_audits_halt_at_max_iter() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "[audit]\nmax_iterations = 1", None);
    ok(run(&cfg, &["forge"]));
    ok(run(&cfg, &["refine"]));
    for e in fs::read_dir(dir.path().join("out/refine/hospital")).unwrap() {
        let log: serde_json::Value = serde_json::from_slice(&fs::read(e.unwrap().path()).unwrap()).unwrap();
        for kind in ["reasoning", "feedback"] {
            assert_eq!(log[kind]["audit"]["halt_reason"], "max_iter");
            assert_eq!(log[kind]["audit"]["iterations"], 1);
        }
    }
}

#[test]
fn eval_lists_missing_prediction_ids() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "", None);
    ok(run(&cfg, &["forge"]));
    let corpus = fs::read_to_string(dir.path().join("out/corpus/hospital.variants.jsonl")).unwrap();
    let ids: Vec<u64> = corpus
        .lines()
        .map(|l| serde_json::from_str::<serde_json::Value>(l).unwrap()["mistake_id"].as_u64().unwrap())
        .collect();
    let preds: String = ids[3..]
        .iter()
        .map(|id| format!("{}\n", serde_json::json!({"variant_id": id, "feedback": "Looks fine."})))
        .collect();
    let path = dir.path().join("preds.jsonl");
    fs::write(&path, preds).unwrap();
    let out = run(&cfg, &["eval", "--predictions", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains(&format!("{}, {}, {}", ids[0], ids[1], ids[2])), "{err}");
}

#[test]
fn oracle_self_check_and_report_formats() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "", None);
    ok(run(&cfg, &["forge"]));
    let out = ok(run(&cfg, &["eval", "--split", "all"]));
    let table = String::from_utf8_lossy(&out.stdout);
    assert!(table.lines().any(|l| l.starts_with("Average") && l.ends_with("100/100/100")), "{table}");
    let csv = ok(run(&cfg, &["report", "--format", "csv"]));
    let csv = String::from_utf8_lossy(&csv.stdout);
    assert_eq!(csv.lines().count(), 13);
    assert!(csv.lines().nth(1).unwrap().starts_with("key_attribute,"));
}

#[test]
fn export_requires_refinement_logs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "", None);
    ok(run(&cfg, &["forge"]));
    let out = run(&cfg, &["export"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing refinement log"));
}

#[test]
fn gateway_failures_exit_three() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "", None);
    ok(run(&cfg, &["forge"]));
    let script = dir.path().join("script.json");
    fs::write(&script, r#"[{"match":"any","response":{"fail":503},"repeat":true}]"#).unwrap();
    let out = run(
        &cfg,
        &["refine", "--judge", "llm", "--mock-script", script.to_str().unwrap(), "--jobs", "1"],
    );
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn endpoint_rejections_come_from_the_mock() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "", None);
    fs::write(&cfg, fs::read_to_string(&cfg).unwrap().replace("initial_trace", "model_endpoint")).unwrap();
    ok(run(&cfg, &["forge"]));
    ok(run(&cfg, &["refine"]));
    let script = dir.path().join("script.json");
    fs::write(
        &script,
        r#"[{"match":{"template":"inference_reasoning"},"response":{"text":"{\"reasoning\":\"<think>aligned</think>\"}"},"repeat":true},
            {"match":{"template":"inference_feedback_with_reasoning"},"response":{"text":"post-SFT feedback"},"repeat":true}]"#,
    )
    .unwrap();
    ok(run(&cfg, &["export", "--mock-script", script.to_str().unwrap()]));
    let dpo = fs::read_to_string(dir.path().join("out/export/feedback_dpo.jsonl")).unwrap();
    for line in dpo.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert_eq!(v["rejected"], "post-SFT feedback");
        assert!(v["prompt"].as_str().unwrap().contains("<think>aligned</think>"));
    }
    let m: serde_json::Value =
        serde_json::from_slice(&fs::read(dir.path().join("out/export/feedback_dpo.jsonl.manifest.json")).unwrap()).unwrap();
    assert_eq!(m["rejected_source"], "model_endpoint");
    assert_eq!(m["rejected_temperature"], 0.0);
}

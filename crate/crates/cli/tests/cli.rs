//! Runs the `evergreen` binary on fixture files.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixtures() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/tests/fixtures")
}

fn fx(name: &str) -> String {
    fixtures().join(name).to_string_lossy().into_owned()
}

fn run(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_evergreen"))
        .args(args)
        .arg("--out")
        .arg(out)
        .output()
        .unwrap()
}

fn ok(args: &[&str], out: &Path) -> String {
    let o = run(args, out);
    assert!(
        o.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&o.stderr)
    );
    String::from_utf8(o.stdout).unwrap()
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn lines(path: &Path) -> usize {
    fs::read_to_string(path).unwrap().lines().count()
}

fn write(path: &Path, rows: &[serde_json::Value]) {
    let body: String = rows.iter().map(|r| format!("{r}\n")).collect();
    fs::write(path, body).unwrap();
}

#[test]
fn features_writes_the_golden_file() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "features",
        "--questions",
        &fx("questions.jsonl"),
        "--traces",
        &fx("traces.jsonl"),
        "--evergreen-scores",
        &fx("scores.jsonl"),
    ];
    let stdout = ok(&args, dir.path());
    assert!(!stdout.is_empty());
    let produced = fs::read_to_string(dir.path().join("features.jsonl")).unwrap();
    assert_eq!(
        produced,
        fs::read_to_string(fixtures().join("features_golden.jsonl")).unwrap()
    );
    let report = json(&dir.path().join("features_report.json"));
    assert_eq!(report["summary"]["n_traces"], 10);
    assert!(report["metadata"]["config_fingerprint"].is_string());
    assert!(dir.path().join("features_report.txt").exists());

    let again = tempfile::tempdir().unwrap();
    ok(&args, again.path());
    for f in ["features.jsonl", "features_report.json", "features_report.txt"] {
        assert_eq!(
            fs::read(dir.path().join(f)).unwrap(),
            fs::read(again.path().join(f)).unwrap(),
            "{f} differs between runs"
        );
    }
}

#[test]
fn features_then_correlate() {
    let dir = tempfile::tempdir().unwrap();
    ok(
        &[
            "features",
            "--questions",
            &fx("questions.jsonl"),
            "--traces",
            &fx("traces.jsonl"),
        ],
        dir.path(),
    );
    let features = dir.path().join("features.jsonl");
    let stdout = ok(
        &[
            "correlate",
            "--features",
            features.to_str().unwrap(),
            "--labels",
            &fx("correctness.jsonl"),
        ],
        dir.path(),
    );
    assert!(stdout.contains("fixture-model"));
    let report = json(&dir.path().join("correlation_report.json"));
    assert_eq!(report["label_source"], "external");
    assert_eq!(report["blocks"][0]["n_labeled"], 10);
    assert_eq!(report["blocks"][0]["rows"].as_array().unwrap().len(), 6);
}

#[test]
fn filter_writes_subsets_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let base = format!("base={}", fx("filter_base.jsonl"));
    let rag = format!("rag={}", fx("filter_rag.jsonl"));
    ok(
        &[
            "filter",
            "--questions",
            &fx("filter_questions.jsonl"),
            "--evergreen-scores",
            &fx("filter_scores.jsonl"),
            "--correctness",
            &base,
            "--correctness",
            &rag,
        ],
        dir.path(),
    );
    assert_eq!(lines(&dir.path().join("evergreen.jsonl")), 7);
    assert_eq!(lines(&dir.path().join("mutable.jsonl")), 3);
    let report = json(&dir.path().join("filter_report.json"));
    let rows = report["rows"].as_array().unwrap();
    assert_eq!(rows.last().unwrap()["dataset"], "all");
    assert_eq!(rows.last().unwrap()["n"], 10);
    assert!(fs::read_to_string(dir.path().join("filter_report.txt"))
        .unwrap()
        .contains("n/a"));
}

#[test]
fn train_score_and_bench_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let mut questions = Vec::new();
    let stable = [
        "capital of France",
        "boiling point of water",
        "author of Hamlet",
        "speed of light",
    ];
    let changing = [
        "current president",
        "latest phone model",
        "population this year",
        "newest album",
    ];
    for i in 0..40 {
        let (text, label) = if i % 2 == 0 {
            (format!("What is the {}? ({i})", stable[i % 4]), 1)
        } else {
            (format!("Who is the {}? ({i})", changing[i % 4]), 0)
        };
        questions.push(serde_json::json!({
            "id": format!("e{i:02}"), "text": text, "language": "en", "evergreen_label": label,
            "aliases": [], "split": if i < 30 { "train" } else { "test" }, "source_dataset": "toy",
        }));
    }
    let qpath = dir.path().join("questions.jsonl");
    write(&qpath, &questions);
    let q = qpath.to_str().unwrap();

    ok(&["train-evergreen", "--questions", q, "--seeds", "4"], dir.path());
    let model = dir.path().join("evergreen_model.json");
    assert!(model.exists());
    assert_eq!(json(&dir.path().join("train_report.json"))["n_train"], 30);

    ok(
        &["score-evergreen", "--questions", q, "--model", model.to_str().unwrap()],
        dir.path(),
    );
    let scores = dir.path().join("evergreen_scores.jsonl");
    assert_eq!(lines(&scores), 40);

    let stdout = ok(
        &[
            "verbal-bench",
            "--questions",
            q,
            "--evergreen-scores",
            scores.to_str().unwrap(),
            "--random-trials",
            "500",
        ],
        dir.path(),
    );
    assert!(stdout.contains("Random"));
    let report = json(&dir.path().join("verbal_report.json"));
    assert_eq!(report["split"], "test");
    let rows = report["report"]["rows"].as_array().unwrap();
    assert_eq!(rows[0]["source"], "baseline");
    assert_eq!(rows[0]["n"], 10);
}

#[test]
fn selfknow_writes_models_scores_and_report() {
    let dir = tempfile::tempdir().unwrap();
    let (mut questions, mut features, mut labels) = (vec![], vec![], vec![]);
    for i in 0..80u32 {
        let id = format!("s{i:02}");
        let p = f64::from((i * 37) % 80) / 80.0;
        let y = (i * 37) % 80 >= 30;
        questions.push(serde_json::json!({
            "id": id, "text": format!("q {i}"), "language": "en", "aliases": [],
            "split": if i % 2 == 0 { "test" } else { "train" }, "source_dataset": "toy",
        }));
        let v = f64::from((i * 13) % 17);
        features.push(serde_json::json!({
            "question_id": id, "model_id": "m1", "perplexity": v, "mean_token_entropy": v,
            "max_token_entropy": v, "neg_lexical_similarity": null, "sar": v,
            "eigval_laplacian": v, "p_evergreen": p,
        }));
        labels.push(serde_json::json!({ "question_id": id, "y": u8::from(y) }));
    }
    let (q, f, c) = (
        dir.path().join("q.jsonl"),
        dir.path().join("f.jsonl"),
        dir.path().join("c.jsonl"),
    );
    write(&q, &questions);
    write(&f, &features);
    write(&c, &labels);
    let channel = format!("m1={}", c.display());
    let out = dir.path().join("out");
    let stdout = ok(
        &[
            "selfknow",
            "--questions",
            q.to_str().unwrap(),
            "--features",
            f.to_str().unwrap(),
            "--correctness",
            &channel,
            "--grid",
            "compact",
        ],
        &out,
    );
    assert!(stdout.contains("m1 / toy"));
    let report = json(&out.join("selfknow_report.json"));
    let block = &report["blocks"][0];
    assert_eq!(block["n_test"], 40);
    let rows = block["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 13);
    let lexsim = rows.iter().find(|r| r["label"] == "LexicalSimilarity").unwrap();
    assert_eq!(lexsim["auroc"], 0.5);
    let eg = fs::read_to_string(out.join("models/m1__toy__eg.json")).unwrap();
    assert!(eg.contains("configuration"));
    assert_eq!(fs::read_dir(out.join("models")).unwrap().count(), 13);
    assert_eq!(lines(&out.join("scores/m1__toy.jsonl")), 13 * 40);
}

#[test]
fn bad_configuration_exits_with_code_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(
        &[
            "filter",
            "--questions",
            &fx("filter_questions.jsonl"),
            "--evergreen-scores",
            &fx("filter_scores.jsonl"),
            "--tau",
            "1.5",
        ],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("evergreen filter"));

    let o = run(
        &[
            "features",
            "--questions",
            "/nonexistent/q.jsonl",
            "--traces",
            &fx("traces.jsonl"),
        ],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(2));

    let o = run(&["correlate", "--features", &fx("features_golden.jsonl")], dir.path());
    assert_eq!(o.status.code(), Some(2));

    let o = run(
        &[
            "features",
            "--questions",
            &fx("filter_questions.jsonl"),
            "--traces",
            &fx("traces.jsonl"),
        ],
        dir.path(),
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("join miss"));
}

#[test]
fn unknown_flag_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let o = run(&["features", "--no-such-flag"], dir.path());
    assert_eq!(o.status.code(), Some(2));
}

use std::fs;
use std::io::Write;
use std::path::Path;
use std::process::{Command, Output, Stdio};

use tempfile::TempDir;

fn kinemo(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kinemo"))
        .args(args)
        .env("RUST_LOG", "warn")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) -> Output {
    let out = kinemo(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn record_count(corpus: &Path) -> usize {
    fs::read_to_string(corpus).unwrap().lines().count() - 1
}

const TINY: [&str; 8] = ["--epochs", "1", "--batch-size", "8", "--hidden1", "4", "--hidden2", "4"];

fn synth(dir: &Path, seed: &str, count: &str) -> std::path::PathBuf {
    ok(&["synth", "--out", p(dir), "--seed", seed, "--count", count]);
    dir.join("corpus.jsonl")
}

#[test]
fn synth_is_deterministic() {
    let t = TempDir::new().unwrap();
    let a = synth(&t.path().join("a"), "7", "20");
    let b = synth(&t.path().join("b"), "7", "20");
    let c = synth(&t.path().join("c"), "8", "20");
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
    assert_ne!(fs::read(&a).unwrap(), fs::read(&c).unwrap());
    assert_eq!(record_count(&a), 20);
}

#[test]
fn augment_multiplies_by_two_times_stride() {
    let t = TempDir::new().unwrap();
    let src = t.path().join("src");
    ok(&["synth", "--out", p(&src), "--count", "1447", "--sample-rate", "120"]);
    let out = t.path().join("aug");
    ok(&["augment", "--in", p(&src.join("corpus.jsonl")), "--out", p(&out), "--target-rate", "30"]);
    assert_eq!(record_count(&out.join("corpus.jsonl")), 11576);
}

#[test]
fn eval_reports_k_folds_and_reruns_identically() {
    let t = TempDir::new().unwrap();
    let corpus = synth(&t.path().join("s"), "3", "40");
    let run = |dir: &str| {
        let out = t.path().join(dir);
        let mut args = vec!["eval", "--in", p(&corpus), "--out", p(&out), "--k", "5", "--methods", "lstm,svr"];
        args.extend(TINY);
        ok(&args);
        (
            fs::read(out.join("report.json")).unwrap(),
            fs::read(out.join("predictions.csv")).unwrap(),
        )
    };
    let (report, csv) = run("e1");
    let json: serde_json::Value = serde_json::from_slice(&report).unwrap();
    assert_eq!(json["folds"].as_array().unwrap().len(), 5);
    assert_eq!(json["methods"][0]["fold_pearson"].as_array().unwrap().len(), 5);
    assert_eq!(run("e2"), (report, csv));
}

#[test]
fn train_reruns_are_byte_identical() {
    let t = TempDir::new().unwrap();
    let corpus = synth(&t.path().join("s"), "4", "24");
    let run = |dir: &str, method: &str| {
        let out = t.path().join(dir);
        let mut args = vec!["train", "--in", p(&corpus), "--out", p(&out), "--method", method, "--seed", "5"];
        args.extend(TINY);
        ok(&args);
        out
    };
    let (a, b) = (run("a", "lstm"), run("b", "lstm"));
    for f in ["model.ckpt", "training.json"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
    }
    let (c, d) = (run("c", "svr"), run("d", "svr"));
    assert_eq!(fs::read(c.join("model.ckpt")).unwrap(), fs::read(d.join("model.ckpt")).unwrap());

    for model in [&a, &c] {
        let out = t.path().join("inf");
        ok(&["infer", "--in", p(&corpus), "--model", p(&model.join("model.ckpt")), "--out", p(&out)]);
        let text = fs::read_to_string(out.join("predictions.csv")).unwrap();
        assert_eq!(text.lines().next().unwrap(), "id,emotion,label,prediction,level,action");
        assert_eq!(text.lines().count(), 25);
    }
}

#[test]
fn stream_over_stdio_follows_the_protocol() {
    let t = TempDir::new().unwrap();
    let corpus = synth(&t.path().join("s"), "7", "30");
    let model = t.path().join("m");
    let mut args = vec!["train", "--in", p(&corpus), "--out", p(&model)];
    args.extend(TINY);
    ok(&args);
    let input = fs::read_to_string(Path::new(env!("CARGO_MANIFEST_DIR")).join("../../docs/stream/session.in.jsonl"))
        .unwrap();
    let mut child = Command::new(env!("CARGO_BIN_EXE_kinemo"))
        .args(["stream", "--model", p(&model.join("model.ckpt")), "--profile", "canonical"])
        .args(["--window", "24", "--hop", "6"])
        .env("RUST_LOG", "error")
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .stderr(Stdio::piped())
        .spawn()
        .unwrap();
    child.stdin.take().unwrap().write_all(input.as_bytes()).unwrap();
    let out = child.wait_with_output().unwrap();
    assert!(out.status.success());
    let lines: Vec<serde_json::Value> = String::from_utf8(out.stdout)
        .unwrap()
        .lines()
        .map(|l| serde_json::from_str(l).unwrap())
        .collect();
    assert_eq!(lines.len(), 5);
    assert_eq!(lines[0]["line"], 7);
    let emotions: Vec<&str> = lines[1..].iter().map(|l| l["emotion"].as_str().unwrap()).collect();
    assert_eq!(emotions, ["joy", "joy", "sadness", "sadness"]);
    for l in &lines[1..] {
        let y = l["intensity"].as_f64().unwrap();
        assert_eq!(l["level"], if y >= 0.5 { "strong" } else { "weak" });
        assert_eq!(l["action"], if y >= 0.5 { "gesture" } else { "speech" });
    }
    assert!(String::from_utf8_lossy(&out.stderr).contains("latency"));
}

#[test]
fn stored_transcript_matches_the_output_schema() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../docs/stream");
    let text = fs::read_to_string(dir.join("session.out.jsonl")).unwrap();
    for line in text.lines() {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert_eq!(v["v"], 1);
        assert!(v.get("error").is_some() || v.get("intensity").is_some());
    }
}

#[test]
fn exit_codes_follow_error_categories() {
    let t = TempDir::new().unwrap();
    let missing = kinemo(&["train", "--in", p(&t.path().join("none.jsonl")), "--out", p(t.path())]);
    assert_eq!(missing.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&missing.stderr).starts_with("error:data: "));

    let usage = kinemo(&["eval", "--in", "x", "--out", "y", "--bogus"]);
    assert_eq!(usage.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&usage.stderr).starts_with("error:usage: "));

    let k = kinemo(&["eval", "--in", "x", "--out", p(&t.path().join("never")), "--k", "1"]);
    assert_eq!(k.status.code(), Some(2));
    assert!(!t.path().join("never").exists());

    let lr = kinemo(&["train", "--in", "x", "--out", "y", "--lr", "-1"]);
    assert_eq!(lr.status.code(), Some(2));

    let corpus = synth(&t.path().join("s"), "1", "10");
    let nan = kinemo(&["train", "--in", p(&corpus), "--out", p(&t.path().join("m")), "--lr", "1e308"]);
    assert_eq!(nan.status.code(), Some(4), "{}", String::from_utf8_lossy(&nan.stderr));
}

#[test]
fn version_lists_format_versions() {
    let out = ok(&["--version"]);
    let text = String::from_utf8(out.stdout).unwrap();
    for part in ["corpus format 1", "checkpoint format 1", "report format 1", "stream schema 1"] {
        assert!(text.contains(part), "{text}");
    }
}

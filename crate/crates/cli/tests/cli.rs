use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_bus-curate"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write_config(dir: &Path, corpus: &Path) -> std::path::PathBuf {
    let cfg = dir.join("run.toml");
    let truth = corpus.join("truth.jsonl").display().to_string();
    fs::write(
        &cfg,
        format!("[ocr]\nbackend = \"mock\"\ntokens_from = {truth:?}\n"),
    )
    .unwrap();
    cfg
}

#[test]
fn gen_run_score_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus");
    let out = bin(&["gen", "--seed", "3", "--n", "12", "--out", s(&corpus)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(fs::read_dir(&corpus).unwrap().count(), 13);

    let cfg = write_config(dir.path(), &corpus);
    let manifest = dir.path().join("m.jsonl");
    let crops = dir.path().join("crops");
    let pattern = format!("{}/*.png", corpus.display());
    let out = bin(&[
        "run", "--config", s(&cfg), "--input", &pattern, "--manifest", s(&manifest),
        "--workers", "2", "--emit-crops", s(&crops),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(fs::read_to_string(&manifest).unwrap().lines().count(), 12);
    assert_eq!(fs::read_dir(&crops).unwrap().count(), 12);

    let truth = corpus.join("truth.jsonl");
    let out = bin(&["score", "--manifest", s(&manifest), "--truth", s(&truth)]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["n"], 12);
    let inv = &v["confusion"]["invalid"];
    let total: u64 = ["tp", "fp", "tn", "fn"].iter().map(|k| inv[k].as_u64().unwrap()).sum();
    assert_eq!(total, 12);
}

#[test]
fn decode_errors_exit_two() {
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("corpus");
    assert!(bin(&["gen", "--seed", "4", "--n", "3", "--out", s(&corpus)]).status.success());
    fs::write(corpus.join("broken.png"), b"not a png").unwrap();
    let cfg = write_config(dir.path(), &corpus);
    let manifest = dir.path().join("m.jsonl");
    let pattern = format!("{}/*.png", corpus.display());
    let out = bin(&["run", "--config", s(&cfg), "--input", &pattern, "--manifest", s(&manifest)]);
    assert_eq!(out.status.code(), Some(2));
    let text = fs::read_to_string(&manifest).unwrap();
    assert_eq!(text.lines().count(), 4);
    assert_eq!(text.matches("DECODE_ERROR").count(), 1);
}

#[test]
fn bad_config_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    let manifest = dir.path().join("m.jsonl");
    fs::write(&cfg, "[pipeline]\nworkers = 0\n").unwrap();
    let out = bin(&["run", "--config", s(&cfg), "--input", "*.png", "--manifest", s(&manifest)]);
    assert_eq!(out.status.code(), Some(1));

    fs::write(&cfg, "[pipeline]\nno_such_key = 1\n").unwrap();
    let out = bin(&["run", "--config", s(&cfg), "--input", "*.png", "--manifest", s(&manifest)]);
    assert_eq!(out.status.code(), Some(1));

    let missing = dir.path().join("absent.toml");
    let out = bin(&["run", "--config", s(&missing), "--input", "*.png", "--manifest", s(&manifest)]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn defaults_parse_back() {
    let out = bin(&["defaults"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("[crop]") && text.contains("[calipers]"));
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("d.toml");
    fs::write(&cfg, &text).unwrap();
    // defaults alone name no inputs
    let out = bin(&["run", "--config", s(&cfg), "--manifest", s(&dir.path().join("m"))]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("no inputs"));
}

#[test]
fn ocr_serve_answers_each_request() {
    use std::io::Write;
    use std::process::Stdio;
    let dir = tempfile::tempdir().unwrap();
    let corpus = dir.path().join("c");
    assert!(bin(&["gen", "--seed", "5", "--n", "1", "--out", s(&corpus)]).status.success());
    let png = fs::read_dir(&corpus)
        .unwrap()
        .map(|e| e.unwrap().path())
        .find(|p| p.extension().is_some_and(|e| e == "png"))
        .unwrap();
    let mut child = Command::new(env!("CARGO_BIN_EXE_bus-curate"))
        .arg("ocr-serve")
        .stdin(Stdio::piped())
        .stdout(Stdio::piped())
        .spawn()
        .unwrap();
    let mut stdin = child.stdin.take().unwrap();
    writeln!(stdin, "{}", png.display()).unwrap();
    writeln!(stdin, "/no/such/file.png").unwrap();
    drop(stdin);
    let out = child.wait_with_output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    // each request ends with a blank line
    assert_eq!(text.lines().filter(|l| l.is_empty()).count(), 2);
}

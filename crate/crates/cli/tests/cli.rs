use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_dateform"))
}

fn root() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).to_path_buf()
}

fn fixture(name: &str) -> PathBuf {
    root().join("tests/fixtures").join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("spawn dateform")
}

fn run_path(cmd: &str, path: &Path, rest: &[&str]) -> Output {
    let mut c = bin();
    c.arg(cmd).arg(path).args(rest);
    c.output().expect("spawn dateform")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("invalid JSON ({e}): {}", stdout(o)))
}

fn assert_schema(name: &str, value: &Value) {
    let path = root().join("../../docs/schemas").join(format!("{name}.schema.json"));
    let schema: Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    let validator = jsonschema::validator_for(&schema).unwrap();
    let errors: Vec<String> = validator.iter_errors(value).map(|e| format!("{} at {}", e, e.instance_path())).collect();
    assert!(errors.is_empty(), "{name} output violates schema: {errors:?}\n{value:#}");
}

/// Zeroes timing fields, which vary between runs.
fn strip_timing(v: &mut Value) {
    match v {
        Value::Object(map) => {
            for (k, x) in map.iter_mut() {
                if k.ends_with("_micros") {
                    *x = Value::from(0.0);
                } else {
                    strip_timing(x);
                }
            }
        }
        Value::Array(xs) => xs.iter_mut().for_each(strip_timing),
        _ => {}
    }
}

/// Compares against tests/golden/<name>.json. Set UPDATE_GOLDEN=1 to rewrite.
fn assert_golden(name: &str, value: &Value) {
    let path = root().join("tests/golden").join(format!("{name}.json"));
    let mut text = serde_json::to_string_pretty(value).unwrap();
    text.push('\n');
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        fs::write(&path, &text).unwrap();
        return;
    }
    let want = fs::read_to_string(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    assert_eq!(text, want, "golden mismatch for {name}");
}

#[test]
fn detect_mdl_on_generated_iso_column() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_path("gen-corpus", dir.path(), &["--columns", "6", "--seed", "3"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    // Catalog entry 5 is yyyy-MM-dd.
    let o = run_path("detect", &dir.path().join("col_0005.csv"), &["--column", "date", "--engine", "mdl"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v = json(&o);
    assert_schema("detect", &v);
    assert_eq!(v[0]["engine"], "mdl");
    assert_eq!(v[0]["candidates"][0]["format"], "yyyy-MM-dd");
}

#[test]
fn detect_nlp_on_access_log() {
    let o = run_path("detect", &fixture("access.txt"), &["--engine", "nlp"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let v = json(&o);
    assert_schema("detect", &v);
    assert_eq!(v.as_array().unwrap().len(), 1);
    assert_eq!(v[0]["candidates"][0]["format"], "[dd/MMM/yyyy:HH:mm:ss");
}

#[test]
fn detect_both_reports_each_engine_for_the_same_column() {
    let o = run_path("detect", &fixture("mixed.csv"), &["--column", "created"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let mut v = json(&o);
    assert_schema("detect", &v);
    let items = v.as_array().unwrap();
    assert_eq!(items.len(), 2);
    assert_eq!(items[0]["engine"], "mdl");
    assert_eq!(items[1]["engine"], "nlp");
    assert!(items.iter().all(|r| r["column"] == "created"));
    strip_timing(&mut v);
    assert_golden("detect_mixed", &v);
}

#[test]
fn detect_access_log_golden() {
    let o = run_path("detect", &fixture("access.txt"), &[]);
    assert_eq!(code(&o), 0);
    let mut v = json(&o);
    strip_timing(&mut v);
    assert_golden("detect_access", &v);
}

#[test]
fn detect_column_by_index() {
    let o = run_path("detect", &fixture("mixed.csv"), &["--column", "1", "--engine", "mdl"]);
    assert_eq!(code(&o), 0);
    assert_eq!(json(&o)[0]["column"], "created");
}

#[test]
fn detect_missing_column_is_a_usage_error() {
    let o = run_path("detect", &fixture("mixed.csv"), &["--column", "nope"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("column not found"), "{}", stderr(&o));
    assert!(o.stdout.is_empty());
}

#[test]
fn detect_missing_file_is_an_io_error() {
    let o = run_path("detect", &fixture("does-not-exist.csv"), &[]);
    assert_eq!(code(&o), 1);
}

#[test]
fn detect_without_format_exits_2() {
    let o = run_path("detect", &fixture("corpus/terms.csv"), &[]);
    assert_eq!(code(&o), 2);
    let v = json(&o);
    assert_schema("detect", &v);
    assert!(v.as_array().unwrap().iter().all(|r| r.get("error").is_some()));
    assert_golden("detect_terms", &v);
}

#[test]
fn detect_numeric_timestamps_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("epoch.txt");
    fs::write(&path, "1400000000\n1400003600\n1400007200\n").unwrap();
    let o = run_path("detect", &path, &[]);
    assert_eq!(code(&o), 2);
    assert!(!stderr(&o).is_empty());
}

#[test]
fn detect_table_output() {
    let o = run_path("detect", &fixture("mixed.csv"), &["--column", "created", "--format", "table"]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("engine"));
    assert!(lines.iter().skip(1).any(|l| l.contains("yyyy-MM-dd")));
    assert!(serde_json::from_str::<Value>(&text).is_err());
}

#[test]
fn parse_quoted_apostrophe_pattern() {
    let o = run_path("parse", &fixture("parse.csv"), &["--pattern", "MM ''yyyy"]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o), "2013-01-01T00:00:00\n1999-12-01T00:00:00\n\n2020-07-01T00:00:00\n");
    let err = stderr(&o);
    assert_eq!(err.lines().count(), 1);
    assert!(err.contains("not a date"));
}

#[test]
fn parse_time_only_uses_spreadsheet_epoch() {
    let o = run_path("parse", &fixture("times.txt"), &["--pattern", "HH:mm"]);
    assert_eq!(code(&o), 0);
    assert_eq!(stdout(&o), "1899-12-30T23:47:00\n1899-12-30T00:05:00\n");
}

#[test]
fn parse_strict_exits_3_on_failure() {
    let o = run_path("parse", &fixture("parse.csv"), &["--pattern", "MM ''yyyy", "--strict"]);
    assert_eq!(code(&o), 3);
    let o = run_path("parse", &fixture("times.txt"), &["--pattern", "HH:mm", "--strict"]);
    assert_eq!(code(&o), 0);
}

#[test]
fn parse_json_output() {
    let o = run_path("parse", &fixture("parse.csv"), &["--pattern", "MM ''yyyy", "--format", "json"]);
    assert_eq!(code(&o), 0);
    let v = json(&o);
    assert_schema("parse", &v);
    assert_golden("parse", &v);
}

#[test]
fn parse_bad_pattern_is_a_usage_error() {
    let o = run_path("parse", &fixture("parse.csv"), &["--pattern", "yyyy-'MM"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn crossval_fixture_corpus() {
    let o = run_path("crossval", &fixture("corpus"), &[]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let mut v = json(&o);
    assert_schema("crossval", &v);
    let n = |k: &str| v[k].as_u64().unwrap();
    assert_eq!(n("match_count") + v["discrepancies"].as_array().unwrap().len() as u64, n("both_detected"));
    strip_timing(&mut v);
    assert_golden("crossval", &v);
}

#[test]
fn crossval_on_generated_corpus_matches() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(code(&run_path("gen-corpus", dir.path(), &["--columns", "10"])), 0);
    let o = run_path("crossval", dir.path(), &["--jobs", "2"]);
    assert_eq!(code(&o), 0);
    let v = json(&o);
    assert_schema("crossval", &v);
    assert_eq!(v["total_columns"], 10);
    assert!(v["match_rate"].as_f64().unwrap() >= 0.9);
}

#[test]
fn crossval_empty_dir_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_path("crossval", dir.path(), &[]);
    assert_eq!(code(&o), 1);
    assert!(o.stdout.is_empty());
}

#[test]
fn crossval_table_is_aligned() {
    let o = run_path("crossval", &fixture("corpus"), &["--format", "table"]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    let block: Vec<&str> = text.split("\n\n").next().unwrap().lines().collect();
    assert_eq!(block.len(), 2);
    let col = block[0].find("match_rate").unwrap();
    assert_eq!(&block[1][col..], "0.5000");
}

#[test]
fn gen_corpus_is_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for d in [&a, &b] {
        let o = run_path("gen-corpus", d.path(), &["--columns", "10", "--seed", "1"]);
        assert_eq!(code(&o), 0);
        let mut v = json(&o);
        assert_schema("gen-corpus", &v);
        assert_eq!(v["columns"], 10);
        let out = d.path().display().to_string();
        for k in ["out_dir", "manifest"] {
            let s = v[k].as_str().unwrap().replace(&out, "<out>");
            v[k] = Value::from(s);
        }
        assert_golden("gen_corpus", &v);
    }
    let mut names: Vec<_> = fs::read_dir(a.path()).unwrap().map(|e| e.unwrap().file_name()).collect();
    names.sort();
    assert_eq!(names.len(), 11);
    for n in &names {
        assert_eq!(fs::read(a.path().join(n)).unwrap(), fs::read(b.path().join(n)).unwrap());
    }
    let manifest: Value = serde_json::from_slice(&fs::read(a.path().join("manifest.json")).unwrap()).unwrap();
    assert_schema("manifest", &manifest);
    assert_eq!(manifest["seed"], 1);
}

#[test]
fn gen_corpus_seed_changes_values() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    run_path("gen-corpus", a.path(), &["--columns", "2", "--seed", "1"]);
    run_path("gen-corpus", b.path(), &["--columns", "2", "--seed", "2"]);
    let f = "col_0001.csv";
    assert_ne!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap());
}

#[test]
fn stats_schema_and_golden() {
    for engine in ["mdl", "nlp"] {
        let o = run_path("stats", &fixture("corpus"), &["--engine", engine]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        let mut v = json(&o);
        assert_schema("stats", &v);
        for k in ["analysis_micros", "validation_micros"] {
            assert!(v[k].as_f64().unwrap() >= 0.0);
        }
        strip_timing(&mut v);
        assert_golden(&format!("stats_{engine}"), &v);
    }
}

#[test]
fn stats_empty_corpus_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let o = run_path("stats", dir.path(), &[]);
    assert_eq!(code(&o), 1);
}

#[test]
fn usage_errors_exit_1() {
    assert_eq!(code(&run(&[])), 1);
    assert_eq!(code(&run(&["frobnicate"])), 1);
    assert_eq!(code(&run(&["detect"])), 1);
    let f = fixture("mixed.csv");
    let f = f.to_str().unwrap();
    assert_eq!(code(&run(&["detect", f, "--max-error-rate", "1.5"])), 1);
    assert_eq!(code(&run(&["detect", f, "--sample-size", "0"])), 1);
    assert_eq!(code(&run(&["detect", f, "--locale", "xx-unknown"])), 1);
    assert_eq!(code(&run(&["detect", f, "--engine", "regex"])), 1);
}

#[test]
fn help_and_version_exit_0() {
    let o = run(&["--help"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("Exit codes"));
    assert_eq!(code(&run(&["--version"])), 0);
}

#[test]
fn weights_flag_round_trips_a_dump() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("weights.txt");
    let grammar = dateform::pcfg::default_weights(&dateform::locale::Locale::english());
    fs::write(&path, grammar.dump()).unwrap();
    let o = bin()
        .args(["detect", "--engine", "nlp", "--weights"])
        .arg(&path)
        .arg(fixture("access.txt"))
        .output()
        .unwrap();
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(json(&o)[0]["candidates"][0]["format"], "[dd/MMM/yyyy:HH:mm:ss");

    fs::write(&path, "not a grammar").unwrap();
    let o = bin().args(["detect", "--weights"]).arg(&path).arg(fixture("access.txt")).output().unwrap();
    assert_eq!(code(&o), 1);
}

use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn asiaudit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_asiaudit"))
        .args(args)
        .env_remove("ASIAUDIT_LOG")
        .output()
        .expect("binary runs")
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

fn simulate(dir: &Path, name: &str, extra: &[&str]) -> std::path::PathBuf {
    let out = dir.join(name);
    let mut args = vec!["simulate", "--out", p(&out)];
    args.extend_from_slice(extra);
    let o = asiaudit(&args);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    out
}

fn stderr_lines(o: &Output) -> Vec<Value> {
    String::from_utf8_lossy(&o.stderr)
        .lines()
        .map(|l| serde_json::from_str(l).unwrap_or_else(|e| panic!("not JSON ({e}): {l}")))
        .collect()
}

const MIXED: [&str; 8] = ["--firms", "100", "--years", "5", "--rest-mode", "mixed", "--seed", "7"];

#[test]
fn simulate_then_diagnose() {
    let dir = TempDir::new().unwrap();
    let csv = simulate(dir.path(), "panel.csv", &MIXED);
    let report = dir.path().join("report.json");
    let o = asiaudit(&["diagnose", "--input", p(&csv), "--out", p(&report)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(v["schema_version"], 1);
    let d = &v["diagnostics"][0];
    assert_eq!(d["degenerate"], false);
    assert!(d["f_if"].as_f64().unwrap() > 0.0);
    let n = d["restricted"]["n"].as_u64().unwrap();
    assert!(n > 300 && n <= 400, "{n}");
}

#[test]
fn simulate_writes_sidecar() {
    let dir = TempDir::new().unwrap();
    let csv = simulate(dir.path(), "panel.csv", &MIXED);
    let meta = dir.path().join("panel.csv.meta.json");
    let v: Value = serde_json::from_str(&std::fs::read_to_string(meta).unwrap()).unwrap();
    assert_eq!(v["config"]["seed"], 7);
    assert_eq!(v["config"]["rest_mode"], "mixed");
    assert_eq!(std::fs::read_to_string(csv).unwrap().lines().count(), 501);
}

#[test]
fn runs_are_byte_identical() {
    // Same file name in two directories, since the report label is the stem.
    let (da, db) = (TempDir::new().unwrap(), TempDir::new().unwrap());
    let a = simulate(da.path(), "panel.csv", &MIXED);
    let b = simulate(db.path(), "panel.csv", &MIXED);
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let ra = da.path().join("r.json");
    let rb = db.path().join("r.json");
    for (csv, out) in [(&a, &ra), (&b, &rb)] {
        assert_eq!(asiaudit(&["diagnose", "--input", p(csv), "--out", p(out)]).status.code(), Some(0));
    }
    assert_eq!(std::fs::read(&ra).unwrap(), std::fs::read(&rb).unwrap());
}

#[test]
fn config_file_matches_flags() {
    let dir = TempDir::new().unwrap();
    let from_flags = simulate(dir.path(), "flags.csv", &MIXED);
    let cfg = dir.path().join("sim.json");
    std::fs::write(&cfg, r#"{"n_firms": 100, "n_years": 5, "rest_mode": "mixed", "seed": 7}"#).unwrap();
    let from_file = simulate(dir.path(), "file.csv", &["--config", p(&cfg)]);
    assert_eq!(std::fs::read(from_flags).unwrap(), std::fs::read(from_file).unwrap());
}

#[test]
fn degenerate_panel_exits_three() {
    let dir = TempDir::new().unwrap();
    let csv = simulate(
        dir.path(),
        "neg.csv",
        &["--firms", "40", "--years", "4", "--rest-mode", "all_negative_small", "--seed", "1"],
    );
    let report = dir.path().join("r.json");
    let o = asiaudit(&["diagnose", "--input", p(&csv), "--out", p(&report)]);
    assert_eq!(o.status.code(), Some(3));
    let v: Value = serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    assert_eq!(v["diagnostics"][0]["degenerate_reason"], "all_nonpositive");
}

#[test]
fn usage_errors_exit_one_with_json() {
    let o = asiaudit(&["diagnose", "--bogus"]);
    assert_eq!(o.status.code(), Some(1));
    let lines = stderr_lines(&o);
    assert!(lines.iter().any(|l| l["code"] == "usage"), "{lines:?}");

    let o = asiaudit(&["simulate", "--firms", "2", "--years", "2", "--rest-mode", "mixed", "--seed", "1"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn bad_data_exits_two() {
    let dir = TempDir::new().unwrap();
    let csv = dir.path().join("bad.csv");
    std::fs::write(&csv, "firm_id,year,total_assets,investment,cash_flow\nA,2001,abc,1,2\n").unwrap();
    let o = asiaudit(&["diagnose", "--input", p(&csv)]);
    assert_eq!(o.status.code(), Some(2));
    let lines = stderr_lines(&o);
    assert!(lines.iter().any(|l| l["code"] == "parse_error" && l["row"] == 2), "{lines:?}");

    let o = asiaudit(&["diagnose", "--input", p(&dir.path().join("missing.csv"))]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn table_formats() {
    let dir = TempDir::new().unwrap();
    let mut reports = Vec::new();
    for seed in ["7", "8"] {
        let name = format!("p{seed}.csv");
        let csv = simulate(
            dir.path(),
            &name,
            &["--firms", "60", "--years", "4", "--rest-mode", "mixed", "--seed", seed],
        );
        let r = dir.path().join(format!("r{seed}.json"));
        assert_eq!(asiaudit(&["diagnose", "--input", p(&csv), "--out", p(&r)]).status.code(), Some(0));
        reports.push(r);
    }
    let md = dir.path().join("t.md");
    let o = asiaudit(&["table", "--inputs", p(&reports[0]), p(&reports[1]), "--format", "markdown", "--out", p(&md)]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(md).unwrap();
    assert!(text.contains("Total mean"));
    assert!(text.lines().filter(|l| l.starts_with('|')).count() >= 5);

    let o = asiaudit(&["table", "--inputs", p(&reports[0]), "--format", "json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v.is_object() || v.is_array());

    let o = asiaudit(&["table", "--inputs", p(&reports[0]), "--format", "yaml"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn check_reports_identity_violations() {
    let dir = TempDir::new().unwrap();
    let csv = simulate(dir.path(), "ok.csv", &MIXED);
    let o = asiaudit(&["check", "--input", p(&csv)]);
    assert_eq!(o.status.code(), Some(0));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["violations"], 0);
    assert_eq!(v["records"], 500);

    let bad = dir.path().join("bad.csv");
    std::fs::write(
        &bad,
        "firm_id,year,total_assets,investment,cash_flow,d_ltd,d_capital_stock,depreciation,dividends,d_working_capital,d_ofa\n\
         W,2001,100,10,5,1,1,0,0,0,0\n",
    )
    .unwrap();
    let o = asiaudit(&["check", "--input", p(&bad)]);
    assert_eq!(o.status.code(), Some(2));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["violations"], 1);
}

#[test]
fn removals_report_is_written() {
    let dir = TempDir::new().unwrap();
    let csv = simulate(dir.path(), "panel.csv", &MIXED);
    let removals = dir.path().join("removals.csv");
    let o = asiaudit(&["diagnose", "--input", p(&csv), "--removals", p(&removals), "--out", p(&dir.path().join("r.json"))]);
    assert_eq!(o.status.code(), Some(0));
    let text = std::fs::read_to_string(removals).unwrap();
    // 100 first years have no prior total assets.
    assert!(text.matches("missing_prior_year").count() >= 100, "{text}");
}

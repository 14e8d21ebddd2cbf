use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use sls_cli::without_timing;

fn sls(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sls"))
        .args(args)
        .env("SLS_LOG", "error")
        .output()
        .expect("spawn sls")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn record_demo(dir: &Path, name: &str, seed: &str) -> std::path::PathBuf {
    let out = dir.join(name);
    let args = ["record", "--demo", "--k", "24", "--length", "120", "--seed", seed, "--out", path_str(&out)];
    let o = sls(&args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    out
}

#[test]
fn record_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = fs::read(record_demo(dir.path(), "a.jsonl", "11")).unwrap();
    let b = fs::read(record_demo(dir.path(), "b.jsonl", "11")).unwrap();
    assert_eq!(a, b);
    let c = fs::read(record_demo(dir.path(), "c.jsonl", "12")).unwrap();
    assert_ne!(a, c);
    let first = String::from_utf8(a).unwrap();
    assert!(first.lines().next().unwrap().contains("\"format_version\":1"));
    assert_eq!(first.lines().count(), 121);
}

#[test]
fn replay_is_reproducible_and_identity_is_untouched() {
    let dir = tempfile::tempdir().unwrap();
    let trace = record_demo(dir.path(), "t.jsonl", "11");
    let run = |method: &str| {
        let o = sls(&["replay", "--trace", path_str(&trace), "--method", method, "--sampler", "sample", "--seed", "3"]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        String::from_utf8(o.stdout).unwrap()
    };
    assert_eq!(without_timing(&run("sls")), without_timing(&run("sls")));
    let identity = run("identity");
    for line in identity.lines().filter(|l| l.contains("\"section\":\"step\"")) {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert_eq!(v["gate_fired"], false);
        assert_eq!(v["entropy_pre"], v["entropy_post"]);
    }
    let summary = identity.lines().find(|l| l.contains("\"section\":\"summary\"")).unwrap();
    assert!(summary.contains("\"steps_gated\":0"), "{summary}");
}

#[test]
fn confident_trace_never_gates() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("low.jsonl");
    let header = sls_core::TraceHeader::new(64, 16, "peaked", 0);
    let records: Vec<_> = sls_cli::bench::synthetic_slices(16, 50, 30.0, 9)
        .iter()
        .map(|s| sls_core::TraceRecord::from_slice(s, None))
        .collect();
    sls_core::write_trace(&path, &header, &records).unwrap();
    let run = |method: &str| {
        let o = sls(&["replay", "--trace", path_str(&path), "--method", method]);
        assert!(o.status.success());
        let text = String::from_utf8(o.stdout).unwrap();
        text.lines()
            .filter(|l| l.contains("\"section\":\"step\""))
            .map(|l| {
                let mut v: serde_json::Value = serde_json::from_str(l).unwrap();
                v.as_object_mut().unwrap().remove("method");
                v
            })
            .collect::<Vec<_>>()
    };
    let sls_steps = run("sls");
    assert_eq!(sls_steps.len(), 50);
    assert!(sls_steps.iter().all(|v| v["gate_fired"] == false));
    assert_eq!(sls_steps, run("identity"));
}

#[test]
fn compare_writes_one_entry_per_method() {
    let dir = tempfile::tempdir().unwrap();
    let trace = record_demo(dir.path(), "t.jsonl", "11");
    let out = dir.path().join("cmp.jsonl");
    let o = sls(&["compare", "--trace", path_str(&trace), "--method", "identity,sls", "--method", "temperature", "--out", path_str(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let table = String::from_utf8(o.stdout).unwrap();
    for m in ["identity", "sls", "temperature"] {
        assert!(table.contains(m), "{table}");
    }
    let report = fs::read_to_string(out).unwrap();
    assert_eq!(report.lines().filter(|l| l.contains("\"section\":\"summary\"")).count(), 3, "{report}");
}

#[test]
fn config_file_and_flags_layer() {
    let dir = tempfile::tempdir().unwrap();
    let trace = record_demo(dir.path(), "t.jsonl", "11");
    let cfg = dir.path().join("sls.conf");
    fs::write(&cfg, "# ablation\nrank = 2\nalpha_max = 1.2\nh_thres=0.1\n").unwrap();
    let o = sls(&["replay", "--trace", path_str(&trace), "--config", path_str(&cfg), "--rank", "3"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    let header: serde_json::Value = serde_json::from_str(text.lines().next().unwrap()).unwrap();
    let echo = &header["config"];
    assert_eq!(echo["sls"]["rank"], 3);
    assert_eq!(echo["sls"]["alpha_max"], 1.2);
    assert_eq!(echo["sls"]["k"], 24);
    for line in text.lines().filter(|l| l.contains("\"alpha\"")) {
        let v: serde_json::Value = serde_json::from_str(line).unwrap();
        assert!(v["alpha"].as_f64().unwrap() < 1.2);
        assert!(v["m_eff"].as_u64().unwrap() <= 3);
    }
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let trace = record_demo(dir.path(), "t.jsonl", "11");
    let t = path_str(&trace);
    let code = |args: &[&str]| sls(args).status.code().unwrap();

    assert_eq!(code(&["replay", "--trace", t, "--method", "beam"]), 2);
    assert_eq!(code(&["replay", "--trace", t, "--gamma", "0"]), 2);
    assert_eq!(code(&["record", "--length", "5"]), 2);
    assert_eq!(code(&["record", "--demo", "--k", "4096"]), 2);
    assert_eq!(code(&["compare", "--trace", t, "--method", "sls"]), 2);
    let bad_cfg = dir.path().join("bad.conf");
    fs::write(&bad_cfg, "window = sixteen\n").unwrap();
    assert_eq!(code(&["replay", "--trace", t, "--config", path_str(&bad_cfg)]), 2);
    fs::write(&bad_cfg, "colour = blue\n").unwrap();
    assert_eq!(code(&["replay", "--trace", t, "--config", path_str(&bad_cfg)]), 2);

    assert_eq!(code(&["replay", "--trace", t, "--k", "8"]), 3);
    let broken = dir.path().join("broken.jsonl");
    let mut text = fs::read_to_string(&trace).unwrap();
    text.push_str("{not json\n");
    fs::write(&broken, text).unwrap();
    let o = sls(&["replay", "--trace", path_str(&broken)]);
    assert_eq!(o.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&o.stderr).contains("line 122"), "{}", String::from_utf8_lossy(&o.stderr));

    let o = sls(&["replay", "--trace", path_str(&dir.path().join("missing.jsonl"))]);
    assert_ne!(o.status.code(), Some(0));
}

#[test]
fn bench_reports_both_regimes() {
    let o = sls(&["bench", "--k", "64", "--steps", "50"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(String::from_utf8(o.stdout).unwrap().trim()).unwrap();
    assert_eq!(v["gated"]["gate_rate"], 1.0);
    assert_eq!(v["ungated"]["gate_rate"], 0.0);
}

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use sipcond::io::{read_jsonl, read_trajectories_csv, AbsorptionLine, JumpLine};
use sipcond::limit::JumpRecord;

const SIP: &str = r#"
level = "sip"
kernel = "cycle:4"
alpha = 1.0
replicas = 3
seed = 11
horizon = 0.5
sample_interval = 0.1
start = [0.25, 0.25, 0.25, 0.25]

[sip]
n = 200
m = 0.05
"#;

const LIMIT: &str = r#"
level = "limit"
kernel = "cycle:4"
alpha = 1.0
replicas = 4
seed = 3
horizon = 2.0
sample_interval = 0.05
start = [0.5, 0.0, 0.5, 0.0]

[limit]
dt = 0.001
"#;

fn sipcond(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sipcond")).args(args).output().expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

fn simulate(cfg: &str, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["simulate", "--config", cfg, "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    sipcond(&args)
}

#[test]
fn missing_key_exits_1_and_names_it() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", &SIP.replace("alpha = 1.0\n", ""));
    let out = simulate(&cfg, &dir.path().join("o"), &[]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("alpha"));
}

#[test]
fn usage_errors_exit_1() {
    assert_eq!(sipcond(&["simulate"]).status.code(), Some(1));
    assert_eq!(sipcond(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(sipcond(&["verify", "--suite", "nope"]).status.code(), Some(1));
    assert_eq!(sipcond(&["--version"]).status.code(), Some(0));
}

#[test]
fn bad_convention_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", LIMIT);
    let out = simulate(&cfg, &dir.path().join("o"), &["--convention", "proportional,halve"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("halve"));
}

#[test]
fn exhausted_event_budget_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", &SIP.replace("m = 0.05", "m = 0.05\nevent_budget = 10"));
    let out = simulate(&cfg, &dir.path().join("o"), &[]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn manifest_rerun_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", SIP);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert!(simulate(&cfg, &a, &["--seed", "99"]).status.success());
    let manifest = a.join("manifest.toml");
    assert!(simulate(manifest.to_str().unwrap(), &b, &[]).status.success());
    for f in ["trajectories.csv", "stats.csv", "manifest.toml"] {
        assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f} differs");
    }
    assert!(fs::read_to_string(&manifest).unwrap().contains("seed = 99"));
}

#[test]
fn worker_count_does_not_change_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", SIP);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert!(simulate(&cfg, &a, &["--workers", "1"]).status.success());
    assert!(simulate(&cfg, &b, &["--workers", "3"]).status.success());
    assert_eq!(fs::read(a.join("trajectories.csv")).unwrap(), fs::read(b.join("trajectories.csv")).unwrap());
}

#[test]
fn trajectory_csv_schema() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", SIP);
    let out = dir.path().join("o");
    assert!(simulate(&cfg, &out, &[]).status.success());
    let text = fs::read_to_string(out.join("trajectories.csv")).unwrap();
    assert_eq!(text.lines().next(), Some("t,x1,x2,x3,x4,replica,seed"));
    assert_eq!(text.lines().count(), 1 + 3 * 6);
    let trajs = read_trajectories_csv(text.as_bytes()).unwrap();
    assert_eq!(trajs.len(), 3);
    assert_eq!(trajs.iter().map(|t| t.replica_id).collect::<Vec<_>>(), [0, 1, 2]);
    assert_eq!(trajs[0].times, [0.0, 0.1, 0.2, 0.30000000000000004, 0.4, 0.5]);
    let stats = fs::read_to_string(out.join("stats.csv")).unwrap();
    assert_eq!(stats.lines().next(), Some("t,x1_mean,x1_se,x2_mean,x2_se,x3_mean,x3_se,x4_mean,x4_se"));
}

#[test]
fn limit_run_writes_jump_stream() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", LIMIT);
    let out = dir.path().join("o");
    let res = simulate(&cfg, &out, &["--convention", "constant"]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let jumps: Vec<JumpLine> = read_jsonl(fs::File::open(out.join("jumps.jsonl")).unwrap()).unwrap();
    let trajs = read_trajectories_csv(fs::File::open(out.join("trajectories.csv")).unwrap()).unwrap();
    for j in &jumps {
        let JumpRecord { t, target, post, .. } = &j.jump;
        assert!(*t > 0.0 && *t <= 2.0);
        assert!(post[*target] > 0.0);
        assert_eq!(trajs[j.replica as usize].seed, j.seed);
    }
    let manifest = fs::read_to_string(out.join("manifest.toml")).unwrap();
    assert!(manifest.contains("jump_rate_rule = \"constant\""), "{manifest}");
}

#[test]
fn harmonic_measure_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let text = SIP
        .replace("kernel = \"cycle:4\"", "kernel = \"complete:3\"")
        .replace("start = [0.25, 0.25, 0.25, 0.25]", "start = [0.2, 0.3, 0.5]");
    let cfg = write_config(dir.path(), "c.toml", &format!("{text}\n[wf]\ndt = 0.001\n"));
    let out = dir.path().join("o");
    let res = sipcond(&["harmonic-measure", "--config", &cfg, "--out", out.to_str().unwrap(), "--replicas", "20"]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    let lines: Vec<AbsorptionLine> = read_jsonl(fs::File::open(out.join("absorption.jsonl")).unwrap()).unwrap();
    assert_eq!(lines.len(), 20);
    assert!(lines.iter().all(|l| l.point.iter().filter(|&&x| x > 0.0).count() == 1));
    let table = fs::read_to_string(out.join("harmonic_measure.csv")).unwrap();
    assert_eq!(table.lines().next(), Some("site,start,frequency,std_error"));
    assert_eq!(table.lines().count(), 4);
}

#[test]
fn report_reads_simulate_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.toml", &SIP.replace("horizon = 0.5", "horizon = 20.0"));
    let sim = dir.path().join("sim");
    assert!(simulate(&cfg, &sim, &[]).status.success());
    let rep = dir.path().join("rep");
    let res =
        sipcond(&["report", "--input", sim.join("trajectories.csv").to_str().unwrap(), "--out", rep.to_str().unwrap()]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    assert!(rep.join("stats.csv").exists());
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(rep.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["replica_count"], 3);
    assert!(fs::read_to_string(rep.join("manifest.toml")).unwrap().contains("input_sha256"));
}

#[test]
fn verify_writes_one_record_per_criterion() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("v");
    let res = sipcond(&["verify", "--criteria", "6", "--out", out.to_str().unwrap()]);
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stdout));
    let stdout = String::from_utf8_lossy(&res.stdout);
    assert!(stdout.contains("criterion 6: PASS"), "{stdout}");
    let recs: Vec<serde_json::Value> = read_jsonl(fs::File::open(out.join("acceptance.jsonl")).unwrap()).unwrap();
    assert_eq!(recs.len(), 1);
    assert_eq!(recs[0]["id"], 6);
    assert!(fs::read_to_string(out.join("manifest.toml")).unwrap().contains("criteria = [6]"));
}

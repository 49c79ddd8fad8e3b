use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn reference_config() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/reference.json")
}

/// A small but otherwise reference-shaped config that solves in milliseconds.
fn quick_config(dir: &Path) -> PathBuf {
    let text = std::fs::read_to_string(reference_config())
        .unwrap()
        .replace(r#""evaluations": 2000"#, r#""evaluations": 200"#)
        .replace(r#""samples": 1000"#, r#""samples": 50"#);
    let path = dir.join("quick.json");
    std::fs::write(&path, text).unwrap();
    path
}

fn plan(args: &[&str], seed_env: Option<&str>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_plan"));
    cmd.args(args).env("RUST_LOG", "warn").env_remove("PLAN_SEED");
    if let Some(s) = seed_env {
        cmd.env("PLAN_SEED", s);
    }
    cmd.output().unwrap()
}

fn stage(name: &str, config: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![name, "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    plan(&args, None)
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("{}: {e}", path.display()))
}

#[test]
fn unwritable_out_dir_exits_2_naming_path() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "").unwrap();
    let out = blocker.join("sub");
    let o = stage("solve", &quick_config(dir.path()), &out, &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains(out.to_str().unwrap()), "{}", stderr(&o));
}

#[test]
fn missing_front_file_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let o = stage("crosseval", &quick_config(dir.path()), dir.path(), &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("front_0.csv"), "{}", stderr(&o));
}

#[test]
fn invalid_config_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    std::fs::write(&cfg, r#"{ "assets": [], "scenarios": [] }"#).unwrap();
    let o = stage("run", &cfg, dir.path(), &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("bad.json"), "{}", stderr(&o));
    let o = plan(&["solve", "--out", dir.path().to_str().unwrap()], None);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--config"));
}

#[test]
fn empty_fronts_mean_no_candidates() {
    let dir = tempfile::tempdir().unwrap();
    for j in 0..4 {
        std::fs::write(
            dir.path().join(format!("front_{j}.csv")),
            format!("portfolio_id,x_0,x_1,x_2,x_3,x_4,cost,succ_{j}\n"),
        )
        .unwrap();
    }
    let o = stage("crosseval", &quick_config(dir.path()), dir.path(), &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("no candidates"), "{}", stderr(&o));
}

#[test]
fn schema_mismatch_reports_columns() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("crosseval.csv"), "portfolio_id,x_0,cost,succ_0\n0,1,1,1\n").unwrap();
    let o = stage("position", &quick_config(dir.path()), dir.path(), &[]);
    assert_eq!(o.status.code(), Some(2));
    let err = stderr(&o);
    assert!(err.contains("missing [x_1,x_2,x_3,x_4,succ_1,succ_2,succ_3]"), "{err}");
}

#[test]
fn solve_reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = quick_config(dir.path());
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert!(stage("solve", &cfg, &a, &[]).status.success());
    assert!(stage("solve", &cfg, &b, &["--jobs", "3"]).status.success());
    for j in 0..4 {
        let name = format!("front_{j}.csv");
        let text = read(&a.join(&name));
        assert_eq!(text, read(&b.join(&name)));
        assert!(text.lines().count() >= 2, "front {j} empty");
    }
}

#[test]
fn seed_flag_beats_env_beats_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = quick_config(dir.path());
    let front = |out: &str, args: &[&str], env: Option<&str>| {
        let out = dir.path().join(out);
        let mut all = vec!["solve", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()];
        all.extend_from_slice(args);
        assert!(plan(&all, env).status.success());
        read(&out.join("front_1.csv"))
    };
    let config_seed = front("c", &[], None);
    let explicit_42 = front("c42", &["--seed", "42"], None);
    let env_7 = front("e7", &[], Some("7"));
    let flag_7 = front("f7", &["--seed", "7"], None);
    let flag_over_env = front("fe", &["--seed", "42"], Some("7"));
    assert_eq!(config_seed, explicit_42);
    assert_eq!(env_7, flag_7);
    assert_ne!(env_7, config_seed);
    assert_eq!(flag_over_env, config_seed);
}

#[test]
fn crosseval_deduplicates_identical_fronts() {
    let dir = tempfile::tempdir().unwrap();
    let rows = "portfolio_id,x_0,x_1,x_2,x_3,x_4,cost,succ_J\n0,1,0,0,0,0,1,0\n1,0,0,0,3,4,7,0\n";
    for j in 0..4 {
        std::fs::write(dir.path().join(format!("front_{j}.csv")), rows.replace('J', &j.to_string())).unwrap();
    }
    assert!(stage("crosseval", &quick_config(dir.path()), dir.path(), &[]).status.success());
    let text = read(&dir.path().join("crosseval.csv"));
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "portfolio_id,x_0,x_1,x_2,x_3,x_4,cost,succ_0,succ_1,succ_2,succ_3");
    assert_eq!(lines.len(), 3);
    assert!(lines[1].starts_with("0,1,0,0,0,0,1,"));
    assert!(lines[2].starts_with("1,0,0,0,3,4,7,"));
}

#[test]
fn singleton_candidate_is_fully_robust_and_non_dominated() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(
        dir.path().join("crosseval.csv"),
        "portfolio_id,x_0,x_1,x_2,x_3,x_4,cost,succ_0,succ_1,succ_2,succ_3\n0,2,0,1,0,0,3,0.1,0.2,0.3,0.4\n",
    )
    .unwrap();
    assert!(stage("position", &quick_config(dir.path()), dir.path(), &[]).status.success());
    let text = read(&dir.path().join("positioning.csv"));
    let row = text.lines().nth(1).unwrap();
    assert_eq!(row, "0,2,0,1,0,0,3,0.1,0.2,0.3,0.4,1,1,1,1,1,1,0,100,100,0,1");
}

#[test]
fn run_writes_manifest_listing_every_artifact() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = stage("run", &quick_config(dir.path()), &out, &[]);
    assert!(o.status.success(), "{}", stderr(&o));
    let manifest: serde_json::Value = serde_json::from_str(&read(&out.join("manifest.json"))).unwrap();
    let files = manifest["files"].as_object().unwrap();
    let names: Vec<&str> = files.keys().map(String::as_str).collect();
    assert_eq!(
        names,
        ["crosseval.csv", "front_0.csv", "front_1.csv", "front_2.csv", "front_3.csv", "positioning.csv", "sensitivity.csv"]
    );
    assert_eq!(manifest["master_seed"], 42);
    assert_eq!(manifest["config_digest"].as_str().unwrap().len(), 64);
    for stage in ["solve", "crosseval", "position", "sensitivity"] {
        assert!(manifest["timings_ms"][stage].is_u64(), "{stage}");
    }
    let positioning = read(&out.join("positioning.csv"));
    assert!(positioning.lines().skip(1).any(|l| l.ends_with(",1")));
}

#[test]
fn failed_run_leaves_no_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let cfg = quick_config(dir.path());
    assert!(stage("run", &cfg, &out, &[]).status.success());
    assert!(out.join("manifest.json").exists());
    // A directory where crosseval.csv should go makes the second stage fail.
    std::fs::remove_file(out.join("crosseval.csv")).unwrap();
    std::fs::create_dir(out.join("crosseval.csv")).unwrap();
    let o = stage("run", &cfg, &out, &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(!out.join("manifest.json").exists());
}

#[test]
fn zero_stddev_bands_have_zero_width() {
    let dir = tempfile::tempdir().unwrap();
    let text = read(&quick_config(dir.path())).replace(r#""stddev": 0.1"#, r#""stddev": 0"#);
    let cfg = dir.path().join("zero.json");
    std::fs::write(&cfg, text).unwrap();
    assert!(stage("run", &cfg, dir.path(), &[]).status.success());
    let bands = read(&dir.path().join("sensitivity.csv"));
    let mut lines = bands.lines();
    assert_eq!(lines.next(), Some("portfolio_id,metric,nominal,q1,median,q3,kind"));
    for line in lines {
        let f: Vec<&str> = line.split(',').collect();
        assert!(f[2] == f[3] && f[3] == f[4] && f[4] == f[5], "{line}");
    }
}

#[test]
fn trace_dumps_assignment_tables() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = quick_config(dir.path());
    assert!(stage("solve", &cfg, dir.path(), &[]).status.success());
    assert!(stage("crosseval", &cfg, dir.path(), &["--trace"]).status.success());
    let text = read(&dir.path().join("trace/portfolio_0_scenario_0.tsv"));
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# instance 0 future 0 beta "));
    assert_eq!(lines.next(), Some("time_point\tdemand_type\tasset\tunits\tresidual"));
    assert_eq!(text.matches("# instance").count(), 100);
}

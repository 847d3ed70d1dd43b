use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn cylevy(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cylevy")).args(args).output().unwrap()
}

fn run(cmd: &str, config: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![cmd, "--config", config.to_str().unwrap(), "--out", out.to_str().unwrap()];
    args.extend_from_slice(extra);
    cylevy(&args)
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn manifest(dir: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(dir.join("manifest.json")).unwrap()).unwrap()
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("config.json");
    std::fs::write(&p, text).unwrap();
    p
}

const HARMONIC_MODEL: &str = r#""model": {"family": "symmetric-stable", "alpha": 1.2,
    "sigma_rule": {"type": "power", "a": 1.0, "p_or_r": 1.0}, "weight_rule": {"type": "stable-compensating"}}"#;

#[test]
fn example_configs_exit_as_documented() {
    let tmp = tempfile::tempdir().unwrap();
    let cases = [
        ("check", "check_valid.json", 0),
        ("check", "check_a6_violation.json", 1),
        ("dichotomy", "dichotomy_zero.json", 0),
        ("solve", "solve_deterministic.json", 0),
        ("solve", "solve_patched_stable.json", 0),
        ("solve", "solve_anticoercive.json", 3),
        ("converge", "converge_deterministic.json", 0),
    ];
    for (i, (cmd, file, want)) in cases.iter().enumerate() {
        let out = tmp.path().join(i.to_string());
        let o = run(cmd, &configs().join(file), &out, &["--workers", "2"]);
        assert_eq!(code(&o), *want, "{file}: {}", String::from_utf8_lossy(&o.stderr));
        assert_eq!(String::from_utf8_lossy(&o.stdout).trim(), format!("{cmd}: exit {want}"));
        assert_eq!(manifest(&out)["exit_code"], *want);
    }
}

#[test]
fn violation_prints_the_a6_diagnostic() {
    let tmp = tempfile::tempdir().unwrap();
    let o = run("check", &configs().join("check_a6_violation.json"), tmp.path(), &[]);
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.lines().any(|l| l.starts_with("A6(c) k=1: Diverges")), "{err}");
    let verdicts = std::fs::read_to_string(tmp.path().join("verdicts.csv")).unwrap();
    assert!(verdicts.lines().any(|l| l.starts_with("A6(c),1,Diverges")), "{verdicts}");
}

#[test]
fn usage_errors_exit_64() {
    let tmp = tempfile::tempdir().unwrap();
    assert_eq!(code(&cylevy(&[])), 64);
    assert_eq!(code(&cylevy(&["check"])), 64);
    assert_eq!(code(&cylevy(&["frobnicate", "--config", "x.json"])), 64);
    assert_eq!(code(&cylevy(&["--help"])), 0);
    assert_eq!(code(&cylevy(&["--version"])), 0);
    let missing = tmp.path().join("nope.json");
    assert_eq!(code(&run("check", &missing, tmp.path(), &[])), 64);

    let bad = [
        ("check", "{}".to_string()),
        ("check", r#"{"master_seed": 1, "check": {}}"#.to_string()),
        ("check", format!(r#"{{"master_seed": 1, {HARMONIC_MODEL}, "check": {{}}, "extra": 1}}"#)),
        ("dichotomy", format!(r#"{{"master_seed": 1, {HARMONIC_MODEL}, "dichotomy": {{"n": 3, "k": 1, "n_paths": 50, "horizon": 1}}}}"#)),
        ("solve", r#"{"master_seed": 1, "solve": {"preset": {"name": "cubic", "g0": 1}, "n": 2, "dt": 0.3, "horizon": 1}}"#.to_string()),
        ("solve", r#"{"solve": {"preset": {"name": "cubic", "g0": 1}, "n": 2, "dt": 0.1, "horizon": 1}}"#.to_string()),
        ("converge", r#"{"master_seed": 1, "converge": {"preset": {"name": "anti-coercive"}, "ns": [], "dts": [0.1], "horizon": 1}}"#.to_string()),
    ];
    for (i, (cmd, text)) in bad.iter().enumerate() {
        let dir = tmp.path().join(format!("bad{i}"));
        std::fs::create_dir_all(&dir).unwrap();
        let cfg = write_config(&dir, text);
        let o = run(cmd, &cfg, &dir.join("out"), &[]);
        assert_eq!(code(&o), 64, "{text}: {}", String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn seed_flag_overrides_the_config() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = configs().join("solve_patched_stable.json");
    let (a, b, c) = (tmp.path().join("a"), tmp.path().join("b"), tmp.path().join("c"));
    run("solve", &cfg, &a, &[]);
    run("solve", &cfg, &b, &["--seed", "11"]);
    run("solve", &cfg, &c, &["--seed", "12"]);
    let read = |d: &Path| std::fs::read(d.join("paths.csv")).unwrap();
    assert_eq!(read(&a), read(&b));
    assert_ne!(read(&a), read(&c));
    assert_eq!(manifest(&c)["master_seed"], 12);
    assert_eq!(manifest(&c)["config"]["master_seed"], 12);
}

#[test]
fn exhausted_ladder_is_inconclusive() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(
        tmp.path(),
        &format!(
            r#"{{"master_seed": 2, {HARMONIC_MODEL}, "solve": {{"preset": {{"name": "heat-additive", "g0": 0.5}},
               "n": 4, "dt": 0.01, "horizon": 2, "patched": true, "n_paths": 30, "levels": [1, 1.5],
               "sampler": {{"variance_fraction": 0.0001, "max_rate": 100}}}}}}"#
        ),
    );
    let out = tmp.path().join("out");
    let o = run("solve", &cfg, &out, &[]);
    assert_eq!(code(&o), 2, "{}", String::from_utf8_lossy(&o.stderr));
    let paths = std::fs::read_to_string(out.join("paths.csv")).unwrap();
    assert!(paths.lines().any(|l| l.contains(",ladder-exhausted,")));
}

#[test]
fn manifests_follow_the_schema_and_count_rows() {
    let schema: Value = serde_json::from_str(cylevy::cli::MANIFEST_SCHEMA).unwrap();
    let validator = jsonschema::validator_for(&schema).unwrap();
    let tmp = tempfile::tempdir().unwrap();
    for (i, (cmd, file)) in [
        ("check", "check_valid.json"),
        ("dichotomy", "dichotomy_zero.json"),
        ("solve", "solve_anticoercive.json"),
        ("converge", "converge_deterministic.json"),
    ]
    .iter()
    .enumerate()
    {
        let out = tmp.path().join(i.to_string());
        run(cmd, &configs().join(file), &out, &["--workers", "3"]);
        let m = manifest(&out);
        let errors: Vec<String> = validator.iter_errors(&m).map(|e| e.to_string()).collect();
        assert!(errors.is_empty(), "{file}: {errors:?}");
        assert!(m["config"].get("workers").is_none());
        for o in m["outputs"].as_array().unwrap() {
            let text = std::fs::read_to_string(out.join(o["file"].as_str().unwrap())).unwrap();
            assert_eq!(text.lines().count() - 1, o["rows"].as_u64().unwrap() as usize, "{}", o["file"]);
        }
        let timings: Value = serde_json::from_str(&std::fs::read_to_string(out.join("timings.json")).unwrap()).unwrap();
        assert_eq!(timings["workers"], 3);
    }
    // a manifest that echoes the worker count is rejected
    let mut m = manifest(&tmp.path().join("0"));
    m["config"]["workers"] = 4.into();
    assert!(!validator.is_valid(&m));
}

#[test]
fn outputs_do_not_depend_on_the_worker_count() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = configs().join("dichotomy_stable.json");
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    run("dichotomy", &cfg, &a, &["--workers", "1"]);
    run("dichotomy", &cfg, &b, &["--workers", "8"]);
    for f in ["manifest.json", "taus.csv"] {
        assert_eq!(std::fs::read(a.join(f)).unwrap(), std::fs::read(b.join(f)).unwrap(), "{f}");
    }
}

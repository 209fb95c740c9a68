use std::path::Path;
use std::process::{Command, Output};

fn cobra(args: &[&str], dir: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cobra"))
        .args(args)
        .current_dir(dir)
        .output()
        .expect("binary runs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p.to_string_lossy().into_owned()
}

const YULE: &str = "seed = 3\nt = 1.0\n[model]\npreset = \"yule\"\nparams = { r = 1.0 }\n";

#[test]
fn expectation_of_yule_prints_e() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "yule.toml", YULE);
    let out = cobra(&["expectation", "--config", &cfg], dir.path());
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("# cobra "));
    assert!(text.contains("# config: "));
    let last = text.lines().last().unwrap();
    let value: f64 = last.split(',').nth(2).unwrap().parse().unwrap();
    assert!((value - std::f64::consts::E).abs() < 1e-10);
}

#[test]
fn flags_override_the_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "yule.toml", YULE);
    let out = cobra(
        &[
            "expectation",
            "--config",
            &cfg,
            "--t",
            "2",
            "--format",
            "json",
        ],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0));
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["config"]["t"], 2.0);
    let v = doc["results"]["curves"][0]["values"][0].as_f64().unwrap();
    assert!((v - 2f64.exp()).abs() < 1e-9);
}

#[test]
fn missing_seed_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "noseed.toml",
        "t = 1.0\n[model]\npreset = \"yule\"\n",
    );
    let out = cobra(&["validate", "--config", &cfg], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("seed required"));
}

#[test]
fn broken_config_fails_validation() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "bad.toml",
        "seed = 1\n[model]\npreset = \"yule\"\nparams = { r = -1.0 }\n",
    );
    let out = cobra(&["validate", "--config", &cfg], dir.path());
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("model.params.r"));
    let garbled = write(dir.path(), "garbled.toml", "seed = [\n");
    assert_eq!(
        cobra(&["validate", "--config", &garbled], dir.path())
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn unknown_subcommand_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(
        cobra(&["frobnicate", "--seed", "1"], dir.path())
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn failed_check_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let out = cobra(
        &["fixation", "--seed", "1", "--t", "0.5", "--replicas", "50"],
        dir.path(),
    );
    assert_eq!(
        out.status.code(),
        Some(0),
        "no threshold set, so no verdict"
    );
    let cfg = write(
        dir.path(),
        "fix.toml",
        "seed = 1\nt = 0.5\nreplicas = 50\n[params]\nmin = 0.99\n",
    );
    assert_eq!(
        cobra(&["fixation", "--config", &cfg], dir.path())
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn duality_check_on_nested_preset_passes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "nested.toml",
        "seed = 5\nt = 0.5\nreplicas = 4000\n[model]\npreset = \"nested_coalescent\"\n",
    );
    let out = cobra(
        &["duality-check", "--config", &cfg, "--format", "json"],
        dir.path(),
    );
    assert_eq!(out.status.code(), Some(0));
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["results"]["verdict"], "pass");
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "pam-occupancy",
        "--seed",
        "9",
        "--replicas",
        "300",
        "--t",
        "4",
    ];
    let run = |name: &str, threads: &str| {
        let out = dir.path().join(name);
        let o = cobra(
            &[
                &args[..],
                &["--threads", threads, "--out", out.to_str().unwrap()],
            ]
            .concat(),
            dir.path(),
        );
        assert_eq!(o.status.code(), Some(0));
        let plot = dir.path().join(format!("{name}.plot.csv"));
        (std::fs::read(out).unwrap(), std::fs::read(plot).unwrap())
    };
    let a = run("a.csv", "1");
    let b = run("b.csv", "1");
    let c = run("c.csv", "2");
    assert_eq!(a, b);
    assert_eq!(a, c);
    let plot = String::from_utf8(a.1).unwrap();
    assert!(plot.lines().any(|l| l == "series,t,value,se"));
    assert!(plot.contains("\nmonte_carlo,") && plot.contains("\ndual_ode,"));
}

#[test]
fn help_names_the_quantity() {
    let dir = tempfile::tempdir().unwrap();
    let out = cobra(&["expectation", "--help"], dir.path());
    assert_eq!(out.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&out.stdout).contains("E[Z_t(v)]"));
}

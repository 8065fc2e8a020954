use std::path::PathBuf;
use std::process::{Command, Output};

fn fixture() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/data/fixture.csv")
}

fn binseq(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_binseq"))
        .args(args)
        .env_remove("BINSEQ_SEED")
        .output()
        .expect("binary runs")
}

fn json(out: &Output) -> serde_json::Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("valid JSON")
}

#[test]
fn score_test_on_fixture_has_two_degrees_of_freedom() {
    let data = fixture();
    let out = binseq(&[
        "score-test",
        "--family",
        "glarma",
        "--theta-lags",
        "1,2",
        "--residuals",
        "pearson",
        "--intercept",
        data.to_str().unwrap(),
    ]);
    let v = json(&out);
    assert_eq!(v["schema_version"], 1);
    let r = &v["result"];
    assert_eq!(r["df"], 2);
    // Cross-checked against an independent GLM fit and the per-lag sum.
    let q = r["statistic"].as_f64().unwrap();
    assert!((q - 13.97365602439499).abs() < 1e-9 * q, "{q}");
    let p = r["p_value"].as_f64().unwrap();
    assert!((p - (-q / 2.0).exp()).abs() < 1e-12, "chi-square(2) tail is exp(-q/2)");
}

#[test]
fn unknown_flag_exits_one_with_usage() {
    let out = binseq(&["score-test", "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("Usage"));
    assert!(out.stdout.is_empty());
}

#[test]
fn conflicting_omega_flags_exit_one() {
    let data = fixture();
    let out = binseq(&[
        "lrt",
        "--phi-lags",
        "1",
        "--theta-lags",
        "1",
        "--omega",
        "0.2",
        "--omega-grid",
        "-0.5:0.5:0.1",
        data.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn separation_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("sep.csv");
    std::fs::write(&path, "y,m\n1,1\n1,1\n1,1\n1,1\n").unwrap();
    let out = binseq(&["fit-glm", "--intercept", path.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_file_exits_one() {
    let out = binseq(&["fit-glm", "/nonexistent/data.csv"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn help_lists_every_subcommand_and_defaults() {
    let out = binseq(&["--help"]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    for sub in [
        "fit-glm",
        "fit-glarma",
        "score-test",
        "blp",
        "lrt",
        "wald",
        "simulate",
        "reproduce",
    ] {
        assert!(text.contains(sub), "{sub} missing from help");
    }
    let sim = String::from_utf8_lossy(&binseq(&["simulate", "--help"]).stdout).to_string();
    for default in ["default: 1000", "default: 20200101", "default: pearson", "BINSEQ_SEED"] {
        assert!(sim.contains(default), "{default} missing from simulate help");
    }
}

#[test]
fn theory_only_report_is_deterministic() {
    let a = binseq(&["reproduce", "--table", "T1", "--reps", "0"]);
    let b = binseq(&["reproduce", "--table", "T1", "--reps", "0"]);
    assert_eq!(a.stdout, b.stdout);
    let v = json(&a);
    let rows = v["rows"].as_array().unwrap();
    let row = rows.iter().find(|r| r["label"] == "F_Omega [-0.99,0.99] 10%").unwrap();
    assert_eq!(row["paper_value"], 5.96);
    assert!((row["simulated"].as_f64().unwrap() - 5.96).abs() <= 0.005);
}

#[test]
fn simulate_output_does_not_depend_on_threads() {
    let data = fixture();
    let run = |threads: &str| {
        binseq(&[
            "simulate",
            "--intercept",
            "--theta-lags",
            "1",
            "--reps",
            "64",
            "--seed",
            "5",
            "--threads",
            threads,
            data.to_str().unwrap(),
        ])
    };
    let one = run("1");
    let four = run("4");
    assert_eq!(one.stdout, four.stdout);
    let v = json(&one);
    assert_eq!(v["null"]["replications"], 64);
    let p = v["monte_carlo_p_value"].as_f64().unwrap();
    assert!(p > 0.0 && p <= 1.0);
}

#[test]
fn seed_env_var_overrides_default() {
    let data = fixture();
    let args = [
        "simulate",
        "--intercept",
        "--theta-lags",
        "1",
        "--reps",
        "16",
        data.to_str().unwrap(),
    ];
    let default = binseq(&args);
    let env = Command::new(env!("CARGO_BIN_EXE_binseq"))
        .args(args)
        .env("BINSEQ_SEED", "99")
        .output()
        .unwrap();
    assert_eq!(json(&env)["seed"], 99);
    assert_eq!(json(&default)["seed"], 20200101);
}

#[test]
fn config_file_supplies_flags_and_out_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.toml");
    let out = dir.path().join("res.json");
    let profile = dir.path().join("profile.csv");
    std::fs::write(
        &cfg,
        format!(
            "data = {:?}\nintercept = true\nphi-lags = [1]\ntheta-lags = [1]\nomega-grid = \"-0.5:0.5:0.25\"\n",
            fixture()
        ),
    )
    .unwrap();
    let res = binseq(&[
        "score-test",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
        "--profile-csv",
        profile.to_str().unwrap(),
    ]);
    assert!(res.status.success(), "{}", String::from_utf8_lossy(&res.stderr));
    assert!(res.stdout.is_empty());
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(v["result"]["method"], "sup_score_glarma");
    let csv = std::fs::read_to_string(&profile).unwrap();
    let lines: Vec<&str> = csv.lines().collect();
    assert_eq!(lines[0], "omega,statistic");
    assert_eq!(lines.len(), 6);
}

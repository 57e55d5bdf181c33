//! End-to-end tests of the binary: exit codes, output formats, and the
//! determinism contract.

use std::process::{Command, Output};

fn anisomix(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_anisomix"))
        .args(args)
        .output()
        .expect("failed to spawn binary")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn kstar_reference_values() {
    let out = anisomix(&["kstar", "--spectrum", "medium-fig1", "--n", "30", "--lambda", "0", "--c1", "2"]);
    assert!(out.status.success());
    assert_eq!(stdout(&out).trim(), "3");

    let out = anisomix(&["kstar", "--spectrum", "large-fig1", "--n", "30"]);
    assert!(out.status.success());
    assert_eq!(stdout(&out).trim(), "0");

    let out = anisomix(&["kstar", "--spectrum", r#"{"kind":"identity","p":100}"#, "--n", "30"]);
    assert!(out.status.success());
    assert_eq!(stdout(&out).trim(), "0");
}

#[test]
fn svp_check_reports_high_rate_in_wide_regime() {
    let out = anisomix(&[
        "svp-check", "--p", "800", "--n", "10", "--trials", "40", "--seed", "7",
    ]);
    assert!(out.status.success());
    let rate: f64 = stdout(&out).trim().parse().unwrap();
    assert!(rate >= 0.9, "rate {rate}");
}

#[test]
fn generate_writes_dataset_csv() {
    let out = anisomix(&[
        "generate", "--p", "4", "--n", "3", "--seed", "11", "--theta-norm", "2.0",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "col,label,y_1,y_2,y_3,y_4");
    assert_eq!(lines.count(), 3);

    let again = anisomix(&[
        "generate", "--p", "4", "--n", "3", "--seed", "11", "--theta-norm", "2.0",
    ]);
    assert_eq!(out.stdout, again.stdout);
}

#[test]
fn fit_reports_all_classifiers() {
    let out = anisomix(&[
        "fit", "--p", "30", "--n", "6", "--seed", "3", "--theta-norm", "1.5",
        "--lambda", "0.5,inf",
    ]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    assert!(text.starts_with("classifier,lambda,risk,weight_norm\n"));
    for name in ["averaging", "lda", "ridge", "interpolator", "svm"] {
        assert!(text.contains(name), "missing {name} in output:\n{text}");
    }
}

#[test]
fn fit_supports_mc_mode_with_rademacher_noise() {
    let out = anisomix(&[
        "fit", "--p", "20", "--n", "5", "--seed", "4", "--noise", "rademacher",
        "--classifiers", "averaging", "--risk-mode", "mc:5000",
    ]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));

    // Exact mode must reject non-Gaussian noise with a numerical error.
    let out = anisomix(&[
        "fit", "--p", "20", "--n", "5", "--seed", "4", "--noise", "rademacher",
        "--classifiers", "averaging",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn fig_presets_are_thread_deterministic() {
    let base = [
        "fig1", "--variant", "medium", "--seed", "5", "--replicates", "5",
    ];
    let one = anisomix(&[&base[..], &["--threads", "1"]].concat());
    let two = anisomix(&[&base[..], &["--threads", "2"]].concat());
    assert!(one.status.success());
    assert_eq!(one.stdout, two.stdout);
    let text = stdout(&one);
    assert!(text.starts_with(
        "experiment,signal_norm_sq,classifier,lambda,mean_risk,stderr,replicates,failures\n"
    ));
    assert_eq!(text.lines().count(), 1 + 12 * 4);
}

#[test]
fn fig2_writes_file_and_matches_stdout() {
    let dir = std::env::temp_dir().join("anisomix-cli-test");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("fig2.csv");
    let to_file = anisomix(&[
        "fig2", "--seed", "6", "--replicates", "3", "--out", path.to_str().unwrap(),
    ]);
    assert!(to_file.status.success());
    let from_file = std::fs::read_to_string(&path).unwrap();
    let to_stdout = anisomix(&["fig2", "--seed", "6", "--replicates", "3"]);
    assert_eq!(from_file, stdout(&to_stdout));
    assert!(from_file.contains("fig2,"));
}

#[test]
fn run_accepts_config_file_and_flag_overrides() {
    let dir = std::env::temp_dir().join("anisomix-cli-test");
    std::fs::create_dir_all(&dir).unwrap();
    let config_path = dir.join("custom.json");
    std::fs::write(
        &config_path,
        r#"{
            "name": "custom-run",
            "p": 50,
            "n": 8,
            "signal_norms": [1.0, 2.0],
            "lambdas": [0, "inf"],
            "spectrum": {"kind": "identity", "p": 50},
            "replicates": 4,
            "seed": 1,
            "classifiers": ["ridge", "svm"],
            "track_svp": true
        }"#,
    )
    .unwrap();
    let out = anisomix(&["run", "--config", config_path.to_str().unwrap()]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    assert!(text.contains("custom-run,"));
    assert!(text.contains(",interpolator,"));
    assert!(text.contains(",averaging,"));
    assert!(text.contains(",svm,"));

    // Overriding the seed changes the numbers; same seed reproduces them.
    let reseeded = anisomix(&["run", "--config", config_path.to_str().unwrap(), "--seed", "2"]);
    assert!(reseeded.status.success());
    assert_ne!(out.stdout, reseeded.stdout);
    let repeated = anisomix(&["run", "--config", config_path.to_str().unwrap(), "--seed", "2"]);
    assert_eq!(reseeded.stdout, repeated.stdout);
}

#[test]
fn bounds_table_and_seed_requirements() {
    // Minimax alone is deterministic and needs no seed.
    let out = anisomix(&[
        "bounds", "--spectrum", "medium-fig1", "--n", "30", "--which", "minimax",
    ]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let text = stdout(&out);
    assert!(text.starts_with("bound,signal_norm_sq,lambda,k_star,cone,value\n"));
    assert_eq!(text.lines().count(), 1 + 12);

    // Theta-dependent curves without a seed are a numerical/config error.
    let out = anisomix(&[
        "bounds", "--spectrum", "medium-fig1", "--n", "30", "--which", "averaging",
    ]);
    assert_eq!(out.status.code(), Some(2));

    let out = anisomix(&[
        "bounds", "--spectrum", "medium-fig1", "--n", "30", "--seed", "9",
        "--grid", "0.1:5.0:6",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    assert_eq!(text.lines().count(), 1 + 6 * 4);
    assert!(text.contains("ridge,"));
}

#[test]
fn exit_codes_follow_contract() {
    // Unknown flag: usage error.
    let out = anisomix(&["kstar", "--spectrum", "medium-fig1", "--n", "30", "--frobnicate"]);
    assert_eq!(out.status.code(), Some(1));

    // Unknown subcommand: usage error.
    let out = anisomix(&["transmogrify"]);
    assert_eq!(out.status.code(), Some(1));

    // Help: success.
    let out = anisomix(&["--help"]);
    assert_eq!(out.status.code(), Some(0));
    for sub in ["generate", "fit", "kstar", "svp-check", "bounds", "run", "fig1", "fig2"] {
        assert!(stdout(&out).contains(sub));
        let sub_help = anisomix(&[sub, "--help"]);
        assert_eq!(sub_help.status.code(), Some(0));
    }

    // Numerical/config error: invalid c1.
    let out = anisomix(&["kstar", "--spectrum", "medium-fig1", "--n", "30", "--c1", "0.5"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(!String::from_utf8_lossy(&out.stderr).is_empty());

    // Unreadable config: numerical/config error.
    let out = anisomix(&["run", "--config", "/nonexistent/config.json"]);
    assert_eq!(out.status.code(), Some(2));
}

use std::process::{Command, Output};

use anderson_cli::config::ExperimentConfig;

fn anderson(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_anderson"))
        .args(args)
        .env_remove("ANDERSON_WORKERS")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn help_lists_every_subcommand() {
    let o = anderson(&["--help"]);
    assert!(o.status.success());
    let text = stdout(&o);
    for cmd in anderson_cli::commands::COMMANDS {
        assert!(text.contains(&format!("  {cmd} ")), "{cmd} missing from help");
    }
}

#[test]
fn lyapunov_grid_has_one_row_per_energy() {
    let o = anderson(&["lyapunov", "--energy-grid", "-3:5:0.25", "--steps", "1000", "--realizations", "2"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = stdout(&o);
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# anderson lyapunov v1 config_hash="));
    assert_eq!(lines.next().unwrap(), "E,gamma,stderr,n,R");
    let rows: Vec<&str> = lines.collect();
    assert_eq!(rows.len(), 33);
    assert!(rows[0].starts_with("-3,"));
    assert!(rows[32].starts_with("5,"));
    assert!(rows.iter().all(|r| r.split(',').count() == 5));
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let args = |p: &str| {
        vec![
            "--seed".to_string(),
            "11".into(),
            "--out".into(),
            p.to_string(),
            "spectrum".into(),
            "--L".into(),
            "20".into(),
            "--realizations".into(),
            "3".into(),
        ]
    };
    for p in [&a, &b] {
        let argv = args(p.to_str().unwrap());
        let o = anderson(&argv.iter().map(String::as_str).collect::<Vec<_>>());
        assert!(o.status.success(), "{}", stderr(&o));
    }
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
    let single = Command::new(env!("CARGO_BIN_EXE_anderson"))
        .args(args(dir.path().join("c.csv").to_str().unwrap()))
        .env("ANDERSON_WORKERS", "1")
        .output()
        .unwrap();
    assert!(single.status.success());
    assert_eq!(std::fs::read(&a).unwrap(), std::fs::read(dir.path().join("c.csv")).unwrap());
}

#[test]
fn zero_realizations_is_a_validation_error() {
    let o = anderson(&["dynlocal", "--realizations", "0"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("dynlocal.realizations"), "{}", stderr(&o));

    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "[lyapunov]\nrealizations = 0\n").unwrap();
    let o = anderson(&["--config", cfg.to_str().unwrap(), "lyapunov"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("lyapunov.realizations"));
}

#[test]
fn unknown_config_keys_are_rejected() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "seed = 2\n[spectrum]\nL = 30\nwidth = 4\n").unwrap();
    let o = anderson(&["--config", cfg.to_str().unwrap(), "spectrum"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("width"), "{}", stderr(&o));
}

#[test]
fn bad_distribution_names_the_field() {
    let o = anderson(&["--dist", "gauss:0,1", "lyapunov"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("distribution"));
}

#[test]
fn saved_config_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let saved = dir.path().join("saved.toml");
    let first = dir.path().join("first.json");
    let second = dir.path().join("second.json");
    let o = anderson(&[
        "--seed",
        "5",
        "--dist",
        "uniform:0,1",
        "--save-config",
        saved.to_str().unwrap(),
        "--out",
        first.to_str().unwrap(),
        "furstenberg",
        "--energy",
        "-0.75",
        "--grid",
        "128",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = std::fs::read_to_string(&saved).unwrap();
    let cfg = ExperimentConfig::from_toml(&text).unwrap();
    assert_eq!(cfg.seed, 5);
    assert_eq!(cfg.furstenberg.energy, -0.75);
    assert_eq!(ExperimentConfig::from_toml(&cfg.to_toml()).unwrap(), cfg);

    let o = anderson(&["--config", saved.to_str().unwrap(), "--out", second.to_str().unwrap(), "furstenberg"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(std::fs::read(&first).unwrap(), std::fs::read(&second).unwrap());
    let json: serde_json::Value = serde_json::from_slice(&std::fs::read(&first).unwrap()).unwrap();
    assert_eq!(json["config_hash"].as_str().unwrap(), cfg.hash("furstenberg"));
    for key in ["gamma", "residual", "max_bin_weight", "iterations"] {
        assert!(json.get(key).is_some(), "{key} missing");
    }
}

#[test]
fn unconverged_fixed_point_exits_three() {
    let o = anderson(&["furstenberg", "--grid", "128", "--max-iter", "2"]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("not converged"));
    let json: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(json["converged"], false);
}

#[test]
fn ks_writes_csv_and_norm_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("ks.csv");
    let o = anderson(&[
        "--dist",
        "uniform:0,1",
        "--out",
        out.to_str().unwrap(),
        "ks",
        "--L",
        "3",
        "--m-max",
        "2",
        "--grid-N",
        "512",
        "--grid-X",
        "4",
        "--e-points",
        "8",
        "--realizations",
        "200",
        "--norm-grid-N",
        "256",
        "--norm-grid-X",
        "4",
    ]);
    // coarse grids leave the certificate unconverged; both files are still written
    assert!(matches!(o.status.code(), Some(0) | Some(3)), "{}", stderr(&o));
    let csv = std::fs::read_to_string(&out).unwrap();
    assert_eq!(csv.lines().nth(1).unwrap(), "m,rho_operator,rho_mc,mc_stderr,budget");
    assert_eq!(csv.lines().count(), 4);
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.with_extension("json")).unwrap()).unwrap();
    assert_eq!(json["rows"].as_array().unwrap().len(), 8);
    assert!(json["delta"].as_f64().unwrap() > 0.0);
}

#[test]
fn ks_rejects_atomic_laws() {
    let o = anderson(&["--dist", "bernoulli:0,1", "ks", "--grid-N", "256", "--grid-X", "4"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("distribution"));
}

#[test]
fn quick_check_suite_is_green() {
    let o = anderson(&["check", "--quick"]);
    assert!(o.status.success(), "{}{}", stdout(&o), stderr(&o));
    assert_eq!(stdout(&o).lines().count(), 2 + 7);
}

#[test]
fn spectral_average_reports_both_vectors() {
    let o = anderson(&["spectral-avg", "--size", "11", "--z", "0.3,0.7"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let json: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    let reports = json["reports"].as_array().unwrap();
    assert_eq!(reports.len(), 2);
    for r in reports {
        assert!(r["defect"].as_f64().unwrap() < 1e-6);
        assert!((r["integral_im"].as_f64().unwrap() - 2.0 * std::f64::consts::PI).abs() < 1e-6);
    }
    let o = anderson(&["spectral-avg", "--size", "10"]);
    assert_eq!(o.status.code(), Some(2));
}

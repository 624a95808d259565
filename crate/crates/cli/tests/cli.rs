use std::path::Path;
use std::process::{Command, Output};

fn plmtest(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_plmtest"))
        .args(args)
        .env("RUST_LOG", "error")
        .output()
        .expect("binary runs")
}

fn write(path: &Path, text: &str) {
    std::fs::write(path, text).unwrap();
}

#[test]
fn selftest_passes() {
    let out = plmtest(&["selftest"]);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "{stdout}");
    assert!(stdout.lines().all(|l| l.starts_with("PASS")));
}

#[test]
fn simulate_writes_outputs_and_cli_overrides_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    write(
        &cfg,
        r#"{
            "grid": {"n_total": [60], "p": [20], "rho": [0.5], "model": ["M1"]},
            "scenarios": [{"kind": "S1"}, {"kind": "S2", "sparsity": [2]}],
            "gamma": {"s2": 4, "c2": 0.5},
            "nuisance": {"method": "lasso", "folds": 5, "n_lambda": 30},
            "tests": ["tilde", "pe_hard"],
            "replicates": 50,
            "master_seed": 1,
            "record_timing": false
        }"#,
    );
    let out_dir = dir.path().join("out");
    let out = plmtest(&[
        "simulate", "--config", cfg.to_str().unwrap(), "--out", out_dir.to_str().unwrap(),
        "--workers", "1", "--seed", "5", "--replicates", "3",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(out_dir.join("results.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(
        lines.next().unwrap(),
        "model,N,p,rho,scenario,s1,c1,estimator,test,alpha,replicates,rejections,err,mc_stderr,mean_stat,wall_ms,retries"
    );
    assert_eq!(lines.count(), 4);
    let resolved = std::fs::read_to_string(out_dir.join("config.json")).unwrap();
    assert!(resolved.contains("\"master_seed\": 5") && resolved.contains("\"replicates\": 3"));
    let report = std::fs::read_to_string(out_dir.join("report.txt")).unwrap();
    assert!(report.contains("Size") && report.contains("Power (Sparse)"));
}

#[test]
fn config_errors_exit_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    write(&cfg, r#"{"tests": []}"#);
    let out = plmtest(&["simulate", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    write(&cfg, r#"{"replicatez": 3}"#);
    let out = plmtest(&["simulate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn test_subcommand_reads_csv() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data.csv");
    let mut text = String::from("resp,a,b,c,d,e,f\n");
    for i in 0..60 {
        let v: Vec<f64> = (0..6).map(|j| (((i * 7 + j * 13) % 17) as f64 - 8.0) / 4.0 + 0.01 * (i * j) as f64).collect();
        let y = 2.0 * v[0] + v[3] + ((i * 5 % 11) as f64 - 5.0) / 10.0;
        text.push_str(&format!("{y},{},{},{},{},{},{}\n", v[0], v[1], v[2], v[3], v[4], v[5]));
    }
    write(&data, &text);
    let idx = dir.path().join("x.txt");
    write(&idx, "1 2 3\n");
    let out = plmtest(&[
        "test", "--data", data.to_str().unwrap(), "--response", "resp", "--x-index", idx.to_str().unwrap(),
        "--method", "lasso", "--splits", "3", "--alpha", "0.05",
    ]);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "{stdout} {}", String::from_utf8_lossy(&out.stderr));
    assert!(stdout.contains("H0:") && stdout.contains("H0':"));

    write(&idx, "9\n");
    let out = plmtest(&["test", "--data", data.to_str().unwrap(), "--response", "resp", "--x-index", idx.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let out = plmtest(&[
        "test", "--data", data.to_str().unwrap(), "--response", "resp", "--x-index", idx.to_str().unwrap(),
        "--method", "svm",
    ]);
    assert_eq!(out.status.code(), Some(1));
}

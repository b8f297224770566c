use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_deconwave"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn path(dir: &Path, name: &str) -> String {
    dir.join(name).to_string_lossy().into_owned()
}

#[test]
fn rates_prints_exponent() {
    let o = run(&["rates", "--s", "2", "--p", "2", "--delta", "2", "--d", "0"]);
    assert!(o.status.success());
    assert!(stdout(&o).starts_with("0.4444"), "{}", stdout(&o));
    let o = run(&["rates", "--s", "2", "--p", "2", "--delta", "2", "--d", "1"]);
    assert!(stdout(&o).starts_with("0.3636"));
    let o = run(&["rates", "--s", "5", "--p", "1.5", "--delta", "2", "--d", "0"]);
    assert!(stdout(&o).contains("log_factor=true"));
}

#[test]
fn zero_noise_round_trip_is_exact() {
    let dir = tempfile::tempdir().unwrap();
    let (obs, kernels, est) = (path(dir.path(), "obs.csv"), path(dir.path(), "k.csv"), path(dir.path(), "est.csv"));
    let o = run(&[
        "simulate", "--function", "Wave", "--n", "3", "--epsilon", "0", "--grid", "512", "--kernel",
        r#"{"kind":"index","scale":0.4}"#, "--out", &obs, "--kernels-out", &kernels,
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let o = run(&[
        "estimate", "--obs", &obs, "--kernels", &kernels, "--grid", "512", "--truth", "Wave", "--out", &est,
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("psnr,exact"), "{}", stdout(&o));
    let signal = std::fs::read_to_string(&est).unwrap();
    assert!(signal.starts_with("t,value\n"));
    assert_eq!(signal.lines().count(), 513);
}

#[test]
fn noisy_estimate_reports_decibels() {
    let dir = tempfile::tempdir().unwrap();
    let (obs, kernels, coeffs) = (path(dir.path(), "obs.csv"), path(dir.path(), "k.csv"), path(dir.path(), "c.csv"));
    let o = run(&[
        "simulate", "--n", "5", "--bsnr", "30", "--grid", "1024", "--seed", "3", "--out", &obs, "--kernels-out",
        &kernels,
    ]);
    assert!(o.status.success());
    let o = run(&[
        "estimate", "--obs", &obs, "--kernels", &kernels, "--grid", "1024", "--truth", "Wave", "--threshold-scale",
        "variance", "--level-scaling", "noise_adjusted", "--coeffs-out", &coeffs, "--out",
        &path(dir.path(), "e.csv"),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let line = stdout(&o).lines().find(|l| l.starts_with("psnr,")).unwrap().to_string();
    let db: f64 = line["psnr,".len()..].parse().unwrap();
    assert!(db > 20.0, "{line}");
    let c = std::fs::read_to_string(&coeffs).unwrap();
    assert!(c.starts_with("kind,j,k,raw_re,raw_im,re,im,block,kept"));
}

#[test]
fn exit_codes_distinguish_failures() {
    // usage
    assert_eq!(run(&["bench", "--config", "x.json"]).status.code(), Some(2));
    assert_eq!(run(&["rates", "--s", "2", "--p", "zero"]).status.code(), Some(2));
    // numeric: s must exceed 1/p
    assert_eq!(run(&["rates", "--s", "0.5", "--p", "1"]).status.code(), Some(3));
    // io / config
    assert_eq!(run(&["bench", "--config", "/nonexistent/cfg.json", "--seed", "1"]).status.code(), Some(4));
    let dir = tempfile::tempdir().unwrap();
    let cfg = path(dir.path(), "bad.json");
    std::fs::write(&cfg, r#"{"n": [2], "bsnr_db": [20], "colour": "blue"}"#).unwrap();
    let o = run(&["bench", "--config", &cfg, "--seed", "1"]);
    assert_eq!(o.status.code(), Some(4));
    assert!(String::from_utf8_lossy(&o.stderr).contains("colour"));
}

#[test]
fn bench_writes_tables_and_plot_data() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = path(dir.path(), "cfg.json");
    std::fs::write(
        &cfg,
        r#"{"functions": ["Wave"], "methods": ["BlockJS", "TermH"], "n": [2, 4], "bsnr_db": [30, 20],
            "grid": 256, "replications": 2}"#,
    )
    .unwrap();
    let out = dir.path().join("out");
    let o = run(&["bench", "--config", &cfg, "--seed", "5", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    for f in [
        "results.csv",
        "table_d0_bsnr30.csv",
        "table_d0_bsnr20.csv",
        "plot_psnr_vs_bsnr.csv",
        "plot_psnr_vs_n.csv",
        "metadata.json",
    ] {
        assert!(out.join(f).exists(), "missing {f}");
    }
    let table = std::fs::read_to_string(out.join("table_d0_bsnr30.csv")).unwrap();
    assert_eq!(table.lines().next().unwrap(), "function,method,n=2,n=4");
    assert_eq!(table.lines().count(), 3);
}

#[test]
fn selftest_passes() {
    let o = run(&["selftest"]);
    assert!(o.status.success(), "{}", stdout(&o));
    assert_eq!(stdout(&o).lines().filter(|l| l.starts_with("PASS")).count(), 5);
}

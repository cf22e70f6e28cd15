use std::process::{Command, Output};

use cvqkd_cli::commands::{simulate_report, keyrate_reports};
use cvqkd_cli::table::Table;

fn cvqkd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cvqkd")).args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(code(&cvqkd(&[])), 2);
    assert_eq!(code(&cvqkd(&["teleport"])), 2);
    assert_eq!(code(&cvqkd(&["wigner", "--colour", "red"])), 2);
    assert_eq!(code(&cvqkd(&["--help"])), 0);
}

#[test]
fn invalid_values_exit_2_and_name_the_field() {
    for (args, field) in [
        (vec!["wigner", "--family", "squeezed"], "family"),
        (vec!["keyrate-sweep", "--t2", "2"], "t2"),
        (vec!["keyrate-sweep", "--alpha", "1:0:0.1"], "alpha"),
        (vec!["simulate", "--format", "xml"], "format"),
        (vec!["intercept", "--delta-target", "0.9"], "delta-target"),
    ] {
        let o = cvqkd(&args);
        assert_eq!(code(&o), 2, "{args:?}");
        let err = String::from_utf8_lossy(&o.stderr);
        assert!(err.contains(&format!("`{field}`")), "{args:?}: {err}");
    }
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    let out = dir.path().join("w.csv");
    std::fs::write(
        &cfg,
        format!("# reflected state\nfamily = pascs\nalpha = -0.55\nnodes = 11\nout = {}\n", out.display()),
    )
    .unwrap();
    let o = cvqkd(&["wigner", "--config", cfg.to_str().unwrap(), "--nodes", "5"]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    assert!(o.stdout.is_empty());
    let t = Table::parse(&std::fs::read_to_string(&out).unwrap()).unwrap();
    assert_eq!(t.rows.len(), 25);
    assert_eq!(t.meta["alpha"], "-0.55");
    assert_eq!(t.meta["nodes"], "5");

    std::fs::write(&cfg, "alpha = 1\nwavelength = 1.22\n").unwrap();
    let o = cvqkd(&["wigner", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("wavelength"));
}

#[test]
fn missing_config_file_is_an_io_error() {
    let o = cvqkd(&["wigner", "--config", "/nonexistent/run.cfg"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn json_report_round_trips_through_a_file() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("sim.json");
    let o = cvqkd(&[
        "simulate", "--pulses", "20000", "--seed", "17", "--alpha", "1", "--beta-c", "0.5", "--format", "json",
        "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 0);
    let text = std::fs::read_to_string(&out).unwrap();
    let t = Table::parse(&text).unwrap();
    let (pc, r) = simulate_report(&t).unwrap();
    assert_eq!((pc.rng_seed, r.n_sent), (17, 20000));
    assert!(r.n_errors <= r.n_accepted && r.n_accepted <= r.n_sifted);
    assert_eq!(t.render(cvqkd_cli::table::Format::Json), text);
}

#[test]
fn sweep_writes_every_point_and_the_maximum() {
    let o = cvqkd(&["keyrate-sweep", "--family", "coherent", "--alpha", "0.8:0.9:0.05", "--beta-c", "0.35:0.45:0.05"]);
    assert_eq!(code(&o), 0);
    let text = String::from_utf8(o.stdout).unwrap();
    assert!(text.starts_with("# schema=cvqkd.keyrate-sweep/1\n"));
    let t = Table::parse(&text).unwrap();
    let reports = keyrate_reports(&t).unwrap();
    assert_eq!(reports.len(), 9);
    let best = reports.iter().map(|r| r.s_ab).fold(f64::MIN, f64::max);
    assert_eq!(t.summary["best_s_ab"].parse::<f64>().unwrap(), best);
    assert_eq!(t.summary["best_alpha"], "0.85");
    assert_eq!(t.summary["audit"], "ok");
}

#[test]
fn reruns_are_byte_identical() {
    let args = ["simulate", "--pulses", "50000", "--seed", "3", "--t2", "0.6", "--alpha", "0.7"];
    let a = cvqkd(&args);
    let b = cvqkd(&args);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
    let c = cvqkd(&["simulate", "--pulses", "50000", "--seed", "4", "--t2", "0.6", "--alpha", "0.7"]);
    assert_ne!(a.stdout, c.stdout);
}

use std::path::Path;
use std::process::{Command, Output};

use ptlab_core::lab::parse_report_csv;
use ptlab_core::CSV_HEADER;

fn ptlab(args: &[&str], cfg: Option<&Path>) -> Output {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_ptlab"));
    cmd.args(args);
    if let Some(p) = cfg {
        cmd.arg("--config").arg(p);
    }
    cmd.output().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

const SMALL: &str = "L = 3.141592653589793\nN = 32\nradii = [0.5, 0.25]\n";

#[test]
fn poisson_sweep_writes_all_files() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "p.toml", &format!("problem = \"poisson\"\n{SMALL}"));
    let out = dir.path().join("out");
    let res = ptlab(&["poisson-sweep", "--out", out.to_str().unwrap()], Some(&cfg));
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));
    let csv = std::fs::read_to_string(out.join("report.csv")).unwrap();
    assert!(csv.starts_with(&format!("{CSV_HEADER}\n")));
    assert!(!csv.contains('\r'));
    let rows = parse_report_csv(&csv).unwrap();
    assert_eq!(rows.len(), 2);
    assert!(rows[0].r > rows[1].r);
    let echo = std::fs::read_to_string(out.join("config.echo.toml")).unwrap();
    assert!(echo.contains("[diagnostics]"));
    let reparsed: toml::Table = toml::from_str(&echo).unwrap();
    assert_eq!(reparsed["problem"].as_str(), Some("poisson"));
    assert!(std::fs::read_to_string(out.join("plot.gp")).unwrap().contains("logscale"));
}

#[test]
fn stokes_and_nse_runs_succeed() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "s.toml", &format!("problem = \"stokes\"\nforcing = \"constant\"\n{SMALL}"));
    let out = dir.path().join("s");
    let res = ptlab(&["stokes-sweep", "--out", out.to_str().unwrap()], Some(&cfg));
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));
    let rows = parse_report_csv(&std::fs::read_to_string(out.join("report.csv")).unwrap()).unwrap();
    assert!(rows.iter().all(|r| r.e_l2.is_none()));

    let cfg = write(
        dir.path(),
        "n.toml",
        &format!("problem = \"nse\"\n{SMALL}[nse]\nT = 0.05\ndt = 0.01\n"),
    );
    let out = dir.path().join("n");
    let res = ptlab(&["nse-convergence", "--out", out.to_str().unwrap()], Some(&cfg));
    assert_eq!(res.status.code(), Some(0), "{}", String::from_utf8_lossy(&res.stderr));
    let rows = parse_report_csv(&std::fs::read_to_string(out.join("report.csv")).unwrap()).unwrap();
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[2].r, 0.0);
    assert!(rows[2].e_l2.unwrap() < 1e-8);
}

#[test]
fn nse_with_empty_radii_reports_reference_only() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(
        dir.path(),
        "n.toml",
        "problem = \"nse\"\nL = 3.141592653589793\nN = 32\nradii = []\n[nse]\nT = 0.05\ndt = 0.01\n",
    );
    let out = dir.path().join("n");
    let res = ptlab(&["nse-convergence", "--out", out.to_str().unwrap()], Some(&cfg));
    assert_eq!(res.status.code(), Some(0));
    let rows = parse_report_csv(&std::fs::read_to_string(out.join("report.csv")).unwrap()).unwrap();
    assert_eq!(rows.len(), 1);
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cases = [
        format!("problem = \"poisson\"\n{SMALL}extra = 1\n"),
        "problem = \"poisson\"\nL = 3.0\nN = 32\nradii = [0.1, 0.2]\n".to_string(),
        "problem = \"poisson\"\nL = 3.0\nN = 32\nradii = [2.0]\n".to_string(),
        "not toml at all [".to_string(),
        format!("problem = \"stokes\"\n{SMALL}"),
    ];
    for (i, text) in cases.iter().enumerate() {
        let cfg = write(dir.path(), &format!("c{i}.toml"), text);
        let res = ptlab(&["poisson-sweep"], Some(&cfg));
        assert_eq!(res.status.code(), Some(2), "case {i}: {}", String::from_utf8_lossy(&res.stderr));
    }
    let res = ptlab(&["poisson-sweep"], Some(&dir.path().join("missing.toml")));
    assert_eq!(res.status.code(), Some(2));
}

#[test]
fn solver_stall_exits_1() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "p.toml", &format!("problem = \"poisson\"\n{SMALL}"));
    let res = ptlab(&["poisson-sweep", "--cg-max-iter", "1", "--out", dir.path().join("o").to_str().unwrap()], Some(&cfg));
    assert_eq!(res.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&res.stderr).contains("r = "));
}

#[test]
fn oracles_table_prints() {
    let res = ptlab(&["oracles"], None);
    assert_eq!(res.status.code(), Some(0));
    let text = String::from_utf8(res.stdout).unwrap();
    assert!(text.contains("tail integral"));
    assert!(text.contains("annulus"));
}

use std::path::Path;
use std::process::{Command, Output};

use conewalk::oracle::ballot_survival;

const HALF_LINE: &str = r#"
seed = 11
x0 = [1.0]
paths = 20000

[grid]
n_from = 0
n_to = 6

[cone]
variant = "half_line"

[model]
variant = "iid_lattice"
dim = 1
"#;

fn conewalk(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_conewalk"))
        .args(args)
        .env_remove("CONEWALK_OUT")
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, name: &str, text: &str) -> String {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path.to_str().unwrap().to_string()
}

fn read(dir: &Path, name: &str) -> String {
    std::fs::read_to_string(dir.join(name)).unwrap()
}

#[test]
fn survival_writes_two_reproducible_files() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.toml", HALF_LINE);
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    let c = tmp.path().join("c");
    for (dir, threads) in [(&a, "1"), (&b, "1"), (&c, "3")] {
        let out = conewalk(&["survival", "--config", &cfg, "--out", dir.to_str().unwrap(), "--threads", threads]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let mut files: Vec<_> = std::fs::read_dir(&a).unwrap().map(|e| e.unwrap().file_name()).collect();
    files.sort();
    assert_eq!(files, ["manifest-survival.json", "survival.csv"]);
    for name in ["survival.csv", "manifest-survival.json"] {
        assert_eq!(read(&a, name), read(&b, name));
        assert_eq!(read(&a, name), read(&c, name));
    }
    let csv = read(&a, "survival.csv");
    assert!(csv.starts_with("# config: {"));
    assert!(csv.contains("\"seed\":11"));
    assert!(!csv.contains('\r'));
}

#[test]
fn manifest_rerun_reproduces_outputs() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.toml", HALF_LINE);
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    assert_eq!(conewalk(&["survival", "--config", &cfg, "--out", a.to_str().unwrap()]).status.code(), Some(0));
    let manifest = a.join("manifest-survival.json");
    let out = conewalk(&["survival", "--config", manifest.to_str().unwrap(), "--out", b.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(read(&a, "survival.csv"), read(&b, "survival.csv"));
    assert_eq!(read(&a, "manifest-survival.json"), read(&b, "manifest-survival.json"));
}

#[test]
fn output_dir_from_environment() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.toml", HALF_LINE);
    let dir = tmp.path().join("env-out");
    let out = Command::new(env!("CARGO_BIN_EXE_conewalk"))
        .args(["survival", "--config", &cfg])
        .env("CONEWALK_OUT", &dir)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(dir.join("survival.csv").exists());
}

#[test]
fn boundary_start_is_a_config_error() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.toml", &HALF_LINE.replace("x0 = [1.0]", "x0 = [0.0]"));
    let out = conewalk(&["survival", "--config", &cfg, "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("x0 not interior"), "{err}");
    assert!(err.contains("\"error\":\"InvalidConfig\""), "{err}");
}

#[test]
fn missing_seed_and_missing_config_are_usage_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.toml", &HALF_LINE.replace("seed = 11", ""));
    assert_eq!(conewalk(&["survival", "--config", &cfg]).status.code(), Some(2));
    assert_eq!(conewalk(&["survival"]).status.code(), Some(2));
    assert_eq!(conewalk(&["no-such-command"]).status.code(), Some(2));
}

#[test]
fn unknown_check_exits_two() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.toml", HALF_LINE);
    let out = conewalk(&["check", "bogus", "--config", &cfg, "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("UnknownCheck"));
}

#[test]
fn harmonicity_check_passes_on_quadrant() {
    let tmp = tempfile::tempdir().unwrap();
    let text = HALF_LINE
        .replace("x0 = [1.0]", "x0 = [3.0, 4.0]")
        .replace("variant = \"half_line\"", "variant = \"orthant\"\nd = 2")
        .replace("dim = 1", "dim = 2");
    let cfg = write_config(tmp.path(), "c.toml", &text);
    let out = conewalk(&["check", "harmonicity", "--config", &cfg, "--out", tmp.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value = serde_json::from_str(&read(tmp.path(), "report.json")).unwrap();
    assert_eq!(report["verdicts"][0]["name"], "harmonicity");
    assert_eq!(report["verdicts"][0]["pass"], true);
    assert!(tmp.path().join("check_harmonicity.csv").exists());
}

#[test]
fn tail_fit_check_on_half_line() {
    let tmp = tempfile::tempdir().unwrap();
    let text = HALF_LINE
        .replace("paths = 20000", "paths = 1000000")
        .replace("n_from = 0", "n_from = 8")
        .replace("n_to = 6", "n_to = 14");
    let cfg = write_config(tmp.path(), "c.toml", &text);
    let out = conewalk(&["check", "tail-fit", "--config", &cfg, "--out", tmp.path().to_str().unwrap(), "--threads", "0"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
    let report: serde_json::Value = serde_json::from_str(&read(tmp.path(), "report.json")).unwrap();
    let slope = report["verdicts"][0]["statistic"]["slope"].as_f64().unwrap();
    assert!((slope + 0.5).abs() <= 0.02, "{slope}");
}

#[test]
fn oracle_matches_ballot_and_compares_with_mc() {
    let tmp = tempfile::tempdir().unwrap();
    let text = HALF_LINE.replace("n_to = 6", "n_to = 4");
    let cfg = write_config(tmp.path(), "c.toml", &text);
    let dir = tmp.path().to_str().unwrap();
    assert_eq!(conewalk(&["survival", "--config", &cfg, "--out", dir]).status.code(), Some(0));
    let out = conewalk(&["oracle", "--config", &cfg, "--out", dir]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let oracle = read(tmp.path(), "oracle.csv");
    let rows: Vec<Vec<f64>> = oracle
        .lines()
        .skip(2)
        .map(|l| l.split(',').map(|c| c.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 21);
    for row in rows.iter().filter(|r| r[0] as u64 % 2 == 0) {
        assert!((row[1] - ballot_survival(row[0] as u64 / 2)).abs() <= 1e-12);
    }
    let summary: serde_json::Value = serde_json::from_str(&read(tmp.path(), "oracle_summary.json")).unwrap();
    assert_eq!(summary["comparison"]["rows"], 5);
    assert!(summary["comparison"]["fraction"].as_f64().unwrap() >= 0.99);
    assert!(read(tmp.path(), "comparison.csv").contains("within_3sigma"));
}

#[test]
fn oracle_budget_and_model_errors() {
    let tmp = tempfile::tempdir().unwrap();
    let dir = tmp.path().to_str().unwrap();
    let big = HALF_LINE
        .replace("x0 = [1.0]", "x0 = [1.0, 1.0, 1.0]")
        .replace("variant = \"half_line\"", "variant = \"orthant\"\nd = 3")
        .replace("dim = 1", "dim = 3")
        + "\n[oracle]\nn_max = 1000\n";
    let cfg = write_config(tmp.path(), "big.toml", &big);
    let out = conewalk(&["oracle", "--config", &cfg, "--out", dir]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("BudgetExceeded"));

    let gauss = HALF_LINE.replace("iid_lattice", "iid_gaussian");
    let cfg = write_config(tmp.path(), "gauss.toml", &gauss);
    assert_eq!(conewalk(&["oracle", "--config", &cfg, "--out", dir]).status.code(), Some(2));
}

#[test]
fn estimate_v_and_cond_limit_commands() {
    let tmp = tempfile::tempdir().unwrap();
    let text = HALF_LINE.replace("x0 = [1.0]", "x0 = [5.0]") + "\n[checks]\nn = 256\nsurvivors = 10000\n";
    let cfg = write_config(tmp.path(), "c.toml", &text);
    let dir = tmp.path().to_str().unwrap();
    assert_eq!(conewalk(&["estimate-v", "--config", &cfg, "--out", dir]).status.code(), Some(0));
    assert!(read(tmp.path(), "v_estimate.csv").lines().nth(1) == Some("n,v_hat,se"));
    assert_eq!(conewalk(&["cond-limit", "--config", &cfg, "--out", dir]).status.code(), Some(0));
    let endpoints = read(tmp.path(), "endpoints.csv");
    assert_eq!(endpoints.lines().count(), 2 + 10_000);
    assert_eq!(endpoints.lines().nth(1), Some("path_id,z1"));
}

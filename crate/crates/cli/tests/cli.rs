use std::path::Path;
use std::process::{Command, Output};

fn winmart(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_winmart"))
        .args(args)
        .env_remove("WINMART_THREADS")
        .output()
        .unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// Value of `key = value` in the summary.
fn summary_value(o: &Output, key: &str) -> f64 {
    let text = stdout(o);
    let line = text
        .lines()
        .find(|l| l.starts_with(&format!("{key} = ")))
        .unwrap_or_else(|| panic!("{key} missing in {text}"));
    line.split(" = ")
        .nth(1)
        .unwrap()
        .split_whitespace()
        .next()
        .unwrap()
        .parse()
        .unwrap()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn value_prints_the_closed_form() {
    let o = winmart(&["value", "--t", "0", "--x", "0.5"]);
    assert!(o.status.success());
    assert!((summary_value(&o, "value") + 0.0767132).abs() < 5e-8);
    let o = winmart(&["value", "--t", "0.5", "--x", "0.5"]);
    assert!((summary_value(&o, "value") - 0.0099302).abs() < 5e-8);
}

#[test]
fn trinomial_prints_entropy_limit_and_gap() {
    let o = winmart(&["trinomial", "--sigma", "2", "--sigma-bar", "10"]);
    assert!(o.status.success());
    let oracle = 4.0 * 4f64.ln() + 96.0 * (96f64 / 99.0).ln();
    assert!((summary_value(&o, "scaled_entropy") - oracle).abs() < 1e-12);
    assert!((summary_value(&o, "scaled_entropy") - 2.5910982).abs() < 1e-6);
    assert!((summary_value(&o, "limit") - 2.5451774).abs() < 1e-6);
    assert!((summary_value(&o, "gap") - 0.0459208).abs() < 1e-6);
}

#[test]
fn simulate_is_byte_identical_across_runs_and_threads() {
    let dir = tempfile::tempdir().unwrap();
    for fmt in ["csv", "bin", "json"] {
        let a = dir.path().join(format!("a.{fmt}"));
        let b = dir.path().join(format!("b.{fmt}"));
        let args = [
            "simulate", "--x0", "0.5", "--paths", "1000", "--seed", "7", "--format", fmt,
        ];
        let oa = winmart(&[&args[..], &["--out", path_str(&a)]].concat());
        let ob = winmart(&[&args[..], &["--out", path_str(&b), "--threads", "1"]].concat());
        assert!(oa.status.success() && ob.status.success());
        assert_eq!(
            std::fs::read(&a).unwrap(),
            std::fs::read(&b).unwrap(),
            "{fmt}"
        );
    }
    let bin = std::fs::File::open(dir.path().join("a.bin")).unwrap();
    let ens = winmart::wf::io::read_binary(std::io::BufReader::new(bin)).unwrap();
    assert_eq!(ens.paths.len(), 1000);
    assert_eq!(ens.master_seed, 7);
    let csv = std::fs::File::open(dir.path().join("a.csv")).unwrap();
    let from_csv = winmart::wf::io::read_csv(std::io::BufReader::new(csv)).unwrap();
    assert_eq!(from_csv.paths, ens.paths);
}

#[test]
fn manifest_records_the_resolved_run() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("s.csv");
    let cfg = dir.path().join("run.cfg");
    std::fs::write(&cfg, "# sweep\nn_x = 32\neps = 0.2\n").unwrap();
    let o = winmart(&[
        "hjb-residual",
        "--config",
        path_str(&cfg),
        "--eps",
        "0.1",
        "--out",
        path_str(&out),
    ]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let manifest: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(dir.path().join("s.csv.manifest.json")).unwrap(),
    )
    .unwrap();
    assert_eq!(manifest["command"], "hjb-residual");
    assert_eq!(manifest["params"]["n-x"], "32");
    assert_eq!(manifest["params"]["eps"], "0.1");
    assert_eq!(manifest["params"]["n-t"], "64");
    assert!(manifest["wall_time_s"].as_f64().unwrap() >= 0.0);
    let csv = std::fs::read_to_string(&out).unwrap();
    assert_eq!(csv.lines().next().unwrap(), "t,x,residual");
    assert_eq!(csv.lines().count(), 1 + 63 * 31);
}

#[test]
fn json_mirrors_csv_fields() {
    let dir = tempfile::tempdir().unwrap();
    let (c, j) = (dir.path().join("t.csv"), dir.path().join("t.json"));
    assert!(winmart(&["trinomial", "--out", path_str(&c)])
        .status
        .success());
    assert!(
        winmart(&["trinomial", "--out", path_str(&j), "--format", "json"])
            .status
            .success()
    );
    let csv = std::fs::read_to_string(&c).unwrap();
    let json: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&j).unwrap()).unwrap();
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    for (h, v) in header.iter().zip(row) {
        assert_eq!(
            json[0][h].as_f64().unwrap(),
            v.parse::<f64>().unwrap(),
            "{h}"
        );
    }
}

#[test]
fn exit_codes() {
    assert_eq!(winmart(&["value", "--x", "1.5"]).status.code(), Some(2));
    assert_eq!(winmart(&["value"]).status.code(), Some(2));
    assert_eq!(winmart(&["no-such-command"]).status.code(), Some(2));
    assert_eq!(
        winmart(&["value", "--x", "0.5", "--format", "bin"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        winmart(&["simulate", "--paths", "many"]).status.code(),
        Some(2)
    );
    assert_eq!(
        winmart(&["value", "--x", "0.5", "--threads", "0"])
            .status
            .code(),
        Some(2)
    );
    // Nothing survives to t = 60: a runtime failure, not bad input.
    let o = winmart(&["density-vs-mc", "--t", "60", "--dt", "0.1", "--paths", "20"]);
    assert_eq!(
        o.status.code(),
        Some(3),
        "{}",
        String::from_utf8_lossy(&o.stderr)
    );
    assert_eq!(winmart(&["--help"]).status.code(), Some(0));
}

#[test]
fn every_subcommand_has_help() {
    for cmd in [
        "value",
        "sigma-star",
        "hjb-residual",
        "stationary-solve",
        "dp-solve",
        "dp-refine",
        "simulate",
        "entropy",
        "p-divergence",
        "p-derivative",
        "sigma-martingale",
        "moment",
        "density",
        "density-vs-mc",
        "trinomial",
        "counterexample",
        "reciprocity",
        "md-entropy",
        "md-search",
    ] {
        let o = winmart(&[cmd, "--help"]);
        assert!(o.status.success(), "{cmd}");
    }
}

#[test]
fn small_runs_of_the_monte_carlo_commands() {
    let o = winmart(&["entropy", "--integrand", "log-moment", "--paths", "500"]);
    assert!(o.status.success());
    assert!((summary_value(&o, "log-moment") + 0.0767).abs() < 0.02);
    let o = winmart(&["reciprocity", "--vol", "const", "--paths", "200"]);
    assert!((summary_value(&o, "lhs") - 0.1839397).abs() < 1e-6);
    assert!((summary_value(&o, "rhs") - 0.1839397).abs() < 1e-6);
    let o = winmart(&["counterexample", "--deltas", "0"]);
    assert!((summary_value(&o, "value[delta=0]") + 0.25).abs() < 1e-4);
    let o = winmart(&["md-search", "--d", "1", "--paths", "100", "--budget", "3"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("significant = false"));
}

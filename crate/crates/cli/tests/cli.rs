use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};
use std::time::{Duration, Instant};

use serde_json::{json, Value};
use tempfile::TempDir;

fn drm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_drm"))
        .args(args)
        .output()
        .unwrap()
}

fn write_config(dir: &Path, name: &str, cfg: &Value) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, serde_json::to_string_pretty(cfg).unwrap()).unwrap();
    path
}

fn run(cmd: &str, config: &Path, out: &Path, extra: &[&str]) -> Output {
    let mut args = vec![
        cmd,
        "--config",
        config.to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ];
    args.extend_from_slice(extra);
    drm(&args)
}

fn small_solve() -> Value {
    json!({
        "problem": { "name": "sin1d_robin" },
        "arch": { "depth": 2, "widths": [1, 4, 1], "activation": "tanh", "B_theta": 2.0 },
        "train": { "optimizer": { "kind": "adam", "lr": 0.01 }, "steps": 40, "log_every": 10 },
        "samples": { "N": 32, "M": 32, "seed": 3 },
        "analysis": { "n_quad": 600, "error_rule": "grid1d" },
        "seeds": [0, 1]
    })
}

fn small_sweep(eps: Value) -> Value {
    json!({
        "problem": { "name": "sin1d_robin" },
        "train": { "optimizer": { "kind": "adam", "lr": 0.01 }, "steps": 30, "log_every": 10 },
        "sweep": { "eps": eps, "mu": 0.5, "constants": { "c_weight": 1e-4 }, "max_params": 40,
                   "max_samples": 60, "gap_trials": 1, "n_fresh": 1000 },
        "analysis": { "n_quad": 600 },
        "seeds": [0, 1]
    })
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn solve_writes_its_three_artifacts() {
    let dir = TempDir::new().unwrap();
    let cfg = write_config(dir.path(), "c.json", &small_solve());
    let out = dir.path().join("out");
    let o = run("solve", &cfg, &out, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    for f in [
        "params_0.bin",
        "params_1.bin",
        "history.csv",
        "error_report.json",
        "effective_config.json",
    ] {
        assert!(out.join(f).exists(), "{f}");
    }
    let report: Value =
        serde_json::from_str(&fs::read_to_string(out.join("error_report.json")).unwrap()).unwrap();
    assert_eq!(report["runs"].as_array().unwrap().len(), 2);
    let o = run("solve", &cfg, &dir.path().join("three"), &["--seeds", "3"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(dir.path().join("three/params_2.bin").exists());
}

#[test]
fn unknown_key_is_named_and_rejected() {
    let dir = TempDir::new().unwrap();
    let mut cfg = small_solve();
    cfg["arch"]["widht"] = json!([1, 4, 1]);
    let path = write_config(dir.path(), "c.json", &cfg);
    let out = dir.path().join("out");
    let o = run("solve", &path, &out, &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("widht"), "{}", stderr(&o));
    assert!(!out.exists(), "nothing is written for invalid configs");
}

#[test]
fn unreadable_config_and_bad_usage_exit_2() {
    let dir = TempDir::new().unwrap();
    let o = run(
        "solve",
        &dir.path().join("missing.json"),
        &dir.path().join("o"),
        &[],
    );
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("missing.json"));
    assert_eq!(drm(&["solve"]).status.code(), Some(2));
    assert_eq!(drm(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(drm(&["--help"]).status.code(), Some(0));
}

#[test]
fn bounds_table_matches_json() {
    let dir = TempDir::new().unwrap();
    let cfg = json!({
        "arch": { "depth": 2, "widths": [1, 2, 1], "activation": "tanh", "B_theta": 1.0 },
        "bounds": { "N": 10000, "M": 10000 }
    });
    let path = write_config(dir.path(), "c.json", &cfg);
    let out = dir.path().join("out");
    let o = run("bounds", &path, &out, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert_eq!(
        stdout,
        fs::read_to_string(out.join("bound_table.txt")).unwrap()
    );
    let report: Value =
        serde_json::from_str(&fs::read_to_string(out.join("bound_report.json")).unwrap()).unwrap();
    let classes = report["classes"].as_array().unwrap();
    let rows: Vec<Vec<&str>> = stdout
        .lines()
        .filter(|l| l.chars().next().is_some_and(|c| c.is_ascii_digit()))
        .map(|l| l.split_whitespace().collect())
        .collect();
    assert_eq!(rows.len(), 5);
    for (row, class) in rows.iter().zip(classes) {
        for (text, key) in [(row[1], "B"), (row[2], "L")] {
            let printed: f64 = text.parse().unwrap();
            let exact = class[key]["value"].as_f64().unwrap();
            assert!(
                (printed - exact).abs() <= 1e-6 * exact,
                "{key}: {printed} vs {exact}"
            );
        }
    }
    assert_eq!(classes[2]["B"]["value"].as_f64(), Some(3.0));
}

#[test]
fn dirichlet_plan_prints_the_penalty_line() {
    let dir = TempDir::new().unwrap();
    let cfg = json!({
        "problem": { "name": "sin2d_dirichlet" },
        "plan": { "eps": 0.5, "mu": 0.5, "constants": { "c_width": 0.01, "c_coe": 2.0 } }
    });
    let path = write_config(dir.path(), "c.json", &cfg);
    let o = run("bounds", &path, &dir.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert!(
        stdout.contains("beta = C_coe * eps = 2 * 0.5 = 1"),
        "{stdout}"
    );
    assert!(dir.path().join("out/plan.json").exists());
}

#[test]
fn unequal_sample_counts_are_rejected() {
    let dir = TempDir::new().unwrap();
    let cfg = json!({
        "arch": { "depth": 2, "widths": [1, 2, 1], "activation": "tanh", "B_theta": 1.0 },
        "bounds": { "N": 100, "M": 200 }
    });
    let path = write_config(dir.path(), "c.json", &cfg);
    let o = run("bounds", &path, &dir.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("N = M"), "{}", stderr(&o));
}

#[test]
fn empty_sweep_writes_header_only() {
    let dir = TempDir::new().unwrap();
    let path = write_config(dir.path(), "c.json", &small_sweep(json!([])));
    let out = dir.path().join("out");
    let o = run("sweep", &path, &out, &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = fs::read_to_string(out.join("sweep.csv")).unwrap();
    assert_eq!(
        csv,
        "plan_id,eps,seed,depth,width_total,B_theta,N,M,beta,h1_error,h1_stderr,gap,stat_bound,status\n"
    );
}

#[test]
fn three_plan_sweep_has_one_row_per_cell() {
    let dir = TempDir::new().unwrap();
    let path = write_config(dir.path(), "c.json", &small_sweep(json!([0.4, 0.2, 0.1])));
    let out = dir.path().join("out");
    let o = run("sweep", &path, &out, &["--jobs", "2"]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let mut reader = csv::Reader::from_path(out.join("sweep.csv")).unwrap();
    let rows: Vec<csv::StringRecord> = reader.records().map(|r| r.unwrap()).collect();
    assert_eq!(rows.len(), 6);
    assert!(rows.iter().all(|r| &r[13] == "ok"));
    assert!(out.join("sweep_summary.json").exists());
    let bad = write_config(dir.path(), "bad.json", &small_sweep(json!([0.1, 0.2])));
    assert_eq!(
        run("sweep", &bad, &dir.path().join("bad"), &[])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn sweep_where_every_cell_fails_exits_3() {
    let dir = TempDir::new().unwrap();
    let mut cfg = small_sweep(json!([0.5]));
    cfg["sweep"]["constants"]["c_weight"] = json!(1e-9);
    let path = write_config(dir.path(), "c.json", &cfg);
    let out = dir.path().join("out");
    let o = run("sweep", &path, &out, &[]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    let csv = fs::read_to_string(out.join("sweep.csv")).unwrap();
    assert_eq!(csv.lines().count(), 3);
    assert!(csv.contains("failed:"));
}

#[test]
fn interrupted_sweep_leaves_complete_rows() {
    let dir = TempDir::new().unwrap();
    let mut cfg = small_sweep(json!([0.4, 0.3, 0.2, 0.1]));
    cfg["seeds"] = json!((0..20).collect::<Vec<u64>>());
    cfg["train"]["steps"] = json!(3000);
    let path = write_config(dir.path(), "c.json", &cfg);
    let out = dir.path().join("out");
    let mut child = Command::new(env!("CARGO_BIN_EXE_drm"))
        .args([
            "sweep",
            "--config",
            path.to_str().unwrap(),
            "--out",
            out.to_str().unwrap(),
        ])
        .stdout(Stdio::null())
        .stderr(Stdio::null())
        .spawn()
        .unwrap();
    let csv_path = out.join("sweep.csv");
    let start = Instant::now();
    loop {
        let lines = fs::read_to_string(&csv_path)
            .map(|s| s.lines().count())
            .unwrap_or(0);
        if lines >= 3 || start.elapsed() > Duration::from_secs(120) {
            break;
        }
        std::thread::sleep(Duration::from_millis(20));
    }
    child.kill().unwrap();
    child.wait().unwrap();
    let text = fs::read_to_string(&csv_path).unwrap();
    assert!(text.ends_with('\n'));
    let lines: Vec<&str> = text.lines().collect();
    assert!(
        lines.len() >= 3 && lines.len() < 81,
        "{} lines",
        lines.len()
    );
    for (i, line) in lines.iter().enumerate().skip(1) {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields.len(), 14, "{line}");
        assert_eq!(fields[13], "ok");
        assert_eq!(fields[0].parse::<usize>().unwrap(), (i - 1) / 20);
        assert_eq!(fields[2].parse::<usize>().unwrap(), (i - 1) % 20);
    }
}

#[test]
fn gap_and_penalty_smoke() {
    let dir = TempDir::new().unwrap();
    let gap = json!({
        "problem": { "name": "sin1d_robin" },
        "arch": { "depth": 2, "widths": [1, 4, 1], "activation": "tanh", "B_theta": 2.0 },
        "train": { "optimizer": { "kind": "adam", "lr": 0.01 }, "steps": 20 },
        "gap": { "n_list": [16, 64], "n_fresh": 1000, "trials": 1 },
        "seeds": [0, 1, 2]
    });
    let path = write_config(dir.path(), "g.json", &gap);
    let o = run("gap", &path, &dir.path().join("g"), &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let csv = fs::read_to_string(dir.path().join("g/gap.csv")).unwrap();
    assert_eq!(csv.lines().count(), 7);

    let pen = json!({
        "problem": { "name": "sin1d_robin", "boundary": { "kind": "dirichlet_penalty", "beta": 0.1 } },
        "penalty": { "betas": [0.2, 0.1, 0.05], "n_grid": 1024 }
    });
    let path = write_config(dir.path(), "p.json", &pen);
    let o = run("penalty", &path, &dir.path().join("p"), &[]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));
    let fit: Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("p/penalty_fit.json")).unwrap())
            .unwrap();
    let slope = fit["slope"].as_f64().unwrap();
    assert!((0.9..=1.1).contains(&slope), "{slope}");
    let robin =
        json!({ "problem": { "name": "gauss2d_robin" }, "penalty": { "betas": [0.2, 0.1] } });
    let path = write_config(dir.path(), "r.json", &robin);
    assert_eq!(
        run("penalty", &path, &dir.path().join("r"), &[])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn diverging_training_exits_3() {
    let dir = TempDir::new().unwrap();
    let mut cfg = small_solve();
    cfg["arch"]["B_theta"] = json!(1e300);
    cfg["train"]["optimizer"] = json!({ "kind": "sgd", "lr": 1e200 });
    cfg["train"]["project_every_step"] = json!(false);
    let path = write_config(dir.path(), "c.json", &cfg);
    let o = run("solve", &path, &dir.path().join("out"), &[]);
    assert_eq!(o.status.code(), Some(3), "{}", stderr(&o));
    assert!(stderr(&o).contains("non-finite"));
}

#[test]
fn rerun_from_echoed_config_is_identical() {
    let dir = TempDir::new().unwrap();
    let path = write_config(dir.path(), "c.json", &small_solve());
    let first = dir.path().join("first");
    assert_eq!(run("solve", &path, &first, &[]).status.code(), Some(0));
    let second = dir.path().join("second");
    let echoed = first.join("effective_config.json");
    assert_eq!(run("solve", &echoed, &second, &[]).status.code(), Some(0));
    let strip = |p: &Path| -> Vec<Vec<String>> {
        let mut r = csv::Reader::from_path(p).unwrap();
        r.records()
            .map(|rec| rec.unwrap().iter().take(9).map(str::to_string).collect())
            .collect()
    };
    assert_eq!(
        strip(&first.join("history.csv")),
        strip(&second.join("history.csv"))
    );
    assert_eq!(
        fs::read_to_string(first.join("error_report.json")).unwrap(),
        fs::read_to_string(second.join("error_report.json")).unwrap()
    );
    assert_eq!(
        fs::read(first.join("params_1.bin")).unwrap(),
        fs::read(second.join("params_1.bin")).unwrap()
    );
}

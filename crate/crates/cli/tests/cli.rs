use std::fs;
use std::path::{Path, PathBuf};
use std::process::Command;

fn models() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../models")
}

fn scratch(name: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("cbls-cli-{name}-{}", std::process::id()));
    let _ = fs::remove_dir_all(&d);
    fs::create_dir_all(&d).unwrap();
    d
}

fn cbls(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_cbls")).args(args).output().unwrap()
}

#[test]
fn knapsack_prints_picked_set() {
    let out = scratch("knapsack");
    let spec = models().join("knapsack.spec");
    let param = models().join("knapsack.param");
    let o = cbls(&[
        "solve",
        spec.to_str().unwrap(),
        param.to_str().unwrap(),
        "--seed",
        "3",
        "--eval-limit",
        "20000",
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert!(stdout.starts_with("letting picked be {"), "{stdout}");
    let saved = fs::read_to_string(out.join("knapsack-seed3.solution")).unwrap();
    assert_eq!(saved, stdout);
    let log = fs::read_to_string(out.join("knapsack-seed3.trajectory.jsonl")).unwrap();
    assert!(log.lines().count() > 0);
}

#[test]
fn malformed_param_exits_with_input_error_and_writes_nothing() {
    let out = scratch("bad");
    let param = out.join("bad.param");
    fs::write(&param, "letting capacity be be 3\n").unwrap();
    let o = cbls(&[
        "solve",
        models().join("knapsack.spec").to_str().unwrap(),
        param.to_str().unwrap(),
        "--out",
        out.join("runs").to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error:"));
    assert!(!out.join("runs").exists());
}

#[test]
fn lists_neighbourhoods_per_variable() {
    let o = cbls(&[
        "solve",
        models().join("sonet.spec").to_str().unwrap(),
        models().join("sonet.param").to_str().unwrap(),
        "--list-neighbourhoods",
    ]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8(o.stdout).unwrap();
    assert_eq!(text.lines().count(), 8);
    assert!(text.lines().any(|l| l.ends_with("\tSetLiftMultiple_SetMove")), "{text}");
}

#[test]
fn scores_two_solver_directories() {
    let root = scratch("score");
    let spec = models().join("knapsack.spec");
    let param = models().join("knapsack.param");
    for (solver, seed) in [("a", "1"), ("b", "2")] {
        let dir = root.join(solver);
        let o = cbls(&[
            "solve",
            spec.to_str().unwrap(),
            param.to_str().unwrap(),
            "--seed",
            seed,
            "--eval-limit",
            "5000",
            "--out",
            dir.to_str().unwrap(),
        ]);
        assert_eq!(o.status.code(), Some(0));
        // same run index in both directories
        fs::rename(dir.join(format!("knapsack-seed{seed}.trajectory.jsonl")), dir.join("knapsack-seed0.trajectory.jsonl"))
            .unwrap();
    }
    let a = format!("a={}", root.join("a").display());
    let b = format!("b={}", root.join("b").display());
    let o = cbls(&["score", "--direction", "max", "--time-limit", "2", &a, &b]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = String::from_utf8(o.stdout).unwrap();
    let rows: Vec<&str> = csv.lines().collect();
    assert_eq!(rows[0], "solver,time_limit,score");
    let total: f64 = rows[1..].iter().filter(|r| r.split(',').nth(1) == Some("1")).map(|r| r.split(',').nth(2).unwrap().parse::<f64>().unwrap()).sum();
    assert!((total - 1.0).abs() < 1e-9, "{csv}");
}

use std::process::{Command, Output};

const BIN: &str = env!("CARGO_BIN_EXE_resamplex");

fn run(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().unwrap()
}

fn stdout(args: &[&str]) -> String {
    let out = run(args);
    assert!(out.status.success(), "{args:?}: {}", String::from_utf8_lossy(&out.stderr));
    String::from_utf8(out.stdout).unwrap()
}

fn json(args: &[&str]) -> serde_json::Value {
    serde_json::from_str(&stdout(args)).unwrap()
}

#[test]
fn estimate_echoes_the_run_config() {
    let v = json(&[
        "estimate", "--scenario", "two-of-three", "--t", "1.0", "--r", "1000", "--seed", "7", "--format", "json",
    ]);
    let cfg = &v["config"];
    assert_eq!(cfg["command"], "estimate");
    assert_eq!(cfg["scenario"], "two-of-three");
    assert_eq!(cfg["seed"], 7);
    assert_eq!(cfg["r"], 1000);
    assert_eq!(cfg["t"], 1.0);
    let row = &v["result"][0];
    let theta = row["value"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&theta));
    assert_eq!(row["seed"], 7);
    assert!(row["std_error"].is_number());
}

#[test]
fn coverage_of_two_single_samples_is_one_half() {
    let v = json(&[
        "coverage", "--sizes", "1,1", "--functional", "min-selection", "--gamma", "0.8", "--r", "5", "--exact",
    ]);
    assert_eq!(v["result"][0]["coverage"], 0.5);
    assert_eq!(v["result"][0]["k"], 1);
}

#[test]
fn reproduce_table1_csv() {
    let text = stdout(&["reproduce", "table1"]);
    assert!(!text.contains('\r'));
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "n,classical,resampling");
    let ns: Vec<&str> = lines[1..].iter().map(|l| l.split(',').next().unwrap()).collect();
    assert_eq!(ns, ["1", "2", "3", "5", "8", "10", "13", "15"]);
    let row13: Vec<f64> = lines[7].split(',').map(|f| f.parse().unwrap()).collect();
    assert!((row13[1] - 60.0962).abs() < 0.005 && (row13[2] - 74.5192).abs() < 0.005);
}

#[test]
fn table5_direction_rows_improve() {
    let text = stdout(&["reproduce", "table5-direction"]);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 5);
    for l in &lines[1..] {
        let imp: f64 = l.rsplit(',').next().unwrap().parse().unwrap();
        assert!(imp > 0.0, "{l}");
    }
}

#[test]
fn list_has_every_scenario() {
    let text = stdout(&["list"]);
    assert_eq!(text.lines().count(), 10);
    let v = json(&["list", "--format", "json"]);
    assert_eq!(v["result"].as_array().unwrap().len(), 9);
}

#[test]
fn usage_errors_exit_2() {
    for args in [
        &["estimate", "--scenario", "sequential"][..],
        &["estimate", "--scenario", "nosuch", "--seed", "1"],
        &["reproduce", "table9"],
        &["frobnicate"],
        &["estimate", "--scenario", "sequential", "--config", "x.toml", "--seed", "1"],
        &["estimate", "--scenario", "sequential", "--t", "1", "--seed", "1"],
        &["coverage", "--sizes", "2,2", "--functional", "median", "--gamma", "0.5", "--r", "5"],
        &["coverage", "--sizes", "2,2", "--functional", "ordering", "--gamma", "1.5", "--r", "5"],
    ] {
        let out = run(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn computation_errors_exit_1() {
    for args in [
        &["optimize", "--scenario", "sequential", "--budget", "2"][..],
        &["coverage", "--sizes", "9,9,9", "--functional", "ordering", "--gamma", "0.5", "--r", "5", "--exact"],
        &["optimize", "--scenario", "hier-query", "--oracle"],
    ] {
        let out = run(args);
        assert_eq!(out.status.code(), Some(1), "{args:?}");
    }
}

#[test]
fn same_seed_same_bytes() {
    let args = ["estimate", "--scenario", "hier-query", "--seed", "42", "--format", "csv"];
    assert_eq!(stdout(&args), stdout(&args));
    let other = ["estimate", "--scenario", "hier-query", "--seed", "43", "--format", "csv"];
    assert_ne!(stdout(&args), stdout(&other));
}

#[test]
fn config_files_in_both_encodings() {
    let dir = std::env::temp_dir().join(format!("resamplex-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let toml_path = dir.join("model.toml");
    std::fs::write(
        &toml_path,
        r#"
tree = "sum(x1, x2)"
r = 200
pools = [[1.0, 2.0, 3.0], [10.0, 20.0]]
"#,
    )
    .unwrap();
    let json_path = dir.join("model.json");
    std::fs::write(&json_path, r#"{"tree": "sum(x1, x2)", "pools": [[1.0, 2.0, 3.0], [10.0, 20.0]]}"#).unwrap();

    // plug-in over observed pools needs no seed: mean 2 + mean 15
    for path in [&toml_path, &json_path] {
        let v = json(&["estimate", "--config", path.to_str().unwrap(), "--method", "plugin"]);
        assert_eq!(v["result"][0]["value"], 17.0);
    }
    let v = json(&["estimate", "--config", toml_path.to_str().unwrap(), "--seed", "1"]);
    assert_eq!(v["config"]["r"], 200);

    let out_path = dir.join("out.csv");
    stdout(&[
        "estimate", "--config", toml_path.to_str().unwrap(), "--seed", "1", "--format", "csv", "--output",
        out_path.to_str().unwrap(),
    ]);
    let written = std::fs::read_to_string(&out_path).unwrap();
    assert!(written.starts_with("t,method,value"));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn variance_and_optimize_on_finite_model() {
    let dir = std::env::temp_dir().join(format!("resamplex-var-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("m.toml");
    std::fs::write(
        &path,
        r#"
tree = "sum(x1, x2)"
sizes = [2, 2]
r = 3
laws = [
  { kind = "discrete", values = [0.0, 1.0], probs = [0.5, 0.5] },
  { kind = "discrete", values = [0.0, 2.0], probs = [0.5, 0.5] },
]
"#,
    )
    .unwrap();
    let p = path.to_str().unwrap();
    let v = json(&["variance", "--config", p]);
    let row = &v["result"][0];
    assert_eq!(row["method"], "exact");
    // σ² = 0.25 + 1; D = σ²/r + (r−1)/r · Σ σ_i²/n_i
    let want = 1.25 / 3.0 + 2.0 / 3.0 * (0.25 / 2.0 + 1.0 / 2.0);
    assert!((row["variance"].as_f64().unwrap() - want).abs() < 1e-12);

    let v = json(&["optimize", "--config", p, "--budget", "8", "--oracle"]);
    let res = &v["result"][0];
    assert_eq!(res["oracle"]["agrees"], true);
    assert!(res["optimized"]["cost"].as_u64().unwrap() <= 8);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn partial_situations() {
    for situation in ["known", "simulated"] {
        let v = json(&[
            "partial", "--scenario", "hier-query-partial", "--situation", situation, "--seed", "3", "--replicates", "2",
        ]);
        let row = &v["result"][0];
        let value = row["value"].as_f64().unwrap();
        assert!((0.0..=1.0).contains(&value));
        assert_eq!(row["closed_form"], true);
    }
    let out = run(&["partial", "--scenario", "hier-query", "--seed", "3"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn every_scenario_estimates_quickly() {
    let names = stdout(&["list"]);
    for name in names.lines().skip(1).map(|l| l.split(',').next().unwrap()) {
        let start = std::time::Instant::now();
        stdout(&["estimate", "--scenario", name, "--seed", "1"]);
        assert!(start.elapsed().as_secs_f64() < 5.0, "{name}");
    }
}

#[test]
fn threshold_grid_gives_one_row_per_t() {
    let text = stdout(&[
        "estimate", "--scenario", "block-query", "--t-grid", "0.5,1,4", "--method", "plugin", "--seed", "2", "--format",
        "csv",
    ]);
    let rows: Vec<f64> = text
        .lines()
        .skip(1)
        .map(|l| l.split(',').nth(2).unwrap().parse().unwrap())
        .collect();
    assert_eq!(rows.len(), 3);
    assert!(rows[0] >= rows[1] && rows[1] >= rows[2]);
}

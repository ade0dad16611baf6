use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_levyscale"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("failed to spawn")
}

fn data_lines(text: &str) -> Vec<&str> {
    text.lines().filter(|l| !l.starts_with('#')).collect()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Parses a CSV table (after comments and the column line) into rows.
fn table(text: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let mut lines = data_lines(text).into_iter();
    let cols = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(String::from).collect()).collect();
    (cols, rows)
}

#[test]
fn simulate_writes_lcm_rows_reproducibly() {
    let dir = TempDir::new().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for p in [&a, &b] {
        let out = run(&["simulate", "--horizon", "10", "--multiplier", "1", "--seed", "4", "--output", path_str(p)]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let text = fs::read_to_string(&a).unwrap();
    assert_eq!(data_lines(&text).len(), 2520);
    assert!(text.contains("# alpha=1.5") && text.contains("# seed=4"));
    assert_eq!(fs::read(&a).unwrap(), fs::read(&b).unwrap());
}

#[test]
fn invalid_gamma_exits_with_code_two() {
    let out = run(&["simulate", "--alpha", "1.5", "--gamma", "1.5"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("gamma"));
    let out = run(&["simulate", "--horizon", "60"]);
    assert_eq!(out.status.code(), Some(2));
    let out = run(&["simulate", "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn io_failures_exit_with_code_three() {
    let dir = TempDir::new().unwrap();
    let missing = dir.path().join("missing.csv");
    let out = run(&["scaling", "--input", path_str(&missing)]);
    assert_eq!(out.status.code(), Some(3));
    let unwritable = dir.path().join("no-dir").join("x.csv");
    let out = run(&["simulate", "--output", path_str(&unwritable)]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn malformed_input_exits_with_code_two() {
    let dir = TempDir::new().unwrap();
    let f = dir.path().join("bad.csv");
    fs::write(&f, "1.0\nnot-a-number\n").unwrap();
    let out = run(&["scaling", "--input", path_str(&f)]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn csv_round_trip_reproduces_the_grid_bit_for_bit() {
    let dir = TempDir::new().unwrap();
    let series = dir.path().join("s.csv");
    let g_file = dir.path().join("g_file.csv");
    let g_mem = dir.path().join("g_mem.csv");
    let common = ["--alpha", "1.2", "--horizon", "6", "--multiplier", "50", "--seed", "9", "--q", "0.5,1,1.2,2.5"];
    let mut args = vec!["simulate", "--output", path_str(&series)];
    args.extend(common);
    assert!(run(&args).status.success());

    let mut args = vec!["scaling", "--input", path_str(&series), "--grid", path_str(&g_file)];
    args.extend(common);
    let from_file = run(&args);
    assert!(from_file.status.success());
    let mut args = vec!["scaling", "--grid", path_str(&g_mem)];
    args.extend(common);
    let in_process = run(&args);
    assert!(in_process.status.success());

    let a = fs::read_to_string(&g_file).unwrap();
    let b = fs::read_to_string(&g_mem).unwrap();
    assert_eq!(data_lines(&a), data_lines(&b));
    assert_eq!(data_lines(&a).len(), 1 + 4 * 6);
    assert_eq!(
        data_lines(&String::from_utf8_lossy(&from_file.stdout)),
        data_lines(&String::from_utf8_lossy(&in_process.stdout))
    );
}

#[test]
fn scaling_recovers_the_piecewise_linear_exponents() {
    let out = run(&["scaling", "--alpha", "1.5", "--horizon", "10", "--multiplier", "400", "--q", "0,0.5,1,2,3", "--seed", "1"]);
    assert!(out.status.success());
    let (cols, rows) = table(&String::from_utf8_lossy(&out.stdout));
    assert_eq!(&cols[..5], ["q", "nu_hat", "intercept", "stderr", "r2"]);
    let nu: Vec<f64> = rows.iter().map(|r| r[1].parse().unwrap()).collect();
    assert_eq!(nu[0], 0.0);
    for (got, want) in nu[1..].iter().zip([1.0 / 3.0, 2.0 / 3.0, 1.0, 1.0]) {
        assert!((got - want).abs() <= 0.05, "{got} vs {want}");
    }
}

#[test]
fn gaussian_input_scales_linearly() {
    let dir = TempDir::new().unwrap();
    let series = dir.path().join("g.csv");
    let out = run(&["simulate", "--alpha", "2", "--multiplier", "100", "--seed", "2", "--output", path_str(&series)]);
    assert!(out.status.success());
    // the file header carries alpha = 2
    let out = run(&["scaling", "--input", path_str(&series), "--q", "0.5,1,2,3"]);
    assert!(out.status.success());
    let (_, rows) = table(&String::from_utf8_lossy(&out.stdout));
    for r in rows {
        let (q, nu): (f64, f64) = (r[0].parse().unwrap(), r[1].parse().unwrap());
        assert!((nu - q / 2.0).abs() <= 0.07, "q={q}: {nu}");
    }
}

#[test]
fn levels_input_is_differenced() {
    let dir = TempDir::new().unwrap();
    let f = dir.path().join("levels.csv");
    fs::write(&f, "0\n1\n-1\n1\n0\n").unwrap();
    let grid = dir.path().join("grid.csv");
    let out = run(&["scaling", "--input", path_str(&f), "--levels", "--horizon", "2", "--q", "1", "--grid", path_str(&grid)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (_, rows) = table(&fs::read_to_string(&grid).unwrap());
    let m: Vec<f64> = rows.iter().map(|r| r[2].parse().unwrap()).collect();
    assert_eq!(m, vec![1.5, 1.0]);
}

#[test]
fn short_input_is_truncated_with_a_warning() {
    let dir = TempDir::new().unwrap();
    let f = dir.path().join("s.csv");
    let body: String = (0..2525).map(|i| format!("{}\n", ((i * 7919) % 101) as f64 - 50.0)).collect();
    fs::write(&f, body).unwrap();
    let out = run(&["scaling", "--input", path_str(&f), "--q", "1,2"]);
    assert!(out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("truncated to 2520"), "{err}");
    assert!(String::from_utf8_lossy(&out.stdout).contains("# n=2520"));
}

#[test]
fn flags_override_config_file_over_defaults() {
    let dir = TempDir::new().unwrap();
    let cfg = dir.path().join("run.toml");
    fs::write(&cfg, "alpha = 0.8\nseed = 5\nhorizon = 3\n").unwrap();
    let out = run(&["simulate", "--config", path_str(&cfg), "--seed", "7"]);
    assert!(out.status.success());
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("# alpha=0.8"));
    assert!(text.contains("# seed=7"));
    assert!(text.contains("# horizon=3"));
    assert!(text.contains("# sigma=1"));
    assert_eq!(data_lines(&text).len(), 6);

    fs::write(&cfg, "alpah = 1.0\n").unwrap();
    let out = run(&["simulate", "--config", path_str(&cfg)]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn json_output_is_parseable() {
    let out = run(&["scaling", "--multiplier", "5", "--q", "0.5,1", "--format", "json"]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["rows"].as_array().unwrap().len(), 2);
    assert_eq!(v["config"]["alpha"], "1.5");
}

#[test]
fn thread_count_does_not_change_results() {
    let a = run(&["ratio", "--ladder", "1,2", "--replicas", "8", "--threads", "1"]);
    let b = run(&["ratio", "--ladder", "1,2", "--replicas", "8", "--threads", "3"]);
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn ratio_defaults_meet_their_tolerance() {
    let out = run(&["ratio"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (_, rows) = table(&String::from_utf8_lossy(&out.stdout));
    let last = rows.last().unwrap();
    let median: f64 = last[3].parse().unwrap();
    assert!((median / 2.0 - 1.0).abs() <= 0.15);
}

#[test]
fn ratio_reports_assertion_failure_with_code_one() {
    // a 1e-9 tolerance cannot be met by a Monte Carlo median
    let out = run(&["ratio", "--ladder", "1,2", "--replicas", "4", "--tolerance", "1e-9"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn limits_defaults_pass_and_control_fails() {
    let out = run(&["limits"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let (_, rows) = table(&String::from_utf8_lossy(&out.stdout));
    assert_eq!(rows.len(), 2);
    assert_eq!(rows[0][1], "power_normed");
    assert_eq!(rows[0][6], "true");
    assert_eq!(rows[1][1], "raw");
    assert_eq!(rows[1][6], "false");
}

#[test]
fn limits_rejects_orders_below_alpha() {
    let out = run(&["limits", "--q", "1", "--replicas", "10"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn extremes_sweep_has_no_violations() {
    let out = run(&["extremes"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("# scalar_failures=0"));
    let (_, rows) = table(&text);
    assert_eq!(rows.len(), 12);
    assert!(rows.iter().all(|r| r[5] == "0"));
}

#[test]
fn tails_reports_exponent_and_constant() {
    let out = run(&["tails", "--alpha", "0.7", "--multiplier", "100", "--tolerance", "0.1"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(text.contains("# hill="));
    let out = run(&["tails", "--alpha", "2"]);
    assert_eq!(out.status.code(), Some(2));
}

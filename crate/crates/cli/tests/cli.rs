use std::process::Command;

use expsamp_cli::config::ExperimentConfig;
use expsamp_core::sampling::evaluate_series;
use expsamp_core::{KernelSpec, PiecewiseSignal};

fn run(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let mut argv = vec!["expsamp"];
    argv.extend_from_slice(args);
    let code = expsamp_cli::run(argv, &mut out, &mut err);
    (
        code,
        String::from_utf8(out).unwrap(),
        String::from_utf8(err).unwrap(),
    )
}

fn rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines()
        .map(|l| l.split(',').map(String::from).collect())
        .collect()
}

fn cell(csv: &str, row: usize, col: usize) -> f64 {
    rows(csv)[row][col].parse().unwrap()
}

#[test]
fn tables_match_golden_values() {
    let (code, out, _) = run(&["table", "1"]);
    assert_eq!(code, 0);
    let r = rows(&out);
    assert_eq!(r[0], ["w", "value", "predicted_limit", "abs_diff"]);
    assert_eq!(r.len(), 7);
    assert_eq!(r[6][0], "200");
    assert!((cell(&out, 6, 1) - 2.7554).abs() <= 1e-3);
    assert_eq!(cell(&out, 6, 2), 2.75);

    let (code, out, _) = run(&["table", "2"]);
    assert_eq!(code, 0);
    for i in 1..=6 {
        assert!((cell(&out, i, 1) - 2.25).abs() <= 1e-6);
    }

    let (code, out, _) = run(&["table", "3"]);
    assert_eq!(code, 0);
    assert!((cell(&out, 2, 1) - 1.1420).abs() <= 1e-3);
}

#[test]
fn table_mismatch_lists_cells() {
    let (code, _, err) = run(&["table", "1", "--kernel", "bspline2"]);
    assert_eq!(code, 1);
    assert!(err.contains("mismatch: table 1 w=5"), "{err}");
    let (code, _, err) = run(&["table", "3", "--tol", "1e-9"]);
    assert_eq!(code, 1);
    assert_eq!(err.lines().count(), 6, "{err}");
}

#[test]
fn figures() {
    let (code, out, _) = run(&["figure", "1"]);
    assert_eq!(code, 0);
    let r = rows(&out);
    assert_eq!(r.len(), 2001);
    assert_eq!(r[200], ["1", "0"]);

    let (_, out, _) = run(&["figure", "2"]);
    let r = rows(&out);
    assert_eq!(r[0], ["t", "f", "S_5"]);
    // Direct-evaluation oracle at the grid point closest to t = 2.
    let kernel = KernelSpec::combo_kernel();
    let f = PiecewiseSignal::worked_example();
    let row = r[1..]
        .iter()
        .min_by(|a, b| {
            let da = (a[0].parse::<f64>().unwrap() - 2.0).abs();
            let db = (b[0].parse::<f64>().unwrap() - 2.0).abs();
            da.total_cmp(&db)
        })
        .unwrap();
    let t: f64 = row[0].parse().unwrap();
    assert_eq!(row[1].parse::<f64>().unwrap(), 3.0);
    let oracle = evaluate_series(&kernel, &f, 5.0, t).unwrap();
    assert!((row[2].parse::<f64>().unwrap() - oracle).abs() < 1e-11);

    let (_, out, _) = run(&["figure", "3"]);
    assert!(rows(&out).iter().all(|r| r.len() == 3));
    assert_eq!(rows(&out)[0][2], "S_10");
}

#[test]
fn kernel_check_reports() {
    let (code, out, _) = run(&["kernel-check"]);
    assert_eq!(code, 0);
    assert!(out.contains("alpha_estimate = 0.75\n"));
    assert!(out.contains("chi_at_one = 0\n"));
    assert!(out.contains("pass = true\n"));

    let (code, out, _) = run(&["kernel-check", "--kernel", "bspline2"]);
    assert_eq!(code, 0);
    assert!(out.contains("alpha_estimate = non-constant"), "{out}");

    let (_, out, _) = run(&["kernel-check", "--kernel", "jackson", "--grid", "200"]);
    let chi: f64 = out
        .lines()
        .find_map(|l| l.strip_prefix("chi_at_one = "))
        .unwrap()
        .parse()
        .unwrap();
    assert!((chi - 1.0 / (2.0 * std::f64::consts::PI)).abs() < 1e-10);
}

#[test]
fn jump_and_diverge() {
    let (code, out, _) = run(&["jump", "--t", "3.5"]);
    assert_eq!(code, 0);
    let r = rows(&out);
    assert_eq!(
        r[0],
        [
            "kernel-id",
            "signal-id",
            "w",
            "t",
            "alignment",
            "value",
            "predicted",
            "abs-error"
        ]
    );
    for row in &r[1..] {
        assert_eq!(row[5], "2.25");
        assert_eq!(row[6], "2.25");
    }

    let (code, _, err) = run(&["diverge"]);
    assert_eq!(code, 0);
    let gap: f64 = err
        .lines()
        .find_map(|l| l.strip_prefix("gap = "))
        .unwrap()
        .parse()
        .unwrap();
    assert!((gap - 0.5).abs() < 1e-3);
    let (code, _, err) = run(&["diverge", "--t", "1"]);
    assert_eq!(code, 1);
    assert!(err.contains("t = 1"));
}

#[test]
fn error_experiments() {
    let (code, out, _) = run(&["roundoff", "--xi", "0", "--w", "20"]);
    assert_eq!(code, 0);
    let r = rows(&out);
    assert_eq!(r[1][5], "roundoff");
    assert_eq!(r[1][7], "0");

    let (code, out, _) = run(&["jitter", "--rho", "0", "--w", "20", "--trials", "2"]);
    assert_eq!(code, 0);
    assert_eq!(rows(&out)[1][7], "0");

    let (code, out, _) = run(&["rate", "--w", "50,100"]);
    assert_eq!(code, 0);
    assert!(rows(&out)[1..].iter().all(|r| r[4] == "true"));
}

#[test]
fn usage_and_config_errors_exit_2() {
    assert_eq!(run(&["table", "4"]).0, 2);
    assert_eq!(run(&["nonsense"]).0, 2);
    let (code, _, err) = run(&["jump", "--kernel", "mystery"]);
    assert_eq!(code, 2);
    assert!(err.contains("unknown kernel"));

    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(
        &path,
        "[experiment]\nw = [5.0]\n\n[kernel]\nkind = \"bspline\"\norder = 99\n",
    )
    .unwrap();
    let (code, _, err) = run(&["jump", "--config", path.to_str().unwrap()]);
    assert_eq!(code, 2);
    assert!(err.contains("config line 4"), "{err}");

    let missing = dir.path().join("missing.toml");
    assert_eq!(run(&["jump", "--config", missing.to_str().unwrap()]).0, 2);
}

#[test]
fn config_round_trip_reproduces_results() {
    let dir = tempfile::tempdir().unwrap();
    let mut config = ExperimentConfig::worked_example();
    config.experiment.w = vec![5.0, 20.0, 200.0];
    config.experiment.t = vec![1.5, 5.5];
    let first = dir.path().join("first.toml");
    std::fs::write(&first, config.to_toml()).unwrap();
    let (code, a, _) = run(&["jump", "--config", first.to_str().unwrap()]);
    assert_eq!(code, 0);

    let reparsed = ExperimentConfig::parse(&std::fs::read_to_string(&first).unwrap()).unwrap();
    assert_eq!(reparsed, config);
    let second = dir.path().join("second.toml");
    std::fs::write(&second, reparsed.to_toml()).unwrap();
    let (_, b, _) = run(&["jump", "--config", second.to_str().unwrap()]);
    assert_eq!(a, b);
    // Same numbers as the built-in defaults for those cells.
    let (_, c, _) = run(&["jump", "--w", "5,20,200", "--t", "1.5,5.5"]);
    assert_eq!(
        a.replace("config", "x"),
        c.replace("combo", "x").replace("worked-example", "x")
    );
}

#[test]
fn binary_writes_out_file_and_exit_codes() {
    let exe = env!("CARGO_BIN_EXE_expsamp");
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("t2.csv");
    let status = Command::new(exe)
        .args(["table", "2", "--out", out.to_str().unwrap()])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    assert!(std::fs::read_to_string(&out)
        .unwrap()
        .starts_with("w,value,predicted_limit,abs_diff\n"));
    let status = Command::new(exe)
        .args(["table", "1", "--kernel", "bspline3"])
        .output()
        .unwrap();
    assert_eq!(status.status.code(), Some(1));
    let status = Command::new(exe).args(["figure"]).output().unwrap();
    assert_eq!(status.status.code(), Some(2));
}

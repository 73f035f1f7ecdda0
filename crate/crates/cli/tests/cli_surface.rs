//! Binary-level checks of the CLI surfaces: output shapes, exit codes,
//! config/flag precedence, and the text formats round-tripping through
//! the executable.

use std::collections::HashMap;
use std::process::Command;

fn dymax(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_dymax"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout_of(args: &[&str]) -> String {
    let out = dymax(args);
    assert!(
        out.status.success(),
        "dymax {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn parse_kv(text: &str) -> HashMap<String, String> {
    text.lines()
        .filter_map(|l| l.split_once('='))
        .map(|(k, v)| (k.to_string(), v.to_string()))
        .collect()
}

#[test]
fn bellman_eval_prints_the_known_point() {
    let kv = parse_kv(&stdout_of(&[
        "bellman", "eval", "--q", "0.5", "--f", "1", "--h", "0.8",
    ]));
    assert!((kv["z"].parse::<f64>().unwrap() - 1.25).abs() < 1e-14);
    assert!((kv["c"].parse::<f64>().unwrap() - 4.0).abs() < 1e-10);
    assert!((kv["omega"].parse::<f64>().unwrap() - 2.0).abs() < 1e-10);
    assert!((kv["B"].parse::<f64>().unwrap() - 1.6).abs() < 1e-10);
}

#[test]
fn bellman_eval_rejects_inadmissible_points() {
    let out = dymax(&["bellman", "eval", "--q", "0.5", "--f", "1", "--h", "1.5"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("0 < h <= f^q"));
}

#[test]
fn bellman_curve_starts_at_one() {
    let text = stdout_of(&[
        "bellman",
        "curve",
        "--q",
        "0.25",
        "--samples",
        "5",
        "--z-max",
        "3",
    ]);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("z,omega"));
    let first = lines.next().unwrap();
    let (z, omega) = first.split_once(',').unwrap();
    assert_eq!(z.parse::<f64>().unwrap(), 1.0);
    assert_eq!(omega.parse::<f64>().unwrap(), 1.0);
    assert_eq!(text.lines().count(), 6);
    // omega column is non-decreasing
    let omegas: Vec<f64> = text
        .lines()
        .skip(1)
        .map(|l| l.split_once(',').unwrap().1.parse().unwrap())
        .collect();
    assert!(omegas.windows(2).all(|w| w[1] >= w[0]));
}

#[test]
fn extremal_sweep_emits_the_expected_columns() {
    let text = stdout_of(&[
        "extremal",
        "sweep",
        "--q",
        "0.5",
        "--f",
        "1",
        "--h",
        "0.8",
        "--max-depth",
        "6",
    ]);
    let mut lines = text.lines();
    assert_eq!(
        lines.next(),
        Some(
            "depth,i_m,h_m,bellman,ratio,bellman_own,ratio_own,eigen_residual,rearranged_residual"
        )
    );
    let rows: Vec<Vec<f64>> = lines
        .map(|l| l.split(',').map(|x| x.parse().unwrap()).collect())
        .collect();
    assert_eq!(rows.len(), 5);
    for w in rows.windows(2) {
        assert!(w[1][4] >= w[0][4], "ratio must not decrease");
    }
}

#[test]
fn oracle_search_honors_the_bound() {
    let kv = parse_kv(&stdout_of(&[
        "oracle",
        "search",
        "--depth",
        "3",
        "--values",
        "8,4,2,1,0,0,0,0",
    ]));
    let best: f64 = kv["best_value"].parse().unwrap();
    let bound: f64 = kv["hardy_bound"].parse().unwrap();
    let left: f64 = kv["left_value"].parse().unwrap();
    assert!(best <= bound && left <= best + 1e-12);
    assert_eq!(kv["holds"], "true");
}

#[test]
fn oracle_search_rejects_oversized_instances() {
    let out = dymax(&[
        "oracle",
        "search",
        "--depth",
        "4",
        "--values",
        "1,2,3,4,5,6,7,8,9,10,11,12,13,14,15,16",
    ]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("cap"));
}

#[test]
fn tree_dump_round_trips_through_the_parser() {
    let text = stdout_of(&["tree", "dump", "--depth", "2", "--values", "4,0,0,1/2"]);
    let (tree, phi) = dymax_cli::textfmt::parse_tree_text(&text).unwrap();
    assert_eq!(tree.leaf_count(), 4);
    let phi = phi.unwrap();
    use dymax_core::scalar::Scalar;
    assert_eq!(phi.values()[0].as_f64(), 4.0);
    assert_eq!(phi.values()[3].as_f64(), 0.5);
}

#[test]
fn verify_all_reports_and_exits_cleanly() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("run.csv");
    let out = dymax(&[
        "verify",
        "all",
        "--seed",
        "11",
        "--trials",
        "4",
        "--max-depth",
        "4",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("all checks passed"), "{stdout}");
    let csv = std::fs::read_to_string(&out_path).unwrap();
    assert!(csv.starts_with("check,q,depth,lhs,rhs,slack,holds\n"));
    // 3 q-cells x 3 depths x 4 trials x 35 checks
    assert_eq!(csv.lines().count() - 1, 3 * 3 * 4 * 35);
}

#[test]
fn verify_all_config_file_overrides_flags() {
    let dir = tempfile::tempdir().unwrap();
    let out_a = dir.path().join("a.csv");
    let out_b = dir.path().join("b.csv");
    let conf = dir.path().join("c.conf");
    std::fs::write(&conf, "trials = 2\nmax_depth = 3\nseed = 5\n").unwrap();

    // flags alone
    let out = dymax(&[
        "verify",
        "all",
        "--seed",
        "5",
        "--trials",
        "2",
        "--max-depth",
        "3",
        "--out",
        out_a.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    // contradictory flags, fixed by the config file
    let out = dymax(&[
        "verify",
        "all",
        "--seed",
        "999",
        "--trials",
        "77",
        "--max-depth",
        "8",
        "--out",
        out_b.to_str().unwrap(),
        "--config",
        conf.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert_eq!(
        std::fs::read(&out_a).unwrap(),
        std::fs::read(&out_b).unwrap(),
        "config file entries must override flags"
    );
}

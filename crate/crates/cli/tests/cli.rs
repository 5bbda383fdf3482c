use std::path::Path;
use std::process::{Command, Output};

const TREE: &str = r#"{
  "depth": 3,
  "nodes": [
    [{"parent": 0, "prob": 0.25}, {"parent": 0, "prob": 0.75}],
    [{"parent": 0, "prob": 0.5}, {"parent": 0, "prob": 0.5},
     {"parent": 1, "prob": 0.3}, {"parent": 1, "prob": 0.7}],
    [{"parent": 0, "prob": 1.0}, {"parent": 1, "prob": 0.6}, {"parent": 1, "prob": 0.4},
     {"parent": 2, "prob": 1.0}, {"parent": 3, "prob": 0.5}, {"parent": 3, "prob": 0.5}]
  ],
  "Y": [[1.0, -0.5], [0.2, -0.2, 1.0, -1.0]],
  "losses": {
    "horizon": 1,
    "decisions": ["wait", "act"],
    "values": [
      [[0.1, 0.9, 0.2, 0.4], [0.5, 0.5, 0.5, 0.5]],
      [[0.3, 0.0, 1.0, 0.2, 0.9, 0.1], [0.6, 0.2, 0.1, 0.4, 0.4, 0.5]]
    ]
  }
}"#;

fn kstep(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_kstep"))
        .args(args)
        .env_remove("KSTEP_OUTPUT_DIR")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn error_record(o: &Output) -> serde_json::Value {
    let text = String::from_utf8(o.stderr.clone()).unwrap();
    serde_json::from_str(text.lines().last().unwrap()).unwrap()
}

fn write_tree(dir: &Path) -> String {
    let path = dir.join("tree.json");
    std::fs::write(&path, TREE).unwrap();
    path.display().to_string()
}

/// Column `name` of the single data row of a CSV with a config line.
fn csv_field(text: &str, name: &str) -> String {
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("# config: "));
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let row: Vec<&str> = lines.next().unwrap().split(',').collect();
    row[header.iter().position(|h| *h == name).unwrap()].to_owned()
}

#[test]
fn bound_reports_threshold() {
    let o = kstep(&["bound", "--N", "100", "--K", "5", "--epsilon", "0.05"]);
    assert!(o.status.success());
    let t: f64 = csv_field(&stdout(&o), "threshold").parse().unwrap();
    assert!((t - 158.632_125_049_920_2).abs() < 1e-9);
}

#[test]
fn min_imbalance_is_seven_sixtyfourths() {
    let o = kstep(&["construct", "--min-imbalance", "--m-max", "100"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert_eq!(csv_field(&text, "argmin_m"), "6");
    assert_eq!(csv_field(&text, "min_prob"), "0.109375");
    assert_eq!(csv_field(&text, "min_prob_exact"), "7/64");
}

#[test]
fn prop2_instance() {
    let eps = format!("{}", (-1.0f64).exp() / 15.0);
    let o = kstep(&["construct", "--prop2", "--N", "64", "--K", "1", "--epsilon", &eps]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert_eq!(csv_field(&text, "valid"), "true");
    assert_eq!(csv_field(&text, "threshold"), "4");
    assert_eq!(csv_field(&text, "tail_at_least_epsilon"), "true");
}

#[test]
fn csv_outputs_carry_config_and_header() {
    let dir = tempfile::tempdir().unwrap();
    let tree = write_tree(dir.path());
    let runs: Vec<Vec<&str>> = vec![
        vec!["bound", "--N", "12", "--K", "5", "--epsilon", "0.3"],
        vec!["invert", "--N", "100", "--K", "5", "--C", "200"],
        vec!["invert", "--N", "100", "--epsilon", "0.05", "--C", "200"],
        vec!["construct", "--imbalance", "--m", "10"],
        vec!["construct", "--block-tail", "--N", "12", "--K", "3", "--C", "3"],
        vec!["construct", "--mv-audit", "--m-max", "40"],
        vec!["construct", "--sample", "--N", "12", "--K", "3"],
        vec!["scan", "--m-max", "20", "--K", "2"],
        vec!["simulate", "--N", "20", "--K", "4", "--epsilon", "0.3", "--trials", "1000"],
        vec!["simulate", "--tree-file", &tree, "--K", "1", "--C", "0.5", "--trials", "2000"],
        vec!["decide", "--tree-file", &tree],
    ];
    for args in runs {
        let o = kstep(&args);
        assert!(o.status.success(), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
        let text = stdout(&o);
        let mut lines = text.lines();
        let config = lines.next().unwrap();
        assert!(config.starts_with("# config: command="), "{config}");
        assert!(lines.next().unwrap().contains(','));
        assert!(lines.next().is_some(), "{args:?} has no rows");
    }
}

#[test]
fn json_format() {
    let o = kstep(&["bound", "--N", "100", "--K", "5", "--epsilon", "0.05", "--format", "json"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["config"]["N"], "100");
    assert!((v["rows"][0]["threshold"].as_f64().unwrap() - 158.632_125_049_920_2).abs() < 1e-9);
}

#[test]
fn tree_file_simulation_matches_hand_values() {
    let dir = tempfile::tempdir().unwrap();
    let tree = write_tree(dir.path());
    let o = kstep(&["simulate", "--tree-file", &tree, "--K", "1", "--C", "0.5", "--trials", "20000"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let rows: Vec<&str> = text.lines().skip(2).collect();
    // path sums 1.325, 0.925, 1.025, -0.975 with weights .125, .125, .225, .525
    let tail = |row: &str| -> f64 { row.split(',').nth(5).unwrap().parse().unwrap() };
    assert!((tail(rows[0]) - 1.0).abs() < 1e-12, "{}", rows[0]);
    assert!((tail(rows[1]) - 0.475).abs() < 1e-12, "{}", rows[1]);
    assert!(rows.iter().all(|r| r.ends_with(",true")));
}

#[test]
fn identical_config_gives_identical_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let tree = write_tree(dir.path());
    for (i, args) in [
        vec!["simulate", "--tree-file", tree.as_str(), "--K", "2", "--C", "0.3", "--trials", "5000", "--seed", "9"],
        vec!["decide", "--tree-file", tree.as_str(), "--seed", "3"],
        vec!["scan", "--m-max", "50", "--K", "3"],
    ]
    .into_iter()
    .enumerate()
    {
        let a = dir.path().join(format!("a{i}.csv"));
        let b = dir.path().join(format!("b{i}.csv"));
        let mut first = args.clone();
        first.extend(["--output", a.to_str().unwrap()]);
        let mut second = args.clone();
        second.extend(["--output", b.to_str().unwrap()]);
        assert!(kstep(&first).status.success());
        assert!(kstep(&second).status.success());
        let (a, b) = (std::fs::read(&a).unwrap(), std::fs::read(&b).unwrap());
        // the config line records the output path, the rest must agree
        let skip = |v: &[u8]| v.iter().position(|&c| c == b'\n').map(|p| v[p..].to_vec()).unwrap();
        assert_eq!(skip(&a), skip(&b), "{args:?}");
    }
}

#[test]
fn output_dir_variable_sets_default_destination() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_kstep"))
        .args(["bound", "--N", "10", "--K", "2", "--epsilon", "0.1"])
        .env("KSTEP_OUTPUT_DIR", dir.path())
        .output()
        .unwrap();
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    let text = std::fs::read_to_string(dir.path().join("bound.csv")).unwrap();
    assert!(text.starts_with("# config: command=bound"));
}

#[test]
fn verify_all_quick_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let mut reports = Vec::new();
    for run in ["a", "b"] {
        let art = dir.path().join(run);
        let o = kstep(&["verify-all", "--quick", "--artifacts-dir", art.to_str().unwrap(), "--output", "-"]);
        assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
        let text = stdout(&o);
        assert_eq!(text.lines().filter(|l| l.ends_with(",true,") || l.contains(",true,")).count(), 10);
        reports.push(text.lines().skip(1).map(str::to_owned).collect::<Vec<_>>());
    }
    for name in ["criterion7_threshold.csv", "criterion8_coverage.csv", "criterion9_decision.csv"] {
        let a = std::fs::read(dir.path().join("a").join(name)).unwrap();
        let b = std::fs::read(dir.path().join("b").join(name)).unwrap();
        assert!(a.starts_with(b"# config: criterion="));
        assert_eq!(a, b, "{name}");
    }
    assert_eq!(reports[0][0], "criterion,title,passed,detail");
}

#[test]
fn exit_codes() {
    let usage = kstep(&["frobnicate"]);
    assert_eq!(usage.status.code(), Some(2));
    assert_eq!(error_record(&usage)["error"], "usage");

    let missing_flag = kstep(&["construct", "--imbalance"]);
    assert_eq!(missing_flag.status.code(), Some(2));

    let bad_eps = kstep(&["bound", "--N", "10", "--K", "2", "--epsilon", "0.8"]);
    assert_eq!(bad_eps.status.code(), Some(3));
    assert_eq!(error_record(&bad_eps)["exit_code"], 3);

    let not_divisible = kstep(&["construct", "--block-tail", "--N", "10", "--K", "3", "--C", "1"]);
    assert_eq!(not_divisible.status.code(), Some(3));

    let missing_tree = kstep(&["decide", "--tree-file", "/nonexistent/tree.json"]);
    assert_eq!(missing_tree.status.code(), Some(4));
    assert_eq!(error_record(&missing_tree)["error"], "tree_file");

    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"depth": 1, "nodes": [[{"parent": 0, "prob": 0.4}]]}"#).unwrap();
    let invalid_tree = kstep(&["simulate", "--tree-file", bad.to_str().unwrap(), "--K", "1", "--C", "1"]);
    assert_eq!(invalid_tree.status.code(), Some(4));

    let no_losses = dir.path().join("plain.json");
    std::fs::write(&no_losses, r#"{"depth": 1, "nodes": [[{"parent": 0, "prob": 1.0}]], "Y": [[0.5]]}"#).unwrap();
    assert_eq!(kstep(&["decide", "--tree-file", no_losses.to_str().unwrap()]).status.code(), Some(4));

    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "x").unwrap();
    let out = blocker.join("out.csv");
    let unwritable = kstep(&["bound", "--N", "10", "--K", "2", "--epsilon", "0.1", "--output", out.to_str().unwrap()]);
    assert_eq!(unwritable.status.code(), Some(6));
    assert_eq!(error_record(&unwritable)["error"], "output");
}

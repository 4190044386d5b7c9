use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_extendicap")).args(args).output().expect("binary runs")
}

fn run_env(args: &[&str], key: &str, value: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_extendicap")).args(args).env(key, value).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn csv_rows(o: &Output) -> (Vec<String>, Vec<Vec<String>>) {
    let mut r = csv::Reader::from_reader(o.stdout.as_slice());
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r.records().map(|rec| rec.unwrap().iter().map(String::from).collect()).collect();
    (header, rows)
}

fn temp(name: &str) -> String {
    std::env::temp_dir().join(format!("extendicap-cli-{}-{name}", std::process::id())).to_str().unwrap().to_string()
}

fn error_json(o: &Output) -> serde_json::Value {
    serde_json::from_slice(&o.stderr).expect("stderr carries one JSON object")
}

#[test]
fn bound_emits_one_row() {
    let o = run(&["bound", "--channel", "example29", "--k", "1", "--ppt", "--eps", "0.1"]);
    assert_eq!(o.status.code(), Some(0));
    let (header, rows) = csv_rows(&o);
    assert_eq!(header.join(","), "eps,k,ppt,lambda,bound_bits,status,gap,iterations,wall_ms");
    assert_eq!(rows.len(), 1);
    let row = &rows[0];
    assert_eq!(&row[..3], ["0.1", "1", "true"]);
    assert_eq!(row[5], "optimal");
    let lambda: f64 = row[3].parse().unwrap();
    let bits: f64 = row[4].parse().unwrap();
    assert!((bits + lambda.log2()).abs() < 1e-9);
    assert_eq!(row[8], "0");
}

#[test]
fn grid_rows_follow_grid_then_config_order() {
    let o = run(&["bound", "--channel", "replacer:2", "--k", "1,2", "--eps-grid", "0.25:0.75:0.25"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let (_, rows) = csv_rows(&o);
    let keys: Vec<(String, String)> = rows.iter().map(|r| (r[0].clone(), r[1].clone())).collect();
    let want: Vec<(String, String)> = ["0.25", "0.5", "0.75"]
        .iter()
        .flat_map(|e| ["1", "2"].iter().map(move |k| (e.to_string(), k.to_string())))
        .collect();
    assert_eq!(keys, want);
    for r in &rows {
        let eps: f64 = r[0].parse().unwrap();
        let bits: f64 = r[4].parse().unwrap();
        // replacing the input by a fixed state leaves only the type-I slack
        assert!((bits + (1.0 - eps).log2()).abs() < 1e-5, "{r:?}");
    }
}

#[test]
fn reruns_are_byte_identical() {
    let args = ["bound", "--channel", "depolarizing:2:0.3", "--k", "1,2", "--eps", "0.1,0.2"];
    let (a, b) = (run(&args), run(&args));
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn extend_check_exit_codes() {
    let ppt = run(&["extend-check", "--povm", "bell_noise:2", "--k", "2", "--ppt"]);
    assert_eq!(ppt.status.code(), Some(4));
    assert_eq!(error_json(&ppt)["error"], "infeasible");
    let report: serde_json::Value = serde_json::from_str(stdout(&ppt).trim()).unwrap();
    assert_eq!(report["feasible"], false);

    let plain = run(&["extend-check", "--povm", "bell_noise:2", "--k", "2", "--no-ppt"]);
    assert_eq!(plain.status.code(), Some(0));
    let report: serde_json::Value = serde_json::from_str(stdout(&plain).trim()).unwrap();
    assert_eq!(report["feasible"], true);
    assert!(report["witness_residual"].as_f64().unwrap() <= 1e-7);
}

#[test]
fn nshot_cross_check_agrees() {
    let o = run(&["nshot", "--channel", "identity:2", "--n", "2", "--k", "1", "--eps", "0.1", "--cross-check"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let (header, rows) = csv_rows(&o);
    let col = |name: &str| header.iter().position(|h| h == name).unwrap();
    let row = &rows[0];
    let reduced: f64 = row[col("bound_bits")].parse().unwrap();
    let direct: f64 = row[col("direct_bits")].parse().unwrap();
    assert!((reduced - direct).abs() <= 1e-5);
    let (rv, dv): (usize, usize) = (row[col("variables")].parse().unwrap(), row[col("direct_variables")].parse().unwrap());
    assert!(rv < dv);
}

#[test]
fn exported_inputs_reingest_identically() {
    let path = temp("channel.json");
    assert_eq!(run(&["export", "--channel", "depolarizing:3:0.4", "--out", &path]).status.code(), Some(0));
    let args = |c: &str| vec!["bound".to_string(), "--channel".into(), c.into(), "--eps".into(), "0.2".into()];
    let from_file = Command::new(env!("CARGO_BIN_EXE_extendicap")).args(args(&path)).output().unwrap();
    let builtin = Command::new(env!("CARGO_BIN_EXE_extendicap")).args(args("depolarizing:3:0.4")).output().unwrap();
    assert_eq!(from_file.status.code(), Some(0));
    assert_eq!(from_file.stdout, builtin.stdout);
    // a second export of the re-ingested channel is the same file
    let again = run(&["export", "--channel", &path]);
    assert_eq!(again.stdout, std::fs::read(&path).unwrap());
    std::fs::remove_file(&path).unwrap();

    let povm_path = temp("povm.json");
    assert_eq!(run(&["export", "--povm", "bell_noise:2", "--out", &povm_path]).status.code(), Some(0));
    let a = run(&["extend-check", "--povm", &povm_path, "--k", "2", "--no-ppt"]);
    let b = run(&["extend-check", "--povm", "bell_noise:2", "--k", "2", "--no-ppt"]);
    let strip = |o: &Output| {
        let mut v: serde_json::Value = serde_json::from_str(stdout(o).trim()).unwrap();
        v.as_object_mut().unwrap().remove("povm");
        v
    };
    assert_eq!(strip(&a), strip(&b));
    std::fs::remove_file(&povm_path).unwrap();
}

#[test]
fn verify_coding_reports_identities() {
    let o = run(&["verify-coding", "--channel", "example29", "--messages", "3", "--seed", "7"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let rep: serde_json::Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    assert!((rep["accept_replacer"].as_f64().unwrap() - 1.0 / 3.0).abs() < 1e-10);
    let avg = rep["average_error"].as_f64().unwrap();
    assert!((rep["accept_channel"].as_f64().unwrap() - (1.0 - avg)).abs() < 1e-10);
    assert_eq!(rep["rate_within_bound"], true);
    let again = run(&["verify-coding", "--channel", "example29", "--messages", "3", "--seed", "7"]);
    assert_eq!(o.stdout, again.stdout);
}

#[test]
fn validation_failures_exit_with_two() {
    for args in [
        vec!["bound", "--channel", "nonsense", "--eps", "0.1"],
        vec!["bound", "--eps-grid", "0.5:0.2:0.1"],
        vec!["bound", "--eps", "1.5"],
        vec!["bound", "--eps", "0.1", "--gap-tol", "0"],
        vec!["extend-check", "--povm", "no/such/povm.json", "--k", "2"],
        vec!["nshot", "--channel", "identity:2", "--n", "5", "--eps", "0.1"],
    ] {
        let o = run(&args);
        assert_eq!(o.status.code(), Some(2), "{args:?}");
        assert_eq!(error_json(&o)["error"], "validation", "{args:?}");
    }
    let capped = run_env(&["bound", "--channel", "example29", "--k", "2", "--eps", "0.1"], "EXTENDICAP_DIM_CAP", "8");
    assert_eq!(capped.status.code(), Some(2));
    let bad_cap = run_env(&["bound", "--eps", "0.1"], "EXTENDICAP_DIM_CAP", "many");
    assert_eq!(bad_cap.status.code(), Some(2));
}

#[test]
fn iteration_limit_reports_solver_failure() {
    // a gap target below machine precision cannot be met
    let o = run(&["bound", "--channel", "example29", "--k", "2", "--eps", "0.1", "--gap-tol", "1e-30", "--feas-tol", "1e-30"]);
    assert_eq!(o.status.code(), Some(3), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(error_json(&o)["error"], "solver");
}

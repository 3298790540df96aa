use std::process::Command;

fn mrmp() -> Command {
    Command::new(env!("CARGO_BIN_EXE_mrmp"))
}

#[test]
fn plan_writes_solution_and_record() {
    let dir = tempfile::tempdir().unwrap();
    let out = mrmp()
        .args(["plan", "--scenario", "cross-2", "--planner", "pp-st-rrt", "--seed", "3"])
        .env("MRMP_OUT_DIR", dir.path())
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let sol: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(dir.path().join("solution.json")).unwrap()).unwrap();
    assert_eq!(sol["paths"].as_array().unwrap().len(), 2);
    let rec: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(rec["planner"], "pp-st-rrt");
    assert_eq!(rec["success"], true);
}

#[test]
fn infeasible_problem_file_exits_with_code_3() {
    let dir = tempfile::tempdir().unwrap();
    let gen = mrmp().args(["scenario", "gen", "--scenario", "cross-2", "--expand"]).output().unwrap();
    assert!(gen.status.success());
    let text = String::from_utf8(gen.stdout).unwrap();
    // both robots start at the same point
    let mut value: toml::Table = toml::from_str(&text).unwrap();
    let starts = value["starts"].as_array().unwrap().clone();
    value.insert("starts".into(), toml::Value::Array(vec![starts[0].clone(), starts[0].clone()]));
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, toml::to_string(&value).unwrap()).unwrap();
    let out = mrmp().args(["plan", "--problem"]).arg(&path).arg("--out").arg(dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(3), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn expanded_scenario_plans_from_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("p.toml");
    let gen = mrmp().args(["scenario", "gen", "--scenario", "cross-2", "--expand", "--output"]).arg(&path).status().unwrap();
    assert!(gen.success());
    let out = mrmp().args(["plan", "--planner", "st-cbs", "--backend", "scalar", "--problem"]).arg(&path).arg("--out").arg(dir.path()).output().unwrap();
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn validate_bench_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = mrmp()
        .args(["validate-bench", "--robots", "2", "--motions", "10", "--obstacles", "on", "--out"])
        .arg(dir.path())
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("validate_bench.csv")).unwrap();
    assert!(csv.starts_with("robots,obstacles,strategy,batch_size,lane_precision"));
    assert_eq!(csv.lines().count(), 6);
}

#[test]
fn unknown_planner_is_an_error() {
    let out = mrmp().args(["plan", "--scenario", "cross-2", "--planner", "prm"]).output().unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("unknown planner"));
}

#[test]
fn robot_show_round_trips_through_check() {
    let dir = tempfile::tempdir().unwrap();
    let out = mrmp().args(["robot", "show", "arm7"]).output().unwrap();
    let path = dir.path().join("arm7.toml");
    std::fs::write(&path, out.stdout).unwrap();
    let check = mrmp().args(["robot", "check"]).arg(&path).output().unwrap();
    assert!(String::from_utf8_lossy(&check.stdout).starts_with("arm7: 7 dof"));
}

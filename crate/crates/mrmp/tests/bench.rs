use mrmp::bench::{cmd_bench, records_without_wall_time, BenchConfig};

fn config(jobs: usize) -> BenchConfig {
    BenchConfig {
        planners: vec!["arc".into(), "st-cbs".into()],
        backends: vec!["batched".into(), "scalar".into()],
        scenarios: vec!["cross-2".into()],
        seeds: vec![0, 1, 2],
        time_limit: 60.0,
        strategy: "hierarchical-rake".into(),
        batch_size: 8,
        jobs,
        max_iterations: None,
    }
}

#[test]
fn sweep_writes_one_record_per_cell() {
    let dir = tempfile::tempdir().unwrap();
    let report = cmd_bench(&config(1), dir.path()).unwrap();
    assert_eq!(report.records.len(), 12);
    assert!(report.records.iter().all(|r| r.success && r.outcome == "solved"));
    assert_eq!(std::fs::read_to_string(dir.path().join("trials.jsonl")).unwrap().lines().count(), 12);
    for s in &report.speedups {
        assert_eq!(s.pairs, 3);
        assert!(s.sparse);
    }
    let speedups = std::fs::read_to_string(dir.path().join("speedups.csv")).unwrap();
    assert_eq!(speedups.lines().count(), 3);
    assert!(dir.path().join("cdf.csv").exists());
}

#[test]
fn reruns_match_except_wall_time() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    cmd_bench(&config(1), a.path()).unwrap();
    cmd_bench(&config(3), b.path()).unwrap();
    let read = |d: &tempfile::TempDir| records_without_wall_time(&std::fs::read_to_string(d.path().join("trials.jsonl")).unwrap()).unwrap();
    assert_eq!(read(&a), read(&b));
}

#[test]
fn config_rejects_unknown_keys() {
    let text = "planners = [\"arc\"]\nscenarios = [\"cross-2\"]\nseeds = [0]\nthreads = 4\n";
    assert!(toml::from_str::<BenchConfig>(text).is_err());
    let ok: BenchConfig = toml::from_str("planners = [\"arc\"]\nscenarios = [\"cross-2\"]\nseeds = [0]\n").unwrap();
    assert_eq!(ok.backends.len(), 2);
    assert_eq!(ok.strategy, "hierarchical-rake");
}

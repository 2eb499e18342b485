//! End-to-end command tests over the simulated backend: exit codes, run
//! record persistence, resumability, and the report/transition outputs.

use std::fs;
use std::path::{Path, PathBuf};

use ensreas::cli::{
    cmd_report, cmd_run, cmd_transitions, cmd_validate, load_run_dir, BackendArg, RunArgs,
    StrategyArg, TaskArg, EXIT_DATASET_INVALID, EXIT_MISSING_DEPENDENCY, EXIT_OK,
};
use ensreas::metrics::LogBase;

fn write_dataset(path: &Path, n: usize) {
    let labels = ["T1", "T2", "T3", "T4"];
    let mut lines = String::new();
    for i in 0..n {
        lines.push_str(&format!(
            "{}\n",
            serde_json::json!({
                "id": format!("r{i:03}"),
                "text": format!("Specimen {i}: invasive carcinoma with measured extent and nodal counts."),
                "ground_truth": labels[i % 4],
            })
        ));
    }
    fs::write(path, lines).unwrap();
}

fn run_args(dataset: &Path, out: &Path, strategy: StrategyArg, seed: u64) -> RunArgs {
    RunArgs {
        task: TaskArg::T,
        strategy,
        dataset: dataset.to_path_buf(),
        depends_on: None,
        out: out.to_path_buf(),
        config: None,
        samples: None,
        temperature: None,
        top_p: None,
        backend: Some(BackendArg::Sim),
        seed: Some(seed),
        workers: Some(4),
        cache_dir: None,
        max_retries: None,
        script: None,
        api_base: None,
        api_key: None,
        model: None,
    }
}

#[test]
fn validate_accepts_good_and_rejects_bad_datasets() {
    let dir = tempfile::tempdir().unwrap();
    let good = dir.path().join("good.jsonl");
    write_dataset(&good, 5);
    assert_eq!(cmd_validate(&good, TaskArg::T), EXIT_OK);

    let bad = dir.path().join("bad.jsonl");
    fs::write(
        &bad,
        "{\"id\":\"r1\",\"text\":\"a\"}\n{\"id\":\"r1\",\"text\":\"b\"}\n",
    )
    .unwrap();
    assert_eq!(cmd_validate(&bad, TaskArg::T), EXIT_DATASET_INVALID);
}

#[test]
fn seeded_runs_are_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let dataset = dir.path().join("d.jsonl");
    write_dataset(&dataset, 8);

    let out_a = dir.path().join("run-a");
    let out_b = dir.path().join("run-b");
    assert_eq!(cmd_run(&run_args(&dataset, &out_a, StrategyArg::ZsCotSc, 7)), EXIT_OK);
    assert_eq!(cmd_run(&run_args(&dataset, &out_b, StrategyArg::ZsCotSc, 7)), EXIT_OK);

    let (_, records_a) = load_run_dir(&out_a).unwrap();
    let (_, records_b) = load_run_dir(&out_b).unwrap();
    assert_eq!(records_a.len(), 8);
    // Identical apart from wall-clock timing.
    for (mut a, mut b) in records_a.into_iter().zip(records_b) {
        a.elapsed_ms = 0;
        b.elapsed_ms = 0;
        assert_eq!(a, b);
    }
}

#[test]
fn fifty_report_run_produces_fifty_records_of_ten_samples() {
    let dir = tempfile::tempdir().unwrap();
    let dataset = dir.path().join("d.jsonl");
    write_dataset(&dataset, 50);
    let out = dir.path().join("run");
    assert_eq!(cmd_run(&run_args(&dataset, &out, StrategyArg::ZsCotSc, 7)), EXIT_OK);
    let (manifest, records) = load_run_dir(&out).unwrap();
    assert_eq!(manifest.config.n_samples, 10);
    assert_eq!(records.len(), 50);
    for record in &records {
        assert_eq!(record.samples.as_ref().unwrap().samples.len(), 10);
        assert!(record.error.is_none());
    }
}

#[test]
fn ensreas_without_dependency_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let dataset = dir.path().join("d.jsonl");
    write_dataset(&dataset, 4);
    let out = dir.path().join("run");
    let args = run_args(&dataset, &out, StrategyArg::Ensreas, 7);
    assert_eq!(cmd_run(&args), EXIT_MISSING_DEPENDENCY);
}

#[test]
fn full_pipeline_report_and_transitions() {
    let dir = tempfile::tempdir().unwrap();
    let dataset = dir.path().join("d.jsonl");
    write_dataset(&dataset, 24);

    let sc_dir = dir.path().join("sc");
    assert_eq!(cmd_run(&run_args(&dataset, &sc_dir, StrategyArg::ZsCotSc, 7)), EXIT_OK);

    let ens_dir = dir.path().join("ens");
    let mut ens_args = run_args(&dataset, &ens_dir, StrategyArg::Ensreas, 7);
    ens_args.depends_on = Some(sc_dir.clone());
    assert_eq!(cmd_run(&ens_args), EXIT_OK);

    let report_out = dir.path().join("report");
    assert_eq!(
        cmd_report(
            &[sc_dir.clone(), ens_dir.clone()],
            Some(report_out.as_path()),
            LogBase::Natural
        ),
        EXIT_OK
    );
    let report: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(report_out.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["strategies"].as_array().unwrap().len(), 2);
    // Two entropy-bearing runs -> the paired t-test row is present.
    assert!(report["paired_t_test"]["t_statistic"].is_number());
    assert!(report_out.join("report.csv").is_file());

    let transitions_out = dir.path().join("transitions");
    assert_eq!(
        cmd_transitions(&sc_dir, &ens_dir, Some(transitions_out.as_path())),
        EXIT_OK
    );
    let csv = fs::read_to_string(transitions_out.join("transitions.csv")).unwrap();
    assert!(csv.starts_with("type,CC,MC,Tie,MI,CI\n"));
    assert_eq!(csv.lines().count(), 6);
    assert!(transitions_out.join("transitions_normalized.csv").is_file());
}

#[test]
fn report_refuses_runs_over_different_datasets() {
    let dir = tempfile::tempdir().unwrap();
    let dataset_a = dir.path().join("a.jsonl");
    let dataset_b = dir.path().join("b.jsonl");
    write_dataset(&dataset_a, 6);
    write_dataset(&dataset_b, 7);

    let run_a = dir.path().join("run-a");
    let run_b = dir.path().join("run-b");
    assert_eq!(cmd_run(&run_args(&dataset_a, &run_a, StrategyArg::ZsCotSc, 1)), EXIT_OK);
    assert_eq!(cmd_run(&run_args(&dataset_b, &run_b, StrategyArg::ZsCotSc, 1)), EXIT_OK);

    assert_eq!(
        cmd_report(&[run_a, run_b], None, LogBase::Natural),
        EXIT_DATASET_INVALID
    );
}

#[test]
fn ensreas_rejects_dependency_from_other_dataset() {
    let dir = tempfile::tempdir().unwrap();
    let dataset_a = dir.path().join("a.jsonl");
    let dataset_b = dir.path().join("b.jsonl");
    write_dataset(&dataset_a, 6);
    write_dataset(&dataset_b, 7);

    let sc_dir = dir.path().join("sc");
    assert_eq!(cmd_run(&run_args(&dataset_a, &sc_dir, StrategyArg::ZsCotSc, 1)), EXIT_OK);

    let ens_dir = dir.path().join("ens");
    let mut args = run_args(&dataset_b, &ens_dir, StrategyArg::Ensreas, 1);
    args.depends_on = Some(sc_dir);
    assert_eq!(cmd_run(&args), EXIT_MISSING_DEPENDENCY);
}

#[test]
fn rerun_with_shared_cache_is_idempotent() {
    let dir = tempfile::tempdir().unwrap();
    let dataset = dir.path().join("d.jsonl");
    write_dataset(&dataset, 6);
    let cache: PathBuf = dir.path().join("cache");

    let out_a = dir.path().join("run-a");
    let mut args = run_args(&dataset, &out_a, StrategyArg::Zs, 5);
    args.cache_dir = Some(cache.clone());
    assert_eq!(cmd_run(&args), EXIT_OK);

    let out_b = dir.path().join("run-b");
    let mut args = run_args(&dataset, &out_b, StrategyArg::Zs, 5);
    args.cache_dir = Some(cache);
    assert_eq!(cmd_run(&args), EXIT_OK);

    let (_, a) = load_run_dir(&out_a).unwrap();
    let (_, b) = load_run_dir(&out_b).unwrap();
    for (mut a, mut b) in a.into_iter().zip(b) {
        a.elapsed_ms = 0;
        b.elapsed_ms = 0;
        assert_eq!(a, b);
    }
}

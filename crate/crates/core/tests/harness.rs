use std::path::Path;

use fundus_core::fundus::GridSpec;
use fundus_core::harness::artifacts::{estimator_file, Manifest, METRICS_FILE, TRUTH_FILE};
use fundus_core::harness::compare::{write_comparison, COMPARISON_CSV};
use fundus_core::harness::pipeline::{reduce_only, ERROR_FILE, FAILED_FILE};
use fundus_core::harness::{compare_runs, execute, ModelSource, RunConfig};
use fundus_core::sim::TruthSource;

fn quick_config() -> RunConfig {
    let mut cfg = RunConfig::default();
    cfg.grid = GridSpec::default().coarsened().unwrap();
    cfg.simulation.truth = TruthSource::Reduced;
    cfg.simulation.t_final = 0.8;
    cfg
}

fn read(dir: &Path, name: &str) -> Vec<u8> {
    std::fs::read(dir.join(name)).unwrap()
}

#[test]
fn repeated_runs_are_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = quick_config();
    let a = execute(&cfg, &ModelSource::Reduce, &tmp.path().join("a")).unwrap();
    let b = execute(&cfg, &ModelSource::Reduce, &tmp.path().join("b")).unwrap();
    let mut names = vec![TRUTH_FILE.to_string(), METRICS_FILE.to_string()];
    names.extend(a.summary.estimators.iter().map(|e| estimator_file(&e.name)));
    for name in &names {
        assert_eq!(read(&a.directory, name), read(&b.directory, name), "{name}");
    }
    let hashes = |m: &Manifest| {
        m.files
            .iter()
            .filter(|f| f.name.ends_with(".csv") || f.name == "model.json")
            .map(|f| (f.name.clone(), f.sha256.clone()))
            .collect::<Vec<_>>()
    };
    assert_eq!(hashes(&a.manifest), hashes(&b.manifest));
}

#[test]
fn manifest_embeds_the_effective_config() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = quick_config();
    let report = execute(&cfg, &ModelSource::Reduce, tmp.path()).unwrap();
    let manifest = Manifest::read(tmp.path()).unwrap();
    assert_eq!(manifest.config, cfg);
    assert_eq!(manifest.config_hash, cfg.hash());
    assert_eq!(report.summary.config_hash, cfg.hash());
    let stages: Vec<_> = manifest.stages.iter().map(|s| s.stage.as_str()).collect();
    assert_eq!(stages, ["assemble", "reduce", "discretize", "truth", "estimate", "metrics"]);
}

#[test]
fn noise_free_run_reports_zero_noise_level() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = quick_config();
    cfg.simulation.noise_variance = 0.0;
    execute(&cfg, &ModelSource::Reduce, tmp.path()).unwrap();
    let mut rdr = csv::Reader::from_path(tmp.path().join(METRICS_FILE)).unwrap();
    let col = rdr.headers().unwrap().iter().position(|h| h == "d_n").unwrap();
    for row in rdr.records() {
        let v: f64 = row.unwrap()[col].parse().unwrap();
        assert_eq!(v, 0.0);
    }
}

#[test]
fn horizon_sweep_gives_one_trace_per_horizon() {
    let tmp = tempfile::tempdir().unwrap();
    let mut cfg = quick_config();
    cfg.estimators.ekf.enabled = false;
    cfg.estimators.mhe.horizon = vec![5, 10, 20];
    let report = execute(&cfg, &ModelSource::Reduce, tmp.path()).unwrap();
    let names: Vec<_> = report.summary.estimators.iter().map(|e| e.name.clone()).collect();
    assert_eq!(names, ["mhe_n5_r100", "mhe_n10_r100", "mhe_n20_r100"]);
    for n in &names {
        assert!(tmp.path().join(estimator_file(n)).exists());
    }
}

#[test]
fn saved_model_reproduces_the_run() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = quick_config();
    let model = reduce_only(&cfg, &tmp.path().join("model")).unwrap();
    let from_doc = execute(&cfg, &ModelSource::Document(model), &tmp.path().join("doc")).unwrap();
    let direct = execute(&cfg, &ModelSource::Reduce, &tmp.path().join("direct")).unwrap();
    assert_eq!(read(&from_doc.directory, TRUTH_FILE), read(&direct.directory, TRUTH_FILE));

    let rows = compare_runs(&[from_doc.directory.clone(), direct.directory.clone()]).unwrap();
    assert_eq!(rows.len(), 4);
    assert!(rows.iter().all(|r| r.delta_steady_e_x == Some(0.0) && r.delta_convergence_time == Some(0.0)));
    write_comparison(&rows, tmp.path()).unwrap();
    assert!(tmp.path().join(COMPARISON_CSV).exists());
}

#[test]
fn failed_stage_leaves_marker() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = quick_config();
    let missing = tmp.path().join("nope.json");
    let err = execute(&cfg, &ModelSource::Document(missing), tmp.path()).unwrap_err();
    assert_eq!(err.stage, "load_model");
    assert_eq!(std::fs::read_to_string(tmp.path().join(FAILED_FILE)).unwrap().trim(), "load_model");
    let record: serde_json::Value = serde_json::from_slice(&read(tmp.path(), ERROR_FILE)).unwrap();
    assert!(record["message"].as_str().unwrap().contains("nope.json"));

    execute(&cfg, &ModelSource::Reduce, tmp.path()).unwrap();
    assert!(!tmp.path().join(FAILED_FILE).exists());
}

#[test]
fn mismatched_runs_cannot_be_compared() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = quick_config();
    let mut longer = cfg.clone();
    longer.simulation.t_final = 1.0;
    let a = execute(&cfg, &ModelSource::Reduce, &tmp.path().join("a")).unwrap();
    let b = execute(&longer, &ModelSource::Reduce, &tmp.path().join("b")).unwrap();
    assert!(compare_runs(&[a.directory, b.directory]).is_err());
}

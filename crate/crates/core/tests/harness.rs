use std::fs;
use std::path::Path;

use serde_json::Value;
use szego_core::circle_fn::InnerSpec;
use szego_core::harness::{run_experiment, ExperimentConfig, ExperimentKind, RunStatus};
use szego_core::JacobiMatrix;

fn config(kind: ExperimentKind, dir: &Path) -> ExperimentConfig {
    let mut cfg = ExperimentConfig::new(kind);
    cfg.numeric.m = 8;
    cfg.numeric.n = 64;
    cfg.output = dir.join("run");
    cfg
}

fn write_rank3(dir: &Path, p0: f64, q0: f64, qm1: f64) -> std::path::PathBuf {
    let path = dir.join("rank3.json");
    let j = JacobiMatrix::rank3(p0, q0, qm1).unwrap();
    fs::write(&path, serde_json::to_string(&j).unwrap()).unwrap();
    path
}

fn report_json(dir: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(dir.join("run.json")).unwrap()).unwrap()
}

#[test]
fn roundtrip_recovers_both_rank3_points() {
    for (p0, q0, qm1) in [(0.9, 0.3, -0.2), (0.5, -0.4, 0.1)] {
        let dir = tempfile::tempdir().unwrap();
        let mut cfg = config(ExperimentKind::Roundtrip, dir.path());
        cfg.input = Some(write_rank3(dir.path(), p0, q0, qm1));
        let report = run_experiment(&cfg).unwrap();
        assert_eq!(report.status, RunStatus::Ok, "{:?}", report.stages);
        let json = report_json(dir.path());
        for key in ["distance_plus", "distance_minus"] {
            assert!(json["result"][key].as_f64().unwrap() < 1e-6);
        }
        assert_eq!(json["result"]["uniqueness"]["verdict"], "unique");
        let csv = fs::read_to_string(dir.path().join("run_plus.csv")).unwrap();
        assert!(csv.starts_with("n,p_n,q_n\n-8,"));
        assert_eq!(csv.lines().count(), 18);
        assert!(dir.path().join("run_minus.csv").exists());
        assert!(dir.path().join("run_input.csv").exists());
    }
}

#[test]
fn free_roundtrip_has_zero_distances() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("free.json");
    fs::write(&path, r#"{"perturbation": {}}"#).unwrap();
    let mut cfg = config(ExperimentKind::Roundtrip, dir.path());
    cfg.input = Some(path);
    let report = run_experiment(&cfg).unwrap();
    assert_eq!(report.exit_code(), 0);
    assert_eq!(report.result["distance_plus"], 0.0);
    assert_eq!(report.result["distance_minus"], 0.0);
}

#[test]
fn nonuniq_defaults_to_t_squared() {
    let dir = tempfile::tempdir().unwrap();
    let report = run_experiment(&config(ExperimentKind::Nonuniq, dir.path())).unwrap();
    assert_eq!(report.status, RunStatus::Ok, "{:?}", report.stages);
    assert_eq!(report.config.delta, Some(InnerSpec::monomial(2)));
    let u = &report.result["uniqueness"];
    assert_eq!(u["verdict"], "non_unique");
    let v = u["criterion"]["v_plus"].as_f64().unwrap();
    assert!((v - 1.0 / 3f64.sqrt()).abs() < 1e-6);
    assert!(report.stage("half_axis_plus").unwrap().passed);
    assert!(report.stage("half_axis_minus").unwrap().passed);
    // the defaults are echoed
    let json = report_json(dir.path());
    assert_eq!(json["config"]["numeric"]["tolerances"]["criterion"], 1e-4);
    assert_eq!(json["config"]["numeric"]["eps_schedule"].as_array().unwrap().len(), 9);
}

#[test]
fn nonuniq_rejects_constant_delta() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config(ExperimentKind::Nonuniq, dir.path());
    cfg.delta = Some(InnerSpec::monomial(0));
    let report = run_experiment(&cfg).unwrap();
    assert_eq!(report.exit_code(), 1);
    assert!(!report.stage("analytic_smatrix").unwrap().passed);
}

#[test]
fn repair_search_reports_every_candidate() {
    let dir = tempfile::tempdir().unwrap();
    let report = run_experiment(&config(ExperimentKind::RepairSearch, dir.path())).unwrap();
    let candidates = report.result["candidates"].as_array().unwrap();
    assert_eq!(candidates.len(), 4);
    for c in candidates {
        assert!(c["verdict"].is_string(), "{c}");
        assert_eq!(c["transmission_unchanged"], true);
        assert_eq!(c["left_reflection_analytic"], true);
        assert!(c["modulus_defect"].as_f64().unwrap() < 1e-12);
    }
    assert_eq!(report.result["base_verdict"], "non_unique");
}

#[test]
fn repair_search_rejects_bad_candidates() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config(ExperimentKind::RepairSearch, dir.path());
    cfg.candidates.clear();
    assert_eq!(run_experiment(&cfg).unwrap().exit_code(), 1);
    cfg.candidates = vec![InnerSpec {
        degree: 0,
        zeros: vec![1.5],
    }];
    let report = run_experiment(&cfg).unwrap();
    assert_eq!(report.exit_code(), 1);
    assert!(report.result["candidates"][0]["error"].is_string());
}

#[test]
fn free_candidate_on_free_matrix_is_unique() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("free_s.json");
    fs::write(
        &path,
        serde_json::to_string(&szego_core::ScatteringMatrix::free()).unwrap(),
    )
    .unwrap();
    let mut cfg = config(ExperimentKind::RepairSearch, dir.path());
    cfg.input = Some(path);
    cfg.candidates = vec![InnerSpec::monomial(0)];
    let report = run_experiment(&cfg).unwrap();
    assert_eq!(report.exit_code(), 0, "{:?}", report.stages);
    assert_eq!(report.result["candidates"][0]["verdict"], "unique");
    assert_eq!(report.result["any_unique"], true);
}

#[test]
fn direct_then_inverse_chain() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config(ExperimentKind::Direct, dir.path());
    cfg.input = Some(write_rank3(dir.path(), 0.9, 0.3, -0.2));
    let report = run_experiment(&cfg).unwrap();
    assert_eq!(report.exit_code(), 0);
    let s_path = dir.path().join("run_smatrix.json");
    assert!(report.result["direct"]["provenance"]["den"].is_object());

    let mut inv = config(ExperimentKind::Inverse, dir.path());
    inv.input = Some(s_path.clone());
    inv.output = dir.path().join("inv");
    let report = run_experiment(&inv).unwrap();
    assert_eq!(report.exit_code(), 0, "{:?}", report.stages);
    assert!(report.result["distance"].as_f64().unwrap() < 1e-6);
    let q0 = report.result["plus"]["perturbation"]["0"][1].as_f64().unwrap();
    assert!((q0 - 0.3).abs() < 1e-6);

    let mut val = config(ExperimentKind::Validate, dir.path());
    val.input = Some(s_path);
    val.output = dir.path().join("val");
    assert_eq!(run_experiment(&val).unwrap().exit_code(), 0);
}

#[test]
fn direct_rejects_bound_state() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bound.json");
    fs::write(&path, r#"{"perturbation": {"0": [1.0, 0.5]}}"#).unwrap();
    let mut cfg = config(ExperimentKind::Direct, dir.path());
    cfg.input = Some(path);
    let report = run_experiment(&cfg).unwrap();
    assert_eq!(report.exit_code(), 1);
    assert!(report.stage("extract").unwrap().detail.contains("bound state"));
}

#[test]
fn criterion_experiment() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config(ExperimentKind::Criterion, dir.path());
    cfg.delta = Some(InnerSpec::monomial(4));
    let report = run_experiment(&cfg).unwrap();
    assert_eq!(report.exit_code(), 0);
    assert_eq!(report.result["verdict"], "non_unique");
}

#[test]
fn runs_are_bit_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config(ExperimentKind::Nonuniq, dir.path());
    run_experiment(&cfg).unwrap();
    let first = fs::read(dir.path().join("run.json")).unwrap();
    let first_csv = fs::read(dir.path().join("run_difference.csv")).unwrap();
    run_experiment(&cfg).unwrap();
    assert_eq!(first, fs::read(dir.path().join("run.json")).unwrap());
    assert_eq!(first_csv, fs::read(dir.path().join("run_difference.csv")).unwrap());
}

#[test]
fn invalid_config_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = config(ExperimentKind::Nonuniq, dir.path());
    cfg.numeric.n = 4;
    assert!(run_experiment(&cfg).is_err());
    assert!(!dir.path().join("run.json").exists());
}

#[test]
fn config_file_resolves_relative_input() {
    let dir = tempfile::tempdir().unwrap();
    write_rank3(dir.path(), 0.9, 0.3, -0.2);
    let cfg_path = dir.path().join("cfg.json");
    fs::write(
        &cfg_path,
        r#"{"experiment": "direct", "input": "rank3.json", "numeric": {"m": 4, "n": 16}}"#,
    )
    .unwrap();
    let cfg = ExperimentConfig::from_file(&cfg_path).unwrap();
    assert_eq!(cfg.input.as_deref(), Some(dir.path().join("rank3.json").as_path()));
    assert_eq!(cfg.numeric.grid, 4096);
}

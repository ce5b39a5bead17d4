//! Experiment driver: reads an [`ExperimentConfig`], runs one experiment,
//! writes a JSON report plus CSV coefficient tables.
//!
//! Exit codes: 0 when every stage passed, 2 when the uniqueness verdict is
//! inconclusive, 1 on any stage failure.

pub mod catalogue;
pub mod config;
pub mod output;

use std::fs;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};
use serde_json::{json, Value};
use thiserror::Error;

use crate::circle_fn::{CircleError, CircleFunction, GridSampling};
use crate::direct::extract_smatrix_with;
use crate::inverse::{reconstruct_dual, reconstruct_jacobi, ReconstructionResult};
use crate::jacobi::{distance, JacobiError, JacobiMatrix};
use crate::smatrix::{analytic_smatrix, repair, validate, ScatteringMatrix, SmatrixError};
use crate::uniqueness::{
    compare_reconstructions, kernel_identity_check, uniqueness_criterion, UniquenessReport, Verdict,
};

pub use config::{ExperimentConfig, ExperimentKind, NumericConfig, Tolerances};

#[derive(Debug, Error)]
pub enum HarnessError {
    #[error("invalid config: {0}")]
    Config(String),
    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("{path}: {message}")]
    Json { path: PathBuf, message: String },
    #[error(transparent)]
    Circle(#[from] CircleError),
    #[error(transparent)]
    Smatrix(#[from] SmatrixError),
}

/// Contents of an input file, told apart by the `perturbation` key.
#[derive(Clone, Debug)]
pub enum Input {
    Jacobi(JacobiMatrix),
    Scattering(ScatteringMatrix),
}

pub fn read_input(path: &std::path::Path) -> Result<Input, HarnessError> {
    let text = fs::read_to_string(path).map_err(|source| HarnessError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    let json_error = |e: serde_json::Error| HarnessError::Json {
        path: path.to_path_buf(),
        message: e.to_string(),
    };
    let value: Value = serde_json::from_str(&text).map_err(json_error)?;
    if value.get("perturbation").is_some() {
        serde_json::from_value(value).map(Input::Jacobi).map_err(json_error)
    } else if value.get("s").is_some() {
        serde_json::from_value(value).map(Input::Scattering).map_err(json_error)
    } else {
        Err(HarnessError::Json {
            path: path.to_path_buf(),
            message: "neither a Jacobi matrix (\"perturbation\") nor a scattering matrix (\"s\")".into(),
        })
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Ok,
    Inconclusive,
    Failed,
}

impl RunStatus {
    pub fn exit_code(self) -> i32 {
        match self {
            Self::Ok => 0,
            Self::Inconclusive => 2,
            Self::Failed => 1,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Stage {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct ExperimentReport {
    pub experiment: ExperimentKind,
    pub status: RunStatus,
    pub config: ExperimentConfig,
    pub stages: Vec<Stage>,
    pub result: Value,
    pub files: Vec<PathBuf>,
}

impl ExperimentReport {
    pub fn exit_code(&self) -> i32 {
        self.status.exit_code()
    }

    pub fn stage(&self, name: &str) -> Option<&Stage> {
        self.stages.iter().find(|s| s.name == name)
    }
}

/// Collected during a run and written at the end.
struct Run {
    stages: Vec<Stage>,
    result: serde_json::Map<String, Value>,
    tables: Vec<(String, String)>,
    side_files: Vec<(String, Value)>,
    inconclusive: bool,
}

impl Run {
    fn new() -> Self {
        Self {
            stages: Vec::new(),
            result: serde_json::Map::new(),
            tables: Vec::new(),
            side_files: Vec::new(),
            inconclusive: false,
        }
    }

    fn stage(&mut self, name: &str, passed: bool, detail: impl Into<String>) {
        self.stages.push(Stage {
            name: name.into(),
            passed,
            detail: detail.into(),
        });
    }

    /// Records an error as a failed stage and returns `None`.
    fn attempt<T, E: std::fmt::Display>(&mut self, name: &str, r: Result<T, E>) -> Option<T> {
        match r {
            Ok(v) => {
                self.stage(name, true, "ok");
                Some(v)
            }
            Err(e) => {
                self.stage(name, false, e.to_string());
                None
            }
        }
    }

    fn put(&mut self, key: &str, value: impl Serialize) {
        let v = serde_json::to_value(value).unwrap_or_else(|e| json!({ "serialization_error": e.to_string() }));
        self.result.insert(key.into(), v);
    }

    fn table(&mut self, suffix: &str, rows: &[(i64, f64, f64)]) {
        self.tables.push((suffix.into(), output::coefficient_csv(rows)));
    }

    fn reconstruction_table(&mut self, suffix: &str, r: &ReconstructionResult, m: i64) {
        if let Ok(rows) = r.jacobi.table(-m, m) {
            self.table(suffix, &rows);
        }
    }

    fn status(&self) -> RunStatus {
        if self.stages.iter().any(|s| !s.passed) {
            RunStatus::Failed
        } else if self.inconclusive {
            RunStatus::Inconclusive
        } else {
            RunStatus::Ok
        }
    }
}

fn default_delta(cfg: &mut ExperimentConfig) {
    if cfg.delta.is_none() && cfg.input.is_none() {
        cfg.delta = Some(crate::circle_fn::InnerSpec::monomial(2));
    }
}

/// Scattering matrix from `input` (extracting it from a Jacobi matrix if
/// needed) or else from `delta`.
fn scattering_source(cfg: &ExperimentConfig, run: &mut Run) -> Option<ScatteringMatrix> {
    let vopts = cfg.validation_options();
    if let Some(path) = &cfg.input {
        let input = run.attempt("read_input", read_input(path))?;
        return match input {
            Input::Scattering(sm) => Some(sm),
            Input::Jacobi(j) => {
                let d = run.attempt("extract", extract_smatrix_with(&j, &vopts))?;
                Some(d.smatrix)
            }
        };
    }
    let Some(spec) = &cfg.delta else {
        run.stage("input", false, "neither input nor delta given");
        return None;
    };
    let delta = run.attempt("build_delta", spec.build(&cfg.inner_options()))?;
    run.attempt("analytic_smatrix", analytic_smatrix(&delta, &vopts))
}

fn jacobi_source(cfg: &ExperimentConfig, run: &mut Run) -> Option<JacobiMatrix> {
    let Some(path) = &cfg.input else {
        run.stage("input", false, "a Jacobi matrix input is required");
        return None;
    };
    match run.attempt("read_input", read_input(path))? {
        Input::Jacobi(j) => Some(j),
        Input::Scattering(_) => {
            run.stage("input", false, "expected a Jacobi matrix, got a scattering matrix");
            None
        }
    }
}

fn record_uniqueness(run: &mut Run, report: &UniquenessReport, m: i64) {
    run.put("uniqueness", report);
    run.inconclusive |= report.verdict == Verdict::Inconclusive;
    run.stage(
        "coherence",
        report.coherent,
        if report.coherent { "diagnostics agree" } else { "diagnostics disagree" },
    );
    if let Some(p) = &report.plus {
        run.reconstruction_table("plus", p, m);
    }
    if let Some(q) = &report.minus {
        run.reconstruction_table("minus", q, m);
    }
    if !report.distance_profile.is_empty() {
        run.table("difference", &report.distance_profile);
    }
}

fn run_validate(cfg: &ExperimentConfig, run: &mut Run) {
    let Some(sm) = scattering_source(cfg, run) else { return };
    let report = validate(&sm, &cfg.validation_options());
    run.stage(
        "validate",
        report.passed,
        if report.passed { "ok".to_string() } else { report.failures.join("; ") },
    );
    run.put("smatrix", &sm);
    run.put("validation", report);
}

fn run_direct(cfg: &ExperimentConfig, run: &mut Run) {
    let Some(j) = jacobi_source(cfg, run) else { return };
    let Some(d) = run.attempt("extract", extract_smatrix_with(&j, &cfg.validation_options())) else {
        return;
    };
    run.side_files.push(("smatrix".into(), json!(d.smatrix)));
    run.put("jacobi", &j);
    run.put("direct", d);
}

fn run_inverse(cfg: &ExperimentConfig, run: &mut Run) {
    let Some(sm) = scattering_source(cfg, run) else { return };
    let ropts = cfg.reconstruction_options();
    let m = ropts.m as i64;
    let (plus, minus) = rayon::join(
        || reconstruct_jacobi(&sm.s_plus, &ropts),
        || reconstruct_dual(&sm.s_minus, &ropts),
    );
    let plus = run.attempt("reconstruct_plus", plus);
    let minus = run.attempt("reconstruct_minus", minus);
    if let (Some(a), Some(b)) = (&plus, &minus) {
        if let Ok(d) = distance(&a.jacobi, &b.jacobi, -m, m) {
            run.put("distance", d);
        }
    }
    if let Some(a) = &plus {
        run.reconstruction_table("plus", a, m);
    }
    if let Some(b) = &minus {
        run.reconstruction_table("minus", b, m);
    }
    run.put("plus", plus);
    run.put("minus", minus);
}

fn run_roundtrip(cfg: &ExperimentConfig, run: &mut Run) {
    let Some(j) = jacobi_source(cfg, run) else { return };
    let Some(d) = run.attempt("extract", extract_smatrix_with(&j, &cfg.validation_options())) else {
        return;
    };
    let uopts = cfg.uniqueness_options();
    let m = uopts.reconstruction.m as i64;
    let report = compare_reconstructions(&d.smatrix, &uopts);
    for (name, rec) in [("plus", &report.plus), ("minus", &report.minus)] {
        let stage = format!("match_{name}");
        match rec {
            Some(r) => match distance(&r.jacobi, &j, -m, m) {
                Ok(dist) => {
                    run.stage(
                        &stage,
                        dist < uopts.tol_match,
                        format!("distance to input {dist:.3e} (tolerance {:.1e})", uopts.tol_match),
                    );
                    run.put(&format!("distance_{name}"), dist);
                }
                Err(e) => run.stage(&stage, false, e.to_string()),
            },
            None => run.stage(&stage, false, "reconstruction failed"),
        }
    }
    if let Ok(rows) = j.table(-m, m) {
        run.table("input", &rows);
    }
    run.put("jacobi", &j);
    run.put("smatrix", &d.smatrix);
    run.put("provenance", &d.provenance);
    record_uniqueness(run, &report, m);
}

/// `max |q_n|` on `[lo, hi]` and `max |p_n - 1|` over couplings inside it.
fn restricted_free_deviation(j: &JacobiMatrix, lo: i64, hi: i64) -> Result<f64, JacobiError> {
    let mut dev: f64 = 0.0;
    for n in lo..=hi {
        dev = dev.max(j.q(n)?.abs());
        if n > lo {
            dev = dev.max((j.p(n)? - 1.0).abs());
        }
    }
    Ok(dev)
}

fn run_nonuniq(cfg: &ExperimentConfig, run: &mut Run) {
    let Some(sm) = scattering_source(cfg, run) else { return };
    let uopts = cfg.uniqueness_options();
    let m = uopts.reconstruction.m as i64;
    let report = compare_reconstructions(&sm, &uopts);
    // an analytic s₊ leaves J[s₊] free on n ≥ 1, an analytic s₋ leaves J[s₋] free on n ≤ -2
    let sides = [
        ("plus", &report.plus, 1, m, sm.s_plus.is_analytic()),
        ("minus", &report.minus, -m, -2, sm.s_minus.is_analytic()),
    ];
    let mut half_axis = serde_json::Map::new();
    for (name, rec, lo, hi, analytic) in sides {
        if !analytic {
            continue;
        }
        let stage = format!("half_axis_{name}");
        match rec.as_ref().map(|r| restricted_free_deviation(&r.jacobi, lo, hi)) {
            Some(Ok(dev)) => {
                run.stage(
                    &stage,
                    dev < uopts.tol_match,
                    format!("deviation from the free matrix on [{lo}, {hi}]: {dev:.3e}"),
                );
                half_axis.insert(name.into(), json!({ "range": [lo, hi], "deviation": dev }));
            }
            Some(Err(e)) => run.stage(&stage, false, e.to_string()),
            None => run.stage(&stage, false, "reconstruction failed"),
        }
    }
    run.put("smatrix", &sm);
    run.put("half_axis", half_axis);
    record_uniqueness(run, &report, m);
}

#[derive(Clone, Debug, Serialize)]
struct CandidateOutcome {
    candidate: String,
    verdict: Option<Verdict>,
    v_plus: Option<f64>,
    v_minus: Option<f64>,
    reconstruction_distance: Option<f64>,
    kernel_identity_defect: Option<f64>,
    transmission_unchanged: bool,
    left_reflection_analytic: bool,
    /// `max ||s₋Φ| - |s₋||` and the same for `s₊` on the grid.
    modulus_defect: Option<f64>,
    error: Option<String>,
}

fn modulus_defect(a: &CircleFunction, b: &CircleFunction, grid: usize) -> Result<f64, CircleError> {
    let size = crate::circle_fn::grid::grid_size_for(grid, &[a, b]);
    let sa = GridSampling::of(a, size)?;
    let sb = GridSampling::of(b, size)?;
    Ok(sa
        .values()
        .iter()
        .zip(sb.values())
        .fold(0.0f64, |acc, (x, y)| acc.max((x.norm() - y.norm()).abs())))
}

fn run_repair_search(cfg: &ExperimentConfig, run: &mut Run) {
    if cfg.candidates.is_empty() {
        run.stage("candidates", false, "empty candidate list");
        return;
    }
    let Some(sm) = scattering_source(cfg, run) else { return };
    let uopts = cfg.uniqueness_options();
    let vopts = cfg.validation_options();
    let base = compare_reconstructions(&sm, &uopts);
    let mut outcomes = Vec::new();
    let mut any_unique = false;
    for spec in &cfg.candidates {
        let mut out = CandidateOutcome {
            candidate: spec.to_string(),
            verdict: None,
            v_plus: None,
            v_minus: None,
            reconstruction_distance: None,
            kernel_identity_defect: None,
            transmission_unchanged: false,
            left_reflection_analytic: false,
            modulus_defect: None,
            error: None,
        };
        let repaired = spec
            .build(&cfg.inner_options())
            .map_err(SmatrixError::from)
            .and_then(|phi| repair(&sm, &phi, &vopts));
        match repaired {
            Ok(r) => {
                let report = compare_reconstructions(&r, &uopts);
                out.verdict = Some(report.verdict);
                out.v_plus = report.criterion.as_ref().map(|c| c.v_plus);
                out.v_minus = report.criterion.as_ref().map(|c| c.v_minus);
                out.reconstruction_distance = report.reconstruction_distance;
                out.kernel_identity_defect = report.kernel_identity.as_ref().map(|k| k.defect);
                out.transmission_unchanged = r.s == sm.s;
                out.left_reflection_analytic = r.s_minus.is_analytic();
                out.modulus_defect = modulus_defect(&r.s_minus, &sm.s_minus, cfg.numeric.grid)
                    .and_then(|a| Ok(a.max(modulus_defect(&r.s_plus, &sm.s_plus, cfg.numeric.grid)?)))
                    .ok();
                any_unique |= report.verdict == Verdict::Unique;
                run.stage(
                    &format!("candidate {spec}"),
                    out.transmission_unchanged,
                    format!("verdict {:?}", report.verdict),
                );
            }
            Err(e) => {
                out.error = Some(e.to_string());
                run.stage(&format!("candidate {spec}"), false, e.to_string());
            }
        }
        outcomes.push(out);
    }
    run.put("smatrix", &sm);
    run.put("base_verdict", base.verdict);
    run.put("base_criterion", &base.criterion);
    run.put("candidates", outcomes);
    run.put("any_unique", any_unique);
}

fn run_criterion(cfg: &ExperimentConfig, run: &mut Run) {
    let Some(sm) = scattering_source(cfg, run) else { return };
    let uopts = cfg.uniqueness_options();
    let kopts = &uopts.reconstruction.kernel;
    let n = uopts.reconstruction.n;
    let Some(c) = run.attempt("criterion", uniqueness_criterion(&sm, n, kopts)) else {
        return;
    };
    let dev = c.max_deviation();
    let verdict = if dev < uopts.tol_crit {
        Verdict::Unique
    } else if dev >= 10.0 * uopts.tol_crit {
        Verdict::NonUnique
    } else {
        Verdict::Inconclusive
    };
    run.inconclusive |= verdict == Verdict::Inconclusive;
    if sm.s_minus.is_analytic() && sm.s_minus.coeff(0) == 0.0 {
        if let Some(k) = run.attempt("kernel_identity", kernel_identity_check(&sm, n, kopts)) {
            run.put("kernel_identity", k);
        }
    }
    run.put("criterion", c);
    run.put("verdict", verdict);
}

/// Runs the experiment and writes its files. Stage failures end up in the
/// report; only config and I/O problems are returned as errors.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport, HarnessError> {
    cfg.validate()?;
    let mut cfg = cfg.clone();
    if matches!(cfg.experiment, ExperimentKind::Nonuniq | ExperimentKind::RepairSearch) {
        default_delta(&mut cfg);
    }
    let mut run = Run::new();
    match cfg.experiment {
        ExperimentKind::Validate => run_validate(&cfg, &mut run),
        ExperimentKind::Direct => run_direct(&cfg, &mut run),
        ExperimentKind::Inverse => run_inverse(&cfg, &mut run),
        ExperimentKind::Roundtrip => run_roundtrip(&cfg, &mut run),
        ExperimentKind::Nonuniq => run_nonuniq(&cfg, &mut run),
        ExperimentKind::RepairSearch => run_repair_search(&cfg, &mut run),
        ExperimentKind::Criterion => run_criterion(&cfg, &mut run),
    }

    let mut files = Vec::new();
    let mut writes = Vec::new();
    for (suffix, csv) in &run.tables {
        let path = output::table_path(&cfg.output, suffix);
        writes.push((path.clone(), csv.clone().into_bytes()));
        files.push(path);
    }
    for (suffix, value) in &run.side_files {
        let mut path = output::table_path(&cfg.output, suffix);
        path.set_extension("json");
        let mut text = serde_json::to_string_pretty(value).expect("values serialize");
        text.push('\n');
        writes.push((path.clone(), text.into_bytes()));
        files.push(path);
    }
    let report_path = output::report_path(&cfg.output);
    files.push(report_path.clone());
    let report = ExperimentReport {
        experiment: cfg.experiment,
        status: run.status(),
        config: cfg,
        stages: run.stages,
        result: Value::Object(run.result),
        files,
    };
    for (path, bytes) in writes {
        output::write_atomic(&path, &bytes)?;
    }
    output::write_json(&report_path, &report)?;
    Ok(report)
}

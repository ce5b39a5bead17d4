use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::circle_fn::{InnerOptions, InnerSpec};
use crate::hankel::{EpsilonSchedule, KernelOptions};
use crate::inverse::ReconstructionOptions;
use crate::smatrix::ValidationOptions;
use crate::uniqueness::UniquenessOptions;

use super::HarnessError;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ExperimentKind {
    Roundtrip,
    Nonuniq,
    RepairSearch,
    Criterion,
    Validate,
    Direct,
    Inverse,
}

impl ExperimentKind {
    pub fn name(self) -> &'static str {
        match self {
            Self::Roundtrip => "roundtrip",
            Self::Nonuniq => "nonuniq",
            Self::RepairSearch => "repair_search",
            Self::Criterion => "criterion",
            Self::Validate => "validate",
            Self::Direct => "direct",
            Self::Inverse => "inverse",
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct Tolerances {
    pub unitary: f64,
    pub outer: f64,
    pub inner: f64,
    pub kernel: f64,
    pub criterion: f64,
    #[serde(rename = "match")]
    pub match_: f64,
    pub density: f64,
    pub identity: f64,
    pub residual: f64,
    pub separation: f64,
}

impl Default for Tolerances {
    fn default() -> Self {
        let v = ValidationOptions::default();
        let u = UniquenessOptions::default();
        Self {
            unitary: v.tol_unitary,
            outer: v.tol_outer,
            inner: v.tol_inner,
            kernel: KernelOptions::default().tol_kernel,
            criterion: u.tol_crit,
            match_: u.tol_match,
            density: u.tol_density,
            identity: u.tol_identity,
            residual: u.tol_residual,
            separation: u.tol_separation,
        }
    }
}

impl Tolerances {
    fn named(&self) -> [(&'static str, f64); 10] {
        [
            ("unitary", self.unitary),
            ("outer", self.outer),
            ("inner", self.inner),
            ("kernel", self.kernel),
            ("criterion", self.criterion),
            ("match", self.match_),
            ("density", self.density),
            ("identity", self.identity),
            ("residual", self.residual),
            ("separation", self.separation),
        ]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NumericConfig {
    pub n: usize,
    pub m: usize,
    pub margin: usize,
    pub grid: usize,
    pub eps_schedule: EpsilonSchedule,
    pub degree_schedule: Vec<usize>,
    pub tolerances: Tolerances,
}

impl Default for NumericConfig {
    fn default() -> Self {
        let r = ReconstructionOptions::default();
        let u = UniquenessOptions::default();
        Self {
            n: r.n,
            m: r.m,
            margin: r.margin,
            grid: ValidationOptions::default().grid,
            eps_schedule: EpsilonSchedule::default(),
            degree_schedule: u.degree_schedule,
            tolerances: Tolerances::default(),
        }
    }
}

/// One experiment run. Every field has a default, so `{"experiment": "nonuniq"}`
/// is a complete config; the materialized config is echoed into the report.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub experiment: ExperimentKind,
    /// JSON file with a Jacobi matrix or a scattering matrix.
    #[serde(default)]
    pub input: Option<PathBuf>,
    /// Inner function for the analytic scattering matrix `((1+Δ)/2, (1-Δ)/2)`.
    #[serde(default)]
    pub delta: Option<InnerSpec>,
    /// Repair candidates.
    #[serde(default = "default_candidates")]
    pub candidates: Vec<InnerSpec>,
    #[serde(default)]
    pub numeric: NumericConfig,
    /// Output prefix: `<output>.json` plus `<output>_<table>.csv`.
    #[serde(default = "default_output")]
    pub output: PathBuf,
}

pub fn default_candidates() -> Vec<InnerSpec> {
    vec![
        InnerSpec::monomial(1),
        InnerSpec::monomial(2),
        InnerSpec::monomial(3),
        InnerSpec {
            degree: 1,
            zeros: vec![0.5],
        },
    ]
}

fn default_output() -> PathBuf {
    PathBuf::from("out")
}

impl ExperimentConfig {
    pub fn new(experiment: ExperimentKind) -> Self {
        Self {
            experiment,
            input: None,
            delta: None,
            candidates: default_candidates(),
            numeric: NumericConfig::default(),
            output: default_output(),
        }
    }

    pub fn from_file(path: &Path) -> Result<Self, HarnessError> {
        let text = fs::read_to_string(path).map_err(|source| HarnessError::Io {
            path: path.to_path_buf(),
            source,
        })?;
        let mut cfg: Self = serde_json::from_str(&text).map_err(|e| HarnessError::Json {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        // relative inputs are resolved against the config's directory
        if let (Some(input), Some(dir)) = (cfg.input.as_mut(), path.parent()) {
            if input.is_relative() {
                *input = dir.join(&*input);
            }
        }
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<(), HarnessError> {
        let num = &self.numeric;
        for (name, value) in num.tolerances.named() {
            if !(value > 0.0 && value.is_finite()) {
                return Err(HarnessError::Config(format!(
                    "tolerance {name} must be positive, got {value}"
                )));
            }
        }
        if num.m == 0 {
            return Err(HarnessError::Config("m must be positive".into()));
        }
        if num.n < 4 * num.m {
            return Err(HarnessError::Config(format!(
                "n = {} must be at least 4·m = {}",
                num.n,
                4 * num.m
            )));
        }
        if num.grid < 4 {
            return Err(HarnessError::Config(format!("grid {} is too small", num.grid)));
        }
        if num.degree_schedule.is_empty() || num.degree_schedule.windows(2).any(|w| w[1] <= w[0]) {
            return Err(HarnessError::Config(
                "degree schedule must be a nonempty increasing list".into(),
            ));
        }
        Ok(())
    }

    pub fn validation_options(&self) -> ValidationOptions {
        let t = &self.numeric.tolerances;
        ValidationOptions {
            tol_unitary: t.unitary,
            tol_outer: t.outer,
            tol_inner: t.inner,
            grid: self.numeric.grid,
        }
    }

    pub fn inner_options(&self) -> InnerOptions {
        InnerOptions {
            tol_inner: self.numeric.tolerances.inner,
            grid: self.numeric.grid,
            ..InnerOptions::default()
        }
    }

    pub fn kernel_options(&self) -> KernelOptions {
        KernelOptions {
            schedule: self.numeric.eps_schedule.clone(),
            tol_kernel: self.numeric.tolerances.kernel,
            ..KernelOptions::default()
        }
    }

    pub fn reconstruction_options(&self) -> ReconstructionOptions {
        ReconstructionOptions {
            m: self.numeric.m,
            n: self.numeric.n,
            margin: self.numeric.margin,
            kernel: self.kernel_options(),
        }
    }

    pub fn uniqueness_options(&self) -> UniquenessOptions {
        let t = &self.numeric.tolerances;
        UniquenessOptions {
            reconstruction: self.reconstruction_options(),
            tol_crit: t.criterion,
            tol_match: t.match_,
            tol_density: t.density,
            tol_identity: t.identity,
            tol_residual: t.residual,
            tol_separation: t.separation,
            degree_schedule: self.numeric.degree_schedule.clone(),
            grid: self.numeric.grid,
        }
    }
}

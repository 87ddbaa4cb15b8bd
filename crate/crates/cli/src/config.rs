//! Run configuration: a TOML document validated before any work starts.

use std::fmt;
use std::path::Path;

use levy_branching::rng::GENERATOR_ID;
use levy_branching::semigroup_solver::{OffspringLaw, SolverOptions, TestFunction};
use levy_branching::verify::{Suite, SuiteConfig, Thresholds};
use levy_branching::{Error, JumpMeasure, LevyModel, Orientation};
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

/// A configuration problem, located by its dotted field path.
#[derive(Debug, Clone, PartialEq)]
pub struct ConfigError {
    pub path: String,
    pub message: String,
}

impl ConfigError {
    pub fn new(path: &str, message: impl Into<String>) -> Self {
        Self { path: path.to_string(), message: message.into() }
    }
}

impl fmt::Display for ConfigError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.path.is_empty() {
            write!(f, "config error: {}", self.message)
        } else {
            write!(f, "config error at {}: {}", self.path, self.message)
        }
    }
}

impl std::error::Error for ConfigError {}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum MeasureSpec {
    Exponential { rate: f64, decay: f64 },
    Atoms { atoms: Vec<(f64, f64)> },
    Tabulated { points: Vec<(f64, f64)> },
}

impl MeasureSpec {
    pub fn build(&self) -> levy_branching::Result<JumpMeasure> {
        match self {
            MeasureSpec::Exponential { rate, decay } => JumpMeasure::exponential(*rate, *decay),
            MeasureSpec::Atoms { atoms } => JumpMeasure::atoms(atoms.clone()),
            MeasureSpec::Tabulated { points } => JumpMeasure::tabulated(points.clone()),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub orientation: Orientation,
    pub c: f64,
    #[serde(default)]
    pub start: f64,
    pub measure: MeasureSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GridSpec {
    pub step: f64,
    pub horizon: f64,
    pub x_max: f64,
    pub tol: f64,
    pub max_sweeps: usize,
}

impl Default for GridSpec {
    fn default() -> Self {
        Self { step: 1e-3, horizon: 1.0, x_max: 10.0, tol: 1e-10, max_sweeps: 200 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RngSpec {
    pub seed: u64,
    pub generator: String,
}

impl Default for RngSpec {
    fn default() -> Self {
        Self { seed: SuiteConfig::default().seed, generator: GENERATOR_ID.to_string() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct OutputSpec {
    pub dir: String,
}

impl Default for OutputSpec {
    fn default() -> Self {
        Self { dir: "out".into() }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SimulateSpec {
    pub paths: usize,
}

impl Default for SimulateSpec {
    fn default() -> Self {
        Self { paths: 1000 }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExtractSpec {
    pub input: Option<String>,
    pub levels: Vec<f64>,
    /// Write genealogy tables for the first this many paths.
    pub genealogy_paths: usize,
}

impl Default for ExtractSpec {
    fn default() -> Self {
        Self { input: None, levels: vec![0.0, 0.5, 1.0], genealogy_paths: 0 }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Equation {
    Cumulant,
    Moment,
    Occupation,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolveSpec {
    pub equation: Equation,
    pub f: TestFunction,
    /// Time weight for the occupation equation.
    pub h: Option<TestFunction>,
}

impl Default for SolveSpec {
    fn default() -> Self {
        Self {
            equation: Equation::Cumulant,
            f: TestFunction::CappedLinear { slope: 1.0, cap: 10.0 },
            h: None,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OffspringSpec {
    pub pmf: Vec<f64>,
    pub alpha: f64,
    pub eta: MeasureSpec,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CmjSpec {
    /// Explicit offspring law; the single-birth law of the truncated model
    /// when absent.
    pub offspring: Option<OffspringSpec>,
    pub initial: Option<Vec<f64>>,
    pub replicas: usize,
    pub horizon: Option<f64>,
    pub levels: Vec<f64>,
    pub budget: usize,
}

impl Default for CmjSpec {
    fn default() -> Self {
        Self {
            offspring: None,
            initial: None,
            replicas: 1,
            horizon: None,
            levels: vec![1.0],
            budget: levy_branching::cmj_sim::DEFAULT_POPULATION_BUDGET,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct VerifySpec {
    pub n_paths: usize,
    pub n_two_sample: usize,
    pub levels: Vec<f64>,
    pub upper: f64,
    pub q_values: Vec<f64>,
    pub z_cap: f64,
    pub p_floor: f64,
}

impl Default for VerifySpec {
    fn default() -> Self {
        let d = SuiteConfig::default();
        Self {
            n_paths: d.n_paths,
            n_two_sample: d.n_two_sample,
            levels: d.levels,
            upper: d.upper,
            q_values: d.q_values,
            z_cap: d.thresholds.z_cap,
            p_floor: d.thresholds.p_floor,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Label used in report file names.
    #[serde(default = "default_name")]
    pub name: String,
    pub model: ModelSpec,
    #[serde(default = "default_eps")]
    pub eps: f64,
    #[serde(default)]
    pub grid: GridSpec,
    #[serde(default)]
    pub rng: RngSpec,
    #[serde(default = "default_suite")]
    pub suite: String,
    #[serde(default)]
    pub output: OutputSpec,
    #[serde(default)]
    pub simulate: SimulateSpec,
    #[serde(default)]
    pub extract: ExtractSpec,
    #[serde(default)]
    pub solve: SolveSpec,
    #[serde(default)]
    pub cmj: CmjSpec,
    #[serde(default)]
    pub verify: VerifySpec,
}

fn default_name() -> String {
    "model".into()
}

fn default_eps() -> f64 {
    1e-9
}

fn default_suite() -> String {
    "all".into()
}

/// The command an override is meant for; `--levels` only touches that
/// command's section.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum Stage {
    #[default]
    Any,
    Extract,
    Cmj,
    Verify,
}

/// Command-line values that replace config fields.
#[derive(Clone, Debug, Default)]
pub struct Overrides {
    pub stage: Stage,
    pub paths: Option<usize>,
    pub seed: Option<u64>,
    pub eps: Option<f64>,
    pub levels: Option<Vec<f64>>,
    pub suite: Option<String>,
    pub out: Option<String>,
}

impl RunConfig {
    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        toml::from_str(text).map_err(|e| {
            let msg = e.message().to_string();
            let at = e.span().map(|s| line_of(text, s.start)).map(|l| format!("line {l}")).unwrap_or_default();
            ConfigError::new(&at, msg)
        })
    }

    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| ConfigError::new("", format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(n) = o.paths {
            self.simulate.paths = n;
            self.cmj.replicas = n;
            self.verify.n_paths = n;
        }
        if let Some(s) = o.seed {
            self.rng.seed = s;
        }
        if let Some(e) = o.eps {
            self.eps = e;
        }
        if let Some(l) = &o.levels {
            if matches!(o.stage, Stage::Any | Stage::Extract) {
                self.extract.levels = l.clone();
            }
            if matches!(o.stage, Stage::Any | Stage::Cmj) {
                self.cmj.levels = l.clone();
            }
            if matches!(o.stage, Stage::Any | Stage::Verify) {
                self.verify.levels = l.clone();
            }
        }
        if let Some(s) = &o.suite {
            self.suite = s.clone();
        }
        if let Some(d) = &o.out {
            self.output.dir = d.clone();
        }
    }

    /// Builds the model and checks every field that later stages rely on.
    pub fn validate(&self) -> Result<LevyModel, ConfigError> {
        let m = &self.model;
        if !(m.c > 0.0 && m.c.is_finite()) {
            return Err(ConfigError::new("model.c", "must be positive and finite"));
        }
        let measure = m.measure.build().map_err(|e| ConfigError::new("model.measure", strip(e)))?;
        let model = LevyModel::new(m.c, measure, m.orientation, m.start).map_err(|e| ConfigError::new("model", strip(e)))?;
        if !(self.eps > 0.0) {
            return Err(ConfigError::new("eps", "must be positive"));
        }
        let g = &self.grid;
        for (name, v) in [("grid.step", g.step), ("grid.horizon", g.horizon), ("grid.x_max", g.x_max), ("grid.tol", g.tol)] {
            if !(v > 0.0 && v.is_finite()) {
                return Err(ConfigError::new(name, "must be positive and finite"));
            }
        }
        if self.rng.generator != GENERATOR_ID {
            return Err(ConfigError::new(
                "rng.generator",
                format!("unsupported generator {:?}, this build provides {GENERATOR_ID:?}", self.rng.generator),
            ));
        }
        self.suite()?;
        for (name, levels) in [("extract.levels", &self.extract.levels), ("cmj.levels", &self.cmj.levels), ("verify.levels", &self.verify.levels)] {
            if levels.iter().any(|&t| !(t >= 0.0 && t.is_finite())) {
                return Err(ConfigError::new(name, "levels must be finite and >= 0"));
            }
        }
        if self.verify.levels.iter().any(|&t| t == 0.0) {
            return Err(ConfigError::new("verify.levels", "levels must be > 0"));
        }
        if self.simulate.paths == 0 || self.verify.n_paths == 0 || self.cmj.replicas == 0 {
            return Err(ConfigError::new("paths", "path and replica counts must be >= 1"));
        }
        if self.solve.equation == Equation::Occupation && self.solve.h.is_none() {
            return Err(ConfigError::new("solve.h", "the occupation equation needs a time weight h"));
        }
        Ok(model)
    }

    pub fn suite(&self) -> Result<Suite, ConfigError> {
        self.suite.parse().map_err(|e: Error| ConfigError::new("suite", strip(e)))
    }

    pub fn solver_options(&self) -> SolverOptions {
        SolverOptions { step: self.grid.step, tol: self.grid.tol, max_sweeps: self.grid.max_sweeps, record_iterates: false }
    }

    pub fn suite_config(&self) -> SuiteConfig {
        let v = &self.verify;
        SuiteConfig {
            n_paths: v.n_paths,
            n_two_sample: v.n_two_sample,
            seed: self.rng.seed,
            eps: self.eps,
            levels: v.levels.clone(),
            upper: v.upper,
            q_values: v.q_values.clone(),
            thresholds: Thresholds { z_cap: v.z_cap, p_floor: v.p_floor },
            solver: self.solver_options(),
        }
    }

    pub fn offspring(&self, model: &LevyModel) -> Result<OffspringLaw, ConfigError> {
        match &self.cmj.offspring {
            Some(o) => {
                let eta = o.eta.build().map_err(|e| ConfigError::new("cmj.offspring.eta", strip(e)))?;
                OffspringLaw::new(o.pmf.clone(), o.alpha, eta).map_err(|e| ConfigError::new("cmj.offspring", strip(e)))
            }
            None => {
                let truncated = model.truncated(self.eps).map_err(|e| ConfigError::new("eps", strip(e)))?;
                OffspringLaw::single_birth(&truncated).map_err(|e| ConfigError::new("cmj", strip(e)))
            }
        }
    }

    /// SHA-256 of the resolved configuration in canonical JSON form.
    pub fn hash(&self) -> String {
        let canonical = serde_json::to_string(self).expect("config serializes");
        hex::encode(Sha256::digest(canonical.as_bytes()))
    }
}

fn strip(e: Error) -> String {
    match e {
        Error::InvalidModel(m) | Error::InvalidArgument(m) => m,
        other => other.to_string(),
    }
}

fn line_of(text: &str, offset: usize) -> usize {
    text[..offset.min(text.len())].matches('\n').count() + 1
}

#[cfg(test)]
mod tests {
    use super::*;

    const MODEL_A: &str = r#"
[model]
orientation = "subordinator_negative_drift"
c = 2.0
start = 2.0
measure = { kind = "exponential", rate = 1.0, decay = 1.0 }
"#;

    #[test]
    fn minimal_config_gets_defaults() {
        let cfg = RunConfig::parse(MODEL_A).unwrap();
        assert_eq!(cfg.eps, 1e-9);
        assert_eq!(cfg.suite, "all");
        assert_eq!(cfg.grid, GridSpec::default());
        let m = cfg.validate().unwrap();
        assert_eq!(m.drift(), 2.0);
    }

    #[test]
    fn unknown_fields_rejected() {
        let text = format!("{MODEL_A}\n[grid]\nstepp = 0.1\n");
        let e = RunConfig::parse(&text).unwrap_err();
        assert!(e.message.contains("stepp"), "{e}");
        assert!(e.path.starts_with("line"), "{e}");
    }

    #[test]
    fn critical_drift_is_a_config_error() {
        let text = MODEL_A.replace("c = 2.0", "c = 1.0");
        let e = RunConfig::parse(&text).unwrap().validate().unwrap_err();
        assert_eq!(e.path, "model");
        assert!(e.message.contains("critical drift not supported"), "{e}");
    }

    #[test]
    fn unknown_suite_and_bad_grid() {
        let mut cfg = RunConfig::parse(MODEL_A).unwrap();
        cfg.suite = "everything".into();
        assert_eq!(cfg.validate().unwrap_err().path, "suite");
        cfg.suite = "hitting".into();
        cfg.grid.step = 0.0;
        assert_eq!(cfg.validate().unwrap_err().path, "grid.step");
    }

    #[test]
    fn overrides_change_the_hash() {
        let mut cfg = RunConfig::parse(MODEL_A).unwrap();
        let h = cfg.hash();
        cfg.apply(&Overrides { seed: Some(7), ..Overrides::default() });
        assert_eq!(cfg.rng.seed, 7);
        assert_ne!(cfg.hash(), h);
    }
}

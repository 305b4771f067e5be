//! Study configuration files and their diagnostics.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::dist::UncertainParameter;
use crate::error::{Error, Result};
use crate::models::DispersionConstants;
use crate::propagation::{GridLevels, InnerLoop, OptimizeSettings};
use crate::screening::Thresholds;
use crate::verification::{GridStudy, DEFAULT_FACTOR_OF_SAFETY};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct StudyConfig {
    /// Name of the quantity of interest.
    pub qoi: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub description: Option<String>,
    /// Master seed; `--seed` overrides it.
    #[serde(default)]
    pub seed: u64,
    pub model: ModelConfig,
    #[serde(default)]
    pub parameters: Vec<UncertainParameter>,
    /// Model inputs held at a constant value.
    #[serde(default)]
    pub fixed: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub screening: Option<ScreeningConfig>,
    #[serde(default)]
    pub propagation: PropagationConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verification: Option<VerificationConfig>,
    #[serde(default)]
    pub report: ReportConfig,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelConfig {
    /// The synthetic dispersion surrogate.
    Dispersion {
        #[serde(default)]
        inputs: DispersionNames,
        #[serde(default)]
        constants: DispersionConstants,
    },
    /// Digit classifier with a bootstrap of its precision.
    Classification {
        /// Directory holding the four MNIST IDX files, relative to the
        /// config file.
        data_dir: PathBuf,
        #[serde(default = "default_train_size")]
        train_size: usize,
        #[serde(default)]
        train: TrainSettings,
        #[serde(default = "default_resamples")]
        resamples: usize,
    },
    /// A program speaking the line-JSON protocol.
    External {
        command: Vec<String>,
        /// Inputs sent to the program; all parameters and fixed values by
        /// default.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        inputs: Option<Vec<String>>,
        #[serde(default = "default_timeout")]
        timeout_secs: f64,
        /// Relative to the config file; defaults to its directory.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        working_dir: Option<PathBuf>,
    },
    /// Polynomial response surface `intercept + Σ cᵢxᵢ + Σ c·Πxⱼ`.
    Custom {
        #[serde(default)]
        intercept: f64,
        #[serde(default)]
        coefficients: BTreeMap<String, f64>,
        #[serde(default)]
        products: Vec<ProductTerm>,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProductTerm {
    pub inputs: Vec<String>,
    #[serde(default = "one")]
    pub coefficient: f64,
}

/// Which study names feed the surrogate's three inputs.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DispersionNames {
    pub ubar: String,
    pub ti: String,
    pub l: String,
}

impl Default for DispersionNames {
    fn default() -> Self {
        Self {
            ubar: "Ubar".into(),
            ti: "TI".into(),
            l: "L".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainSettings {
    pub epochs: usize,
    pub learning_rate: f64,
    pub batch_size: usize,
}

impl Default for TrainSettings {
    fn default() -> Self {
        let d = crate::models::TrainConfig::default();
        Self {
            epochs: d.epochs,
            learning_rate: d.learning_rate,
            batch_size: d.batch_size,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ScreeningConfig {
    pub trajectories: usize,
    pub levels: usize,
    pub thresholds: Thresholds,
}

impl Default for ScreeningConfig {
    fn default() -> Self {
        Self {
            trajectories: 10,
            levels: 4,
            thresholds: Thresholds::default(),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PropagationConfig {
    pub inner: InnerLoop,
    pub outer: GridLevels,
    /// Searches of the epistemic box, reported next to the ensemble.
    #[serde(skip_serializing_if = "Vec::is_empty")]
    pub optimize: Vec<OptimizeSettings>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerificationConfig {
    pub grid: GridStudy,
    #[serde(default = "default_fs")]
    pub factor_of_safety: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReportConfig {
    /// Coverage factor of the expanded uncertainty.
    pub k: f64,
    /// Central coverage of bootstrap intervals.
    pub coverage: f64,
}

impl Default for ReportConfig {
    fn default() -> Self {
        Self { k: 2.0, coverage: 0.95 }
    }
}

fn default_train_size() -> usize {
    6000
}

fn default_resamples() -> usize {
    50
}

fn default_timeout() -> f64 {
    60.0
}

fn default_fs() -> f64 {
    DEFAULT_FACTOR_OF_SAFETY
}

fn one() -> f64 {
    1.0
}

/// A located config problem. `pointer` is a JSON pointer into the file.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct Diagnostic {
    pub pointer: String,
    pub message: String,
}

impl Diagnostic {
    fn new(pointer: impl Into<String>, message: impl std::fmt::Display) -> Self {
        Self {
            pointer: pointer.into(),
            message: message.to_string(),
        }
    }
}

impl From<Diagnostic> for Error {
    fn from(d: Diagnostic) -> Self {
        Error::Config {
            pointer: d.pointer,
            message: d.message,
        }
    }
}

fn escape(token: &str) -> String {
    token.replace('~', "~0").replace('/', "~1")
}

fn pointer_of(path: &serde_path_to_error::Path) -> String {
    use serde_path_to_error::Segment;
    let mut out = String::new();
    for seg in path.iter() {
        match seg {
            Segment::Seq { index } => out.push_str(&format!("/{index}")),
            Segment::Map { key } => out.push_str(&format!("/{}", escape(key))),
            Segment::Enum { .. } | Segment::Unknown => {}
        }
    }
    out
}

/// Parses config text. Syntax and type errors come back as a single
/// diagnostic at the offending location.
pub fn parse_config(text: &str) -> std::result::Result<StudyConfig, Diagnostic> {
    let de = &mut serde_json::Deserializer::from_str(text);
    let parsed: std::result::Result<StudyConfig, _> = serde_path_to_error::deserialize(de);
    parsed.map_err(|e| {
        let pointer = pointer_of(e.path());
        let inner = e.into_inner();
        let message = inner.to_string();
        // serde_json appends " at line L column C"; keep it, it helps
        Diagnostic::new(pointer, message)
    })
}

impl StudyConfig {
    /// Semantic checks that parsing cannot express. An empty list means the
    /// config is runnable.
    pub fn diagnostics(&self) -> Vec<Diagnostic> {
        let mut out = Vec::new();
        if self.qoi.trim().is_empty() {
            out.push(Diagnostic::new("/qoi", "QOI name must not be empty"));
        }
        let mut seen = BTreeMap::new();
        for (i, p) in self.parameters.iter().enumerate() {
            if let Err(v) = p.validate() {
                out.push(Diagnostic::new(format!("/parameters/{i}/{}", v.field), v.message));
            }
            if seen.insert(p.name.as_str(), i).is_some() {
                out.push(Diagnostic::new(format!("/parameters/{i}/name"), format!("duplicate parameter name `{}`", p.name)));
            }
            if self.fixed.contains_key(&p.name) {
                out.push(Diagnostic::new(
                    format!("/parameters/{i}/name"),
                    format!("`{}` is both uncertain and fixed", p.name),
                ));
            }
        }
        for (i, p) in self.parameters.iter().enumerate() {
            if let crate::dist::ParameterSpec::Derived(f) = &p.spec {
                for input in f.inputs() {
                    let ok = self
                        .parameters
                        .iter()
                        .any(|q| q.name == input && !q.is_epistemic() && !q.is_derived());
                    if !ok {
                        out.push(Diagnostic::new(
                            format!("/parameters/{i}/spec"),
                            format!("derived input `{input}` is not a sampled aleatory parameter"),
                        ));
                    }
                }
            }
        }
        for (name, v) in &self.fixed {
            if !v.is_finite() {
                out.push(Diagnostic::new(format!("/fixed/{}", escape(name)), "fixed value must be finite"));
            }
        }

        let known = |n: &str| self.parameters.iter().any(|p| p.name == n) || self.fixed.contains_key(n);
        match &self.model {
            ModelConfig::Dispersion { inputs, .. } => {
                for (field, name) in [("ubar", &inputs.ubar), ("ti", &inputs.ti), ("l", &inputs.l)] {
                    if !known(name) {
                        out.push(Diagnostic::new(
                            format!("/model/inputs/{field}"),
                            format!("`{name}` is neither a parameter nor a fixed value"),
                        ));
                    }
                }
            }
            ModelConfig::Classification {
                train_size,
                train,
                resamples,
                ..
            } => {
                if !self.parameters.is_empty() {
                    out.push(Diagnostic::new(
                        "/parameters",
                        "classification studies take their uncertainty from the bootstrap; remove the parameters",
                    ));
                }
                if *train_size == 0 {
                    out.push(Diagnostic::new("/model/train_size", "must be at least 1"));
                }
                if *resamples == 0 {
                    out.push(Diagnostic::new("/model/resamples", "must be at least 1"));
                }
                if let Err(e) = train_config(train, 0).validate() {
                    out.push(Diagnostic::new("/model/train", e));
                }
            }
            ModelConfig::External {
                command,
                inputs,
                timeout_secs,
                ..
            } => {
                if command.is_empty() {
                    out.push(Diagnostic::new("/model/command", "command must not be empty"));
                }
                if !(timeout_secs.is_finite() && *timeout_secs > 0.0) {
                    out.push(Diagnostic::new("/model/timeout_secs", "must be positive"));
                }
                for (i, name) in inputs.iter().flatten().enumerate() {
                    if !known(name) {
                        out.push(Diagnostic::new(
                            format!("/model/inputs/{i}"),
                            format!("`{name}` is neither a parameter nor a fixed value"),
                        ));
                    }
                }
            }
            ModelConfig::Custom {
                coefficients, products, ..
            } => {
                for name in coefficients.keys() {
                    if !known(name) {
                        out.push(Diagnostic::new(
                            format!("/model/coefficients/{}", escape(name)),
                            format!("`{name}` is neither a parameter nor a fixed value"),
                        ));
                    }
                }
                for (i, t) in products.iter().enumerate() {
                    for (j, name) in t.inputs.iter().enumerate() {
                        if !known(name) {
                            out.push(Diagnostic::new(
                                format!("/model/products/{i}/inputs/{j}"),
                                format!("`{name}` is neither a parameter nor a fixed value"),
                            ));
                        }
                    }
                }
            }
        }

        if let Some(s) = &self.screening {
            if s.levels < 4 || s.levels % 2 == 1 {
                out.push(Diagnostic::new("/screening/levels", "levels must be even and at least 4"));
            }
            if s.trajectories < 2 {
                out.push(Diagnostic::new("/screening/trajectories", "at least 2 trajectories are needed"));
            }
            if !(s.thresholds.sigma_ratio.is_finite() && s.thresholds.sigma_ratio >= 0.0) {
                out.push(Diagnostic::new("/screening/thresholds/sigma_ratio", "must be non-negative"));
            }
        }

        match &self.propagation.inner {
            InnerLoop::Progressive(cfg) => {
                if let Err(e) = cfg.validate() {
                    out.push(Diagnostic::new("/propagation/inner/progressive", e));
                }
            }
            InnerLoop::Fixed { n: 0 } => out.push(Diagnostic::new("/propagation/inner/fixed/n", "must be at least 1")),
            InnerLoop::Fixed { .. } => {}
        }
        let dim = self.parameters.iter().filter(|p| p.is_epistemic()).count();
        match &self.propagation.outer {
            GridLevels::Uniform(0) => out.push(Diagnostic::new("/propagation/outer", "grid levels must be at least 1")),
            GridLevels::PerDimension(v) if v.len() != dim => out.push(Diagnostic::new(
                "/propagation/outer",
                format!("{} level counts for {dim} epistemic parameters", v.len()),
            )),
            GridLevels::PerDimension(v) => {
                if let Some(i) = v.iter().position(|&l| l == 0) {
                    out.push(Diagnostic::new(format!("/propagation/outer/{i}"), "grid levels must be at least 1"));
                }
            }
            GridLevels::Uniform(_) => {}
        }
        for (i, o) in self.propagation.optimize.iter().enumerate() {
            if dim == 0 {
                out.push(Diagnostic::new(format!("/propagation/optimize/{i}"), "the study has no epistemic parameters"));
            }
            if o.grid_levels == 0 || o.starts == 0 || o.max_evaluations == 0 {
                out.push(Diagnostic::new(
                    format!("/propagation/optimize/{i}"),
                    "grid_levels, starts and max_evaluations must be positive",
                ));
            }
            if !(o.initial_step > 0.0 && o.tolerance > 0.0) {
                out.push(Diagnostic::new(format!("/propagation/optimize/{i}"), "initial_step and tolerance must be positive"));
            }
        }

        if let Some(v) = &self.verification {
            if let Err(e) = v.grid.refinement_ratio() {
                out.push(Diagnostic::new("/verification/grid", e));
            }
            if !(v.factor_of_safety.is_finite() && v.factor_of_safety > 0.0) {
                out.push(Diagnostic::new("/verification/factor_of_safety", "must be positive"));
            }
        }
        if !(self.report.k.is_finite() && self.report.k > 0.0) {
            out.push(Diagnostic::new("/report/k", "coverage factor must be positive"));
        }
        if !(self.report.coverage > 0.0 && self.report.coverage < 1.0) {
            out.push(Diagnostic::new("/report/coverage", "coverage must lie in (0, 1)"));
        }
        out
    }
}

pub(crate) fn train_config(t: &TrainSettings, seed: u64) -> crate::models::TrainConfig {
    crate::models::TrainConfig {
        epochs: t.epochs,
        learning_rate: t.learning_rate,
        batch_size: t.batch_size,
        seed,
    }
}

/// A parsed, checked config with what the report records about its file.
#[derive(Clone, Debug)]
pub struct LoadedConfig {
    pub config: StudyConfig,
    /// Directory that relative paths in the config resolve against.
    pub base_dir: PathBuf,
    pub file_name: String,
    /// Hex SHA-256 of the file bytes.
    pub sha256: String,
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    Sha256::digest(bytes).iter().map(|b| format!("{b:02x}")).collect()
}

/// Reads a config and lists every problem found. I/O failures are errors;
/// everything else is a diagnostic.
pub fn validate_config(path: &Path) -> Result<Vec<Diagnostic>> {
    let text = std::fs::read_to_string(path).map_err(Error::at_path(path))?;
    Ok(match parse_config(&text) {
        Ok(cfg) => cfg.diagnostics(),
        Err(d) => vec![d],
    })
}

/// Reads and checks a config; the first diagnostic becomes the error.
pub fn load_config(path: &Path) -> Result<LoadedConfig> {
    let bytes = std::fs::read(path).map_err(Error::at_path(path))?;
    let text = String::from_utf8(bytes.clone()).map_err(|_| Diagnostic::new("", "config is not UTF-8"))?;
    let config = parse_config(&text)?;
    if let Some(d) = config.diagnostics().into_iter().next() {
        return Err(d.into());
    }
    let base_dir = path.parent().map(Path::to_path_buf).unwrap_or_default();
    let base_dir = if base_dir.as_os_str().is_empty() { PathBuf::from(".") } else { base_dir };
    Ok(LoadedConfig {
        config,
        base_dir,
        file_name: path.file_name().map(|s| s.to_string_lossy().into_owned()).unwrap_or_default(),
        sha256: sha256_hex(&bytes),
    })
}

//! Declarative studies: a JSON config in, a directory of CSV/JSON/SVG
//! artifacts with a checksummed manifest out.
//!
//! ```no_run
//! use std::path::Path;
//! use uqflow::report::{run_study, RunOptions};
//!
//! let report = run_study(Path::new("configs/dispersion.json"), Path::new("out/dispersion"), &RunOptions::default())?;
//! println!("{:?}", report.propagation.unwrap().expanded);
//! # Ok::<(), uqflow::Error>(())
//! ```

mod config;
mod manifest;
pub mod plot;
mod run;

use serde::{Deserialize, Serialize};

pub use config::{
    load_config, parse_config, sha256_hex, validate_config, Diagnostic, DispersionNames, LoadedConfig, ModelConfig,
    ProductTerm, PropagationConfig, ReportConfig, ScreeningConfig, StudyConfig, TrainSettings, VerificationConfig,
};
pub use manifest::{check_manifest, write_manifest, Manifest, ManifestEntry, MANIFEST_FILE};
pub use run::{plot_report, prepare_output_dir, render_plots, run_loaded, run_study, Formats, RunOptions, FAILED_MARKER, REPORT_FILE};

use crate::dist::{Category, Classification, ParameterSpec};
use crate::metrics::ClassMetrics;
use crate::propagation::{ExpandedUncertainty, InnerLoop, OptimizeSettings, Optimum, PBox};
use crate::resampling::{IntervalSummary, SamplingDistribution};
use crate::screening::ScreeningClass;
use crate::verification::{GciResult, GridStudy};

pub const TOOL_NAME: &str = "uqflow";

/// Everything a study produced, as written to `report.json`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StudyReport {
    pub tool: String,
    pub version: String,
    pub config_file: String,
    pub config_sha256: String,
    pub seed: u64,
    pub qoi: String,
    pub model: String,
    pub warnings: Vec<String>,
    pub characterization: Vec<CharacterizedParameter>,
    pub screening: Option<ScreeningReport>,
    pub propagation: Option<PropagationReport>,
    pub verification: Option<VerificationReport>,
    pub classification: Option<ClassificationReport>,
    /// Artifacts written next to the report (the manifest lists them all).
    pub files: Vec<String>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CharacterizedParameter {
    pub name: String,
    /// `aleatory`, `derived`, `epistemic` or `fixed`.
    pub role: String,
    pub category: Option<Category>,
    pub classification: Option<Classification>,
    pub spec: Option<ParameterSpec>,
    /// Mean of a probabilistic characterization, or the fixed value.
    pub mean: Option<f64>,
    /// Support bounds; `None` where infinite or not applicable.
    pub lower: Option<f64>,
    pub upper: Option<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScreeningReport {
    pub trajectories: usize,
    pub levels: usize,
    pub evaluations: usize,
    pub inputs: Vec<ScreenedInput>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScreenedInput {
    pub name: String,
    /// Range the normalized design was mapped into.
    pub range: (f64, f64),
    pub mu: f64,
    pub mu_star: f64,
    pub sigma: f64,
    pub class: ScreeningClass,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PropagationReport {
    pub inner: InnerLoop,
    pub epistemic_names: Vec<String>,
    pub members: Vec<MemberReport>,
    pub pbox: PBox,
    /// QOI intervals where the p-box envelopes reach 5 %, 50 % and 95 %.
    pub quantile_intervals: Vec<QuantileInterval>,
    pub expanded: Option<ExpandedUncertainty>,
    pub optimization: Vec<OptimizationReport>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MemberReport {
    pub epistemic: Vec<f64>,
    pub n: usize,
    pub mean: f64,
    pub std: Option<f64>,
    pub converged: Option<bool>,
    /// Sorted realizations.
    pub values: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct QuantileInterval {
    pub p: f64,
    pub lower: f64,
    pub upper: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OptimizationReport {
    pub settings: OptimizeSettings,
    pub optimum: Optimum,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub grid: GridStudy,
    pub gci: GciResult,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub train_size: usize,
    pub test_size: usize,
    pub baseline: BaselineReport,
    pub bootstrap: BootstrapReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BaselineReport {
    pub macro_precision: f64,
    pub accuracy: Option<f64>,
    /// Classes excluded from the macro average (never predicted).
    pub excluded: Vec<usize>,
    pub per_class: Vec<ClassMetrics>,
    /// Classes ordered from the lowest precision; undefined precisions last.
    pub precision_ranking: Vec<usize>,
    pub final_training_loss: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BootstrapReport {
    pub resamples: usize,
    pub macro_precision: SamplingDistribution,
    pub interval: IntervalSummary,
    /// Per-class precision over the replicates where it is defined.
    pub per_class: Vec<Option<SamplingDistribution>>,
    /// Replicates in which each class was never predicted.
    pub undefined_counts: Vec<usize>,
}

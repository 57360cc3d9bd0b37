//! TOML run configuration. Every field is optional; command-line flags
//! override values read from the file.

use std::path::Path;

use serde::Deserialize;

use crate::CliError;

#[derive(Debug, Clone, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct FileConfig {
    #[serde(default)]
    pub problem: ProblemConfig,
    #[serde(default)]
    pub solver: SolverConfig,
    #[serde(default)]
    pub lyapunov: CandidateConfig,
    #[serde(default)]
    pub stability: StabilityConfig,
    pub output: Option<OutputConfig>,
}

#[derive(Debug, Clone, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ProblemConfig {
    pub builtin: Option<String>,
    pub q: Option<f64>,
    #[serde(rename = "A")]
    pub a: Option<f64>,
    pub gains: Option<Vec<f64>>,
    pub x0: Option<f64>,
    pub t0: Option<f64>,
    pub horizon: Option<f64>,
    pub impulses: Option<usize>,
    pub schedule: Option<ScheduleConfig>,
}

/// Flow starts `s` (first entry 0), impulse starts `t`, horizon.
#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ScheduleConfig {
    pub s: Vec<f64>,
    pub t: Vec<f64>,
    pub horizon: f64,
}

#[derive(Debug, Clone, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct SolverConfig {
    /// Total step budget over the horizon.
    pub steps: Option<usize>,
}

/// `form` is `quadratic`, or `weighted_quadratic` with
/// `m(t) = m_const + m_sin sin(t) + m_cos cos(t)`.
#[derive(Debug, Clone, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct CandidateConfig {
    pub form: Option<String>,
    pub m_const: Option<f64>,
    pub m_sin: Option<f64>,
    pub m_cos: Option<f64>,
    pub lipschitz_hint: Option<f64>,
}

#[derive(Debug, Clone, Default, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct StabilityConfig {
    pub tol: Option<f64>,
    pub epsilon: Option<f64>,
    pub t0_samples: Option<Vec<f64>>,
    pub deltas: Option<Vec<f64>>,
}

#[derive(Debug, Clone, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    pub path: Option<String>,
    pub format: Option<String>,
}

pub fn load(path: &Path) -> Result<FileConfig, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

//! Experiment specification and its TOML file format.
//!
//! ```toml
//! algorithms = ["ULA", "TULA", "TULAc"]
//! step_sizes = [0.001, 0.01, 0.1]
//! n_steps = 100000
//! n_chains = 10
//! master_seed = 1
//! burn_in = 0                       # optional
//! tracked_coordinates = [0, 99]     # optional, default first and last
//! divergence_threshold = 1e5        # optional
//! acceptance_floor = 0.05           # optional
//!
//! [model]
//! name = "double_well"              # gaussian | ill_conditioned_gaussian | double_well | ginzburg_landau
//! dimension = 100
//!
//! [[starts]]
//! kind = "origin"                   # origin | axis | random_norm
//!
//! [[starts]]
//! kind = "axis"
//! radius = 100.0
//!
//! [output]                          # optional
//! dir = "out"
//! csv = "summary.csv"
//! json = "report.json"
//! format = "both"                   # csv | json | both
//! persist_raw = false
//!
//! [checks]                          # optional
//! radii = [1.0, 10.0, 100.0, 1000.0]
//! directions = 64
//! closeness_points = 1000
//! ```

use std::collections::HashSet;
use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::drift::{DriftKind, DEFAULT_DIRECTIONS, DEFAULT_RADII};
use crate::error::{Error, Result};
use crate::kernels::{Adjustment, DEFAULT_ACCEPTANCE_FLOOR, DEFAULT_DIVERGENCE_THRESHOLD};
use crate::potentials::{
    make_double_well, make_gaussian, make_ginzburg_landau, make_ill_conditioned_gaussian,
    make_linear_gaussian, TargetModel, DEFAULT_GL_ALPHA, DEFAULT_GL_LAMBDA, DEFAULT_GL_TAU,
};

/// The benchmarked samplers.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Algorithm {
    #[serde(rename = "ULA")]
    Ula,
    #[serde(rename = "TULA")]
    Tula,
    #[serde(rename = "TULAc")]
    Tulac,
    #[serde(rename = "MALA")]
    Mala,
    #[serde(rename = "RWM")]
    Rwm,
    #[serde(rename = "TMALA")]
    Tmala,
    #[serde(rename = "TMALAc")]
    Tmalac,
    #[serde(rename = "TULA_partial")]
    TulaPartial,
}

impl Algorithm {
    pub const ALL: [Algorithm; 8] = [
        Algorithm::Ula,
        Algorithm::Tula,
        Algorithm::Tulac,
        Algorithm::Mala,
        Algorithm::Rwm,
        Algorithm::Tmala,
        Algorithm::Tmalac,
        Algorithm::TulaPartial,
    ];

    pub fn name(&self) -> &'static str {
        match self {
            Algorithm::Ula => "ULA",
            Algorithm::Tula => "TULA",
            Algorithm::Tulac => "TULAc",
            Algorithm::Mala => "MALA",
            Algorithm::Rwm => "RWM",
            Algorithm::Tmala => "TMALA",
            Algorithm::Tmalac => "TMALAc",
            Algorithm::TulaPartial => "TULA_partial",
        }
    }

    /// Stable identifier used in seed derivation; independent of list order.
    pub fn id(&self) -> u64 {
        Self::ALL.iter().position(|a| a == self).unwrap() as u64
    }

    pub fn drift_kind(&self) -> DriftKind {
        match self {
            Algorithm::Ula | Algorithm::Mala | Algorithm::Rwm => DriftKind::Raw,
            Algorithm::Tula | Algorithm::Tmala => DriftKind::TamedGlobal,
            Algorithm::Tulac | Algorithm::Tmalac => DriftKind::TamedCoordinatewise,
            Algorithm::TulaPartial => DriftKind::PartialDoubleWell,
        }
    }

    pub fn adjustment(&self) -> Adjustment {
        match self {
            Algorithm::Ula | Algorithm::Tula | Algorithm::Tulac | Algorithm::TulaPartial => {
                Adjustment::None
            }
            Algorithm::Mala | Algorithm::Tmala | Algorithm::Tmalac => Adjustment::MetropolisLangevin,
            Algorithm::Rwm => Adjustment::MetropolisRandomWalk,
        }
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .iter()
            .find(|a| a.name() == s)
            .copied()
            .ok_or_else(|| Error::InvalidConfiguration(format!("unknown algorithm {s:?}")))
    }
}

fn default_smallest_variance() -> f64 {
    1e-5
}
fn default_tau() -> f64 {
    DEFAULT_GL_TAU
}
fn default_alpha() -> f64 {
    DEFAULT_GL_ALPHA
}
fn default_lambda() -> f64 {
    DEFAULT_GL_LAMBDA
}

/// Model selection by name plus parameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "name", rename_all = "snake_case", deny_unknown_fields)]
pub enum ModelConfig {
    /// Covariance `diag(variances)`, or `diag(1, …, d)` when omitted.
    Gaussian {
        dimension: usize,
        #[serde(default, skip_serializing_if = "Option::is_none")]
        variances: Option<Vec<f64>>,
    },
    /// Covariance `diag(smallest_variance, 1, …, 1)`.
    IllConditionedGaussian {
        dimension: usize,
        #[serde(default = "default_smallest_variance")]
        smallest_variance: f64,
    },
    DoubleWell {
        dimension: usize,
    },
    GinzburgLandau {
        side: usize,
        #[serde(default = "default_tau")]
        tau: f64,
        #[serde(default = "default_alpha")]
        alpha: f64,
        #[serde(default = "default_lambda")]
        lambda: f64,
    },
}

impl ModelConfig {
    pub fn dimension(&self) -> usize {
        match self {
            ModelConfig::Gaussian { dimension, .. }
            | ModelConfig::IllConditionedGaussian { dimension, .. }
            | ModelConfig::DoubleWell { dimension } => *dimension,
            ModelConfig::GinzburgLandau { side, .. } => side * side * side,
        }
    }

    pub fn build(&self) -> Result<TargetModel> {
        match self {
            ModelConfig::Gaussian {
                dimension,
                variances: None,
            } => {
                if *dimension == 0 {
                    return Err(Error::InvalidConfiguration("dimension must be >= 1".into()));
                }
                make_linear_gaussian(*dimension)
            }
            ModelConfig::Gaussian {
                dimension,
                variances: Some(v),
            } => {
                if v.len() != *dimension {
                    return Err(Error::InvalidConfiguration(format!(
                        "gaussian has dimension {dimension} but {} variances",
                        v.len()
                    )));
                }
                make_gaussian(v)
            }
            ModelConfig::IllConditionedGaussian {
                dimension,
                smallest_variance,
            } => make_ill_conditioned_gaussian(*dimension, *smallest_variance),
            ModelConfig::DoubleWell { dimension } => make_double_well(*dimension),
            ModelConfig::GinzburgLandau {
                side,
                tau,
                alpha,
                lambda,
            } => make_ginzburg_landau(*side, *tau, *alpha, *lambda),
        }
    }
}

/// Initial condition of every replicate in a cell.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum StartConfig {
    Origin,
    /// `(radius, 0, …, 0)`.
    Axis { radius: f64 },
    /// Uniform on the sphere of the given radius, drawn per replicate.
    RandomNorm { radius: f64 },
}

impl StartConfig {
    pub fn label(&self) -> String {
        match self {
            StartConfig::Origin => "origin".into(),
            StartConfig::Axis { radius } => format!("axis({radius})"),
            StartConfig::RandomNorm { radius } => format!("random_norm({radius})"),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum OutputFormat {
    Csv,
    Json,
    #[default]
    Both,
}

impl OutputFormat {
    pub fn csv(&self) -> bool {
        matches!(self, OutputFormat::Csv | OutputFormat::Both)
    }

    pub fn json(&self) -> bool {
        matches!(self, OutputFormat::Json | OutputFormat::Both)
    }
}

impl FromStr for OutputFormat {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "csv" => Ok(OutputFormat::Csv),
            "json" => Ok(OutputFormat::Json),
            "both" => Ok(OutputFormat::Both),
            other => Err(Error::InvalidConfiguration(format!(
                "unknown output format {other:?}"
            ))),
        }
    }
}

fn default_out_dir() -> PathBuf {
    PathBuf::from("out")
}
fn default_csv() -> String {
    "summary.csv".into()
}
fn default_json() -> String {
    "report.json".into()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct OutputConfig {
    #[serde(default = "default_out_dir")]
    pub dir: PathBuf,
    #[serde(default = "default_csv")]
    pub csv: String,
    #[serde(default = "default_json")]
    pub json: String,
    #[serde(default)]
    pub format: OutputFormat,
    /// Also write one line per chain to `chains.csv`.
    #[serde(default)]
    pub persist_raw: bool,
}

impl Default for OutputConfig {
    fn default() -> Self {
        Self {
            dir: default_out_dir(),
            csv: default_csv(),
            json: default_json(),
            format: OutputFormat::default(),
            persist_raw: false,
        }
    }
}

fn default_radii() -> Vec<f64> {
    DEFAULT_RADII.to_vec()
}
fn default_directions() -> usize {
    DEFAULT_DIRECTIONS
}
fn default_closeness_points() -> usize {
    1000
}

/// Settings of the assumption checkers reported alongside a run.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CheckConfig {
    #[serde(default = "default_radii")]
    pub radii: Vec<f64>,
    #[serde(default = "default_directions")]
    pub directions: usize,
    #[serde(default = "default_closeness_points")]
    pub closeness_points: usize,
}

impl Default for CheckConfig {
    fn default() -> Self {
        Self {
            radii: default_radii(),
            directions: default_directions(),
            closeness_points: default_closeness_points(),
        }
    }
}

fn default_threshold() -> f64 {
    DEFAULT_DIVERGENCE_THRESHOLD
}
fn default_floor() -> f64 {
    DEFAULT_ACCEPTANCE_FLOOR
}

/// Cross product of algorithms × step sizes × starts × replicates.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentSpec {
    pub algorithms: Vec<Algorithm>,
    pub step_sizes: Vec<f64>,
    pub n_steps: u64,
    pub n_chains: usize,
    #[serde(default)]
    pub master_seed: u64,
    #[serde(default)]
    pub burn_in: u64,
    /// Defaults to the first and last coordinate.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub tracked_coordinates: Option<Vec<usize>>,
    #[serde(default = "default_threshold")]
    pub divergence_threshold: f64,
    #[serde(default = "default_floor")]
    pub acceptance_floor: f64,
    pub model: ModelConfig,
    pub starts: Vec<StartConfig>,
    #[serde(default)]
    pub output: OutputConfig,
    #[serde(default)]
    pub checks: CheckConfig,
}

impl ExperimentSpec {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::InvalidConfiguration(e.to_string()))
    }

    /// Reads and validates a config file. Unreadable files count as invalid input.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            message: format!("cannot read config: {e}"),
        })?;
        let spec: Self = toml::from_str(&text).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            message: e.to_string(),
        })?;
        spec.validate()?;
        Ok(spec)
    }

    pub fn to_toml_string(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::InvalidConfiguration(e.to_string()))
    }

    /// Coordinates whose moments are reported.
    pub fn tracked(&self) -> Vec<usize> {
        match &self.tracked_coordinates {
            Some(t) => t.clone(),
            None => {
                let d = self.model.dimension();
                if d <= 1 {
                    vec![0]
                } else {
                    vec![0, d - 1]
                }
            }
        }
    }

    pub fn n_tasks(&self) -> usize {
        self.algorithms.len() * self.step_sizes.len() * self.starts.len() * self.n_chains
    }

    /// Checks the spec without running anything.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidConfiguration(m));
        if self.algorithms.is_empty() {
            return bad("algorithm list is empty".into());
        }
        let mut seen = HashSet::new();
        if let Some(dup) = self.algorithms.iter().find(|a| !seen.insert(**a)) {
            return bad(format!("algorithm {dup} listed twice"));
        }
        if self.step_sizes.is_empty() {
            return bad("step size list is empty".into());
        }
        if let Some(g) = self.step_sizes.iter().find(|g| !(g.is_finite() && **g > 0.0)) {
            return bad(format!("step sizes must be positive, got {g}"));
        }
        if self.starts.is_empty() {
            return bad("start list is empty".into());
        }
        for s in &self.starts {
            if let StartConfig::Axis { radius } | StartConfig::RandomNorm { radius } = s {
                if !(radius.is_finite() && *radius >= 0.0) {
                    return bad(format!("start radius must be non-negative, got {radius}"));
                }
            }
        }
        if self.n_chains == 0 {
            return bad("n_chains must be >= 1".into());
        }
        if self.n_steps == 0 {
            return bad("n_steps must be >= 1".into());
        }
        if self.burn_in >= self.n_steps {
            return bad(format!(
                "burn_in ({}) must be smaller than n_steps ({})",
                self.burn_in, self.n_steps
            ));
        }
        if !(self.divergence_threshold > 0.0) {
            return bad("divergence_threshold must be positive".into());
        }
        if !(0.0..=1.0).contains(&self.acceptance_floor) {
            return bad("acceptance_floor must lie in [0, 1]".into());
        }
        let d = self.model.dimension();
        if d == 0 {
            return bad("model dimension must be >= 1".into());
        }
        let tracked = self.tracked();
        if tracked.is_empty() {
            return bad("tracked_coordinates is empty".into());
        }
        if let Some(c) = tracked.iter().find(|&&c| c >= d) {
            return bad(format!("tracked coordinate {c} out of range for dimension {d}"));
        }
        if self.algorithms.contains(&Algorithm::TulaPartial)
            && !matches!(self.model, ModelConfig::DoubleWell { .. })
        {
            return bad("TULA_partial is only defined for the double well model".into());
        }
        if self.checks.radii.is_empty()
            || self.checks.radii.iter().any(|r| !(r.is_finite() && *r > 0.0))
            || self.checks.radii.windows(2).any(|w| w[1] <= w[0])
        {
            return bad("checks.radii must be positive and increasing".into());
        }
        if self.checks.directions == 0 || self.checks.closeness_points == 0 {
            return bad("checks.directions and checks.closeness_points must be >= 1".into());
        }
        if self.output.csv.is_empty() || self.output.json.is_empty() {
            return bad("output file names must not be empty".into());
        }
        self.model.build().map_err(|e| match e {
            Error::InvalidParameter(m) | Error::InvalidArgument(m) => Error::InvalidConfiguration(m),
            other => other,
        })?;
        Ok(())
    }
}

use std::fmt;
use std::path::{Path, PathBuf};

use clap::ValueEnum;
use pvsplit::dynamics::{time_grid, Fault, FlowKind, FlowParams, TauDistribution};
use pvsplit::ensembles::ObservableKind;
use pvsplit::kernel::DEFAULT_TARGET_ACCURACY;
use serde::{Deserialize, Serialize};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize, ValueEnum)]
#[serde(rename_all = "kebab-case")]
pub enum Experiment {
    Simulate,
    Converge,
    Conserve,
    Liouville,
    EnsembleInvariance,
    GreenTable,
    MindistSurvey,
}

impl fmt::Display for Experiment {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let v = self.to_possible_value().expect("no skipped variants");
        f.write_str(v.get_name())
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub experiment: Option<Experiment>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub output_dir: Option<PathBuf>,
    #[serde(default)]
    pub green: GreenConfig,
    #[serde(default)]
    pub flow: FlowParams,
    /// Precomputed kernel table to use instead of building one.
    #[serde(default)]
    pub table_path: Option<PathBuf>,
    #[serde(default)]
    pub initial: Option<InitialSpec>,
    #[serde(default)]
    pub simulate: Option<SimulateConfig>,
    #[serde(default)]
    pub converge: Option<ConvergeConfig>,
    #[serde(default)]
    pub conserve: Option<ConserveConfig>,
    #[serde(default)]
    pub liouville: Option<LiouvilleConfig>,
    #[serde(default)]
    pub ensemble_invariance: Option<EnsembleInvarianceConfig>,
    #[serde(default)]
    pub green_table: Option<GreenTableConfig>,
    #[serde(default)]
    pub mindist_survey: Option<MindistSurveyConfig>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GreenConfig {
    pub target_accuracy: f64,
}

impl Default for GreenConfig {
    fn default() -> Self {
        GreenConfig {
            target_accuracy: DEFAULT_TARGET_ACCURACY,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", deny_unknown_fields)]
pub enum InitialSpec {
    Explicit {
        positions: Vec<[f64; 2]>,
        intensities: Vec<f64>,
    },
    /// Uniform positions drawn from the run seed, resampled until every pair
    /// is at least `min_distance` apart.
    Random {
        intensities: Vec<f64>,
        #[serde(default)]
        min_distance: f64,
    },
}

fn default_flow() -> FlowKind {
    FlowKind::Interpolated { m: 16 }
}

fn default_times() -> Vec<f64> {
    time_grid(101)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    #[serde(default = "default_flow")]
    pub flow: FlowKind,
    #[serde(default)]
    pub distribution: TauDistribution,
    #[serde(default = "default_times")]
    pub times: Vec<f64>,
}

impl Default for SimulateConfig {
    fn default() -> Self {
        SimulateConfig {
            flow: default_flow(),
            distribution: TauDistribution::default(),
            times: default_times(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConvergeConfig {
    #[serde(default = "default_m_list")]
    pub m_list: Vec<usize>,
    /// Number of schedule seeds, derived from the run seed.
    #[serde(default = "default_seed_count")]
    pub seed_count: usize,
    #[serde(default)]
    pub distribution: TauDistribution,
    #[serde(default = "default_times")]
    pub times: Vec<f64>,
}

fn default_m_list() -> Vec<usize> {
    vec![8, 16, 32, 64]
}

fn default_seed_count() -> usize {
    10
}

impl Default for ConvergeConfig {
    fn default() -> Self {
        ConvergeConfig {
            m_list: default_m_list(),
            seed_count: default_seed_count(),
            distribution: TauDistribution::default(),
            times: default_times(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ConserveConfig {
    #[serde(default = "default_conserve_flow")]
    pub flow: FlowKind,
    #[serde(default)]
    pub distribution: TauDistribution,
    #[serde(default = "default_trajectories")]
    pub trajectories: usize,
    #[serde(default = "default_times")]
    pub times: Vec<f64>,
    #[serde(default = "default_drift_threshold")]
    pub threshold: f64,
}

fn default_conserve_flow() -> FlowKind {
    FlowKind::Interpolated { m: 32 }
}

fn default_trajectories() -> usize {
    20
}

fn default_drift_threshold() -> f64 {
    1e-8
}

impl Default for ConserveConfig {
    fn default() -> Self {
        ConserveConfig {
            flow: default_conserve_flow(),
            distribution: TauDistribution::default(),
            trajectories: default_trajectories(),
            times: default_times(),
            threshold: default_drift_threshold(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LiouvilleConfig {
    pub points: usize,
    pub t: f64,
    pub h: f64,
    pub m: usize,
    pub intensities: Vec<f64>,
    pub min_distance: f64,
    pub tolerance: f64,
}

impl Default for LiouvilleConfig {
    fn default() -> Self {
        LiouvilleConfig {
            points: 20,
            t: 0.3,
            h: 1e-6,
            m: 8,
            intensities: vec![1.0, 0.6],
            min_distance: 0.1,
            tolerance: 1e-4,
        }
    }
}

fn default_scale() -> f64 {
    0.1
}

fn default_burn_in() -> usize {
    10_000
}

fn default_thinning() -> usize {
    100
}

fn default_budget() -> usize {
    200_000
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "kind", deny_unknown_fields)]
pub enum EnsembleSpec {
    Canonical {
        beta: f64,
        #[serde(default = "default_scale")]
        proposal_scale: f64,
        #[serde(default = "default_burn_in")]
        burn_in: usize,
        #[serde(default = "default_thinning")]
        thinning: usize,
    },
    Microcanonical {
        energy: f64,
        #[serde(default)]
        shell_width: Option<f64>,
        #[serde(default = "default_scale")]
        proposal_scale: f64,
        #[serde(default = "default_burn_in")]
        burn_in: usize,
        #[serde(default = "default_thinning")]
        thinning: usize,
        #[serde(default = "default_budget")]
        search_budget: usize,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnsembleInvarianceConfig {
    pub ensemble: EnsembleSpec,
    pub intensities: Vec<f64>,
    #[serde(default = "default_count")]
    pub count: usize,
    #[serde(default = "default_inv_m")]
    pub m: usize,
    #[serde(default = "default_inv_t")]
    pub t: f64,
    #[serde(default)]
    pub distribution: TauDistribution,
    #[serde(default = "default_level")]
    pub level: f64,
    #[serde(default = "default_observables")]
    pub observables: Vec<ObservableKind>,
    /// Debug-only velocity fault for negative controls.
    #[serde(default)]
    pub fault: Option<Fault>,
}

fn default_count() -> usize {
    2000
}

fn default_inv_m() -> usize {
    16
}

fn default_inv_t() -> f64 {
    0.5
}

fn default_level() -> f64 {
    0.01
}

fn default_observables() -> Vec<ObservableKind> {
    ObservableKind::ALL.to_vec()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GreenTableConfig {
    pub grid_size: usize,
    pub file_name: String,
}

impl Default for GreenTableConfig {
    fn default() -> Self {
        GreenTableConfig {
            grid_size: 256,
            file_name: "kernel_table.bin".to_string(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MindistSurveyConfig {
    #[serde(default = "default_survey_count")]
    pub count: usize,
    #[serde(default = "default_survey_intensities")]
    pub intensities: Vec<f64>,
    #[serde(default = "default_flow")]
    pub flow: FlowKind,
    #[serde(default)]
    pub distribution: TauDistribution,
    #[serde(default = "default_times")]
    pub times: Vec<f64>,
}

fn default_survey_count() -> usize {
    500
}

fn default_survey_intensities() -> Vec<f64> {
    vec![1.0, 1.0, -1.0, -1.0]
}

impl Default for MindistSurveyConfig {
    fn default() -> Self {
        MindistSurveyConfig {
            count: default_survey_count(),
            intensities: default_survey_intensities(),
            flow: default_flow(),
            distribution: TauDistribution::default(),
            times: default_times(),
        }
    }
}

/// Problems with the configuration itself; reported with exit status 2.
#[derive(Debug, thiserror::Error)]
pub enum ConfigError {
    #[error("cannot read {path}: {source}")]
    Read {
        path: PathBuf,
        source: std::io::Error,
    },
    #[error("cannot parse {path}: {source}")]
    Parse {
        path: PathBuf,
        source: serde_json::Error,
    },
    #[error("{0}")]
    Invalid(String),
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Read {
            path: path.to_path_buf(),
            source,
        })?;
        serde_json::from_str(&text).map_err(|source| ConfigError::Parse {
            path: path.to_path_buf(),
            source,
        })
    }

    /// Apply command-line overrides and fill the selected experiment's
    /// section with defaults.
    pub fn resolve(
        mut self,
        experiment: Experiment,
        seed: Option<u64>,
        out: Option<PathBuf>,
    ) -> Result<Self, ConfigError> {
        if let Some(e) = self.experiment {
            if e != experiment {
                return Err(ConfigError::Invalid(format!(
                    "config is for experiment `{e}` but `{experiment}` was requested"
                )));
            }
        }
        self.experiment = Some(experiment);
        if seed.is_some() {
            self.seed = seed;
        }
        if self.seed.is_none() {
            return Err(ConfigError::Invalid(
                "a seed is required (config field `seed` or --seed)".into(),
            ));
        }
        if out.is_some() {
            self.output_dir = out;
        }
        if self.output_dir.is_none() {
            self.output_dir = Some(PathBuf::from("pvsplit-out").join(experiment.to_string()));
        }
        self.flow
            .validate()
            .map_err(|e| ConfigError::Invalid(format!("flow: {e}")))?;
        if !(self.green.target_accuracy > 0.0 && self.green.target_accuracy < 1.0) {
            return Err(ConfigError::Invalid("green.target_accuracy must lie in (0, 1)".into()));
        }
        match experiment {
            Experiment::Simulate => {
                self.simulate.get_or_insert_with(Default::default);
                self.require_initial()?;
            }
            Experiment::Converge => {
                self.converge.get_or_insert_with(Default::default);
                self.require_initial()?;
            }
            Experiment::Conserve => {
                let c = self.conserve.get_or_insert_with(Default::default);
                positive("conserve.trajectories", c.trajectories)?;
                self.require_initial()?;
            }
            Experiment::Liouville => {
                let c = self.liouville.get_or_insert_with(Default::default);
                positive("liouville.points", c.points)?;
            }
            Experiment::EnsembleInvariance => {
                if self.ensemble_invariance.is_none() {
                    return Err(ConfigError::Invalid(
                        "ensemble-invariance needs an `ensemble_invariance` section".into(),
                    ));
                }
            }
            Experiment::GreenTable => {
                self.green_table.get_or_insert_with(Default::default);
            }
            Experiment::MindistSurvey => {
                let c = self.mindist_survey.get_or_insert_with(Default::default);
                positive("mindist_survey.count", c.count)?;
            }
        }
        Ok(self)
    }

    fn require_initial(&self) -> Result<(), ConfigError> {
        match &self.initial {
            Some(_) => Ok(()),
            None => Err(ConfigError::Invalid(
                "this experiment needs an `initial` configuration".into(),
            )),
        }
    }

    pub fn seed(&self) -> u64 {
        self.seed.expect("resolved config has a seed")
    }

    pub fn out_dir(&self) -> &Path {
        self.output_dir.as_deref().expect("resolved config has an output directory")
    }
}

fn positive(name: &str, v: usize) -> Result<(), ConfigError> {
    if v == 0 {
        return Err(ConfigError::Invalid(format!("{name} must be positive")));
    }
    Ok(())
}

use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::battery::named_battery;
use crate::error::{Error, Result};
use crate::probes::DepthAnchor;
use crate::steering::{SaeConfig, LINEAR_ALPHAS, SAE_ALPHAS, TRAIN_FRACTION};
use crate::substrate::{ModelConfig, ScenarioSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Stage {
    Mac,
    Probes,
    Patching,
    SteeringLinear,
    SteeringSae,
}

impl Stage {
    pub const ALL: [Stage; 5] = [
        Stage::Mac,
        Stage::Probes,
        Stage::Patching,
        Stage::SteeringLinear,
        Stage::SteeringSae,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stage::Mac => "mac",
            Stage::Probes => "probes",
            Stage::Patching => "patching",
            Stage::SteeringLinear => "steering_linear",
            Stage::SteeringSae => "steering_sae",
        }
    }
}

/// A model configuration given inline or as a path to a JSON file.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ModelRef {
    Path(PathBuf),
    Inline(ModelConfig),
}

impl Default for ModelRef {
    fn default() -> Self {
        ModelRef::Inline(ModelConfig::default())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ScenarioRef {
    Path(PathBuf),
    Inline(Box<ScenarioSpec>),
}

/// A named battery or an explicit list of scenarios.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BatteryRef {
    Named(String),
    List(Vec<ScenarioRef>),
}

impl Default for BatteryRef {
    fn default() -> Self {
        BatteryRef::Named("standard".into())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProbeSettings {
    pub depth_anchor: DepthAnchor,
    pub depth_fractions: Vec<f64>,
    /// Points of the fine depth grid over total layers.
    pub grid_points: usize,
    pub folds: usize,
}

impl Default for ProbeSettings {
    fn default() -> Self {
        ProbeSettings {
            depth_anchor: DepthAnchor::MeanMac,
            depth_fractions: vec![0.25, 0.5, 0.75],
            grid_points: 20,
            folds: 5,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct PatchSettings {
    /// Fixed patch layer; the scenario's rounded mean crossover layer when absent.
    pub layer: Option<usize>,
}

/// Explicit train and eval indices, overriding the seeded split.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitOverride {
    pub train: Vec<usize>,
    pub eval: Vec<usize>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SteeringSettings {
    pub train_fraction: f64,
    /// Intervention layers as fractions of the mean crossover layer.
    pub layer_fractions: Vec<f64>,
    pub linear_alphas: Vec<f64>,
    pub sae_alphas: Vec<f64>,
    pub sae: SaeConfig,
    pub top_k: usize,
    /// Scenario names to steer; all when empty.
    pub scenarios: Vec<String>,
    pub split: Option<SplitOverride>,
}

impl Default for SteeringSettings {
    fn default() -> Self {
        SteeringSettings {
            train_fraction: TRAIN_FRACTION,
            layer_fractions: vec![0.1, 0.25, 0.5, 0.75, 1.0],
            linear_alphas: LINEAR_ALPHAS.to_vec(),
            sae_alphas: SAE_ALPHAS.to_vec(),
            sae: SaeConfig::default(),
            top_k: 50,
            scenarios: Vec::new(),
            split: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ExperimentConfig {
    pub model: ModelRef,
    pub battery: BatteryRef,
    /// Sample pairs per scenario.
    pub samples: usize,
    pub seed: u64,
    pub stages: Vec<Stage>,
    pub probes: ProbeSettings,
    pub patching: PatchSettings,
    pub steering: SteeringSettings,
    pub output_dir: PathBuf,
    /// Keep hidden-state cubes on disk and reuse them across runs.
    pub cache_cubes: bool,
    /// Worker threads; available parallelism when absent.
    pub workers: Option<usize>,
    /// Directory that relative paths are resolved against.
    #[serde(skip)]
    pub base_dir: Option<PathBuf>,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            model: ModelRef::default(),
            battery: BatteryRef::default(),
            samples: 100,
            seed: 42,
            stages: Stage::ALL.to_vec(),
            probes: ProbeSettings::default(),
            patching: PatchSettings::default(),
            steering: SteeringSettings {
                scenarios: vec!["degraded".into()],
                ..SteeringSettings::default()
            },
            output_dir: PathBuf::from("maclens-out"),
            cache_cubes: false,
            workers: None,
            base_dir: None,
        }
    }
}

/// A configuration with every reference loaded.
#[derive(Debug, Clone)]
pub struct ResolvedConfig {
    pub model: ModelConfig,
    pub scenarios: Vec<ScenarioSpec>,
}

fn read_json<T: serde::de::DeserializeOwned>(path: &Path, what: &str) -> Result<T> {
    let text = fs::read_to_string(path)
        .map_err(|e| Error::config(format!("cannot read {what} {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| Error::config(format!("cannot parse {what} {}: {e}", path.display())))
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| Error::config(format!("experiment config: {e}")))
    }

    /// Reads a config file; relative references resolve against its directory.
    pub fn load(path: &Path) -> Result<Self> {
        let mut cfg: ExperimentConfig = read_json(path, "experiment config")?;
        cfg.base_dir = path.parent().map(Path::to_path_buf);
        Ok(cfg)
    }

    fn resolve_path(&self, p: &Path) -> PathBuf {
        match &self.base_dir {
            Some(base) if p.is_relative() => base.join(p),
            _ => p.to_path_buf(),
        }
    }

    pub fn has(&self, stage: Stage) -> bool {
        self.stages.contains(&stage)
    }

    /// Loads the model and scenarios and checks every setting.
    pub fn resolve(&self) -> Result<ResolvedConfig> {
        let model = match &self.model {
            ModelRef::Inline(m) => m.clone(),
            ModelRef::Path(p) => read_json(&self.resolve_path(p), "model config")?,
        };
        model.validate()?;
        let scenarios = match &self.battery {
            BatteryRef::Named(name) => named_battery(name, &model)?,
            BatteryRef::List(refs) => refs
                .iter()
                .map(|r| match r {
                    ScenarioRef::Inline(s) => Ok((**s).clone()),
                    ScenarioRef::Path(p) => read_json(&self.resolve_path(p), "scenario"),
                })
                .collect::<Result<Vec<_>>>()?,
        };
        if scenarios.is_empty() {
            return Err(Error::config("battery has no scenarios"));
        }
        let mut names = std::collections::HashSet::new();
        for s in &scenarios {
            s.validate_for(&model)?;
            if !names.insert(s.name.as_str()) {
                return Err(Error::config(format!("duplicate scenario name `{}`", s.name)));
            }
        }
        self.validate_settings()?;
        if self.has(Stage::SteeringLinear) || self.has(Stage::SteeringSae) {
            if let Some(w) = self.steering.scenarios.iter().find(|w| !names.contains(w.as_str())) {
                return Err(Error::config(format!("steering scenario `{w}` not in the battery")));
            }
        }
        Ok(ResolvedConfig { model, scenarios })
    }

    fn validate_settings(&self) -> Result<()> {
        if self.stages.is_empty() {
            return Err(Error::config("no stages selected"));
        }
        if self.samples < 2 {
            return Err(Error::config(format!("samples must be >= 2, got {}", self.samples)));
        }
        if self.workers == Some(0) {
            return Err(Error::config("workers must be >= 1"));
        }
        let p = &self.probes;
        if p.depth_fractions.is_empty() || p.depth_fractions.iter().any(|f| !(*f > 0.0 && *f <= 1.0)) {
            return Err(Error::config("depth fractions must lie in (0, 1]"));
        }
        if p.grid_points < 2 || p.folds < 2 {
            return Err(Error::config("grid_points and folds must be >= 2"));
        }
        let s = &self.steering;
        if !(s.train_fraction > 0.0 && s.train_fraction < 1.0) {
            return Err(Error::config("train_fraction must lie in (0, 1)"));
        }
        if s.layer_fractions.is_empty() || s.layer_fractions.iter().any(|f| !(*f > 0.0 && *f <= 1.0)) {
            return Err(Error::config("steering layer fractions must lie in (0, 1]"));
        }
        if s.linear_alphas.iter().chain(&s.sae_alphas).any(|a| !a.is_finite() || *a < 0.0) {
            return Err(Error::config("steering strengths must be finite and >= 0"));
        }
        if s.sae.expansion == 0 || s.sae.lambda < 0.0 || s.sae.step <= 0.0 {
            return Err(Error::config("sae expansion, lambda and step must be positive"));
        }
        Ok(())
    }
}

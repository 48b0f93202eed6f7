use std::collections::BTreeMap;

use serde::Serialize;

use super::config::ExperimentConfig;
use crate::lens::Trajectory;
use crate::patching::{PatchOutcome, PatchSummary};
use crate::probes::{CrossStage, DepthAnchor, DepthSample, GroupStats, ProbeResult};
use crate::steering::SteerOutcome;
use crate::substrate::ModelConfig;

/// Crossover metrics of one scenario.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MacRow {
    pub scenario: String,
    pub n: usize,
    pub n_crossed: usize,
    pub mean_mac: Option<f64>,
    /// Percent of samples whose final-layer winner is visual.
    pub r_pct: f64,
    /// mean_mac / L as a percent.
    pub d_pct: Option<f64>,
    pub d_pct_rounded: Option<i64>,
    pub mean_final_gap: f64,
    pub median_visual_rank: f64,
    /// Planted crossover of the noise-free counterfactual trajectory.
    pub truth_crossover: Option<usize>,
    /// Fraction of samples whose detected crossover equals the planted one.
    pub recovery: f64,
    /// Largest lens deviation from the closed form, for noise-free scenarios.
    pub max_oracle_error: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MacSection {
    pub source: String,
    pub rows: Vec<MacRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DepthSummary {
    pub fraction: f64,
    pub layer: usize,
    pub mean_l2: f64,
    pub mean_cosine: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeRow {
    pub scenario: String,
    /// Anchor actually used; falls back to total layers without any crossover.
    pub anchor: DepthAnchor,
    pub reference_layers: f64,
    pub depths: Vec<DepthSummary>,
    /// Success (visual) versus failure (prior) at the deepest configured fraction.
    pub group: GroupStats,
    pub probe: Option<ProbeResult>,
    pub probe_note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ProbeSection {
    pub source: String,
    pub anchor: DepthAnchor,
    pub rows: Vec<ProbeRow>,
    /// Group comparison over every sample of the battery.
    pub pooled_group: GroupStats,
    pub cross_stage: Option<CrossStage>,
    pub cross_stage_note: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PatchRow {
    pub scenario: String,
    pub layer: usize,
    pub layer_source: String,
    pub summary: PatchSummary,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PatchSection {
    pub source: String,
    pub rows: Vec<PatchRow>,
    pub reverse_flips: usize,
}

/// One (method, layer, strength) evaluation.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SteerRow {
    pub method: String,
    pub layer: usize,
    pub alpha: f64,
    pub n: usize,
    pub baseline_acc: f64,
    pub steered_acc: f64,
    pub delta_acc: f64,
    pub improved: usize,
    pub degraded: usize,
}

impl SteerRow {
    pub fn new(method: &str, layer: usize, alpha: f64, o: &SteerOutcome) -> Self {
        SteerRow {
            method: method.to_string(),
            layer,
            alpha,
            n: o.n,
            baseline_acc: o.baseline_acc,
            steered_acc: o.steered_acc,
            delta_acc: o.delta_acc,
            improved: o.improved,
            degraded: o.degraded,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SteerScenario {
    pub scenario: String,
    pub n_train: usize,
    pub n_eval: usize,
    pub layers: Vec<usize>,
    pub mac_layer: Option<usize>,
    pub rows: Vec<SteerRow>,
    /// Best row per method, first on ties in sweep order.
    pub best: Vec<SteerRow>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SteeringSection {
    pub source: String,
    pub scenarios: Vec<SteerScenario>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

/// Per-sample data behind the figures; not part of the JSON report.
#[derive(Debug, Clone, Default)]
pub struct PlotData {
    pub trajectories: Vec<(String, Vec<Trajectory>)>,
    pub depth_grid: Vec<(String, Vec<Vec<DepthSample>>)>,
    pub patch_outcomes: Vec<(String, Vec<PatchOutcome>)>,
    pub transitions: Vec<(String, String, usize, f64, SteerOutcome)>,
}

#[derive(Debug, Clone, Serialize)]
pub struct Report {
    pub tool: String,
    pub version: String,
    pub rng: String,
    pub seed: u64,
    pub config: ExperimentConfig,
    pub model: ModelConfig,
    pub scenarios: Vec<String>,
    pub mac: Option<MacSection>,
    pub probes: Option<ProbeSection>,
    pub patching: Option<PatchSection>,
    pub steering: Option<SteeringSection>,
    pub checks: Vec<Check>,
    /// Seconds since the Unix epoch at completion.
    pub generated_at: u64,
    /// Wall-clock seconds per stage.
    pub timing: BTreeMap<String, f64>,
    #[serde(skip)]
    pub plots: PlotData,
}

/// Report keys that legitimately differ between identical runs.
pub const VOLATILE_KEYS: [&str; 2] = ["generated_at", "timing"];

impl Report {
    pub fn failed_checks(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serializes")
    }
}

/// Parses a report and drops the volatile keys, for determinism comparisons.
pub fn stable_report(json: &str) -> crate::Result<serde_json::Value> {
    let mut v: serde_json::Value = serde_json::from_str(json)?;
    if let Some(obj) = v.as_object_mut() {
        for k in VOLATILE_KEYS {
            obj.remove(k);
        }
    }
    Ok(v)
}

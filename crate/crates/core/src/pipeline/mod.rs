//! Configuration, scenario batteries, end-to-end runs, reports and
//! figure data.

pub mod battery;
mod cache;
mod config;
mod plot;
mod report;
mod run;
mod sweep;

pub use cache::CubeCache;
pub use config::{
    BatteryRef, ExperimentConfig, ModelRef, PatchSettings, ProbeSettings, ResolvedConfig,
    ScenarioRef, SplitOverride, Stage, SteeringSettings,
};
pub use plot::{
    emit_plot_data, write_cross_stage, write_depth_grid, write_patch_outcomes, write_trajectories,
    write_transitions,
};
pub use report::{
    stable_report, Check, DepthSummary, MacRow, MacSection, PatchRow, PatchSection, PlotData,
    ProbeRow, ProbeSection, Report, SteerRow, SteerScenario, SteeringSection, VOLATILE_KEYS,
};
pub use run::{mac_row, pair_seed, prepare_scenario, run_experiment, SampleRecord, ScenarioRun};
pub use sweep::{scaling_sweep, SweepRow};

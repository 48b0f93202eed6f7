//! The inspectable-model contract and the constructed toy vision-language
//! transformer with planted ground truth.

mod config;
mod cube;
mod hooks;
pub mod layout;
mod model;
mod scenario;

pub use config::{ModelConfig, NoiseTarget, Role, ScenarioSpec, VariantSets};
pub use cube::HiddenStateCube;
pub use hooks::{apply_hooks, validate_hooks, AddPayload, Hook, HookAction, StateEdit, TokenScope};
pub use model::{
    argmax, build_toy_vlm, readout_gain, Attention, Block, ForwardOutput, InspectableModel, Mlp,
    ModelInput, ToyVlm,
};
pub use scenario::{
    closed_form_trajectory, expected_trajectory, generate_pair, ground_truth, ClosedForm,
    GroundTruth, SamplePair,
};

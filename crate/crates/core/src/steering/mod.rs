//! Training-free interventions: contrastive linear steering and
//! sparse-autoencoder feature steering, plus the evaluation harness.

mod eval;
mod linear;
mod sae;

pub use eval::{
    evaluate_steering, evaluate_steering_with_baseline, train_eval_split, write_transitions_csv, Split, SteerOutcome, Transition,
    TRAIN_FRACTION,
};
pub use linear::{
    apply_linear, direction_from_states, linear_direction, linear_hook, mean_pool,
    SteeringDirection, LINEAR_ALPHAS,
};
pub use sae::{
    sae_loss, sae_loss_and_grad, sae_replacement_hook, sae_residual_hook, sae_select_features,
    sae_train, FeatureSelection, SaeConfig, SaeMode, SaeModel, SaeParams, SaeSteer, SAE_ALPHAS,
};

//! Logit-lens arbitration analysis for multimodal transformers.
//!
//! The crate bundles a constructed toy vision-language transformer with
//! planted ground truth ([`substrate`]), a six-variant logit lens with
//! crossover detection ([`lens`]), latent-encoding probes ([`probes`]),
//! activation patching ([`patching`]), linear and sparse-autoencoder steering
//! ([`steering`]) and an end-to-end reporting pipeline ([`pipeline`]).

pub mod error;
pub mod lens;
pub mod numkit;
pub mod patching;
pub mod pipeline;
pub mod probes;
pub mod steering;
pub mod substrate;

pub use error::{Error, Result};

/// Crate version recorded in every report.
pub const VERSION: &str = env!("CARGO_PKG_VERSION");

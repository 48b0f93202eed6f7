use serde::{Deserialize, Serialize};

use super::layout::{FIRST_FREE, OVERFLOW_LIMIT};
use crate::error::{Error, Result};

/// Which answer candidate a token or a winner belongs to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Role {
    Visual,
    Prior,
}

/// Architecture of the toy model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelConfig {
    /// Transformer layer count.
    pub layers: usize,
    /// Residual width.
    pub d_model: usize,
    /// Vocabulary size.
    pub vocab: usize,
    /// Image tokens per input.
    pub n_img: usize,
    /// Text tokens per input, the last one being the answer slot.
    pub n_txt: usize,
    /// Logit scale of the unembedding rows outside both variant sets.
    #[serde(default = "default_vocab_noise")]
    pub vocab_noise: f64,
    /// Seed for token embeddings and noise rows of the unembedding.
    #[serde(default)]
    pub weight_seed: u64,
}

fn default_vocab_noise() -> f64 {
    0.25
}

impl Default for ModelConfig {
    fn default() -> Self {
        ModelConfig {
            layers: 16,
            d_model: 64,
            vocab: 64,
            n_img: 8,
            n_txt: 8,
            vocab_noise: default_vocab_noise(),
            weight_seed: 0,
        }
    }
}

impl ModelConfig {
    pub fn seq_len(&self) -> usize {
        self.n_img + self.n_txt
    }

    pub fn validate(&self) -> Result<()> {
        if self.layers < 4 {
            return Err(Error::config(format!("layers must be >= 4, got {}", self.layers)));
        }
        if self.d_model < FIRST_FREE {
            return Err(Error::config(format!(
                "d_model must be >= {FIRST_FREE}, got {}",
                self.d_model
            )));
        }
        if self.vocab < 16 {
            return Err(Error::config(format!("vocab must be >= 16, got {}", self.vocab)));
        }
        if self.n_img < 2 || self.n_txt < 2 {
            return Err(Error::config("n_img and n_txt must both be >= 2"));
        }
        if !self.vocab_noise.is_finite() || self.vocab_noise < 0.0 {
            return Err(Error::config("vocab_noise must be finite and >= 0"));
        }
        Ok(())
    }
}

/// Token ids of the six surface forms of each answer word.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VariantSets {
    pub visual: [usize; 6],
    pub prior: [usize; 6],
}

impl Default for VariantSets {
    fn default() -> Self {
        VariantSets {
            visual: [0, 1, 2, 3, 4, 5],
            prior: [6, 7, 8, 9, 10, 11],
        }
    }
}

impl VariantSets {
    pub fn ids(&self, role: Role) -> &[usize; 6] {
        match role {
            Role::Visual => &self.visual,
            Role::Prior => &self.prior,
        }
    }

    /// Role of a token id, if it belongs to either set.
    pub fn classify(&self, token: usize) -> Option<Role> {
        if self.visual.contains(&token) {
            Some(Role::Visual)
        } else if self.prior.contains(&token) {
            Some(Role::Prior)
        } else {
            None
        }
    }

    pub fn contains(&self, token: usize) -> bool {
        self.classify(token).is_some()
    }

    pub fn validate(&self, vocab: usize) -> Result<()> {
        let all: Vec<usize> = self.visual.iter().chain(&self.prior).copied().collect();
        if let Some(&bad) = all.iter().find(|&&t| t >= vocab) {
            return Err(Error::config(format!("variant id {bad} outside vocabulary of {vocab}")));
        }
        for (i, a) in all.iter().enumerate() {
            if all[i + 1..].contains(a) {
                return Err(Error::config(format!("variant id {a} appears twice")));
            }
        }
        Ok(())
    }
}

/// Where seeded jitter enters a sample pair.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NoiseTarget {
    /// Payload, salience and free content of the input embeddings.
    #[default]
    Embedding,
    /// The question gate of the answer slot, perturbing prior mass only.
    PriorPathway,
}

/// Generative description of one planted visual-versus-prior conflict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioSpec {
    pub name: String,
    /// Per-layer visual evidence increments, logit units.
    pub visual_schedule: Vec<f64>,
    /// Per-layer prior mass increments, logit units.
    pub prior_schedule: Vec<f64>,
    /// Share of visual evidence carried by each image token; sums to 1.
    pub evidence_weights: Vec<f64>,
    /// +1 puts the counterfactual payload on the visual channel, -1 on the prior channel.
    #[serde(default = "plus_one")]
    pub evidence_sign_cf: i8,
    #[serde(default = "minus_one")]
    pub evidence_sign_std: i8,
    #[serde(default)]
    pub variant_sets: VariantSets,
    #[serde(default)]
    pub noise_sigma: f64,
    #[serde(default)]
    pub noise_target: NoiseTarget,
    /// Spread of the appearance payload, drawn independently per image.
    #[serde(default)]
    pub appearance_sigma: f64,
    /// Per-layer gain of the encoding channel.
    #[serde(default = "one")]
    pub encoding_gain: f64,
    /// Strength with which a contradicting prior-channel payload suppresses prior mass.
    #[serde(default = "one")]
    pub inhibition: f64,
    #[serde(default)]
    pub seed: u64,
}

fn plus_one() -> i8 {
    1
}

fn minus_one() -> i8 {
    -1
}

fn one() -> f64 {
    1.0
}

impl ScenarioSpec {
    /// Scenario with default sets, no noise and uniform evidence over `n_img` tokens.
    pub fn new(name: &str, visual: Vec<f64>, prior: Vec<f64>, n_img: usize) -> Self {
        ScenarioSpec {
            name: name.to_string(),
            visual_schedule: visual,
            prior_schedule: prior,
            evidence_weights: vec![1.0 / n_img as f64; n_img],
            evidence_sign_cf: 1,
            evidence_sign_std: -1,
            variant_sets: VariantSets::default(),
            noise_sigma: 0.0,
            noise_target: NoiseTarget::Embedding,
            appearance_sigma: 0.0,
            encoding_gain: 1.0,
            inhibition: 1.0,
            seed: 0,
        }
    }

    pub fn layers(&self) -> usize {
        self.visual_schedule.len()
    }

    /// Running sums of the visual schedule, one entry per layer.
    pub fn cumulative_visual(&self) -> Vec<f64> {
        cumulative(&self.visual_schedule)
    }

    pub fn cumulative_prior(&self) -> Vec<f64> {
        cumulative(&self.prior_schedule)
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.visual_schedule.len();
        if n == 0 || self.prior_schedule.len() != n {
            return Err(Error::config(format!(
                "scenario {}: schedules must be nonempty and equal length ({} vs {})",
                self.name,
                n,
                self.prior_schedule.len()
            )));
        }
        let sched = self.visual_schedule.iter().chain(&self.prior_schedule);
        if sched.clone().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(Error::config(format!(
                "scenario {}: schedules must be finite and >= 0",
                self.name
            )));
        }
        let worst = self
            .cumulative_visual()
            .into_iter()
            .chain(self.cumulative_prior())
            .chain([self.encoding_gain.abs() * n as f64])
            .fold(0.0f64, |m, x| m.max(x.abs()));
        if worst > OVERFLOW_LIMIT {
            return Err(Error::config(format!(
                "scenario {}: cumulative magnitude {worst} exceeds {OVERFLOW_LIMIT}",
                self.name
            )));
        }
        let w = &self.evidence_weights;
        if w.is_empty() || w.iter().any(|x| !x.is_finite() || *x < 0.0) {
            return Err(Error::config(format!(
                "scenario {}: evidence weights must be nonempty, finite and >= 0",
                self.name
            )));
        }
        let total: f64 = w.iter().sum();
        if (total - 1.0).abs() > 1e-9 {
            return Err(Error::config(format!(
                "scenario {}: evidence weights sum to {total}, expected 1",
                self.name
            )));
        }
        for s in [self.evidence_sign_cf, self.evidence_sign_std] {
            if s != 1 && s != -1 {
                return Err(Error::config(format!(
                    "scenario {}: evidence signs must be +1 or -1",
                    self.name
                )));
            }
        }
        for (label, v) in [
            ("noise_sigma", self.noise_sigma),
            ("appearance_sigma", self.appearance_sigma),
            ("inhibition", self.inhibition),
        ] {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::config(format!(
                    "scenario {}: {label} must be finite and >= 0",
                    self.name
                )));
            }
        }
        if !self.encoding_gain.is_finite() {
            return Err(Error::config(format!("scenario {}: encoding_gain not finite", self.name)));
        }
        Ok(())
    }

    /// Checks the scenario against a model configuration.
    pub fn validate_for(&self, cfg: &ModelConfig) -> Result<()> {
        self.validate()?;
        cfg.validate()?;
        if self.layers() != cfg.layers {
            return Err(Error::config(format!(
                "scenario {}: {} schedule entries for a {}-layer model",
                self.name,
                self.layers(),
                cfg.layers
            )));
        }
        if self.evidence_weights.len() != cfg.n_img {
            return Err(Error::config(format!(
                "scenario {}: {} evidence weights for {} image tokens",
                self.name,
                self.evidence_weights.len(),
                cfg.n_img
            )));
        }
        self.variant_sets.validate(cfg.vocab)
    }
}

pub(crate) fn cumulative(xs: &[f64]) -> Vec<f64> {
    xs.iter()
        .scan(0.0, |acc, x| {
            *acc += x;
            Some(*acc)
        })
        .collect()
}

use serde::{Deserialize, Serialize};

use super::config::{ModelConfig, NoiseTarget, Role, ScenarioSpec};
use super::layout::*;
use super::model::ModelInput;
use crate::error::Result;
use crate::lens::first_stable_crossover;
use crate::numkit::{Matrix, Rng};

/// Noise-free per-layer visual and prior logits of the counterfactual input.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClosedForm {
    pub visual: Vec<f64>,
    pub prior: Vec<f64>,
    /// Planted crossover layer (1-based).
    pub crossover: Option<usize>,
}

impl ClosedForm {
    /// Smallest |visual - prior| over all layers.
    pub fn min_gap(&self) -> f64 {
        self.visual
            .iter()
            .zip(&self.prior)
            .map(|(v, p)| (v - p).abs())
            .fold(f64::INFINITY, f64::min)
    }
}

/// Expected trajectory of an input whose payload sits on the channel given
/// by `sign`. A visual-channel payload adds the cumulative visual schedule to
/// the visual logit; a prior-channel payload adds it to the prior logit.
pub fn expected_trajectory(scenario: &ScenarioSpec, sign: i8) -> ClosedForm {
    let a = scenario.cumulative_visual();
    let b = scenario.cumulative_prior();
    let (visual, prior) = if sign > 0 {
        (a, b)
    } else {
        let p = a.iter().zip(&b).map(|(x, y)| x + y).collect();
        (vec![0.0; b.len()], p)
    };
    let crossover = first_stable_crossover(&visual, &prior);
    ClosedForm {
        visual,
        prior,
        crossover,
    }
}

/// Oracle for the counterfactual input: visual logit = running sum of the
/// visual schedule, prior logit = running sum of the prior schedule.
pub fn closed_form_trajectory(scenario: &ScenarioSpec) -> ClosedForm {
    expected_trajectory(scenario, scenario.evidence_sign_cf)
}

/// Planted answers for one sample pair.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub crossover_layer: Option<usize>,
    pub final_winner: Role,
    /// Final visual logit carried by each image token.
    pub causal_shares: Vec<f64>,
}

/// Counterfactual and standard inputs that share their text segment and
/// differ only in image payloads.
#[derive(Debug, Clone, PartialEq)]
pub struct SamplePair {
    pub seed: u64,
    pub cf: ModelInput,
    pub std: ModelInput,
    pub truth: GroundTruth,
}

pub fn ground_truth(scenario: &ScenarioSpec) -> GroundTruth {
    let cf = closed_form_trajectory(scenario);
    let last = cf.visual.len() - 1;
    let final_winner = if cf.visual[last] > cf.prior[last] {
        Role::Visual
    } else {
        Role::Prior
    };
    let total = if scenario.evidence_sign_cf > 0 {
        cf.visual[last]
    } else {
        0.0
    };
    GroundTruth {
        crossover_layer: cf.crossover,
        final_winner,
        causal_shares: scenario.evidence_weights.iter().map(|w| w * total).collect(),
    }
}

/// Draws one sample pair.
///
/// Token content (text ids, free image features) is fixed by the scenario
/// seed, so pairs from different sample seeds differ only in their jitter
/// and appearance draws.
pub fn generate_pair(cfg: &ModelConfig, scenario: &ScenarioSpec, seed: u64) -> Result<SamplePair> {
    scenario.validate_for(cfg)?;
    let d = cfg.d_model;
    let (n_img, n_txt) = (cfg.n_img, cfg.n_txt);
    let base = Rng::new(scenario.seed).fork("content");
    let sample = Rng::new(scenario.seed).fork(&format!("sample:{seed}"));

    let mut content = base.fork("tokens");
    let candidates: Vec<usize> = (0..cfg.vocab)
        .filter(|&t| !scenario.variant_sets.contains(t))
        .collect();
    let text: Vec<usize> = (0..n_txt)
        .map(|_| candidates[content.below(candidates.len())])
        .collect();
    let mut image = Matrix::zeros((n_img, d));
    for (i, mut row) in image.rows_mut().into_iter().enumerate() {
        let w = scenario.evidence_weights[i];
        row[SALIENCE] = if w > 0.0 {
            w.ln().max(SALIENCE_FLOOR)
        } else {
            SALIENCE_FLOOR
        };
        for j in FIRST_FREE..d {
            row[j] = CONTENT_SCALE * content.normal();
        }
    }
    let mut text_offset = Matrix::zeros((n_txt, d));

    let sigma = scenario.noise_sigma;
    let mut shared = sample.fork("shared");
    match scenario.noise_target {
        NoiseTarget::Embedding => {
            for mut row in image.rows_mut() {
                row[SALIENCE] += sigma * shared.normal();
                for j in FIRST_FREE..d {
                    row[j] += sigma * shared.normal();
                }
            }
            for mut row in text_offset.rows_mut() {
                for j in FIRST_FREE..d {
                    row[j] += sigma * shared.normal();
                }
            }
        }
        NoiseTarget::PriorPathway => {
            text_offset[[n_txt - 1, QUESTION]] = sigma * shared.normal();
        }
    }

    let payload_noise = match scenario.noise_target {
        NoiseTarget::Embedding => sigma,
        NoiseTarget::PriorPathway => 0.0,
    };
    let make = |sign: i8, label: &str| {
        let mut rng = sample.fork(label);
        let mut img = image.clone();
        let (on, off) = if sign > 0 {
            (PAYLOAD_VISUAL, PAYLOAD_PRIOR)
        } else {
            (PAYLOAD_PRIOR, PAYLOAD_VISUAL)
        };
        for mut row in img.rows_mut() {
            row[on] = 1.0 + payload_noise * rng.normal();
            row[off] = payload_noise * rng.normal();
            row[PAYLOAD_APPEARANCE] = scenario.appearance_sigma * rng.normal();
        }
        ModelInput {
            image: img,
            text: text.clone(),
            text_offset: text_offset.clone(),
        }
    };
    Ok(SamplePair {
        seed,
        cf: make(scenario.evidence_sign_cf, "cf"),
        std: make(scenario.evidence_sign_std, "std"),
        truth: ground_truth(scenario),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(a: Vec<f64>, b: Vec<f64>) -> ScenarioSpec {
        ScenarioSpec::new("t", a, b, 2)
    }

    #[test]
    fn closed_form_hand_example() {
        let cf = closed_form_trajectory(&spec(vec![0., 0., 2., 2.], vec![1., 1., 0., 0.]));
        assert_eq!(cf.visual, vec![0., 0., 2., 4.]);
        assert_eq!(cf.prior, vec![1., 2., 2., 2.]);
        assert_eq!(cf.crossover, Some(4));
        assert_eq!(cf.min_gap(), 0.0);
    }

    #[test]
    fn equal_schedules_never_cross() {
        let cf = closed_form_trajectory(&spec(vec![1.; 5], vec![1.; 5]));
        assert_eq!(cf.crossover, None);
    }

    #[test]
    fn immediate_crossover() {
        let cf = closed_form_trajectory(&spec(vec![3., 0., 0., 0.], vec![0.; 4]));
        assert_eq!(cf.crossover, Some(1));
    }

    #[test]
    fn pairs_are_deterministic_and_share_text() {
        let cfg = ModelConfig::default();
        let mut s = ScenarioSpec::new("t", vec![1.0; 16], vec![0.5; 16], 8);
        s.noise_sigma = 0.1;
        let a = generate_pair(&cfg, &s, 7).unwrap();
        let b = generate_pair(&cfg, &s, 7).unwrap();
        assert_eq!(a, b);
        let c = generate_pair(&cfg, &s, 8).unwrap();
        assert_ne!(a.cf.image, c.cf.image);
        assert_eq!(a.cf.text, c.cf.text);
        assert_eq!(a.cf.text, a.std.text);
        assert_eq!(a.cf.text_offset, a.std.text_offset);
        for col in [SALIENCE, FIRST_FREE] {
            assert_eq!(a.cf.image.column(col), a.std.image.column(col));
        }
        assert!(a.cf.text.iter().all(|&t| !s.variant_sets.contains(t)));
    }

    #[test]
    fn noise_free_pairs_are_identical_across_seeds() {
        let cfg = ModelConfig::default();
        let s = ScenarioSpec::new("t", vec![1.0; 16], vec![0.5; 16], 8);
        let a = generate_pair(&cfg, &s, 1).unwrap();
        let b = generate_pair(&cfg, &s, 2).unwrap();
        assert_eq!(a.cf, b.cf);
        assert_eq!(a.cf.image[[0, PAYLOAD_VISUAL]], 1.0);
        assert_eq!(a.std.image[[0, PAYLOAD_PRIOR]], 1.0);
    }
}

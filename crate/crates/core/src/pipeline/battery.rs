//! Named scenario batteries. Schedules are written for a 16-layer model and
//! stretched to other depths by mapping layer k to round(k * L / 16).

use crate::error::{Error, Result};
use crate::substrate::{closed_form_trajectory, ModelConfig, NoiseTarget, ScenarioSpec};

pub const BATTERIES: [&str; 5] = ["mac", "dissociation", "degraded", "scaling", "standard"];

/// Late prior mass of each dissociation scenario.
pub const DISSOCIATION_LATE_PRIOR: [f64; 5] = [1.5, 2.0, 2.5, 2.8, 3.3];

struct Builder {
    layers: usize,
    n_img: usize,
}

impl Builder {
    fn layer(&self, k: usize) -> usize {
        let l = (k as f64 * self.layers as f64 / 16.0).round() as usize;
        l.clamp(1, self.layers)
    }

    /// Schedule with `value` added at each listed reference layer.
    fn schedule(&self, entries: &[(usize, f64)]) -> Vec<f64> {
        let mut s = vec![0.0; self.layers];
        for &(k, v) in entries {
            s[self.layer(k) - 1] += v;
        }
        s
    }

    fn span(&self, from: usize, to: usize, value: f64) -> Vec<(usize, f64)> {
        (from..=to).map(|k| (k, value)).collect()
    }

    fn scenario(&self, name: &str, visual: &[(usize, f64)], prior: &[(usize, f64)]) -> ScenarioSpec {
        let mut s = ScenarioSpec::new(name, self.schedule(visual), self.schedule(prior), self.n_img);
        s.seed = crate::numkit::split_seed(0, name);
        s
    }
}

/// Geometric evidence weights, heaviest on the first image token.
fn skewed_weights(n: usize) -> Vec<f64> {
    let raw: Vec<f64> = (0..n).map(|i| 0.6f64.powi(i as i32)).collect();
    let total: f64 = raw.iter().sum();
    raw.iter().map(|w| w / total).collect()
}

/// Twelve crossover shapes: early, mid and late crossings, transient
/// traps, final-layer-only and penultimate crossings, two never-crossing
/// schedules, skewed evidence, and a stable crossing later lost to prior.
pub fn mac_battery(cfg: &ModelConfig) -> Vec<ScenarioSpec> {
    let b = Builder {
        layers: cfg.layers,
        n_img: cfg.n_img,
    };
    let mut out = vec![
        b.scenario("immediate", &[(1, 3.0)], &[(2, 1.0)]),
        b.scenario("early", &b.span(1, 16, 1.0), &[(1, 3.5)]),
        b.scenario("mid", &b.span(5, 12, 1.0), &b.span(1, 4, 0.9)),
        b.scenario("late", &b.span(11, 14, 2.0), &b.span(1, 4, 1.4)),
        b.scenario("transient_trap", &[(5, 3.0), (11, 3.0)], &[(1, 2.0), (6, 2.0)]),
        b.scenario(
            "double_trap",
            &[(3, 2.0), (7, 2.0), (12, 3.0)],
            &[(1, 1.0), (4, 2.0), (8, 2.0)],
        ),
        b.scenario("final_only", &[(16, 3.0)], &[(1, 2.0)]),
        b.scenario("never", &b.span(1, 16, 0.2), &b.span(1, 16, 0.35)),
        b.scenario("never_close", &[(8, 2.0)], &[(1, 2.5)]),
        b.scenario("penultimate", &[(15, 4.0)], &[(1, 3.0)]),
        b.scenario("skewed_evidence", &b.span(3, 10, 1.0), &[(1, 5.5)]),
        b.scenario("lost_late", &[(6, 3.0)], &[(1, 2.0), (14, 2.0)]),
    ];
    out[10].evidence_weights = skewed_weights(cfg.n_img);
    out
}

/// Five models that share their encoding pathway and differ only in late
/// prior mass, with noise on the prior pathway alone.
pub fn dissociation_battery(cfg: &ModelConfig) -> Vec<ScenarioSpec> {
    let b = Builder {
        layers: cfg.layers,
        n_img: cfg.n_img,
    };
    DISSOCIATION_LATE_PRIOR
        .iter()
        .enumerate()
        .map(|(i, &late)| {
            let mut prior = b.span(2, 4, 1.0);
            prior.extend([(15, late / 2.0), (16, late / 2.0)]);
            let mut s = b.scenario(&format!("dissociation_{i}"), &[(10, 6.0)], &prior);
            s.noise_target = NoiseTarget::PriorPathway;
            s.noise_sigma = 0.2;
            s.appearance_sigma = 0.3;
            s
        })
        .collect()
}

/// Late visual ramp against front-loaded prior mass; prior-pathway noise
/// leaves roughly 85% of counterfactual samples answered visually.
pub fn degraded_battery(cfg: &ModelConfig) -> Vec<ScenarioSpec> {
    let b = Builder {
        layers: cfg.layers,
        n_img: cfg.n_img,
    };
    let mut s = b.scenario("degraded", &b.span(9, 14, 1.0), &b.span(2, 6, 1.0));
    s.noise_target = NoiseTarget::PriorPathway;
    s.noise_sigma = 0.2;
    s.appearance_sigma = 0.3;
    vec![s]
}

/// One scenario whose crossover sits at layer L/2 + 2, so relative depth
/// falls as the model deepens.
pub fn scaling_battery(cfg: &ModelConfig) -> Vec<ScenarioSpec> {
    let l = cfg.layers;
    let cross = (l / 2 + 2).min(l);
    let mut visual = vec![0.0; l];
    let mut prior = vec![0.0; l];
    visual[cross - 1] = 2.0;
    prior[0] = 1.0;
    let mut s = ScenarioSpec::new("scaling", visual, prior, cfg.n_img);
    s.seed = crate::numkit::split_seed(0, "scaling");
    vec![s]
}

/// Mixed battery used by the default configuration.
pub fn standard_battery(cfg: &ModelConfig) -> Vec<ScenarioSpec> {
    let mac = mac_battery(cfg);
    let mut out: Vec<ScenarioSpec> = mac
        .into_iter()
        .filter(|s| ["early", "mid", "late", "transient_trap"].contains(&s.name.as_str()))
        .collect();
    out.extend(dissociation_battery(cfg));
    out.extend(degraded_battery(cfg));
    out
}

pub fn named_battery(name: &str, cfg: &ModelConfig) -> Result<Vec<ScenarioSpec>> {
    match name {
        "mac" => Ok(mac_battery(cfg)),
        "dissociation" => Ok(dissociation_battery(cfg)),
        "degraded" => Ok(degraded_battery(cfg)),
        "scaling" => Ok(scaling_battery(cfg)),
        "standard" => Ok(standard_battery(cfg)),
        other => Err(Error::config(format!(
            "unknown battery `{other}` (known: {})",
            BATTERIES.join(", ")
        ))),
    }
}

/// Embedding noise set to `fraction` of the scenario's smallest noise-free gap.
pub fn with_gap_noise(scenario: &ScenarioSpec, fraction: f64) -> ScenarioSpec {
    let mut s = scenario.clone();
    s.noise_target = NoiseTarget::Embedding;
    s.noise_sigma = fraction * closed_form_trajectory(scenario).min_gap();
    s
}

use serde::Serialize;

use super::config::ExperimentConfig;
use super::run::{mac_row, prepare_scenario};
use crate::error::{Error, Result};
use crate::lens::aggregate_mac;

/// Crossover metrics of one configuration, pooled over its battery.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepRow {
    pub layers: usize,
    pub d_model: usize,
    pub n: usize,
    pub mean_mac: Option<f64>,
    pub d_pct: Option<f64>,
    pub win_rate: f64,
    pub mean_final_gap: f64,
}

/// Runs the crossover pass of every configuration and tabulates depth,
/// win rate and final gap side by side.
pub fn scaling_sweep(cfgs: &[ExperimentConfig]) -> Result<Vec<SweepRow>> {
    if cfgs.len() < 2 {
        return Err(Error::config("a scaling sweep needs at least two configurations"));
    }
    let mut rows = Vec::new();
    let mut first_names: Option<Vec<String>> = None;
    for cfg in cfgs {
        let r = cfg.resolve()?;
        let names: Vec<String> = r.scenarios.iter().map(|s| s.name.clone()).collect();
        match &first_names {
            None => first_names = Some(names),
            Some(f) if *f != names => log::warn!("sweep configurations use different batteries"),
            _ => {}
        }
        let mut results = Vec::new();
        let mut gaps = Vec::new();
        for s in &r.scenarios {
            let run = prepare_scenario(&r.model, s, cfg.samples, cfg.seed, None)?;
            let row = mac_row(&run)?;
            gaps.push((row.mean_final_gap, row.n));
            results.extend(run.mac_results());
        }
        let agg = aggregate_mac(&results, r.model.layers)?;
        let n: usize = gaps.iter().map(|g| g.1).sum();
        rows.push(SweepRow {
            layers: r.model.layers,
            d_model: r.model.d_model,
            n,
            mean_mac: agg.mean_mac,
            d_pct: agg.depth_pct.map(|d| 100.0 * d),
            win_rate: agg.win_rate,
            mean_final_gap: gaps.iter().map(|(g, k)| g * *k as f64).sum::<f64>() / n as f64,
        });
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::pipeline::config::{BatteryRef, ModelRef, Stage};
    use crate::substrate::ModelConfig;

    fn cfg(layers: usize, seed: u64) -> ExperimentConfig {
        ExperimentConfig {
            model: ModelRef::Inline(ModelConfig {
                layers,
                ..ModelConfig::default()
            }),
            battery: BatteryRef::Named("scaling".into()),
            samples: 10,
            seed,
            stages: vec![Stage::Mac],
            ..ExperimentConfig::default()
        }
    }

    #[test]
    fn depth_falls_with_layers() {
        let rows = scaling_sweep(&[cfg(16, 1), cfg(24, 1), cfg(32, 1)]).unwrap();
        assert!(rows[0].d_pct > rows[1].d_pct && rows[1].d_pct > rows[2].d_pct);
        assert!(scaling_sweep(&[cfg(16, 1)]).is_err());
    }

    #[test]
    fn seed_only_changes_match() {
        let rows = scaling_sweep(&[cfg(16, 1), cfg(16, 2)]).unwrap();
        assert_eq!(rows[0].mean_mac, rows[1].mean_mac);
        assert_eq!(rows[0].win_rate, rows[1].win_rate);
    }
}

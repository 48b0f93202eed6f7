//! Six-variant logit lens and arbitration-crossover detection.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::substrate::{HiddenStateCube, InspectableModel};

pub use crate::substrate::{Role, VariantSets};

/// Per-layer maxima of the visual and prior variant logits at the answer slot.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub logit_v: Vec<f64>,
    pub logit_p: Vec<f64>,
    /// Winning slot (0..6) within the visual set at each layer.
    pub v_variant: Vec<usize>,
    pub p_variant: Vec<usize>,
    /// Rank of the best visual variant among all final-layer logits, when known.
    pub final_visual_rank: Option<usize>,
}

impl Trajectory {
    /// Trajectory from raw per-layer values, e.g. read off a figure.
    pub fn from_logits(logit_v: Vec<f64>, logit_p: Vec<f64>) -> Result<Self> {
        if logit_v.is_empty() || logit_v.len() != logit_p.len() {
            return Err(Error::shape(format!(
                "trajectory with {} visual and {} prior values",
                logit_v.len(),
                logit_p.len()
            )));
        }
        if logit_v.iter().chain(&logit_p).any(|x| !x.is_finite()) {
            return Err(Error::NonFinite("trajectory logits".into()));
        }
        let n = logit_v.len();
        Ok(Trajectory {
            logit_v,
            logit_p,
            v_variant: vec![0; n],
            p_variant: vec![0; n],
            final_visual_rank: None,
        })
    }

    pub fn layers(&self) -> usize {
        self.logit_v.len()
    }

    /// logit_v - logit_p per layer.
    pub fn gaps(&self) -> Vec<f64> {
        self.logit_v.iter().zip(&self.logit_p).map(|(v, p)| v - p).collect()
    }
}

/// Largest logit over a variant set and its slot; ties go to the lowest token id.
pub fn variant_max(logits: &[f64], ids: &[usize; 6]) -> (f64, usize) {
    let mut best = 0;
    for slot in 1..6 {
        let (x, b) = (logits[ids[slot]], logits[ids[best]]);
        if x > b || (x == b && ids[slot] < ids[best]) {
            best = slot;
        }
    }
    (logits[ids[best]], best)
}

/// 1-based rank of `value` among `logits`; equal values share the better rank.
pub fn rank_of(logits: &[f64], value: f64) -> usize {
    1 + logits.iter().filter(|&&x| x > value).count()
}

/// Reads the answer slot of every layer through the final layer norm and
/// unembedding and keeps the best variant of each set.
pub fn layer_logits<M: InspectableModel + ?Sized>(
    cube: &HiddenStateCube,
    model: &M,
    sets: &VariantSets,
) -> Result<Trajectory> {
    if cube.layers() != model.layers() || cube.width() != model.width() {
        return Err(Error::shape(format!(
            "cube with {} layers x {} width for a {}-layer, {}-wide model",
            cube.layers(),
            cube.width(),
            model.layers(),
            model.width()
        )));
    }
    sets.validate(model.vocab()).map_err(|e| Error::invalid(e.to_string()))?;
    let l = cube.layers();
    let mut traj = Trajectory {
        logit_v: Vec::with_capacity(l),
        logit_p: Vec::with_capacity(l),
        v_variant: Vec::with_capacity(l),
        p_variant: Vec::with_capacity(l),
        final_visual_rank: None,
    };
    for layer in 1..=l {
        let logits = model.project(cube.last_token(layer))?;
        let logits = logits.as_slice().expect("contiguous logits");
        let (v, vs) = variant_max(logits, &sets.visual);
        let (p, ps) = variant_max(logits, &sets.prior);
        traj.logit_v.push(v);
        traj.logit_p.push(p);
        traj.v_variant.push(vs);
        traj.p_variant.push(ps);
        if layer == l {
            traj.final_visual_rank = Some(rank_of(logits, v));
        }
    }
    Ok(traj)
}

/// Rank of the best visual variant in the final-layer vocabulary ordering.
pub fn final_rank<M: InspectableModel + ?Sized>(
    cube: &HiddenStateCube,
    model: &M,
    sets: &VariantSets,
) -> Result<usize> {
    let logits = model.project(cube.last_token(cube.layers()))?;
    let logits = logits.as_slice().expect("contiguous logits");
    let (v, _) = variant_max(logits, &sets.visual);
    Ok(rank_of(logits, v))
}

/// First 1-based layer where visual strictly beats prior there and at the
/// next layer. The final layer qualifies on its own.
pub fn first_stable_crossover(v: &[f64], p: &[f64]) -> Option<usize> {
    let n = v.len().min(p.len());
    let wins = |i: usize| v[i] > p[i];
    (0..n)
        .find(|&i| wins(i) && (i + 1 == n || wins(i + 1)))
        .map(|i| i + 1)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MacResult {
    pub mac_layer: Option<usize>,
    /// mac_layer / L.
    pub depth_pct: Option<f64>,
    pub final_winner: Role,
    /// logit_v(L) - logit_p(L).
    pub final_gap: f64,
    pub visual_rank: Option<usize>,
}

/// Crossover layer and final-layer arbitration metrics of one trajectory.
pub fn detect_mac(traj: &Trajectory) -> MacResult {
    let l = traj.layers();
    let mac_layer = first_stable_crossover(&traj.logit_v, &traj.logit_p);
    let final_gap = traj.logit_v[l - 1] - traj.logit_p[l - 1];
    MacResult {
        mac_layer,
        depth_pct: mac_layer.map(|m| m as f64 / l as f64),
        final_winner: if final_gap > 0.0 {
            Role::Visual
        } else {
            Role::Prior
        },
        final_gap,
        visual_rank: traj.final_visual_rank,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MacAggregate {
    pub n: usize,
    /// Samples with a crossover; only these enter `mean_mac`.
    pub n_crossed: usize,
    pub mean_mac: Option<f64>,
    /// Fraction of all samples whose final winner is visual.
    pub win_rate: f64,
    /// mean_mac / L.
    pub depth_pct: Option<f64>,
}

impl MacAggregate {
    /// Depth as a whole percentage, rounded half away from zero.
    pub fn depth_percent_rounded(&self) -> Option<i64> {
        self.depth_pct.map(|d| (d * 100.0).round() as i64)
    }
}

pub fn aggregate_mac(results: &[MacResult], layers: usize) -> Result<MacAggregate> {
    if results.is_empty() {
        return Err(Error::invalid("aggregate_mac over no samples"));
    }
    if layers == 0 {
        return Err(Error::invalid("aggregate_mac with zero layers"));
    }
    let crossed: Vec<f64> = results
        .iter()
        .filter_map(|r| r.mac_layer.map(|m| m as f64))
        .collect();
    let mean_mac = if crossed.is_empty() {
        None
    } else {
        Some(crossed.iter().sum::<f64>() / crossed.len() as f64)
    };
    let wins = results
        .iter()
        .filter(|r| r.final_winner == Role::Visual)
        .count();
    Ok(MacAggregate {
        n: results.len(),
        n_crossed: crossed.len(),
        mean_mac,
        win_rate: wins as f64 / results.len() as f64,
        depth_pct: mean_mac.map(|m| m / layers as f64),
    })
}

/// Writes `sample_id,layer,logit_v,logit_p,v_variant,p_variant` rows.
pub fn write_trajectory_csv<W: Write>(
    out: &mut W,
    rows: &[(usize, &Trajectory)],
) -> Result<()> {
    writeln!(out, "sample_id,layer,logit_v,logit_p,v_variant,p_variant")?;
    for (id, t) in rows {
        for l in 0..t.layers() {
            writeln!(
                out,
                "{id},{},{},{},{},{}",
                l + 1,
                t.logit_v[l],
                t.logit_p[l],
                t.v_variant[l],
                t.p_variant[l]
            )?;
        }
    }
    Ok(())
}

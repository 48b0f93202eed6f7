//! Latent-encoding analytics: distances between paired hidden states at
//! fractional depths, success/failure group statistics, linear probes and
//! cross-model correlations.

use ndarray::{Array2, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numkit::{
    cosine_sim, l2_distance, logistic_fit, mann_whitney_u, roc_auc, spearman_test,
    LogisticOptions, Rng,
};
use crate::substrate::{HiddenStateCube, Role};

/// Which layer count a depth fraction is taken of.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DepthAnchor {
    /// The scenario's mean crossover layer.
    #[default]
    MeanMac,
    /// The model's total layer count.
    TotalLayers,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DepthPoint {
    pub fraction: f64,
}

impl DepthPoint {
    pub fn new(fraction: f64) -> Result<Self> {
        if !(fraction > 0.0 && fraction <= 1.0) {
            return Err(Error::invalid(format!("depth fraction {fraction} outside (0, 1]")));
        }
        Ok(DepthPoint { fraction })
    }

    /// round_half_up(fraction * reference), clamped to [1, layers].
    pub fn resolve(&self, reference: f64, layers: usize) -> usize {
        let x = self.fraction * reference;
        // tolerance absorbs products such as 0.35 * 10 landing just below .5
        let r = (x + 0.5 + 1e-9).floor();
        (r.max(1.0) as usize).min(layers.max(1))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LatentDistance {
    pub layer: usize,
    pub l2: f64,
    pub cosine: f64,
}

fn check_pair(cf: &HiddenStateCube, std: &HiddenStateCube) -> Result<()> {
    if cf.as_array().dim() != std.as_array().dim() {
        return Err(Error::shape(format!(
            "paired cubes {:?} and {:?}",
            cf.as_array().dim(),
            std.as_array().dim()
        )));
    }
    Ok(())
}

/// L2 distance and cosine between the answer-slot states of two paired runs.
pub fn latent_distance(
    cf: &HiddenStateCube,
    std: &HiddenStateCube,
    layer: usize,
) -> Result<LatentDistance> {
    check_pair(cf, std)?;
    if layer > cf.layers() {
        return Err(Error::invalid(format!("layer {layer} beyond {}", cf.layers())));
    }
    let (a, b) = (cf.last_token(layer), std.last_token(layer));
    Ok(LatentDistance {
        layer,
        l2: l2_distance(a, b)?,
        cosine: cosine_sim(a, b)?,
    })
}

/// [`latent_distance`] at a fractional depth of `reference` layers.
pub fn latent_distance_at(
    cf: &HiddenStateCube,
    std: &HiddenStateCube,
    depth: DepthPoint,
    reference: f64,
) -> Result<LatentDistance> {
    latent_distance(cf, std, depth.resolve(reference, cf.layers()))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DepthSample {
    pub fraction: f64,
    pub layer: usize,
    pub l2: f64,
    pub cosine: f64,
}

/// k evenly spaced fractions ending at 1.0.
pub fn depth_fractions(k: usize) -> Result<Vec<f64>> {
    if k < 2 {
        return Err(Error::invalid(format!("depth grid needs k >= 2, got {k}")));
    }
    Ok((1..=k).map(|i| i as f64 / k as f64).collect())
}

/// Latent distance at k fractions of the total layer count.
pub fn depth_grid(cf: &HiddenStateCube, std: &HiddenStateCube, k: usize) -> Result<Vec<DepthSample>> {
    let layers = cf.layers();
    depth_fractions(k)?
        .into_iter()
        .map(|f| {
            let d = latent_distance_at(cf, std, DepthPoint { fraction: f }, layers as f64)?;
            Ok(DepthSample {
                fraction: f,
                layer: d.layer,
                l2: d.l2,
                cosine: d.cosine,
            })
        })
        .collect()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GroupStats {
    pub mean_l2_visual: Option<f64>,
    pub n_visual: usize,
    pub mean_l2_prior: Option<f64>,
    pub n_prior: usize,
    /// mean_l2_visual / mean_l2_prior.
    pub ratio: Option<f64>,
    /// Two-sided Mann-Whitney p-value between the groups.
    pub p_mw: Option<f64>,
    /// Set when one group is empty and the comparison is undefined.
    pub one_sided: bool,
}

fn mean(xs: &[f64]) -> Option<f64> {
    if xs.is_empty() {
        None
    } else {
        Some(xs.iter().sum::<f64>() / xs.len() as f64)
    }
}

/// Compares encoding strength of samples answered visually (success)
/// against samples answered with the prior (failure).
pub fn group_compare(samples: &[(Role, f64)]) -> Result<GroupStats> {
    if samples.is_empty() {
        return Err(Error::invalid("group_compare over no samples"));
    }
    let pick = |r: Role| -> Vec<f64> {
        samples
            .iter()
            .filter(|s| s.0 == r)
            .map(|s| s.1)
            .collect()
    };
    let (vis, pri) = (pick(Role::Visual), pick(Role::Prior));
    let (mv, mp) = (mean(&vis), mean(&pri));
    let both = !vis.is_empty() && !pri.is_empty();
    let (ratio, p_mw) = if both {
        let ratio = match (mv, mp) {
            (Some(a), Some(b)) if b != 0.0 => Some(a / b),
            _ => None,
        };
        (ratio, Some(mann_whitney_u(&vis, &pri)?.p))
    } else {
        (None, None)
    };
    Ok(GroupStats {
        mean_l2_visual: mv,
        n_visual: vis.len(),
        mean_l2_prior: mp,
        n_prior: pri.len(),
        ratio,
        p_mw,
        one_sided: !both,
    })
}

/// Fold index per sample, stratified by label and shuffled with `seed`.
pub fn stratified_folds(labels: &[bool], folds: usize, seed: u64) -> Result<Vec<usize>> {
    if folds < 2 {
        return Err(Error::invalid(format!("need at least 2 folds, got {folds}")));
    }
    let mut rng = Rng::new(seed).fork("folds");
    let mut assign = vec![0; labels.len()];
    for class in [true, false] {
        let mut idx: Vec<usize> = (0..labels.len()).filter(|&i| labels[i] == class).collect();
        if idx.len() < folds {
            return Err(Error::degenerate(format!(
                "{} samples of class {class} cannot fill {folds} folds",
                idx.len()
            )));
        }
        rng.shuffle(&mut idx);
        for (k, i) in idx.into_iter().enumerate() {
            assign[i] = k % folds;
        }
    }
    Ok(assign)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProbeResult {
    /// Out-of-fold AUC over all samples.
    pub auc: f64,
    pub n: usize,
    pub folds: usize,
    /// Mean out-of-fold probability of the positive class over positive
    /// samples whose answer was correct.
    pub confidence_success: Option<f64>,
    pub confidence_failure: Option<f64>,
    /// confidence_success - confidence_failure.
    pub delta: Option<f64>,
}

/// Z-scores columns with statistics of `train`; constant columns map to 0.
fn standardize(x: ArrayView2<'_, f64>, train: &[usize]) -> Array2<f64> {
    let sub = x.select(Axis(0), train);
    let mu = sub.mean_axis(Axis(0)).expect("nonempty training fold");
    let sd = sub.std_axis(Axis(0), 0.0);
    let mut out = x.to_owned();
    for (j, mut col) in out.columns_mut().into_iter().enumerate() {
        if sd[j] > 1e-12 * (1.0 + mu[j].abs()) {
            col.mapv_inplace(|v| (v - mu[j]) / sd[j]);
        } else {
            col.fill(0.0);
        }
    }
    out
}

/// Cross-validated logistic probe.
///
/// `outcome[i]` marks whether sample i was answered correctly; samples with
/// `None` (or negative labels) do not enter the confidence split.
pub fn probe_auc(
    features: ArrayView2<'_, f64>,
    labels: &[bool],
    outcome: &[Option<bool>],
    folds: usize,
    seed: u64,
) -> Result<ProbeResult> {
    let n = features.nrows();
    if labels.len() != n || outcome.len() != n {
        return Err(Error::shape(format!(
            "{n} feature rows, {} labels, {} outcomes",
            labels.len(),
            outcome.len()
        )));
    }
    let assign = stratified_folds(labels, folds, seed)?;
    let mut prob = vec![0.0; n];
    for f in 0..folds {
        let train: Vec<usize> = (0..n).filter(|&i| assign[i] != f).collect();
        let test: Vec<usize> = (0..n).filter(|&i| assign[i] == f).collect();
        let z = standardize(features, &train);
        let xt = z.select(Axis(0), &train);
        let yt: Vec<bool> = train.iter().map(|&i| labels[i]).collect();
        let model = logistic_fit(xt.view(), &yt, LogisticOptions::default())?;
        let p = model.predict_proba(z.select(Axis(0), &test).view());
        for (k, &i) in test.iter().enumerate() {
            prob[i] = p[k];
        }
    }
    let auc = roc_auc(&prob, labels)?;
    let conf = |want: bool| {
        let xs: Vec<f64> = (0..n)
            .filter(|&i| labels[i] && outcome[i] == Some(want))
            .map(|i| prob[i])
            .collect();
        mean(&xs)
    };
    let (cs, cf) = (conf(true), conf(false));
    Ok(ProbeResult {
        auc,
        n,
        folds,
        confidence_success: cs,
        confidence_failure: cf,
        delta: cs.zip(cf).map(|(a, b)| a - b),
    })
}

/// Model-level metrics entering the cross-stage correlation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ModelRow {
    pub name: String,
    /// Fraction of counterfactual samples answered visually.
    pub success_rate: f64,
    /// Mean latent L2 at the 75% depth point.
    pub encoding_l2: f64,
    pub mean_final_gap: f64,
    pub median_visual_rank: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossStageRow {
    pub metric: String,
    pub rho: f64,
    pub p: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossStage {
    pub rows: Vec<CrossStageRow>,
    /// Sample-level AUC of encoding L2 as a predictor of success.
    pub encoding_predictor_auc: Option<f64>,
}

/// Spearman correlation of one metric column against success rate.
pub fn cross_stage_row(metric: &str, values: &[f64], success: &[f64]) -> Result<CrossStageRow> {
    let (rho, p) = spearman_test(values, success)
        .map_err(|e| Error::degenerate(format!("metric {metric}: {e}")))?;
    Ok(CrossStageRow {
        metric: metric.to_string(),
        rho,
        p,
    })
}

/// Correlates encoding, final gap and visual rank with success across
/// models, and scores encoding as a sample-level success predictor.
/// `samples` holds (encoding L2, answered visually) per sample.
pub fn cross_stage(models: &[ModelRow], samples: &[(f64, bool)]) -> Result<CrossStage> {
    if models.len() < 3 {
        return Err(Error::invalid(format!(
            "cross_stage needs >= 3 model rows, got {}",
            models.len()
        )));
    }
    let success: Vec<f64> = models.iter().map(|m| m.success_rate).collect();
    let col = |f: fn(&ModelRow) -> f64| -> Vec<f64> { models.iter().map(f).collect() };
    let rows = vec![
        cross_stage_row("encoding_l2", &col(|m| m.encoding_l2), &success)?,
        cross_stage_row("final_gap", &col(|m| m.mean_final_gap), &success)?,
        cross_stage_row("visual_rank", &col(|m| m.median_visual_rank), &success)?,
    ];
    Ok(CrossStage {
        rows,
        encoding_predictor_auc: encoding_predictor_auc(samples),
    })
}

/// AUC of encoding L2 for predicting success; `None` with a single class.
pub fn encoding_predictor_auc(samples: &[(f64, bool)]) -> Option<f64> {
    let scores: Vec<f64> = samples.iter().map(|s| s.0).collect();
    let labels: Vec<bool> = samples.iter().map(|s| s.1).collect();
    roc_auc(&scores, &labels).ok()
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array3;

    fn cube_with_last(values: &[f64]) -> HiddenStateCube {
        let l = values.len();
        let mut a = Array3::zeros((l + 1, 2, 3));
        for (i, v) in values.iter().enumerate() {
            a[[i + 1, 1, 0]] = *v;
            a[[i + 1, 1, 1]] = 1.0;
        }
        a[[0, 1, 1]] = 1.0;
        HiddenStateCube::new(a).unwrap()
    }

    #[test]
    fn resolve_rounds_half_up_and_clamps() {
        let d = DepthPoint::new(0.25).unwrap();
        assert_eq!(d.resolve(14.0, 32), 4);
        assert_eq!(d.resolve(2.0, 32), 1);
        assert_eq!(DepthPoint::new(0.1).unwrap().resolve(4.0, 32), 1);
        assert_eq!(DepthPoint::new(0.35).unwrap().resolve(10.0, 32), 4);
        assert_eq!(DepthPoint::new(1.0).unwrap().resolve(40.0, 32), 32);
        assert!(DepthPoint::new(0.0).is_err());
        assert!(DepthPoint::new(1.5).is_err());
    }

    #[test]
    fn identical_inputs_have_zero_distance() {
        let c = cube_with_last(&[1.0, 2.0, 3.0, 4.0]);
        let d = latent_distance(&c, &c, 2).unwrap();
        assert_eq!(d.l2, 0.0);
        assert!((d.cosine - 1.0).abs() < 1e-12);
    }

    #[test]
    fn grid_fractions() {
        assert_eq!(depth_fractions(2).unwrap(), vec![0.5, 1.0]);
        let g = depth_fractions(20).unwrap();
        assert_eq!(g.len(), 20);
        assert!((g[0] - 0.05).abs() < 1e-12);
        assert_eq!(*g.last().unwrap(), 1.0);
        assert!(depth_fractions(1).is_err());
    }

    #[test]
    fn grid_tracks_growing_separation() {
        let cf = cube_with_last(&[1.0, 2.0, 3.0, 4.0]);
        let std = cube_with_last(&[0.0; 4]);
        let g = depth_grid(&cf, &std, 4).unwrap();
        let l2: Vec<f64> = g.iter().map(|s| s.l2).collect();
        assert_eq!(l2, vec![1.0, 2.0, 3.0, 4.0]);
    }

    #[test]
    fn group_compare_identical_groups() {
        let s: Vec<(Role, f64)> = [1.0, 2.0, 3.0]
            .iter()
            .flat_map(|&x| [(Role::Visual, x), (Role::Prior, x)])
            .collect();
        let g = group_compare(&s).unwrap();
        assert_eq!(g.ratio, Some(1.0));
        assert_eq!(g.p_mw, Some(1.0));
    }

    #[test]
    fn group_compare_shift_and_one_sided() {
        let s = vec![
            (Role::Visual, 1.2),
            (Role::Visual, 2.4),
            (Role::Prior, 1.0),
            (Role::Prior, 2.0),
        ];
        let g = group_compare(&s).unwrap();
        assert!((g.ratio.unwrap() - 1.2).abs() < 1e-12);
        let g = group_compare(&[(Role::Prior, 1.0)]).unwrap();
        assert!(g.one_sided);
        assert_eq!(g.ratio, None);
        assert!(group_compare(&[]).is_err());
    }

    #[test]
    fn folds_are_stratified() {
        let labels: Vec<bool> = (0..20).map(|i| i % 4 == 0).collect();
        let f = stratified_folds(&labels, 5, 1).unwrap();
        for k in 0..5 {
            assert_eq!((0..20).filter(|&i| f[i] == k && labels[i]).count(), 1);
        }
        assert!(stratified_folds(&labels, 6, 1).is_err());
    }

    #[test]
    fn probe_on_planted_signal() {
        let mut rng = Rng::new(5);
        let n = 80;
        let labels: Vec<bool> = (0..n).map(|i| i % 2 == 0).collect();
        let x = Array2::from_shape_fn((n, 4), |(i, j)| {
            let s = if labels[i] { 1.0 } else { -1.0 };
            if j == 0 {
                s + 0.1 * rng.normal()
            } else {
                rng.normal()
            }
        });
        let outcome = vec![None; n];
        let r = probe_auc(x.view(), &labels, &outcome, 5, 3).unwrap();
        assert!(r.auc >= 0.99);
        assert_eq!(r.delta, None);

        let mut shuffled = labels.clone();
        Rng::new(9).shuffle(&mut shuffled);
        let noise = Array2::from_shape_fn((n, 4), |_| rng.normal());
        let r = probe_auc(noise.view(), &shuffled, &outcome, 5, 3).unwrap();
        assert!((0.3..=0.7).contains(&r.auc), "auc {}", r.auc);
    }

    #[test]
    fn cross_stage_monotone_gap() {
        let rows: Vec<ModelRow> = (0..5)
            .map(|i| ModelRow {
                name: format!("m{i}"),
                success_rate: 0.1 * i as f64,
                encoding_l2: [3.0, 1.0, 4.0, 1.5, 2.0][i],
                mean_final_gap: (i as f64).powi(3) - 2.0,
                median_visual_rank: 5.0 - i as f64,
            })
            .collect();
        let cs = cross_stage(&rows, &[(1.0, true), (0.5, false)]).unwrap();
        assert_eq!(cs.rows[1].rho, 1.0);
        assert_eq!(cs.rows[2].rho, -1.0);
        assert_eq!(cs.encoding_predictor_auc, Some(1.0));
        let mut flat = rows.clone();
        for r in &mut flat {
            r.median_visual_rank = 2.0;
        }
        assert!(cross_stage(&flat, &[]).is_err());
        assert!(cross_stage(&rows[..2], &[]).is_err());
    }
}

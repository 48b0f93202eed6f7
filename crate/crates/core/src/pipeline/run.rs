use std::collections::BTreeMap;
use std::fs;
use std::path::Path;
use std::sync::Arc;
use std::time::{Instant, SystemTime, UNIX_EPOCH};

use rayon::prelude::*;

use super::cache::CubeCache;
use super::config::{ExperimentConfig, Stage};
use super::plot;
use super::report::*;
use crate::error::{Error, Result};
use crate::lens::{aggregate_mac, detect_mac, layer_logits, MacResult, Trajectory};
use crate::numkit::{cosine_sim, l2_distance, split_seed, Matrix, RNG_ALGORITHM};
use crate::patching::{capture_states, patch_with_baseline, summarize_patches, PatchScope};
use crate::probes::{
    cross_stage, depth_fractions, group_compare, probe_auc, DepthAnchor, DepthPoint, DepthSample,
    ModelRow,
};
use crate::steering::{
    direction_from_states, evaluate_steering_with_baseline, linear_hook, mean_pool,
    sae_replacement_hook, sae_residual_hook, sae_select_features, sae_train, SaeConfig, Split,
    SteerOutcome, train_eval_split,
};
use crate::substrate::{
    build_toy_vlm, closed_form_trajectory, generate_pair, ground_truth, HiddenStateCube,
    InspectableModel, ModelConfig, ModelInput, Role, SamplePair, ScenarioSpec, TokenScope, ToyVlm,
};

/// Per-sample results of the unhooked forward passes.
#[derive(Debug, Clone)]
pub struct SampleRecord {
    pub traj: Trajectory,
    pub mac: MacResult,
    pub cf_answer: usize,
    pub std_answer: usize,
    /// Answer-slot states of every layer, (L + 1) x d.
    pub cf_last: Matrix,
    pub std_last: Matrix,
}

/// One scenario's model, sample pairs and forward-pass records.
#[derive(Debug, Clone)]
pub struct ScenarioRun {
    pub spec: ScenarioSpec,
    pub model: ToyVlm,
    pub pairs: Vec<SamplePair>,
    pub samples: Vec<SampleRecord>,
}

impl ScenarioRun {
    pub fn mac_results(&self) -> Vec<MacResult> {
        self.samples.iter().map(|s| s.mac.clone()).collect()
    }

    pub fn mean_mac(&self) -> Option<f64> {
        aggregate_mac(&self.mac_results(), self.model.layers())
            .ok()
            .and_then(|a| a.mean_mac)
    }

    pub fn baseline_answers(&self) -> Vec<usize> {
        self.samples.iter().map(|s| s.cf_answer).collect()
    }
}

/// Seed of sample pair `index` of a scenario under a root seed.
pub fn pair_seed(root: u64, scenario: &str, index: usize) -> u64 {
    split_seed(root, &format!("pairs/{scenario}/{index}"))
}

fn answer_slot(cube: &HiddenStateCube) -> Matrix {
    let (l, _, d) = cube.as_array().dim();
    Matrix::from_shape_fn((l, d), |(i, j)| cube.last_token(i)[j])
}

fn forward_cube(
    model: &ToyVlm,
    input: &ModelInput,
    cache: Option<(&CubeCache, std::path::PathBuf)>,
) -> Result<(HiddenStateCube, usize)> {
    if let Some((c, path)) = &cache {
        if let Some(cube) = c.get(path) {
            let logits = model.project(cube.last_token(cube.layers()))?;
            return Ok((cube, crate::substrate::argmax(&logits)));
        }
    }
    let out = model.forward(input, &[])?;
    if let Some((c, path)) = cache {
        c.put(&path, &out.cube)?;
    }
    Ok((out.cube, out.answer))
}

/// Builds the scenario's model, draws `n` pairs and runs both inputs of each.
pub fn prepare_scenario(
    cfg: &ModelConfig,
    spec: &ScenarioSpec,
    n: usize,
    root_seed: u64,
    cache: Option<&CubeCache>,
) -> Result<ScenarioRun> {
    let model = build_toy_vlm(cfg, spec)?;
    let pairs = (0..n)
        .map(|i| generate_pair(cfg, spec, pair_seed(root_seed, &spec.name, i)))
        .collect::<Result<Vec<_>>>()?;
    let samples = pairs
        .par_iter()
        .map(|pair| {
            let key = |kind: &str| cache.map(|c| (c, c.path(cfg, spec, pair.seed, kind)));
            let (cf, cf_answer) = forward_cube(&model, &pair.cf, key("cf"))?;
            let (std, std_answer) = forward_cube(&model, &pair.std, key("std"))?;
            let traj = layer_logits(&cf, &model, &spec.variant_sets)?;
            let mac = detect_mac(&traj);
            Ok(SampleRecord {
                traj,
                mac,
                cf_answer,
                std_answer,
                cf_last: answer_slot(&cf),
                std_last: answer_slot(&std),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(ScenarioRun {
        spec: spec.clone(),
        model,
        pairs,
        samples,
    })
}

fn median(xs: &mut [f64]) -> f64 {
    if xs.is_empty() {
        return f64::NAN;
    }
    xs.sort_by(f64::total_cmp);
    let m = xs.len() / 2;
    if xs.len() % 2 == 1 {
        xs[m]
    } else {
        0.5 * (xs[m - 1] + xs[m])
    }
}

fn mean(xs: impl Iterator<Item = f64>) -> f64 {
    let (s, n) = xs.fold((0.0, 0usize), |(s, n), x| (s + x, n + 1));
    s / n as f64
}

fn max_oracle_error(run: &ScenarioRun) -> Option<f64> {
    if run.spec.noise_sigma != 0.0 {
        return None;
    }
    let cf = closed_form_trajectory(&run.spec);
    let worst = run
        .samples
        .iter()
        .flat_map(|s| {
            let v = s.traj.logit_v.iter().zip(&cf.visual);
            let p = s.traj.logit_p.iter().zip(&cf.prior);
            v.chain(p).map(|(a, b)| (a - b).abs())
        })
        .fold(0.0, f64::max);
    Some(worst)
}

pub fn mac_row(run: &ScenarioRun) -> Result<MacRow> {
    let layers = run.model.layers();
    let agg = aggregate_mac(&run.mac_results(), layers)?;
    let truth = ground_truth(&run.spec).crossover_layer;
    let n = run.samples.len();
    let hits = run.samples.iter().filter(|s| s.mac.mac_layer == truth).count();
    let mut ranks: Vec<f64> = run
        .samples
        .iter()
        .filter_map(|s| s.mac.visual_rank.map(|r| r as f64))
        .collect();
    Ok(MacRow {
        scenario: run.spec.name.clone(),
        n,
        n_crossed: agg.n_crossed,
        mean_mac: agg.mean_mac,
        r_pct: 100.0 * agg.win_rate,
        d_pct: agg.depth_pct.map(|d| 100.0 * d),
        d_pct_rounded: agg.depth_percent_rounded(),
        mean_final_gap: mean(run.samples.iter().map(|s| s.mac.final_gap)),
        median_visual_rank: median(&mut ranks),
        truth_crossover: truth,
        recovery: hits as f64 / n as f64,
        max_oracle_error: max_oracle_error(run),
    })
}

fn mac_stage(runs: &[ScenarioRun], checks: &mut Vec<Check>) -> Result<MacSection> {
    let rows = runs.iter().map(mac_row).collect::<Result<Vec<_>>>()?;
    for r in &rows {
        if let Some(err) = r.max_oracle_error {
            checks.push(Check {
                name: format!("oracle_fidelity/{}", r.scenario),
                passed: err <= 0.05,
                detail: format!("max |lens - closed form| = {err:.3e}"),
            });
            checks.push(Check {
                name: format!("mac_recovery/{}", r.scenario),
                passed: r.recovery == 1.0,
                detail: format!("{:.1}% of samples at the planted layer", 100.0 * r.recovery),
            });
        }
    }
    Ok(MacSection {
        source: "detect_mac and aggregate_mac over the counterfactual input of every sample pair".into(),
        rows,
    })
}

fn distance(run: &ScenarioRun, i: usize, layer: usize) -> Result<(f64, f64)> {
    let s = &run.samples[i];
    let (a, b) = (s.cf_last.row(layer), s.std_last.row(layer));
    Ok((l2_distance(a, b)?, cosine_sim(a, b)?))
}

fn probe_stage(
    runs: &[ScenarioRun],
    cfg: &ExperimentConfig,
    plots: &mut PlotData,
) -> Result<ProbeSection> {
    let settings = &cfg.probes;
    let mut rows = Vec::new();
    let mut model_rows = Vec::new();
    let mut pooled = Vec::new();
    let mut predictor = Vec::new();
    let deepest = settings
        .depth_fractions
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    let grid = depth_fractions(settings.grid_points)?;
    for run in runs {
        let layers = run.model.layers();
        let (anchor, reference) = match (settings.depth_anchor, run.mean_mac()) {
            (DepthAnchor::MeanMac, Some(m)) => (DepthAnchor::MeanMac, m),
            _ => (DepthAnchor::TotalLayers, layers as f64),
        };
        let n = run.samples.len();
        let mut depths = Vec::new();
        for &f in &settings.depth_fractions {
            let layer = DepthPoint::new(f)?.resolve(reference, layers);
            let d = (0..n).map(|i| distance(run, i, layer)).collect::<Result<Vec<_>>>()?;
            depths.push(DepthSummary {
                fraction: f,
                layer,
                mean_l2: mean(d.iter().map(|x| x.0)),
                mean_cosine: mean(d.iter().map(|x| x.1)),
            });
        }
        let deep_layer = DepthPoint::new(deepest)?.resolve(reference, layers);
        let l2: Vec<f64> = (0..n)
            .map(|i| distance(run, i, deep_layer).map(|x| x.0))
            .collect::<Result<_>>()?;
        let outcome: Vec<(Role, f64)> = run
            .samples
            .iter()
            .zip(&l2)
            .map(|(s, &x)| (s.mac.final_winner, x))
            .collect();
        let group = group_compare(&outcome)?;
        pooled.extend(outcome.iter().copied());
        predictor.extend(outcome.iter().map(|&(r, x)| (x, r == Role::Visual)));

        let mut samples_grid = Vec::with_capacity(n);
        for i in 0..n {
            let row = grid
                .iter()
                .map(|&f| {
                    let layer = DepthPoint::new(f)?.resolve(layers as f64, layers);
                    let (l2, cosine) = distance(run, i, layer)?;
                    Ok(DepthSample {
                        fraction: f,
                        layer,
                        l2,
                        cosine,
                    })
                })
                .collect::<Result<Vec<_>>>()?;
            samples_grid.push(row);
        }
        plots.depth_grid.push((run.spec.name.clone(), samples_grid));

        let d = run.model.width();
        let mut feats = Matrix::zeros((2 * n, d));
        let mut labels = vec![false; 2 * n];
        let mut success = vec![None; 2 * n];
        for (i, s) in run.samples.iter().enumerate() {
            feats.row_mut(i).assign(&s.cf_last.row(deep_layer));
            feats.row_mut(n + i).assign(&s.std_last.row(deep_layer));
            labels[i] = true;
            success[i] = Some(s.mac.final_winner == Role::Visual);
        }
        let seed = split_seed(cfg.seed, &format!("probe/{}", run.spec.name));
        let (probe, probe_note) = match probe_auc(feats.view(), &labels, &success, settings.folds, seed) {
            Ok(p) => (Some(p), None),
            Err(e) => (None, Some(e.to_string())),
        };
        let mac = mac_row(run)?;
        model_rows.push(ModelRow {
            name: run.spec.name.clone(),
            success_rate: mac.r_pct / 100.0,
            encoding_l2: mean(l2.iter().copied()),
            mean_final_gap: mac.mean_final_gap,
            median_visual_rank: mac.median_visual_rank,
        });
        rows.push(ProbeRow {
            scenario: run.spec.name.clone(),
            anchor,
            reference_layers: reference,
            depths,
            group,
            probe,
            probe_note,
        });
    }
    let (cross, note) = match cross_stage(&model_rows, &predictor) {
        Ok(c) => (Some(c), None),
        Err(e) => (None, Some(e.to_string())),
    };
    Ok(ProbeSection {
        source: format!(
            "answer-slot states of each sample pair at fractions {:?} of the anchor; groups split by final-layer winner",
            settings.depth_fractions
        ),
        anchor: settings.depth_anchor,
        rows,
        pooled_group: group_compare(&pooled)?,
        cross_stage: cross,
        cross_stage_note: note,
    })
}

/// Patch layer: fixed, or the rounded mean crossover kept below the last layer.
fn patch_layer(run: &ScenarioRun, fixed: Option<usize>) -> Result<(usize, String)> {
    let layers = run.model.layers();
    if let Some(l) = fixed {
        if l == 0 || l > layers {
            return Err(Error::config(format!("patch layer {l} outside [1, {layers}]")));
        }
        return Ok((l, "fixed".into()));
    }
    Ok(match run.mean_mac() {
        Some(m) => (
            DepthPoint { fraction: 1.0 }.resolve(m, layers).min(layers - 1),
            "mean_mac".into(),
        ),
        None => ((layers / 2).max(1), "half_depth_without_crossover".into()),
    })
}

fn patch_stage(
    runs: &[ScenarioRun],
    cfg: &ExperimentConfig,
    plots: &mut PlotData,
    checks: &mut Vec<Check>,
) -> Result<PatchSection> {
    let mut rows = Vec::new();
    for run in runs {
        let (layer, source) = patch_layer(run, cfg.patching.layer)?;
        let sets = &run.spec.variant_sets;
        let per_sample = run
            .pairs
            .par_iter()
            .zip(run.samples.par_iter())
            .enumerate()
            .map(|(i, (pair, rec))| {
                let donor = capture_states(&run.model, &pair.std, layer)?;
                PatchScope::ALL
                    .iter()
                    .map(|&scope| {
                        patch_with_baseline(&run.model, i, &pair.cf, rec.cf_answer, &donor, scope, sets)
                    })
                    .collect::<Result<Vec<_>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        let outcomes: Vec<_> = per_sample.into_iter().flatten().collect();
        let summary = summarize_patches(&outcomes)?;
        plots.patch_outcomes.push((run.spec.name.clone(), outcomes));
        rows.push(PatchRow {
            scenario: run.spec.name.clone(),
            layer,
            layer_source: source,
            summary,
        });
    }
    let reverse: usize = rows.iter().map(|r| r.summary.reverse_flips()).sum();
    checks.push(Check {
        name: "zero_reverse_flips".into(),
        passed: reverse == 0,
        detail: format!("{reverse} prior-to-visual flips over the battery"),
    });
    Ok(PatchSection {
        source: "standard-input states injected into the counterfactual run at the patch layer, per scope".into(),
        rows,
        reverse_flips: reverse,
    })
}

fn steering_split(run: &ScenarioRun, cfg: &ExperimentConfig) -> Result<Split> {
    let n = run.pairs.len();
    match &cfg.steering.split {
        Some(o) => {
            let split = Split::new(o.train.clone(), o.eval.clone())
                .map_err(|e| Error::config(format!("steering split: {e}")))?;
            if let Some(bad) = o.train.iter().chain(&o.eval).find(|&&i| i >= n) {
                return Err(Error::config(format!("steering split index {bad} with {n} samples")));
            }
            if split.train.is_empty() || split.eval.is_empty() {
                return Err(Error::config("steering split needs train and eval samples"));
            }
            Ok(split)
        }
        None => train_eval_split(
            n,
            cfg.steering.train_fraction,
            split_seed(cfg.seed, &format!("steer/{}", run.spec.name)),
        ),
    }
}

fn stack(rows: &[crate::numkit::Vector]) -> Matrix {
    let d = rows.first().map_or(0, |r| r.len());
    Matrix::from_shape_fn((rows.len(), d), |(i, j)| rows[i][j])
}

fn steer_scenario(
    run: &ScenarioRun,
    cfg: &ExperimentConfig,
    linear: bool,
    sae: bool,
    plots: &mut PlotData,
    checks: &mut Vec<Check>,
) -> Result<SteerScenario> {
    let settings = &cfg.steering;
    let name = &run.spec.name;
    let layers_total = run.model.layers();
    let split = steering_split(run, cfg)?;
    let mean_mac = run.mean_mac();
    let reference = mean_mac.unwrap_or(layers_total as f64);
    let mut layers: Vec<usize> = Vec::new();
    for &f in &settings.layer_fractions {
        let l = DepthPoint::new(f)?.resolve(reference, layers_total);
        if !layers.contains(&l) {
            layers.push(l);
        }
    }
    let baseline = run.baseline_answers();
    let sets = &run.spec.variant_sets;
    let mut rows = Vec::new();
    let mut outcomes: Vec<(String, usize, f64, SteerOutcome)> = Vec::new();
    for &layer in &layers {
        let pooled = split
            .train
            .par_iter()
            .map(|&i| {
                let p = &run.pairs[i];
                let cf = run.model.forward(&p.cf, &[])?;
                let std = run.model.forward(&p.std, &[])?;
                Ok((mean_pool(cf.cube.layer(layer)), mean_pool(std.cube.layer(layer))))
            })
            .collect::<Result<Vec<_>>>()?;
        let (cf_rows, std_rows): (Vec<_>, Vec<_>) = pooled.into_iter().unzip();
        let (cf_m, std_m) = (stack(&cf_rows), stack(&std_rows));
        let mut record = |method: &str, alpha: f64, o: SteerOutcome| {
            rows.push(SteerRow::new(method, layer, alpha, &o));
            outcomes.push((method.to_string(), layer, alpha, o));
        };
        if linear {
            let cf_v: Vec<_> = cf_m.outer_iter().map(|r| r.insert_axis(ndarray::Axis(0))).collect();
            let std_v: Vec<_> = std_m.outer_iter().map(|r| r.insert_axis(ndarray::Axis(0))).collect();
            let dir = direction_from_states(&cf_v, &std_v, layer)?;
            for &alpha in &settings.linear_alphas {
                let hook = linear_hook(&dir, alpha, TokenScope::All);
                let o = evaluate_steering_with_baseline(&run.model, &run.pairs, &split, &[hook], sets, &baseline)?;
                record("linear", alpha, o);
            }
        }
        if sae {
            let mut all = cf_rows.clone();
            all.extend(std_rows.iter().cloned());
            let sae_cfg = SaeConfig {
                seed: split_seed(cfg.seed, &format!("sae/{}/{name}/{layer}", settings.sae.seed)),
                ..settings.sae.clone()
            };
            let model = Arc::new(sae_train(stack(&all).view(), &sae_cfg)?);
            let sel = sae_select_features(&model, cf_m.view(), std_m.view(), settings.top_k)?;
            for &alpha in &settings.sae_alphas {
                let hook = sae_residual_hook(model.clone(), &sel, layer, alpha, alpha)?;
                let o = evaluate_steering_with_baseline(&run.model, &run.pairs, &split, &[hook], sets, &baseline)?;
                record("sae_residual", alpha, o);
            }
            let hook = sae_replacement_hook(model, &sel, layer, 0.0, 0.0)?;
            let o = evaluate_steering_with_baseline(&run.model, &run.pairs, &split, &[hook], sets, &baseline)?;
            record("sae_replacement", 0.0, o);
        }
    }
    let identity = outcomes
        .iter()
        .filter(|(m, _, a, _)| *a == 0.0 && m != "sae_replacement")
        .all(|(_, _, _, o)| o.transitions.iter().all(|t| t.baseline_answer == t.steered_answer));
    checks.push(Check {
        name: format!("steering_identity/{name}"),
        passed: identity,
        detail: "zero-strength linear and residual hooks leave every answer unchanged".into(),
    });
    let mut best: Vec<SteerRow> = Vec::new();
    for method in ["linear", "sae_residual"] {
        let top = rows
            .iter()
            .filter(|r| r.method == method)
            .fold(None::<&SteerRow>, |b, r| match b {
                Some(b) if b.delta_acc >= r.delta_acc => Some(b),
                _ => Some(r),
            });
        best.extend(top.cloned());
    }
    for (method, layer, alpha, o) in outcomes {
        plots.transitions.push((name.clone(), method, layer, alpha, o));
    }
    Ok(SteerScenario {
        scenario: name.clone(),
        n_train: split.train.len(),
        n_eval: split.eval.len(),
        mac_layer: mean_mac.map(|m| DepthPoint { fraction: 1.0 }.resolve(m, layers_total)),
        layers,
        rows,
        best,
    })
}

fn steering_stage(
    runs: &[ScenarioRun],
    cfg: &ExperimentConfig,
    plots: &mut PlotData,
    checks: &mut Vec<Check>,
) -> Result<SteeringSection> {
    let wanted = &cfg.steering.scenarios;
    for w in wanted {
        if !runs.iter().any(|r| &r.spec.name == w) {
            return Err(Error::config(format!("steering scenario `{w}` not in the battery")));
        }
    }
    let mut scenarios = Vec::new();
    for run in runs {
        if !wanted.is_empty() && !wanted.contains(&run.spec.name) {
            continue;
        }
        scenarios.push(steer_scenario(
            run,
            cfg,
            cfg.has(Stage::SteeringLinear),
            cfg.has(Stage::SteeringSae),
            plots,
            checks,
        )?);
    }
    Ok(SteeringSection {
        source: "counterfactual eval samples with and without the hook; accuracy = answer in the visual set".into(),
        scenarios,
    })
}

fn timed<T>(timing: &mut BTreeMap<String, f64>, stage: &str, f: impl FnOnce() -> Result<T>) -> Result<T> {
    let start = Instant::now();
    let out = f().map_err(|e| e.in_stage(stage));
    timing.insert(stage.to_string(), start.elapsed().as_secs_f64());
    out
}

/// Runs every enabled stage and writes CSVs and `report.json` under the
/// output directory.
pub fn run_experiment(cfg: &ExperimentConfig) -> Result<Report> {
    let resolved = cfg.resolve()?;
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(w) = cfg.workers {
        builder = builder.num_threads(w);
    }
    let pool = builder
        .build()
        .map_err(|e| Error::config(format!("worker pool: {e}")))?;
    pool.install(|| run_resolved(cfg, &resolved.model, &resolved.scenarios))
}

fn run_resolved(cfg: &ExperimentConfig, model: &ModelConfig, scenarios: &[ScenarioSpec]) -> Result<Report> {
    let total = Instant::now();
    let out = &cfg.output_dir;
    fs::create_dir_all(out)?;
    let cache = cfg.cache_cubes.then(|| CubeCache::new(&out.join("cubes")));
    let mut timing = BTreeMap::new();
    let mut checks = Vec::new();
    let mut plots = PlotData::default();

    let runs = timed(&mut timing, "forward", || {
        scenarios
            .iter()
            .map(|s| prepare_scenario(model, s, cfg.samples, cfg.seed, cache.as_ref()))
            .collect::<Result<Vec<_>>>()
    })?;
    plots.trajectories = runs
        .iter()
        .map(|r| (r.spec.name.clone(), r.samples.iter().map(|s| s.traj.clone()).collect()))
        .collect();

    let mac = if cfg.has(Stage::Mac) {
        let section = timed(&mut timing, "mac", || mac_stage(&runs, &mut checks))?;
        plot::write_trajectories(&out.join("trajectories.csv"), &plots.trajectories)?;
        Some(section)
    } else {
        None
    };
    let probes = if cfg.has(Stage::Probes) {
        let section = timed(&mut timing, "probes", || probe_stage(&runs, cfg, &mut plots))?;
        plot::write_depth_grid(&out.join("depth_grid.csv"), &plots.depth_grid)?;
        plot::write_cross_stage(&out.join("cross_stage.csv"), section.cross_stage.as_ref())?;
        Some(section)
    } else {
        None
    };
    let patching = if cfg.has(Stage::Patching) {
        let section = timed(&mut timing, "patching", || patch_stage(&runs, cfg, &mut plots, &mut checks))?;
        plot::write_patch_outcomes(&out.join("patch_outcomes.csv"), &plots.patch_outcomes)?;
        Some(section)
    } else {
        None
    };
    let steering = if cfg.has(Stage::SteeringLinear) || cfg.has(Stage::SteeringSae) {
        let section = timed(&mut timing, "steering", || {
            steering_stage(&runs, cfg, &mut plots, &mut checks)
        })?;
        plot::write_transitions(&out.join("steering_transitions.csv"), &plots.transitions)?;
        Some(section)
    } else {
        None
    };
    timing.insert("total".into(), total.elapsed().as_secs_f64());

    let report = Report {
        tool: "maclens".into(),
        version: crate::VERSION.into(),
        rng: RNG_ALGORITHM.into(),
        seed: cfg.seed,
        config: cfg.clone(),
        model: model.clone(),
        scenarios: scenarios.iter().map(|s| s.name.clone()).collect(),
        mac,
        probes,
        patching,
        steering,
        checks,
        generated_at: SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .map(|d| d.as_secs())
            .unwrap_or(0),
        timing,
        plots,
    };
    write_atomic(&out.join("report.json"), report.to_json().as_bytes())?;
    Ok(report)
}

pub(crate) fn write_atomic(path: &Path, bytes: &[u8]) -> Result<()> {
    let tmp = path.with_extension("tmp");
    fs::write(&tmp, bytes)?;
    fs::rename(tmp, path)?;
    Ok(())
}

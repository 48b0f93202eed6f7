//! Exit-gate suite. Prints one PASS/FAIL line per criterion and exits
//! nonzero if any criterion fails.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use maclens::lens::{aggregate_mac, detect_mac, MacResult, Trajectory};
use maclens::numkit::{
    layer_norm, mann_whitney_u, roc_auc, spearman_rho, split_seed, Matrix, Rng,
};
use maclens::patching::PatchScope;
use maclens::pipeline::battery::{degraded_battery, dissociation_battery, mac_battery, with_gap_noise};
use maclens::pipeline::{
    prepare_scenario, run_experiment, stable_report, BatteryRef, ExperimentConfig, ModelRef, Report,
    ScenarioRef, Stage,
};
use maclens::steering::{sae_loss, sae_loss_and_grad, sae_train, SaeConfig, SaeParams};
use maclens::substrate::{ModelConfig, Role, ScenarioSpec};
use ndarray::{Array1, Array2};
use proptest::prelude::*;
use proptest::test_runner::{Config as PtConfig, TestRunner};

type Outcome = Result<String, String>;

fn ensure(cond: bool, msg: impl Into<String>) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg.into())
    }
}

fn err<E: std::fmt::Display>(e: E) -> String {
    e.to_string()
}

fn within(elapsed: Duration, limit_s: f64) -> Result<(), String> {
    ensure(
        elapsed.as_secs_f64() < limit_s,
        format!("took {:.1}s, budget {limit_s}s", elapsed.as_secs_f64()),
    )
}

fn inline(scenarios: Vec<ScenarioSpec>) -> BatteryRef {
    BatteryRef::List(scenarios.into_iter().map(|s| ScenarioRef::Inline(Box::new(s))).collect())
}

fn experiment(battery: BatteryRef, samples: usize, seed: u64, stages: &[Stage], out: &Path) -> ExperimentConfig {
    ExperimentConfig {
        model: ModelRef::Inline(ModelConfig::default()),
        battery,
        samples,
        seed,
        stages: stages.to_vec(),
        output_dir: out.to_path_buf(),
        ..ExperimentConfig::default()
    }
}

fn run(cfg: &ExperimentConfig) -> Result<Report, String> {
    run_experiment(cfg).map_err(err)
}

fn c1_mac_recovery(tmp: &Path) -> Outcome {
    let model = ModelConfig::default();
    let battery = mac_battery(&model);
    ensure(battery.len() == 12, "battery must hold 12 scenarios")?;
    let t = Instant::now();
    let clean = run(&experiment(inline(battery.clone()), 100, 7, &[Stage::Mac], &tmp.join("c1a")))?;
    within(t.elapsed(), 10.0)?;
    let rows = &clean.mac.as_ref().ok_or("no mac section")?.rows;
    for r in rows {
        ensure(r.recovery == 1.0, format!("{}: clean recovery {:.3}", r.scenario, r.recovery))?;
    }
    let noisy: Vec<ScenarioSpec> = battery.iter().map(|s| with_gap_noise(s, 0.1)).collect();
    let rep = run(&experiment(inline(noisy), 100, 7, &[Stage::Mac], &tmp.join("c1b")))?;
    let rows = &rep.mac.as_ref().ok_or("no mac section")?.rows;
    let worst = rows.iter().map(|r| r.recovery).fold(f64::INFINITY, f64::min);
    let pooled = rows.iter().map(|r| r.recovery * r.n as f64).sum::<f64>()
        / rows.iter().map(|r| r.n as f64).sum::<f64>();
    ensure(pooled >= 0.95, format!("noisy pooled recovery {pooled:.3}"))?;
    Ok(format!(
        "clean 100% on 12 scenarios; noise 0.1 x gap: pooled {:.1}%, worst scenario {:.1}%",
        100.0 * pooled,
        100.0 * worst
    ))
}

fn c2_oracle_fidelity(tmp: &Path) -> Outcome {
    let rep = run(&experiment(inline(mac_battery(&ModelConfig::default())), 100, 3, &[Stage::Mac], &tmp.join("c2")))?;
    let mut worst: f64 = 0.0;
    for r in &rep.mac.as_ref().ok_or("no mac section")?.rows {
        let e = r.max_oracle_error.ok_or(format!("{}: no oracle error", r.scenario))?;
        ensure(e <= 0.05, format!("{}: lens off the closed form by {e}", r.scenario))?;
        worst = worst.max(e);
    }
    Ok(format!("max |lens - closed form| = {worst:.2e} logits"))
}

fn c3_banana() -> Outcome {
    let mut v = Vec::new();
    let mut p = Vec::new();
    for l in 1..=11 {
        v.push(0.2 + 0.1 * l as f64);
        p.push(0.6 + 0.1 * l as f64);
    }
    v.extend([1.70, 1.88]);
    p.extend([1.55, 1.42]);
    let short = Trajectory::from_logits(v.clone(), p.clone()).map_err(err)?;
    let m = detect_mac(&short).mac_layer;
    ensure(m == Some(12), format!("13-layer trace: MAC {m:?}"))?;
    for l in 14..=28 {
        v.push(1.88 + 0.05 * (l - 13) as f64);
        p.push(1.42);
    }
    let full = Trajectory::from_logits(v, p).map_err(err)?;
    let m = detect_mac(&full).mac_layer;
    ensure(m == Some(12), format!("28-layer trace: MAC {m:?}"))?;
    Ok("MAC = 12 on the 13- and 28-layer traces".into())
}

fn c4_dissociation(tmp: &Path) -> Outcome {
    let t = Instant::now();
    let mut group_ok = 0;
    let mut lines = Vec::new();
    for seed in 0..5u64 {
        let battery = inline(dissociation_battery(&ModelConfig::default()));
        let rep = run(&experiment(battery, 200, seed, &[Stage::Mac, Stage::Probes], &tmp.join(format!("c4_{seed}"))))?;
        let probes = rep.probes.as_ref().ok_or("no probe section")?;
        let g = &probes.pooled_group;
        let (ratio, p) = (g.ratio.ok_or("ratio undefined")?, g.p_mw.ok_or("p undefined")?);
        if (0.8..=1.2).contains(&ratio) && p > 0.05 {
            group_ok += 1;
        }
        let cs = probes.cross_stage.as_ref().ok_or("no cross-stage table")?;
        let rho = cs
            .rows
            .iter()
            .find(|r| r.metric == "final_gap")
            .ok_or("no final_gap row")?
            .rho;
        let auc = cs.encoding_predictor_auc.ok_or("encoding AUC undefined")?;
        ensure(rho >= 0.8, format!("seed {seed}: rho(final gap) {rho:.3}"))?;
        ensure((0.45..=0.60).contains(&auc), format!("seed {seed}: encoding AUC {auc:.3}"))?;
        lines.push(format!("{ratio:.3}/{p:.2}/{auc:.3}"));
    }
    within(t.elapsed(), 30.0)?;
    ensure(group_ok >= 4, format!("group comparison held on {group_ok}/5 seeds"))?;
    Ok(format!(
        "group comparison held on {group_ok}/5 seeds; ratio/p/AUC per seed: {}; rho(final gap) >= 0.8 on all",
        lines.join(" ")
    ))
}

fn c5_patching(tmp: &Path) -> Outcome {
    let t = Instant::now();
    let rep = run(&experiment(
        inline(mac_battery(&ModelConfig::default())),
        100,
        11,
        &[Stage::Mac, Stage::Patching],
        &tmp.join("c5"),
    ))?;
    within(t.elapsed(), 60.0)?;
    let section = rep.patching.as_ref().ok_or("no patching section")?;
    ensure(section.reverse_flips == 0, format!("{} reverse flips", section.reverse_flips))?;
    let mut checked = 0;
    let mut min_full: f64 = 1.0;
    for row in &section.rows {
        let s = &row.summary;
        let full = s.scope(PatchScope::Full).ok_or("no full scope")?;
        if full.baseline_visual == 0 {
            continue;
        }
        checked += 1;
        let rate = |scope| {
            s.scope(scope)
                .map(|x| x.flips as f64 / x.baseline_visual as f64)
                .unwrap_or(f64::NAN)
        };
        let (f, last, text) = (rate(PatchScope::Full), rate(PatchScope::Last), rate(PatchScope::TextOnly));
        ensure(f >= 0.95, format!("{}: full-scope flips {f:.3}", row.scenario))?;
        ensure(last <= 0.05, format!("{}: last-token flips {last:.3}", row.scenario))?;
        ensure(text == 0.0, format!("{}: text-only flips {text:.3}", row.scenario))?;
        ensure(s.retention == Some(1.0), format!("{}: retention {:?}", row.scenario, s.retention))?;
        min_full = min_full.min(f);
    }
    ensure(checked >= 8, format!("only {checked} scenarios had visual baselines"))?;
    Ok(format!(
        "{checked} scenarios: full >= {:.0}%, last-token 0%, text-only 0%, retention 100%, 0 reverse flips",
        100.0 * min_full
    ))
}

/// Runs the degraded battery through both steering stages for five seeds.
fn steering_reports(tmp: &Path) -> Result<Vec<Report>, String> {
    (0..5u64)
        .map(|seed| {
            run(&experiment(
                inline(degraded_battery(&ModelConfig::default())),
                100,
                seed,
                &[Stage::Mac, Stage::SteeringLinear, Stage::SteeringSae],
                &tmp.join(format!("steer_{seed}")),
            ))
        })
        .collect()
}

fn c6_steering(reports: &[Report]) -> Outcome {
    let mut notes = Vec::new();
    for (seed, rep) in reports.iter().enumerate() {
        let id = rep
            .checks
            .iter()
            .find(|c| c.name.starts_with("steering_identity/"))
            .ok_or("no identity check")?;
        ensure(id.passed, format!("seed {seed}: zero-strength hooks changed answers"))?;
        let sc = &rep.steering.as_ref().ok_or("no steering section")?.scenarios[0];
        let mac = sc.mac_layer.ok_or("no MAC layer")?;
        let best_at = |layer: usize| {
            sc.rows
                .iter()
                .filter(|r| r.method == "linear" && r.layer == layer)
                .map(|r| r.delta_acc)
                .fold(f64::NEG_INFINITY, f64::max)
        };
        let early = *sc.layers.first().ok_or("no steering layers")?;
        ensure(early < mac, format!("seed {seed}: earliest layer {early} not before MAC {mac}"))?;
        let (e, m) = (best_at(early), best_at(mac));
        ensure(e > 0.0, format!("seed {seed}: early delta {e:.3}"))?;
        ensure(e > m, format!("seed {seed}: early {e:.3} vs MAC {m:.3}"))?;
        notes.push(format!("L{early} {e:+.2} vs L{mac} {m:+.2}"));
    }
    Ok(format!("identities hold; best linear delta {}", notes.join(", ")))
}

fn random_params(d: usize, m: usize, rng: &mut Rng) -> SaeParams {
    let s = 1.0 / (d as f64).sqrt();
    SaeParams {
        w_enc: Array2::from_shape_simple_fn((m, d), || s * rng.normal()),
        b_enc: Array1::from_shape_simple_fn(m, || 0.1 * rng.normal()),
        w_dec: Array2::from_shape_simple_fn((d, m), || s * rng.normal()),
        b_dec: Array1::from_shape_simple_fn(d, || 0.1 * rng.normal()),
    }
}

/// 400 answer-slot states (200 counterfactual, 200 standard) at an early layer.
fn sae_states() -> Result<Matrix, String> {
    let model = ModelConfig::default();
    let spec = &degraded_battery(&model)[0];
    let run = prepare_scenario(&model, spec, 200, 5, None).map_err(err)?;
    let layer = 3;
    let mut out = Matrix::zeros((400, model.d_model));
    for (i, s) in run.samples.iter().enumerate() {
        out.row_mut(2 * i).assign(&s.cf_last.row(layer));
        out.row_mut(2 * i + 1).assign(&s.std_last.row(layer));
    }
    Ok(out)
}

fn c7_sae(reports: &[Report]) -> Outcome {
    let t = Instant::now();
    let data = sae_states()?;
    let (d, m) = (data.ncols(), 4 * data.ncols());
    let mut worst_rel: f64 = 0.0;
    // The trainer optimizes on centered states, which also removes the
    // large constant anchor dimensions.
    let mean = data.mean_axis(ndarray::Axis(0)).ok_or("empty data")?;
    let centered = &data - &mean;
    let sub = centered.slice(ndarray::s![..100, ..]);
    for seed in 0..3u64 {
        let mut rng = Rng::new(split_seed(seed, "grad-check"));
        let p = random_params(d, m, &mut rng);
        let (_, g) = sae_loss_and_grad(&p, sub, 0.04);
        for k in 0..5 {
            let h = 1e-6;
            let (mut plus, mut minus) = (p.clone(), p.clone());
            let ana = match k % 4 {
                0 => {
                    let (i, j) = (rng.below(m), rng.below(d));
                    plus.w_enc[[i, j]] += h;
                    minus.w_enc[[i, j]] -= h;
                    g.w_enc[[i, j]]
                }
                1 => {
                    let (i, j) = (rng.below(d), rng.below(m));
                    plus.w_dec[[i, j]] += h;
                    minus.w_dec[[i, j]] -= h;
                    g.w_dec[[i, j]]
                }
                2 => {
                    let i = rng.below(m);
                    plus.b_enc[i] += h;
                    minus.b_enc[i] -= h;
                    g.b_enc[i]
                }
                _ => {
                    let i = rng.below(d);
                    plus.b_dec[i] += h;
                    minus.b_dec[i] -= h;
                    g.b_dec[i]
                }
            };
            let num = (sae_loss(&plus, sub, 0.04) - sae_loss(&minus, sub, 0.04)) / (2.0 * h);
            let rel = (num - ana).abs() / num.abs().max(ana.abs()).max(1e-8);
            ensure(rel < 1e-4, format!("seed {seed} coordinate {k}: {num} vs {ana}"))?;
            worst_rel = worst_rel.max(rel);
        }
    }
    let mut l0 = Vec::new();
    for lambda in [0.01, 0.04, 0.16] {
        let cfg = SaeConfig {
            lambda,
            epochs: 200,
            ..SaeConfig::default()
        };
        let sae = sae_train(data.view(), &cfg).map_err(err)?;
        ensure(sae.d_sae() == 256, "dictionary width must be 256")?;
        ensure(
            sae.loss_log.windows(2).all(|w| w[1] <= w[0]),
            format!("lambda {lambda}: epoch loss increased"),
        )?;
        l0.push(sae.mean_l0(data.view()));
    }
    ensure(l0[0] >= l0[1] && l0[1] >= l0[2], format!("L0 not monotone: {l0:?}"))?;
    within(t.elapsed(), 120.0)?;
    let mut repl = Vec::new();
    for rep in reports {
        let sc = &rep.steering.as_ref().ok_or("no steering section")?.scenarios[0];
        for layer in &sc.layers {
            let at = |method: &str| {
                sc.rows
                    .iter()
                    .find(|r| r.method == method && r.layer == *layer && r.alpha == 0.0)
                    .map(|r| r.delta_acc)
            };
            let res = at("sae_residual");
            ensure(res == Some(0.0), format!("layer {layer}: residual zero-alpha delta {res:?}"))?;
            repl.push(at("sae_replacement").ok_or("no replacement row")?);
        }
    }
    let mean_repl = repl.iter().sum::<f64>() / repl.len() as f64;
    let worse = repl.iter().filter(|d| **d < 0.0).count();
    let better = repl.iter().filter(|d| **d > 0.0).count();
    ensure(mean_repl < 0.0, format!("replacement mean delta {mean_repl:+.3}"))?;
    Ok(format!(
        "grad rel err <= {worst_rel:.1e}; L0 {:.1} >= {:.1} >= {:.1}; residual delta 0 on all {} cells, \
         replacement mean delta {mean_repl:+.3} ({worse} worse, {better} better)",
        l0[0],
        l0[1],
        l0[2],
        repl.len()
    ))
}

fn c8_statistics() -> Outcome {
    let t = Instant::now();
    let close = |a: f64, b: f64| (a - b).abs() < 1e-9;
    let ln = |v: Vec<f64>, g: Vec<f64>, b: Vec<f64>| {
        layer_norm(Array1::from(v).view(), Array1::from(g).view(), Array1::from(b).view()).map_err(err)
    };
    let y = ln(vec![1.0; 4], vec![1.0; 4], vec![0.0; 4])?;
    ensure(y.iter().all(|x| *x == 0.0), "layer_norm of a constant")?;
    let y = ln(vec![1.0, -1.0], vec![1.0; 2], vec![0.0; 2])?;
    ensure((y[0] - 1.0).abs() < 1e-4 && (y[1] + 1.0).abs() < 1e-4, "layer_norm [1,-1]")?;
    let y = ln(vec![2.0, 0.0], vec![3.0; 2], vec![1.0; 2])?;
    ensure((y[0] - 4.0).abs() < 1e-4 && (y[1] + 2.0).abs() < 1e-4, "layer_norm [2,0]")?;

    let u = |a: &[f64], b: &[f64]| mann_whitney_u(a, b).map_err(err);
    ensure(u(&[1.0, 2.0], &[3.0, 4.0])?.u == 0.0, "U([1,2],[3,4])")?;
    ensure(u(&[1.0, 3.0], &[2.0, 4.0])?.u == 1.0, "U([1,3],[2,4])")?;
    let tie = u(&[5.0, 5.0], &[5.0, 5.0])?;
    ensure(tie.u == 2.0 && tie.p == 1.0, "U of full ties")?;

    let rho = |x: &[f64], y: &[f64]| spearman_rho(x, y).map_err(err);
    ensure(close(rho(&[1., 2., 3.], &[10., 20., 30.])?, 1.0), "rho monotone")?;
    ensure(close(rho(&[1., 2., 3.], &[3., 2., 1.])?, -1.0), "rho reversed")?;
    ensure(close(rho(&[1., 2., 3., 4.], &[1., 3., 2., 4.])?, 0.8), "rho 0.8")?;

    let auc = |s: &[f64], l: &[bool]| roc_auc(s, l).map_err(err);
    ensure(auc(&[0.9, 0.1], &[true, false])? == 1.0, "auc separated")?;
    ensure(auc(&[0.5, 0.5], &[true, false])? == 0.5, "auc tie")?;
    ensure(close(auc(&[0.8, 0.6, 0.4, 0.2], &[true, false, true, false])?, 0.75), "auc 0.75")?;

    let mut runner = TestRunner::new(PtConfig {
        cases: 1000,
        failure_persistence: None,
        ..PtConfig::default()
    });
    let sets = (
        prop::collection::vec(-50i32..50, 1..20),
        prop::collection::vec(-50i32..50, 1..20),
    );
    runner
        .run(&sets, |(a, b)| {
            let a: Vec<f64> = a.into_iter().map(f64::from).collect();
            let b: Vec<f64> = b.into_iter().map(f64::from).collect();
            let ab = mann_whitney_u(&a, &b).unwrap().u;
            let ba = mann_whitney_u(&b, &a).unwrap().u;
            prop_assert!((ab + ba - (a.len() * b.len()) as f64).abs() < 1e-9);
            Ok(())
        })
        .map_err(|e| format!("U complement: {e}"))?;
    let scored = prop::collection::vec((-100.0f64..100.0, any::<bool>()), 2..40)
        .prop_filter("both classes", |v| v.iter().any(|x| x.1) && v.iter().any(|x| !x.1));
    runner
        .run(&scored, |v| {
            let s: Vec<f64> = v.iter().map(|x| x.0).collect();
            let l: Vec<bool> = v.iter().map(|x| x.1).collect();
            let t: Vec<f64> = s.iter().map(|x| (x / 10.0).exp() * 3.0 + 1.0).collect();
            prop_assert_eq!(roc_auc(&s, &l).unwrap(), roc_auc(&t, &l).unwrap());
            Ok(())
        })
        .map_err(|e| format!("AUC invariance: {e}"))?;
    within(t.elapsed(), 5.0)?;
    Ok("all numeric examples exact; 2 x 1000 property trials".into())
}

fn c9_depth_arithmetic() -> Outcome {
    // Two samples straddling each published mean reproduce it exactly.
    let result = |m: usize| MacResult {
        mac_layer: Some(m),
        depth_pct: None,
        final_winner: Role::Visual,
        final_gap: 1.0,
        visual_rank: Some(1),
    };
    let cases: [(&[usize], usize, f64, i64); 3] = [
        (&[13, 14], 32, 13.5, 42),
        (&[19, 20, 20, 20, 20], 28, 19.8, 71),
        (&[21, 21, 21, 21, 22], 32, 21.2, 66),
    ];
    for (macs, layers, mean, pct) in cases {
        let results: Vec<MacResult> = macs.iter().map(|&m| result(m)).collect();
        let agg = aggregate_mac(&results, layers).map_err(err)?;
        let got = agg.mean_mac.ok_or("no mean")?;
        ensure((got - mean).abs() < 1e-12, format!("mean {got} vs {mean}"))?;
        let d = agg.depth_percent_rounded();
        ensure(d == Some(pct), format!("{mean}/{layers}: {d:?}% vs {pct}%"))?;
    }
    Ok("13.5/32 -> 42%, 19.8/28 -> 71%, 21.2/32 -> 66%".into())
}

fn c10_determinism(tmp: &Path) -> Outcome {
    let bin = env!("CARGO_BIN_EXE_maclens");
    let config = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs/default.json");
    let out = tmp.join("c10");
    let mut reports = Vec::new();
    let mut csvs = Vec::new();
    let mut slowest: f64 = 0.0;
    for _ in 0..2 {
        let t = Instant::now();
        let status = Command::new(bin)
            .args(["all", "--config"])
            .arg(&config)
            .arg("--out")
            .arg(&out)
            .stdout(std::process::Stdio::null())
            .status()
            .map_err(err)?;
        slowest = slowest.max(t.elapsed().as_secs_f64());
        ensure(status.success(), format!("`all` exited with {status}"))?;
        let text = std::fs::read_to_string(out.join("report.json")).map_err(err)?;
        reports.push(stable_report(&text).map_err(err)?);
        let mut names: Vec<_> = std::fs::read_dir(&out)
            .map_err(err)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "csv"))
            .collect();
        names.sort();
        let bytes: Vec<(std::path::PathBuf, Vec<u8>)> = names
            .into_iter()
            .map(|p| std::fs::read(&p).map(|b| (p, b)))
            .collect::<Result<_, _>>()
            .map_err(err)?;
        csvs.push(bytes);
    }
    ensure(reports[0] == reports[1], "reports differ outside timestamps")?;
    ensure(csvs[0] == csvs[1], "figure CSVs differ")?;
    ensure(slowest < 300.0, format!("run took {slowest:.1}s"))?;
    Ok(format!(
        "two `all` runs identical modulo timestamps ({} CSVs byte-identical); slowest {slowest:.1}s",
        csvs[0].len()
    ))
}

fn main() {
    let tmp = tempfile::tempdir().expect("temporary directory");
    let tmp = tmp.path();
    let mut failures = 0;
    let mut report = |n: usize, name: &str, t: Instant, outcome: Outcome| {
        let secs = t.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS criterion {n:>2} {name} ({secs:.2}s): {detail}"),
            Err(why) => {
                failures += 1;
                println!("FAIL criterion {n:>2} {name} ({secs:.2}s): {why}");
            }
        }
    };

    let t = Instant::now();
    report(1, "mac recovery", t, c1_mac_recovery(tmp));
    let t = Instant::now();
    report(2, "oracle fidelity", t, c2_oracle_fidelity(tmp));
    let t = Instant::now();
    report(3, "banana trace", t, c3_banana());
    let t = Instant::now();
    report(4, "dissociation", t, c4_dissociation(tmp));
    let t = Instant::now();
    report(5, "patching causality", t, c5_patching(tmp));
    let t = Instant::now();
    let steering = steering_reports(tmp);
    match &steering {
        Ok(reps) => report(6, "steering", t, c6_steering(reps)),
        Err(e) => report(6, "steering", t, Err(e.clone())),
    }
    let t = Instant::now();
    match &steering {
        Ok(reps) => report(7, "sae correctness", t, c7_sae(reps)),
        Err(e) => report(7, "sae correctness", t, Err(e.clone())),
    }
    let t = Instant::now();
    report(8, "statistics battery", t, c8_statistics());
    let t = Instant::now();
    report(9, "depth arithmetic", t, c9_depth_arithmetic());
    let t = Instant::now();
    report(10, "determinism", t, c10_determinism(tmp));

    if failures > 0 {
        println!("{failures} acceptance criteria failed");
        std::process::exit(1);
    }
    println!("all 10 acceptance criteria passed");
}

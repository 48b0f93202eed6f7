//! CSV files behind the trajectory, depth-grid, patching and steering figures.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use super::report::Report;
use crate::error::Result;
use crate::lens::Trajectory;
use crate::patching::PatchOutcome;
use crate::probes::{CrossStage, DepthSample};
use crate::steering::SteerOutcome;

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        std::fs::create_dir_all(dir)?;
    }
    Ok(BufWriter::new(File::create(path)?))
}

fn mean_std(xs: &[f64]) -> (f64, f64) {
    let n = xs.len() as f64;
    let m = xs.iter().sum::<f64>() / n;
    let var = xs.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n;
    (m, var.sqrt())
}

/// One `trace` row per sample and layer plus one `summary` row per layer
/// holding the mean and population standard deviation.
pub fn write_trajectories(path: &Path, sets: &[(String, Vec<Trajectory>)]) -> Result<()> {
    let mut w = create(path)?;
    writeln!(w, "scenario,kind,sample_id,layer,logit_v,logit_p,std_v,std_p")?;
    for (name, trajs) in sets {
        for (i, t) in trajs.iter().enumerate() {
            for l in 0..t.layers() {
                writeln!(w, "{name},trace,{i},{},{},{},,", l + 1, t.logit_v[l], t.logit_p[l])?;
            }
        }
        let layers = trajs.iter().map(Trajectory::layers).min().unwrap_or(0);
        for l in 0..layers {
            let v: Vec<f64> = trajs.iter().map(|t| t.logit_v[l]).collect();
            let p: Vec<f64> = trajs.iter().map(|t| t.logit_p[l]).collect();
            let ((mv, sv), (mp, sp)) = (mean_std(&v), mean_std(&p));
            writeln!(w, "{name},summary,,{},{mv},{mp},{sv},{sp}", l + 1)?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_depth_grid(path: &Path, sets: &[(String, Vec<Vec<DepthSample>>)]) -> Result<()> {
    let mut w = create(path)?;
    writeln!(w, "scenario,sample_id,fraction,layer,l2,cosine")?;
    for (name, samples) in sets {
        for (i, grid) in samples.iter().enumerate() {
            for d in grid {
                writeln!(w, "{name},{i},{},{},{},{}", d.fraction, d.layer, d.l2, d.cosine)?;
            }
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_patch_outcomes(path: &Path, sets: &[(String, Vec<PatchOutcome>)]) -> Result<()> {
    let mut w = create(path)?;
    writeln!(
        w,
        "scenario,sample_id,scope,layer,baseline_answer,patched_answer,changed,flip_v_to_p,flip_p_to_v"
    )?;
    for (name, outcomes) in sets {
        for o in outcomes {
            writeln!(
                w,
                "{name},{},{},{},{},{},{},{},{}",
                o.sample_id,
                o.scope.name(),
                o.layer,
                o.baseline_answer,
                o.patched_answer,
                o.changed,
                o.flip_v_to_p,
                o.flip_p_to_v
            )?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_transitions(
    path: &Path,
    rows: &[(String, String, usize, f64, SteerOutcome)],
) -> Result<()> {
    let mut w = create(path)?;
    writeln!(
        w,
        "scenario,method,layer,alpha,sample_id,baseline_answer,steered_answer,baseline_correct,steered_correct"
    )?;
    for (name, method, layer, alpha, o) in rows {
        for t in &o.transitions {
            writeln!(
                w,
                "{name},{method},{layer},{alpha},{},{},{},{},{}",
                t.sample_id, t.baseline_answer, t.steered_answer, t.baseline_correct, t.steered_correct
            )?;
        }
    }
    w.flush()?;
    Ok(())
}

pub fn write_cross_stage(path: &Path, cross: Option<&CrossStage>) -> Result<()> {
    let mut w = create(path)?;
    writeln!(w, "metric,rho,p")?;
    if let Some(c) = cross {
        for r in &c.rows {
            writeln!(w, "{},{},{}", r.metric, r.rho, r.p)?;
        }
        if let Some(auc) = c.encoding_predictor_auc {
            writeln!(w, "encoding_predictor_auc,{auc},")?;
        }
    }
    w.flush()?;
    Ok(())
}

/// Writes every figure CSV of a report into `dir` and returns the paths.
pub fn emit_plot_data(report: &Report, dir: &Path) -> Result<Vec<PathBuf>> {
    let p = &report.plots;
    let files = [
        "trajectories.csv",
        "depth_grid.csv",
        "patch_outcomes.csv",
        "steering_transitions.csv",
        "cross_stage.csv",
    ]
    .map(|f| dir.join(f));
    write_trajectories(&files[0], &p.trajectories)?;
    write_depth_grid(&files[1], &p.depth_grid)?;
    write_patch_outcomes(&files[2], &p.patch_outcomes)?;
    write_transitions(&files[3], &p.transitions)?;
    write_cross_stage(
        &files[4],
        report.probes.as_ref().and_then(|s| s.cross_stage.as_ref()),
    )?;
    Ok(files.to_vec())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn read(path: &Path) -> Vec<String> {
        std::fs::read_to_string(path).unwrap().lines().map(String::from).collect()
    }

    #[test]
    fn trace_and_summary_row_counts() {
        let dir = tempfile::tempdir().unwrap();
        let t = Trajectory::from_logits(vec![1.0; 16], vec![0.5; 16]).unwrap();
        let path = dir.path().join("t.csv");
        write_trajectories(&path, &[("s".into(), vec![t; 100])]).unwrap();
        let lines = read(&path);
        assert_eq!(lines.len(), 1 + 100 * 16 + 16);
        let summary: Vec<&String> = lines.iter().filter(|l| l.contains(",summary,")).collect();
        assert!(summary.iter().all(|l| l.ends_with(",0,0")));
    }

    #[test]
    fn empty_sets_give_header_only_files() {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("t.csv");
        write_trajectories(&path, &[]).unwrap();
        assert_eq!(read(&path).len(), 1);
        write_trajectories(&path, &[("s".into(), vec![])]).unwrap();
        assert_eq!(read(&path).len(), 1);
        write_cross_stage(&path, None).unwrap();
        assert_eq!(read(&path), vec!["metric,rho,p"]);
    }
}

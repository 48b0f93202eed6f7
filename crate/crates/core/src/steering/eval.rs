use std::collections::HashSet;
use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numkit::Rng;
use crate::substrate::{Hook, InspectableModel, Role, SamplePair, VariantSets};

/// Share of samples that go to the train side by default.
pub const TRAIN_FRACTION: f64 = 0.4;

/// Disjoint train and eval sample indices.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Split {
    pub train: Vec<usize>,
    pub eval: Vec<usize>,
}

impl Split {
    /// Checked constructor; any index on both sides is an error.
    pub fn new(train: Vec<usize>, eval: Vec<usize>) -> Result<Self> {
        let split = Split { train, eval };
        split.validate()?;
        Ok(split)
    }

    pub fn validate(&self) -> Result<()> {
        let train: HashSet<usize> = self.train.iter().copied().collect();
        if let Some(i) = self.eval.iter().find(|i| train.contains(i)) {
            return Err(Error::invalid(format!("sample {i} is in both the train and eval split")));
        }
        Ok(())
    }
}

/// Seeded shuffle of `0..n`; the first `round(n * train_fraction)` go to train.
pub fn train_eval_split(n: usize, train_fraction: f64, seed: u64) -> Result<Split> {
    if !(0.0..1.0).contains(&train_fraction) || train_fraction <= 0.0 {
        return Err(Error::config(format!("train fraction {train_fraction} outside (0, 1)")));
    }
    let k = (n as f64 * train_fraction).round() as usize;
    if n < 2 || k == 0 || k == n {
        return Err(Error::invalid(format!("cannot split {n} samples at {train_fraction}")));
    }
    let mut ids: Vec<usize> = (0..n).collect();
    Rng::new(seed).fork("split").shuffle(&mut ids);
    let eval = ids.split_off(k);
    Split::new(ids, eval)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Transition {
    pub sample_id: usize,
    pub baseline_answer: usize,
    pub steered_answer: usize,
    pub baseline_correct: bool,
    pub steered_correct: bool,
}

impl Transition {
    pub fn improved(&self) -> bool {
        !self.baseline_correct && self.steered_correct
    }

    pub fn degraded(&self) -> bool {
        self.baseline_correct && !self.steered_correct
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteerOutcome {
    pub n: usize,
    pub baseline_acc: f64,
    pub steered_acc: f64,
    /// steered_acc - baseline_acc, as a fraction.
    pub delta_acc: f64,
    pub improved: usize,
    pub degraded: usize,
    pub transitions: Vec<Transition>,
}

impl SteerOutcome {
    pub fn from_transitions(transitions: Vec<Transition>) -> Result<Self> {
        if transitions.is_empty() {
            return Err(Error::invalid("steering outcome over no samples"));
        }
        let n = transitions.len();
        let frac = |f: fn(&Transition) -> bool| transitions.iter().filter(|t| f(t)).count();
        let base = frac(|t| t.baseline_correct);
        let steered = frac(|t| t.steered_correct);
        let improved = frac(Transition::improved);
        let degraded = frac(Transition::degraded);
        Ok(SteerOutcome {
            n,
            baseline_acc: base as f64 / n as f64,
            steered_acc: steered as f64 / n as f64,
            delta_acc: (steered as f64 - base as f64) / n as f64,
            improved,
            degraded,
            transitions,
        })
    }
}

/// Runs every eval pair's counterfactual input with and without `hooks` and
/// scores an answer as correct when it falls in the visual set.
pub fn evaluate_steering<M: InspectableModel + ?Sized>(
    model: &M,
    pairs: &[SamplePair],
    split: &Split,
    hooks: &[Hook],
    sets: &VariantSets,
) -> Result<SteerOutcome> {
    evaluate(model, pairs, split, hooks, sets, None)
}

/// [`evaluate_steering`] against known unhooked answers, indexed like `pairs`.
pub fn evaluate_steering_with_baseline<M: InspectableModel + ?Sized>(
    model: &M,
    pairs: &[SamplePair],
    split: &Split,
    hooks: &[Hook],
    sets: &VariantSets,
    baseline: &[usize],
) -> Result<SteerOutcome> {
    if baseline.len() != pairs.len() {
        return Err(Error::shape(format!(
            "{} baseline answers for {} pairs",
            baseline.len(),
            pairs.len()
        )));
    }
    evaluate(model, pairs, split, hooks, sets, Some(baseline))
}

fn evaluate<M: InspectableModel + ?Sized>(
    model: &M,
    pairs: &[SamplePair],
    split: &Split,
    hooks: &[Hook],
    sets: &VariantSets,
    baseline: Option<&[usize]>,
) -> Result<SteerOutcome> {
    split.validate()?;
    if let Some(&bad) = split.eval.iter().find(|&&i| i >= pairs.len()) {
        return Err(Error::invalid(format!("eval index {bad} with {} pairs", pairs.len())));
    }
    let transitions = split
        .eval
        .par_iter()
        .map(|&i| {
            let input = &pairs[i].cf;
            let base = match baseline {
                Some(b) => b[i],
                None => model.forward(input, &[])?.answer,
            };
            let steered = model.forward(input, hooks)?.answer;
            let ok = |a: usize| sets.classify(a) == Some(Role::Visual);
            Ok(Transition {
                sample_id: i,
                baseline_answer: base,
                steered_answer: steered,
                baseline_correct: ok(base),
                steered_correct: ok(steered),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    SteerOutcome::from_transitions(transitions)
}

pub fn write_transitions_csv<W: Write>(
    out: &mut W,
    rows: &[(&str, usize, f64, &SteerOutcome)],
) -> Result<()> {
    writeln!(
        out,
        "method,layer,alpha,sample_id,baseline_answer,steered_answer,baseline_correct,steered_correct"
    )?;
    for (method, layer, alpha, outcome) in rows {
        for t in &outcome.transitions {
            writeln!(
                out,
                "{method},{layer},{alpha},{},{},{},{},{}",
                t.sample_id, t.baseline_answer, t.steered_answer, t.baseline_correct, t.steered_correct
            )?;
        }
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn t(id: usize, b: bool, s: bool) -> Transition {
        Transition {
            sample_id: id,
            baseline_answer: 0,
            steered_answer: 0,
            baseline_correct: b,
            steered_correct: s,
        }
    }

    #[test]
    fn split_is_disjoint_and_covers() {
        let s = train_eval_split(493, TRAIN_FRACTION, 42).unwrap();
        assert_eq!(s.train.len(), 197);
        let mut all: Vec<usize> = s.train.iter().chain(&s.eval).copied().collect();
        all.sort_unstable();
        assert_eq!(all, (0..493).collect::<Vec<_>>());
        assert_eq!(s, train_eval_split(493, TRAIN_FRACTION, 42).unwrap());
        assert!(Split::new(vec![1, 2], vec![2, 3]).is_err());
    }

    #[test]
    fn improved_and_degraded_bookkeeping() {
        let mut xs = Vec::new();
        for i in 0..6 {
            xs.push(t(i, false, true));
        }
        for i in 6..8 {
            xs.push(t(i, true, false));
        }
        for i in 8..100 {
            xs.push(t(i, i % 2 == 0, i % 2 == 0));
        }
        let o = SteerOutcome::from_transitions(xs).unwrap();
        assert_eq!((o.improved, o.degraded), (6, 2));
        assert!((o.delta_acc - 4.0 / 100.0).abs() < 1e-15);
        assert!((o.delta_acc - (o.steered_acc - o.baseline_acc)).abs() < 1e-15);
    }
}

//! Activation patching: donor states captured from the standard-image run
//! are injected into the counterfactual run at one layer and token scope.

use std::io::Write;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numkit::Matrix;
use crate::substrate::{
    HiddenStateCube, Hook, InspectableModel, ModelInput, Role, TokenScope, VariantSets,
};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PatchScope {
    Full,
    /// The answer slot only.
    Last,
    ImageOnly,
    TextOnly,
}

impl PatchScope {
    pub const ALL: [PatchScope; 4] = [
        PatchScope::Full,
        PatchScope::Last,
        PatchScope::ImageOnly,
        PatchScope::TextOnly,
    ];

    pub fn token_scope(self) -> TokenScope {
        match self {
            PatchScope::Full => TokenScope::All,
            PatchScope::Last => TokenScope::Last,
            PatchScope::ImageOnly => TokenScope::ImageOnly,
            PatchScope::TextOnly => TokenScope::TextOnly,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            PatchScope::Full => "full",
            PatchScope::Last => "last",
            PatchScope::ImageOnly => "image_only",
            PatchScope::TextOnly => "text_only",
        }
    }
}

/// Immutable snapshot of every position of the residual stream at one layer.
#[derive(Debug, Clone, PartialEq)]
pub struct DonorStates {
    pub layer: usize,
    pub states: Arc<Matrix>,
}

pub fn capture_from_cube(cube: &HiddenStateCube, layer: usize) -> Result<DonorStates> {
    if layer == 0 || layer > cube.layers() {
        return Err(Error::invalid(format!(
            "capture layer {layer} outside [1, {}]",
            cube.layers()
        )));
    }
    Ok(DonorStates {
        layer,
        states: Arc::new(cube.layer(layer).to_owned()),
    })
}

/// Runs `input` unhooked and snapshots the output of `layer`.
pub fn capture_states<M: InspectableModel + ?Sized>(
    model: &M,
    input: &ModelInput,
    layer: usize,
) -> Result<DonorStates> {
    if layer == 0 || layer > model.layers() {
        return Err(Error::invalid(format!(
            "capture layer {layer} outside [1, {}]",
            model.layers()
        )));
    }
    capture_from_cube(&model.forward(input, &[])?.cube, layer)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PatchOutcome {
    pub sample_id: usize,
    pub scope: PatchScope,
    pub layer: usize,
    pub baseline_answer: usize,
    pub patched_answer: usize,
    pub baseline_role: Option<Role>,
    pub patched_role: Option<Role>,
    pub changed: bool,
    pub flip_v_to_p: bool,
    pub flip_p_to_v: bool,
}

impl PatchOutcome {
    pub fn classify(
        sample_id: usize,
        scope: PatchScope,
        layer: usize,
        baseline_answer: usize,
        patched_answer: usize,
        sets: &VariantSets,
    ) -> Self {
        let (b, p) = (sets.classify(baseline_answer), sets.classify(patched_answer));
        PatchOutcome {
            sample_id,
            scope,
            layer,
            baseline_answer,
            patched_answer,
            baseline_role: b,
            patched_role: p,
            changed: baseline_answer != patched_answer,
            flip_v_to_p: b == Some(Role::Visual) && p == Some(Role::Prior),
            flip_p_to_v: b == Some(Role::Prior) && p == Some(Role::Visual),
        }
    }
}

/// Patched run against a known baseline answer.
pub fn patch_with_baseline<M: InspectableModel + ?Sized>(
    model: &M,
    sample_id: usize,
    cf_input: &ModelInput,
    baseline_answer: usize,
    donor: &DonorStates,
    scope: PatchScope,
    sets: &VariantSets,
) -> Result<PatchOutcome> {
    let hook = Hook::inject(donor.layer, scope.token_scope(), donor.states.clone());
    let patched = model.forward(cf_input, &[hook])?;
    Ok(PatchOutcome::classify(
        sample_id,
        scope,
        donor.layer,
        baseline_answer,
        patched.answer,
        sets,
    ))
}

/// Injects `donor` into the counterfactual run at `layer` over `scope` and
/// compares against the unpatched answer.
pub fn patch_run<M: InspectableModel + ?Sized>(
    model: &M,
    sample_id: usize,
    cf_input: &ModelInput,
    donor: &DonorStates,
    layer: usize,
    scope: PatchScope,
    sets: &VariantSets,
) -> Result<PatchOutcome> {
    if donor.layer != layer {
        return Err(Error::invalid(format!(
            "donor captured at layer {} used at layer {layer}",
            donor.layer
        )));
    }
    let baseline = model.forward(cf_input, &[])?.answer;
    patch_with_baseline(model, sample_id, cf_input, baseline, donor, scope, sets)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScopeSummary {
    pub scope: PatchScope,
    pub n: usize,
    pub changed: usize,
    pub flips: usize,
    pub reverse_flips: usize,
    pub baseline_visual: usize,
    /// Percent of samples whose answer changed.
    pub chg_pct: f64,
    /// Percent of samples flipped from visual to prior.
    pub flip_pct: f64,
    /// Flips as a percent of baseline-visual samples; `None` without any.
    pub cond_pct: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PatchSummary {
    pub scopes: Vec<ScopeSummary>,
    pub full_flips: usize,
    pub image_flips: usize,
    pub text_flips: usize,
    /// image_flips / full_flips; `None` when full patching flipped nothing.
    pub retention: Option<f64>,
}

impl PatchSummary {
    pub fn scope(&self, scope: PatchScope) -> Option<&ScopeSummary> {
        self.scopes.iter().find(|s| s.scope == scope)
    }

    pub fn reverse_flips(&self) -> usize {
        self.scopes.iter().map(|s| s.reverse_flips).sum()
    }
}

pub fn retention(image_flips: usize, full_flips: usize) -> Option<f64> {
    (full_flips > 0).then(|| image_flips as f64 / full_flips as f64)
}

fn pct(k: usize, n: usize) -> f64 {
    100.0 * k as f64 / n as f64
}

/// Per-scope change and flip rates plus image-only retention.
pub fn summarize_patches(outcomes: &[PatchOutcome]) -> Result<PatchSummary> {
    if outcomes.is_empty() {
        return Err(Error::invalid("summarize_patches over no outcomes"));
    }
    let mut scopes = Vec::new();
    for scope in PatchScope::ALL {
        let xs: Vec<&PatchOutcome> = outcomes.iter().filter(|o| o.scope == scope).collect();
        if xs.is_empty() {
            continue;
        }
        let n = xs.len();
        let count = |f: fn(&PatchOutcome) -> bool| xs.iter().filter(|o| f(o)).count();
        let changed = count(|o| o.changed);
        let flips = count(|o| o.flip_v_to_p);
        let reverse = count(|o| o.flip_p_to_v);
        let baseline_visual = count(|o| o.baseline_role == Some(Role::Visual));
        scopes.push(ScopeSummary {
            scope,
            n,
            changed,
            flips,
            reverse_flips: reverse,
            baseline_visual,
            chg_pct: pct(changed, n),
            flip_pct: pct(flips, n),
            cond_pct: (baseline_visual > 0).then(|| pct(flips, baseline_visual)),
        });
    }
    let flips_of = |s: PatchScope| {
        scopes
            .iter()
            .find(|x| x.scope == s)
            .map_or(0, |x| x.flips)
    };
    let (full, img, txt) = (
        flips_of(PatchScope::Full),
        flips_of(PatchScope::ImageOnly),
        flips_of(PatchScope::TextOnly),
    );
    Ok(PatchSummary {
        scopes,
        full_flips: full,
        image_flips: img,
        text_flips: txt,
        retention: retention(img, full),
    })
}

/// Writes one CSV row per outcome.
pub fn write_outcomes_csv<W: Write>(out: &mut W, scenario: &str, outcomes: &[PatchOutcome]) -> Result<()> {
    writeln!(
        out,
        "scenario,sample_id,scope,layer,baseline_answer,patched_answer,changed,flip_v_to_p,flip_p_to_v"
    )?;
    for o in outcomes {
        writeln!(
            out,
            "{scenario},{},{},{},{},{},{},{},{}",
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
    Ok(())
}

use std::fmt;
use std::sync::Arc;

use ndarray::ArrayView1;

use crate::error::{Error, Result};
use crate::numkit::{Matrix, Vector};

/// Token positions a hook acts on.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum TokenScope {
    All,
    /// The final position, which is the answer slot.
    Last,
    ImageOnly,
    /// Every text position, the answer slot included.
    TextOnly,
    Explicit(Vec<usize>),
}

impl TokenScope {
    /// Sorted positions selected in a sequence of `n_tokens` whose first
    /// `n_img` entries are image tokens.
    pub fn positions(&self, n_img: usize, n_tokens: usize) -> Result<Vec<usize>> {
        let out: Vec<usize> = match self {
            TokenScope::All => (0..n_tokens).collect(),
            TokenScope::Last => vec![n_tokens - 1],
            TokenScope::ImageOnly => (0..n_img.min(n_tokens)).collect(),
            TokenScope::TextOnly => (n_img.min(n_tokens)..n_tokens).collect(),
            TokenScope::Explicit(ids) => {
                let mut ids = ids.clone();
                ids.sort_unstable();
                ids.dedup();
                if let Some(&bad) = ids.iter().find(|&&i| i >= n_tokens) {
                    return Err(Error::shape(format!(
                        "token position {bad} outside a {n_tokens}-token sequence"
                    )));
                }
                ids
            }
        };
        Ok(out)
    }
}

/// A state transformation computed from the live residual stream, for
/// interventions whose payload depends on the current pass.
pub trait StateEdit: Send + Sync + fmt::Debug {
    /// Edits `states` (tokens x width) in place; `positions` is the hook scope.
    fn apply(&self, states: &mut Matrix, positions: &[usize]) -> Result<()>;
}

#[derive(Debug, Clone)]
pub enum AddPayload {
    /// One vector added at every selected position.
    Broadcast(Vector),
    /// One row per selected position.
    PerToken(Matrix),
}

#[derive(Debug, Clone)]
pub enum HookAction {
    /// Replace states. Rows are either one per sequence position (the
    /// selected ones are taken) or one per selected position.
    Inject(Arc<Matrix>),
    Add(AddPayload),
    Edit(Arc<dyn StateEdit>),
}

/// An intervention on the residual stream after a given layer.
///
/// A hook at layer `l` acts on the output of layer `l`, which is what the
/// hidden-state cube records at index `l` and what layer `l + 1` consumes.
#[derive(Debug, Clone)]
pub struct Hook {
    pub layer: usize,
    pub scope: TokenScope,
    pub action: HookAction,
    pub active: bool,
}

impl Hook {
    pub fn inject(layer: usize, scope: TokenScope, states: Arc<Matrix>) -> Self {
        Hook {
            layer,
            scope,
            action: HookAction::Inject(states),
            active: true,
        }
    }

    pub fn add(layer: usize, scope: TokenScope, vector: Vector) -> Self {
        Hook {
            layer,
            scope,
            action: HookAction::Add(AddPayload::Broadcast(vector)),
            active: true,
        }
    }

    pub fn edit(layer: usize, scope: TokenScope, edit: Arc<dyn StateEdit>) -> Self {
        Hook {
            layer,
            scope,
            action: HookAction::Edit(edit),
            active: true,
        }
    }

    fn rank(&self) -> u8 {
        match self.action {
            HookAction::Inject(_) => 0,
            HookAction::Add(_) => 1,
            HookAction::Edit(_) => 2,
        }
    }
}

/// Checks layer ranges and the one-inject-per-layer rule.
pub fn validate_hooks(hooks: &[Hook], layers: usize) -> Result<()> {
    let mut injected = vec![false; layers + 1];
    for h in hooks.iter().filter(|h| h.active) {
        if h.layer == 0 || h.layer > layers {
            return Err(Error::invalid(format!(
                "hook layer {} outside [1, {layers}]",
                h.layer
            )));
        }
        if matches!(h.action, HookAction::Inject(_)) {
            if injected[h.layer] {
                return Err(Error::invalid(format!(
                    "more than one inject hook at layer {}",
                    h.layer
                )));
            }
            injected[h.layer] = true;
        }
    }
    Ok(())
}

/// Applies the active hooks registered for `layer`: injections first, then
/// additions, then dynamic edits, each group in registration order.
pub fn apply_hooks(hooks: &[Hook], layer: usize, states: &mut Matrix, n_img: usize) -> Result<()> {
    let mut here: Vec<&Hook> = hooks
        .iter()
        .filter(|h| h.active && h.layer == layer)
        .collect();
    here.sort_by_key(|h| h.rank());
    let (t, d) = states.dim();
    for hook in here {
        let pos = hook.scope.positions(n_img, t)?;
        match &hook.action {
            HookAction::Inject(src) => {
                let full = src.nrows() == t;
                if src.ncols() != d || !(full || src.nrows() == pos.len()) {
                    return Err(Error::shape(format!(
                        "inject payload {:?} at layer {layer} for {} positions of a {t}x{d} state",
                        src.dim(),
                        pos.len()
                    )));
                }
                for (k, &p) in pos.iter().enumerate() {
                    let row = if full { p } else { k };
                    states.row_mut(p).assign(&src.row(row));
                }
            }
            HookAction::Add(AddPayload::Broadcast(v)) => {
                check_width(v.view(), d, layer)?;
                for &p in &pos {
                    let mut r = states.row_mut(p);
                    r += v;
                }
            }
            HookAction::Add(AddPayload::PerToken(m)) => {
                if m.dim() != (pos.len(), d) {
                    return Err(Error::shape(format!(
                        "add payload {:?} at layer {layer}, expected {:?}",
                        m.dim(),
                        (pos.len(), d)
                    )));
                }
                for (k, &p) in pos.iter().enumerate() {
                    let mut r = states.row_mut(p);
                    r += &m.row(k);
                }
            }
            HookAction::Edit(e) => e.apply(states, &pos)?,
        }
    }
    Ok(())
}

fn check_width(v: ArrayView1<'_, f64>, d: usize, layer: usize) -> Result<()> {
    if v.len() != d {
        return Err(Error::shape(format!(
            "add vector of length {} at layer {layer}, residual width {d}",
            v.len()
        )));
    }
    Ok(())
}

use ndarray::{ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numkit::Vector;
use crate::substrate::{Hook, InspectableModel, ModelInput, SamplePair, TokenScope};

/// Default strengths for contrastive linear steering.
pub const LINEAR_ALPHAS: [f64; 7] = [0.0, 0.2, 0.5, 1.0, 1.5, 2.0, 3.0];

/// Contrastive mean difference of token-pooled states at one layer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SteeringDirection {
    pub layer: usize,
    pub vector: Vec<f64>,
    pub n_cf: usize,
    pub n_std: usize,
}

impl SteeringDirection {
    pub fn as_vector(&self) -> Vector {
        Vector::from(self.vector.clone())
    }
}

/// Mean over token positions.
pub fn mean_pool(states: ArrayView2<'_, f64>) -> Vector {
    states.mean_axis(Axis(0)).expect("at least one token")
}

/// d = mean over cf of pooled states - mean over std of pooled states.
pub fn direction_from_states(
    cf: &[ArrayView2<'_, f64>],
    std: &[ArrayView2<'_, f64>],
    layer: usize,
) -> Result<SteeringDirection> {
    if cf.is_empty() || std.is_empty() {
        return Err(Error::invalid("steering direction needs train samples of both kinds"));
    }
    let width = cf[0].ncols();
    let pooled = |xs: &[ArrayView2<'_, f64>]| -> Result<Vector> {
        let mut acc = Vector::zeros(width);
        for x in xs {
            if x.ncols() != width || x.nrows() == 0 {
                return Err(Error::shape(format!("train states {:?}, width {width}", x.dim())));
            }
            acc += &mean_pool(*x);
        }
        Ok(acc / xs.len() as f64)
    };
    let d = pooled(cf)? - pooled(std)?;
    Ok(SteeringDirection {
        layer,
        vector: d.to_vec(),
        n_cf: cf.len(),
        n_std: std.len(),
    })
}

/// Runs both inputs of every training pair and takes the contrastive mean at `layer`.
pub fn linear_direction<M: InspectableModel + ?Sized>(
    model: &M,
    pairs: &[&SamplePair],
    layer: usize,
) -> Result<SteeringDirection> {
    if pairs.is_empty() {
        return Err(Error::invalid("linear_direction with an empty train set"));
    }
    if layer == 0 || layer > model.layers() {
        return Err(Error::invalid(format!("steering layer {layer} outside [1, {}]", model.layers())));
    }
    let mut cf = Vec::with_capacity(pairs.len());
    let mut std = Vec::with_capacity(pairs.len());
    for p in pairs {
        cf.push(model.forward(&p.cf, &[])?.cube.layer(layer).to_owned());
        std.push(model.forward(&p.std, &[])?.cube.layer(layer).to_owned());
    }
    let cv: Vec<_> = cf.iter().map(|m| m.view()).collect();
    let sv: Vec<_> = std.iter().map(|m| m.view()).collect();
    direction_from_states(&cv, &sv, layer)
}

/// Hook adding alpha * d at every position in `scope` after the direction's layer.
pub fn linear_hook(direction: &SteeringDirection, alpha: f64, scope: TokenScope) -> Hook {
    Hook::add(direction.layer, scope, direction.as_vector() * alpha)
}

/// Answer of `input` with linear steering active for the whole pass.
pub fn apply_linear<M: InspectableModel + ?Sized>(
    model: &M,
    input: &ModelInput,
    direction: &SteeringDirection,
    alpha: f64,
    scope: TokenScope,
) -> Result<usize> {
    if direction.vector.len() != model.width() {
        return Err(Error::shape(format!(
            "direction of length {} for width {}",
            direction.vector.len(),
            model.width()
        )));
    }
    Ok(model.forward(input, &[linear_hook(direction, alpha, scope)])?.answer)
}

use ndarray::{Array1, ArrayView1, ArrayView2};

use super::Vector;
use crate::error::{Error, Result};

/// Full-batch gradient descent settings for [`logistic_fit`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LogisticOptions {
    pub l2: f64,
    pub iters: usize,
    pub step: f64,
}

impl Default for LogisticOptions {
    fn default() -> Self {
        LogisticOptions {
            l2: 1e-3,
            iters: 500,
            step: 0.1,
        }
    }
}

#[derive(Debug, Clone)]
pub struct LogisticModel {
    pub weights: Vector,
    pub intercept: f64,
    /// Objective value before the first step and after every accepted step.
    pub loss_history: Vec<f64>,
}

impl LogisticModel {
    pub fn decision(&self, x: ArrayView1<'_, f64>) -> f64 {
        x.dot(&self.weights) + self.intercept
    }

    pub fn predict_proba(&self, x: ArrayView2<'_, f64>) -> Vector {
        x.rows().into_iter().map(|r| sigmoid(self.decision(r))).collect()
    }
}

fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// log(1 + e^z) without overflow.
fn softplus(z: f64) -> f64 {
    if z > 0.0 {
        z + (-z).exp().ln_1p()
    } else {
        z.exp().ln_1p()
    }
}

fn objective(x: ArrayView2<'_, f64>, y: &[f64], w: &Vector, b: f64, l2: f64) -> f64 {
    let n = y.len() as f64;
    let data: f64 = x
        .rows()
        .into_iter()
        .zip(y)
        .map(|(r, &t)| {
            let z = r.dot(w) + b;
            // t in {0,1}: loss = softplus(z) - t*z
            softplus(z) - t * z
        })
        .sum();
    data / n + 0.5 * l2 * w.dot(w)
}

/// L2-regularized logistic regression fitted by full-batch gradient descent.
/// A step that raises the objective is rejected and the step size halved.
pub fn logistic_fit(
    x: ArrayView2<'_, f64>,
    labels: &[bool],
    opts: LogisticOptions,
) -> Result<LogisticModel> {
    let (n, d) = x.dim();
    if n != labels.len() {
        return Err(Error::shape(format!("logistic_fit: {n} rows vs {} labels", labels.len())));
    }
    if x.iter().any(|v| !v.is_finite()) {
        return Err(Error::NonFinite("logistic_fit features".into()));
    }
    let positives = labels.iter().filter(|&&l| l).count();
    if positives == 0 || positives == n {
        return Err(Error::degenerate("logistic_fit needs both classes"));
    }
    let y: Vec<f64> = labels.iter().map(|&l| if l { 1.0 } else { 0.0 }).collect();
    let mut w = Vector::zeros(d);
    let mut b = 0.0;
    let mut step = opts.step;
    let mut loss = objective(x, &y, &w, b, opts.l2);
    let mut history = vec![loss];

    for _ in 0..opts.iters {
        let mut resid = Array1::<f64>::zeros(n);
        for (i, r) in x.rows().into_iter().enumerate() {
            resid[i] = sigmoid(r.dot(&w) + b) - y[i];
        }
        let gw = x.t().dot(&resid) / n as f64 + &w * opts.l2;
        let gb = resid.sum() / n as f64;

        let mut accepted = false;
        for _ in 0..50 {
            let w_try = &w - &(&gw * step);
            let b_try = b - step * gb;
            let l_try = objective(x, &y, &w_try, b_try, opts.l2);
            if l_try <= loss {
                w = w_try;
                b = b_try;
                loss = l_try;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !accepted {
            break;
        }
        history.push(loss);
    }
    Ok(LogisticModel {
        weights: w,
        intercept: b,
        loss_history: history,
    })
}

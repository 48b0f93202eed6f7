use ndarray::{Array1, Array2, ArrayView1};

use crate::error::{Error, Result};

pub type Vector = Array1<f64>;
pub type Matrix = Array2<f64>;

/// Variance guard used by every layer norm in the crate.
pub const LN_EPS: f64 = 1e-5;

/// Zero-mean / unit-variance normalization followed by an elementwise affine map.
pub fn layer_norm(
    v: ArrayView1<'_, f64>,
    gain: ArrayView1<'_, f64>,
    bias: ArrayView1<'_, f64>,
) -> Result<Vector> {
    let n = v.len();
    if n == 0 {
        return Err(Error::invalid("layer_norm on an empty vector"));
    }
    if gain.len() != n || bias.len() != n {
        return Err(Error::shape(format!(
            "layer_norm: input {n}, gain {}, bias {}",
            gain.len(),
            bias.len()
        )));
    }
    let mean = v.sum() / n as f64;
    let var = v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n as f64;
    let inv = 1.0 / (var + LN_EPS).sqrt();
    let out: Vector = v
        .iter()
        .zip(gain.iter().zip(bias.iter()))
        .map(|(x, (g, b))| (x - mean) * inv * g + b)
        .collect();
    if out.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("layer_norm output".into()));
    }
    Ok(out)
}

pub fn l2_distance(a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::shape(format!("l2_distance: {} vs {}", a.len(), b.len())));
    }
    Ok(a.iter()
        .zip(b.iter())
        .map(|(x, y)| (x - y) * (x - y))
        .sum::<f64>()
        .sqrt())
}

pub fn cosine_sim(a: ArrayView1<'_, f64>, b: ArrayView1<'_, f64>) -> Result<f64> {
    if a.len() != b.len() {
        return Err(Error::shape(format!("cosine_sim: {} vs {}", a.len(), b.len())));
    }
    let na = a.dot(&a).sqrt();
    let nb = b.dot(&b).sqrt();
    if na == 0.0 || nb == 0.0 {
        return Err(Error::invalid("cosine_sim of a zero vector"));
    }
    Ok((a.dot(&b) / (na * nb)).clamp(-1.0, 1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;
    use ndarray::array;

    #[test]
    fn layer_norm_constant_input_is_zero() {
        let v = array![1.0, 1.0, 1.0, 1.0];
        let out = layer_norm(v.view(), Vector::ones(4).view(), Vector::zeros(4).view()).unwrap();
        assert_eq!(out, Vector::zeros(4));
    }

    #[test]
    fn layer_norm_two_point() {
        let v = array![1.0, -1.0];
        let out = layer_norm(v.view(), Vector::ones(2).view(), Vector::zeros(2).view()).unwrap();
        // mean 0, variance 1, so the only deviation is the epsilon guard
        let k = 1.0 / (1.0 + LN_EPS).sqrt();
        assert_abs_diff_eq!(out[0], k, epsilon = 1e-15);
        assert_abs_diff_eq!(out[1], -k, epsilon = 1e-15);
        assert_abs_diff_eq!(out[0], 1.0, epsilon = 1e-5);
    }

    #[test]
    fn layer_norm_gain_and_bias() {
        let v = array![2.0, 0.0];
        let out = layer_norm(v.view(), array![3.0, 3.0].view(), array![1.0, 1.0].view()).unwrap();
        let k = 1.0 / (1.0 + LN_EPS).sqrt();
        assert_abs_diff_eq!(out[0], 3.0 * k + 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(out[1], -3.0 * k + 1.0, epsilon = 1e-12);
        assert_abs_diff_eq!(out[0], 4.0, epsilon = 1e-4);
        assert_abs_diff_eq!(out[1], -2.0, epsilon = 1e-4);
    }

    #[test]
    fn layer_norm_errors() {
        let e = Vector::zeros(0);
        assert!(layer_norm(e.view(), e.view(), e.view()).is_err());
        let v = array![1.0, 2.0];
        assert!(layer_norm(v.view(), array![1.0].view(), array![0.0, 0.0].view()).is_err());
    }

    #[test]
    fn distances() {
        let a = array![3.0, 4.0];
        let z = array![0.0, 0.0];
        assert_eq!(l2_distance(a.view(), z.view()).unwrap(), 5.0);
        assert_eq!(l2_distance(a.view(), a.view()).unwrap(), 0.0);
        assert_abs_diff_eq!(cosine_sim(a.view(), a.view()).unwrap(), 1.0, epsilon = 1e-15);
        let e1 = array![1.0, 0.0];
        let e2 = array![0.0, 1.0];
        assert_eq!(cosine_sim(e1.view(), e2.view()).unwrap(), 0.0);
        assert!(cosine_sim(a.view(), z.view()).is_err());
        assert!(l2_distance(a.view(), array![1.0].view()).is_err());
    }
}

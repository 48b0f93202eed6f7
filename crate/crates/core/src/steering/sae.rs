use std::fs;
use std::path::Path;
use std::sync::Arc;

use ndarray::{Array1, Array2, ArrayView1, ArrayView2, Axis};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::numkit::{Matrix, Rng, Vector};
use crate::substrate::{Hook, StateEdit, TokenScope};

/// Default strengths for feature steering.
pub const SAE_ALPHAS: [f64; 5] = [0.0, 1.0, 2.0, 3.0, 5.0];

const MAGIC: &[u8; 8] = b"MLSAE001";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct SaeConfig {
    /// Dictionary size as a multiple of the input width.
    pub expansion: usize,
    /// L1 weight on the codes.
    pub lambda: f64,
    pub epochs: usize,
    /// Initial gradient step; halved whenever a step would raise the loss.
    pub step: f64,
    pub seed: u64,
}

impl Default for SaeConfig {
    fn default() -> Self {
        SaeConfig {
            expansion: 4,
            lambda: 0.04,
            epochs: 200,
            step: 0.5,
            seed: 0,
        }
    }
}

/// Raw parameters: z = relu(w_enc h + b_enc), h_hat = w_dec z + b_dec.
#[derive(Debug, Clone, PartialEq)]
pub struct SaeParams {
    pub w_enc: Matrix,
    pub b_enc: Vector,
    pub w_dec: Matrix,
    pub b_dec: Vector,
}

impl SaeParams {
    fn axpy(&self, alpha: f64, g: &SaeParams) -> SaeParams {
        SaeParams {
            w_enc: &self.w_enc + &(&g.w_enc * alpha),
            b_enc: &self.b_enc + &(&g.b_enc * alpha),
            w_dec: &self.w_dec + &(&g.w_dec * alpha),
            b_dec: &self.b_dec + &(&g.b_dec * alpha),
        }
    }

    fn is_finite(&self) -> bool {
        [&self.w_enc, &self.w_dec].iter().all(|m| m.iter().all(|x| x.is_finite()))
            && [&self.b_enc, &self.b_dec].iter().all(|v| v.iter().all(|x| x.is_finite()))
    }
}

/// Mean over samples of ||h - h_hat||^2 + lambda * ||z||_1, and its gradient.
pub fn sae_loss_and_grad(p: &SaeParams, data: ArrayView2<'_, f64>, lambda: f64) -> (f64, SaeParams) {
    let n = data.nrows() as f64;
    let mut pre = data.dot(&p.w_enc.t());
    pre += &p.b_enc;
    let z = pre.mapv(|x| x.max(0.0));
    let mut r = z.dot(&p.w_dec.t());
    r += &p.b_dec;
    r -= &data;
    let loss = (r.iter().map(|x| x * x).sum::<f64>() + lambda * z.sum()) / n;

    let g_w_dec = r.t().dot(&z) * (2.0 / n);
    let g_b_dec = r.sum_axis(Axis(0)) * (2.0 / n);
    let mut g_pre = r.dot(&p.w_dec) * 2.0;
    g_pre += lambda;
    g_pre.zip_mut_with(&pre, |g, &a| {
        if a <= 0.0 {
            *g = 0.0
        }
    });
    let g_w_enc = g_pre.t().dot(&data) / n;
    let g_b_enc = g_pre.sum_axis(Axis(0)) / n;
    (
        loss,
        SaeParams {
            w_enc: g_w_enc,
            b_enc: g_b_enc,
            w_dec: g_w_dec,
            b_dec: g_b_dec,
        },
    )
}

pub fn sae_loss(p: &SaeParams, data: ArrayView2<'_, f64>, lambda: f64) -> f64 {
    let mut pre = data.dot(&p.w_enc.t());
    pre += &p.b_enc;
    let z = pre.mapv(|x| x.max(0.0));
    let mut r = z.dot(&p.w_dec.t());
    r += &p.b_dec;
    r -= &data;
    (r.iter().map(|x| x * x).sum::<f64>() + lambda * z.sum()) / data.nrows() as f64
}

/// A trained sparse autoencoder.
#[derive(Debug, Clone, PartialEq)]
pub struct SaeModel {
    pub params: SaeParams,
    pub lambda: f64,
    /// Loss at the end of every epoch, preceded by the initial loss.
    pub loss_log: Vec<f64>,
}

impl SaeModel {
    pub fn d_model(&self) -> usize {
        self.params.w_enc.ncols()
    }

    pub fn d_sae(&self) -> usize {
        self.params.w_enc.nrows()
    }

    pub fn encode(&self, h: ArrayView1<'_, f64>) -> Vector {
        let mut z = self.params.w_enc.dot(&h);
        z += &self.params.b_enc;
        z.mapv_inplace(|x| x.max(0.0));
        z
    }

    pub fn decode(&self, z: ArrayView1<'_, f64>) -> Vector {
        self.params.w_dec.dot(&z) + &self.params.b_dec
    }

    pub fn encode_batch(&self, h: ArrayView2<'_, f64>) -> Matrix {
        let mut z = h.dot(&self.params.w_enc.t());
        z += &self.params.b_enc;
        z.mapv_inplace(|x| x.max(0.0));
        z
    }

    /// Mean count of active features per sample.
    pub fn mean_l0(&self, data: ArrayView2<'_, f64>) -> f64 {
        let z = self.encode_batch(data);
        z.iter().filter(|&&x| x > 0.0).count() as f64 / data.nrows() as f64
    }

    /// Mean squared reconstruction error per dimension.
    pub fn reconstruction_mse(&self, data: ArrayView2<'_, f64>) -> f64 {
        let z = self.encode_batch(data);
        let mut r = z.dot(&self.params.w_dec.t());
        r += &self.params.b_dec;
        r -= &data;
        r.iter().map(|x| x * x).sum::<f64>() / data.len() as f64
    }

    /// Flat binary layout: magic `MLSAE001`, little-endian u64 d_model and
    /// d_sae, f64 lambda, then w_enc (d_sae x d_model), b_enc, w_dec
    /// (d_model x d_sae) and b_dec as row-major little-endian f64.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::new();
        out.extend_from_slice(MAGIC);
        out.extend_from_slice(&(self.d_model() as u64).to_le_bytes());
        out.extend_from_slice(&(self.d_sae() as u64).to_le_bytes());
        out.extend_from_slice(&self.lambda.to_le_bytes());
        let p = &self.params;
        for v in p
            .w_enc
            .iter()
            .chain(p.b_enc.iter())
            .chain(p.w_dec.iter())
            .chain(p.b_dec.iter())
        {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 32 || &bytes[..8] != MAGIC {
            return Err(Error::invalid("not a sparse-autoencoder file"));
        }
        let word = |i: usize| -> [u8; 8] { bytes[8 + 8 * i..16 + 8 * i].try_into().expect("8 bytes") };
        let d = u64::from_le_bytes(word(0)) as usize;
        let m = u64::from_le_bytes(word(1)) as usize;
        let lambda = f64::from_le_bytes(word(2));
        let count = 2 * d * m + d + m;
        if bytes.len() != 32 + 8 * count {
            return Err(Error::shape(format!("autoencoder payload for d={d}, d_sae={m}")));
        }
        let vals: Vec<f64> = bytes[32..]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8 bytes")))
            .collect();
        let (we, rest) = vals.split_at(m * d);
        let (be, rest) = rest.split_at(m);
        let (wd, bd) = rest.split_at(d * m);
        let shape = |e: ndarray::ShapeError| Error::shape(e.to_string());
        Ok(SaeModel {
            params: SaeParams {
                w_enc: Array2::from_shape_vec((m, d), we.to_vec()).map_err(shape)?,
                b_enc: Array1::from(be.to_vec()),
                w_dec: Array2::from_shape_vec((d, m), wd.to_vec()).map_err(shape)?,
                b_dec: Array1::from(bd.to_vec()),
            },
            lambda,
            loss_log: Vec::new(),
        })
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir)?;
        }
        let tmp = path.with_extension("tmp");
        fs::write(&tmp, self.to_bytes())?;
        fs::rename(tmp, path)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        SaeModel::from_bytes(&fs::read(path)?)
    }
}

/// Random encoder rows with E||w||^2 = 2 d / d_sae and a tied decoder, so
/// the untrained autoencoder starts close to the identity on centered data.
fn init_params(d: usize, m: usize, rng: &mut Rng) -> SaeParams {
    let scale = (2.0 / m as f64).sqrt();
    let w_enc = Array2::from_shape_fn((m, d), |_| scale * rng.normal());
    SaeParams {
        w_dec: w_enc.t().to_owned(),
        w_enc,
        b_enc: Vector::zeros(m),
        b_dec: Vector::zeros(d),
    }
}

/// Trains an autoencoder on rows of `states` by full-batch gradient descent.
///
/// Training runs on mean-centered data; the center is folded into the
/// biases afterwards so the returned model acts on raw states.
pub fn sae_train(states: ArrayView2<'_, f64>, cfg: &SaeConfig) -> Result<SaeModel> {
    let (n, d) = states.dim();
    if n == 0 || d == 0 {
        return Err(Error::invalid("sae_train on an empty state matrix"));
    }
    if states.iter().any(|x| !x.is_finite()) {
        return Err(Error::NonFinite("sae_train input".into()));
    }
    if cfg.expansion == 0 || !(cfg.lambda >= 0.0) || !(cfg.step > 0.0) {
        return Err(Error::config("sae expansion, lambda and step must be positive"));
    }
    if n < d {
        log::warn!("training an autoencoder on {n} samples of width {d}");
    }
    let m = cfg.expansion * d;
    let center = states.mean_axis(Axis(0)).expect("nonempty");
    let data = &states - &center;
    let mut rng = Rng::new(cfg.seed).fork("sae-init");
    let mut p = init_params(d, m, &mut rng);
    let mut step = cfg.step;
    let (mut loss, _) = sae_loss_and_grad(&p, data.view(), cfg.lambda);
    let mut log = vec![loss];
    for epoch in 0..cfg.epochs {
        let (_, g) = sae_loss_and_grad(&p, data.view(), cfg.lambda);
        let mut accepted = false;
        for _ in 0..40 {
            let cand = p.axpy(-step, &g);
            let l = sae_loss(&cand, data.view(), cfg.lambda);
            if !l.is_finite() {
                step *= 0.5;
                continue;
            }
            if l <= loss {
                p = cand;
                loss = l;
                accepted = true;
                break;
            }
            step *= 0.5;
        }
        if !loss.is_finite() || !p.is_finite() {
            return Err(Error::NonFinite(format!("autoencoder loss at epoch {epoch}")));
        }
        log.push(loss);
        if !accepted {
            log::debug!("autoencoder converged at epoch {epoch}");
            break;
        }
    }
    // fold the centering into the biases
    let b_enc = &p.b_enc - &p.w_enc.dot(&center);
    let b_dec = &p.b_dec + &center;
    Ok(SaeModel {
        params: SaeParams {
            b_enc,
            b_dec,
            ..p
        },
        lambda: cfg.lambda,
        loss_log: log,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FeatureSelection {
    /// Mean cf code minus mean std code, per feature.
    pub delta: Vec<f64>,
    /// |delta_j| times the norm of decoder column j.
    pub scores: Vec<f64>,
    /// Features with delta > 0, best score first.
    pub visual: Vec<usize>,
    /// Features with delta < 0, best score first.
    pub prior: Vec<usize>,
}

/// Ranks features by decoder-weighted differential activation between the
/// two state sets and keeps the top `k` in each direction.
pub fn sae_select_features(
    sae: &SaeModel,
    cf_states: ArrayView2<'_, f64>,
    std_states: ArrayView2<'_, f64>,
    k: usize,
) -> Result<FeatureSelection> {
    if cf_states.nrows() == 0 || std_states.nrows() == 0 {
        return Err(Error::invalid("feature selection needs both state sets"));
    }
    let d = sae.d_model();
    if cf_states.ncols() != d || std_states.ncols() != d {
        return Err(Error::shape("state width does not match the autoencoder"));
    }
    let zc = sae.encode_batch(cf_states).mean_axis(Axis(0)).expect("rows");
    let zs = sae.encode_batch(std_states).mean_axis(Axis(0)).expect("rows");
    let delta: Vec<f64> = (&zc - &zs).to_vec();
    let norms: Vec<f64> = sae
        .params
        .w_dec
        .columns()
        .into_iter()
        .map(|c| c.dot(&c).sqrt())
        .collect();
    let scores: Vec<f64> = delta.iter().zip(&norms).map(|(x, n)| x.abs() * n).collect();
    let top = |keep: fn(f64) -> bool| -> Vec<usize> {
        let mut ids: Vec<usize> = (0..delta.len()).filter(|&j| keep(delta[j])).collect();
        ids.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]).then(a.cmp(&b)));
        ids.truncate(k);
        ids
    };
    let visual = top(|x| x > 0.0);
    let prior = top(|x| x < 0.0);
    Ok(FeatureSelection {
        delta,
        scores,
        visual,
        prior,
    })
}

/// How the edited reconstruction enters the residual stream.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SaeMode {
    /// h' = h + decode(z') - decode(z), the same delta at every position.
    Residual,
    /// h'_t = decode(encode(h_t) edited) independently at every position.
    Replace,
}

/// Feature-space edit of the token-pooled state.
#[derive(Debug, Clone)]
pub struct SaeSteer {
    pub sae: Arc<SaeModel>,
    pub visual: Vec<usize>,
    pub prior: Vec<usize>,
    pub alpha_visual: f64,
    pub alpha_prior: f64,
    pub mode: SaeMode,
}

impl SaeSteer {
    /// Codes of the pooled state before and after the edit.
    fn codes(&self, pooled: ArrayView1<'_, f64>) -> (Vector, Vector) {
        let z = self.sae.encode(pooled);
        let mut edited = z.clone();
        for &j in &self.visual {
            edited[j] += self.alpha_visual;
        }
        for &j in &self.prior {
            edited[j] -= self.alpha_prior;
        }
        edited.mapv_inplace(|x| x.max(0.0));
        (z, edited)
    }
}

impl StateEdit for SaeSteer {
    fn apply(&self, states: &mut Matrix, positions: &[usize]) -> Result<()> {
        if positions.is_empty() {
            return Ok(());
        }
        if states.ncols() != self.sae.d_model() {
            return Err(Error::shape("residual width does not match the autoencoder"));
        }
        match self.mode {
            SaeMode::Residual => {
                let pooled = states.select(Axis(0), positions).mean_axis(Axis(0)).expect("rows");
                let (z, edited) = self.codes(pooled.view());
                let delta = self.sae.decode(edited.view()) - self.sae.decode(z.view());
                for &p in positions {
                    let mut row = states.row_mut(p);
                    row += &delta;
                }
            }
            SaeMode::Replace => {
                for &p in positions {
                    let (_, edited) = self.codes(states.row(p));
                    let rec = self.sae.decode(edited.view());
                    states.row_mut(p).assign(&rec);
                }
            }
        }
        Ok(())
    }
}

fn check_selection(sae: &SaeModel, sel: &FeatureSelection) -> Result<()> {
    let m = sae.d_sae();
    if sel.delta.len() != m || sel.visual.iter().chain(&sel.prior).any(|&j| j >= m) {
        return Err(Error::invalid("feature selection does not match the autoencoder"));
    }
    Ok(())
}

fn sae_hook(
    sae: Arc<SaeModel>,
    sel: &FeatureSelection,
    layer: usize,
    alpha_visual: f64,
    alpha_prior: f64,
    mode: SaeMode,
) -> Result<Hook> {
    check_selection(&sae, sel)?;
    if !(alpha_visual >= 0.0 && alpha_prior >= 0.0) {
        return Err(Error::invalid("steering strengths must be >= 0"));
    }
    let edit = SaeSteer {
        sae,
        visual: sel.visual.clone(),
        prior: sel.prior.clone(),
        alpha_visual,
        alpha_prior,
        mode,
    };
    Ok(Hook::edit(layer, TokenScope::All, Arc::new(edit)))
}

/// Bidirectional feature steering whose decode delta is added at every position.
pub fn sae_residual_hook(
    sae: Arc<SaeModel>,
    sel: &FeatureSelection,
    layer: usize,
    alpha_visual: f64,
    alpha_prior: f64,
) -> Result<Hook> {
    sae_hook(sae, sel, layer, alpha_visual, alpha_prior, SaeMode::Residual)
}

/// Variant that overwrites every position with its own edited reconstruction.
pub fn sae_replacement_hook(
    sae: Arc<SaeModel>,
    sel: &FeatureSelection,
    layer: usize,
    alpha_visual: f64,
    alpha_prior: f64,
) -> Result<Hook> {
    sae_hook(sae, sel, layer, alpha_visual, alpha_prior, SaeMode::Replace)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::substrate::HookAction;

    fn low_rank(n: usize, d: usize, k: usize, seed: u64) -> Matrix {
        let mut rng = Rng::new(seed);
        let basis = Array2::from_shape_fn((k, d), |_| rng.normal() / (d as f64).sqrt());
        let coef = Array2::from_shape_fn((n, k), |_| rng.normal());
        coef.dot(&basis) + 0.3
    }

    #[test]
    fn gradient_matches_finite_differences() {
        for seed in 0..3u64 {
            let data = low_rank(30, 6, 3, seed);
            let mut rng = Rng::new(seed).fork("p");
            let mut p = init_params(6, 24, &mut rng);
            p.b_enc.mapv_inplace(|_| 0.1 * rng.normal());
            p.b_dec.mapv_inplace(|_| 0.1 * rng.normal());
            let (_, g) = sae_loss_and_grad(&p, data.view(), 0.04);
            for _ in 0..5 {
                let (i, j) = (rng.below(24), rng.below(6));
                let h = 1e-6;
                let mut plus = p.clone();
                plus.w_enc[[i, j]] += h;
                let mut minus = p.clone();
                minus.w_enc[[i, j]] -= h;
                let num = (sae_loss(&plus, data.view(), 0.04) - sae_loss(&minus, data.view(), 0.04))
                    / (2.0 * h);
                let ana = g.w_enc[[i, j]];
                let rel = (num - ana).abs() / num.abs().max(ana.abs()).max(1e-8);
                assert!(rel < 1e-4, "seed {seed} ({i},{j}): {num} vs {ana}");
            }
        }
    }

    #[test]
    fn loss_log_never_increases() {
        let data = low_rank(50, 8, 3, 1);
        let cfg = SaeConfig {
            epochs: 60,
            step: 5.0,
            ..Default::default()
        };
        let sae = sae_train(data.view(), &cfg).unwrap();
        assert_eq!(sae.d_sae(), 32);
        for w in sae.loss_log.windows(2) {
            assert!(w[1] <= w[0]);
        }
    }

    #[test]
    fn binary_round_trip() {
        let data = low_rank(20, 4, 2, 2);
        let sae = sae_train(data.view(), &SaeConfig { epochs: 3, ..Default::default() }).unwrap();
        let back = SaeModel::from_bytes(&sae.to_bytes()).unwrap();
        assert_eq!(back.params, sae.params);
        assert_eq!(back.lambda, 0.04);
        assert!(SaeModel::from_bytes(&sae.to_bytes()[..40]).is_err());
    }

    #[test]
    fn selection_of_identical_sets_is_empty() {
        let data = low_rank(20, 4, 2, 2);
        let sae = sae_train(data.view(), &SaeConfig { epochs: 3, ..Default::default() }).unwrap();
        let sel = sae_select_features(&sae, data.view(), data.view(), 50).unwrap();
        assert!(sel.visual.is_empty() && sel.prior.is_empty());
    }

    #[test]
    fn zero_strength_residual_edit_is_identity() {
        let data = low_rank(20, 4, 2, 2);
        let sae = Arc::new(sae_train(data.view(), &SaeConfig { epochs: 5, ..Default::default() }).unwrap());
        let sel = FeatureSelection {
            delta: vec![0.0; 16],
            scores: vec![0.0; 16],
            visual: vec![0, 1],
            prior: vec![2],
        };
        let hook = sae_residual_hook(sae.clone(), &sel, 1, 0.0, 0.0).unwrap();
        let HookAction::Edit(edit) = hook.action else {
            panic!("expected an edit hook")
        };
        let mut states = data.slice(ndarray::s![..5, ..]).to_owned();
        let before = states.clone();
        edit.apply(&mut states, &[0, 1, 2, 3, 4]).unwrap();
        assert_eq!(states, before);
        assert!(sae_residual_hook(sae, &sel, 1, -1.0, 0.0).is_err());
    }
}

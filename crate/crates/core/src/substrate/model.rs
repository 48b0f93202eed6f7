use ndarray::{Array1, Array3, ArrayView1, Axis};

use super::config::{ModelConfig, ScenarioSpec};
use super::cube::HiddenStateCube;
use super::hooks::{apply_hooks, validate_hooks, Hook};
use super::layout::*;
use crate::error::{Error, Result};
use crate::numkit::{layer_norm, Matrix, Rng, Vector};

/// One input sequence: continuous image-token embeddings followed by text
/// token ids. The last text position is the answer slot.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelInput {
    /// n_img x d image-token content.
    pub image: Matrix,
    pub text: Vec<usize>,
    /// n_txt x d additive jitter on the text embeddings.
    pub text_offset: Matrix,
}

impl ModelInput {
    pub fn tokens(&self) -> usize {
        self.image.nrows() + self.text.len()
    }
}

#[derive(Debug, Clone)]
pub struct ForwardOutput {
    pub cube: HiddenStateCube,
    /// Final-layer logits at the answer slot.
    pub logits: Vector,
    /// Argmax of `logits`, lowest id on ties.
    pub answer: usize,
}

/// What the analysis code needs from a model: layer count, a lens
/// projection, and a hookable forward pass that records every layer.
pub trait InspectableModel: Send + Sync {
    fn layers(&self) -> usize;
    fn width(&self) -> usize;
    fn vocab(&self) -> usize;
    /// Image tokens at the front of every sequence.
    fn image_tokens(&self) -> usize;
    /// Final layer norm followed by the unembedding.
    fn project(&self, state: ArrayView1<'_, f64>) -> Result<Vector>;
    fn forward(&self, input: &ModelInput, hooks: &[Hook]) -> Result<ForwardOutput>;
}

/// Single-head causal self-attention.
#[derive(Debug, Clone)]
pub struct Attention {
    pub w_q: Matrix,
    pub w_k: Matrix,
    pub w_v: Matrix,
    pub w_o: Matrix,
}

impl Attention {
    fn apply(&self, h: &mut Matrix) {
        let q = h.dot(&self.w_q.t());
        let k = h.dot(&self.w_k.t());
        let v = h.dot(&self.w_v.t());
        let scale = 1.0 / (self.w_q.nrows() as f64).sqrt();
        let t = h.nrows();
        let mut mixed = Matrix::zeros((t, v.ncols()));
        for i in 0..t {
            let scores: Vec<f64> = (0..=i).map(|j| q.row(i).dot(&k.row(j)) * scale).collect();
            let m = scores.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            let e: Vec<f64> = scores.iter().map(|s| (s - m).exp()).collect();
            let z: f64 = e.iter().sum();
            let mut row = mixed.row_mut(i);
            for (j, w) in e.iter().enumerate() {
                row.scaled_add(w / z, &v.row(j));
            }
        }
        *h += &mixed.dot(&self.w_o.t());
    }
}

/// Two-layer ReLU feed-forward block.
#[derive(Debug, Clone)]
pub struct Mlp {
    pub w_in: Matrix,
    pub b_in: Vector,
    pub w_out: Matrix,
}

impl Mlp {
    fn apply(&self, h: &mut Matrix) {
        let mut pre = h.dot(&self.w_in.t());
        pre += &self.b_in;
        pre.mapv_inplace(|x| x.max(0.0));
        *h += &pre.dot(&self.w_out.t());
    }
}

#[derive(Debug, Clone)]
pub struct Block {
    pub attn: Attention,
    pub mlp: Mlp,
}

impl Block {
    pub fn apply(&self, h: &mut Matrix) {
        self.attn.apply(h);
        self.mlp.apply(h);
    }
}

/// The constructed vision-language transformer. Weights are analytic
/// functions of a [`ModelConfig`] and a [`ScenarioSpec`].
#[derive(Debug, Clone)]
pub struct ToyVlm {
    cfg: ModelConfig,
    scenario: ScenarioSpec,
    embeddings: Matrix,
    blocks: Vec<Block>,
    ln_gain: Vector,
    ln_bias: Vector,
    unembed: Matrix,
}

/// Builds the toy model for a scenario.
pub fn build_toy_vlm(cfg: &ModelConfig, scenario: &ScenarioSpec) -> Result<ToyVlm> {
    scenario.validate_for(cfg)?;
    let d = cfg.d_model;
    let mut rng = Rng::new(cfg.weight_seed).fork("weights");

    let mut embeddings = Matrix::zeros((cfg.vocab, d));
    for mut row in embeddings.rows_mut() {
        row[QUESTION] = 1.0;
        row[SALIENCE] = SALIENCE_FLOOR;
        for j in FIRST_FREE..d {
            row[j] = CONTENT_SCALE * rng.normal();
        }
    }

    let a_cum = scenario.cumulative_visual();
    let blocks = (0..cfg.layers)
        .map(|l| Block {
            attn: attention(d),
            mlp: mlp(
                d,
                a_cum[l],
                scenario.prior_schedule[l],
                scenario.encoding_gain * (l + 1) as f64,
                scenario.inhibition,
            ),
        })
        .collect();

    let unembed = unembedding(cfg, scenario, &mut rng);
    Ok(ToyVlm {
        cfg: cfg.clone(),
        scenario: scenario.clone(),
        embeddings,
        blocks,
        ln_gain: Vector::ones(d),
        ln_bias: Vector::zeros(d),
        unembed,
    })
}

fn attention(d: usize) -> Attention {
    let mut w_q = Matrix::zeros((HEAD_DIM, d));
    let mut w_k = Matrix::zeros((HEAD_DIM, d));
    let mut w_v = Matrix::zeros((HEAD_DIM, d));
    let mut w_o = Matrix::zeros((d, HEAD_DIM));
    // the answer slot queries salience; the 1/sqrt(dh) score scale cancels
    w_q[[0, READOUT]] = (HEAD_DIM as f64).sqrt();
    w_k[[0, SALIENCE]] = 1.0;
    for (k, (src, dst)) in [
        (PAYLOAD_VISUAL, SCRATCH_VISUAL),
        (PAYLOAD_PRIOR, SCRATCH_PRIOR),
        (PAYLOAD_APPEARANCE, SCRATCH_APPEARANCE),
    ]
    .into_iter()
    .enumerate()
    {
        w_v[[k, src]] = 1.0;
        w_o[[dst, k]] = 1.0;
    }
    Attention { w_q, w_k, w_v, w_o }
}

/// MLP for one layer. `visual` is the cumulative visual strength up to this
/// layer, `prior` this layer's prior increment, `encoding` the cumulative
/// encoding gain.
fn mlp(d: usize, visual: f64, prior: f64, encoding: f64, inhibition: f64) -> Mlp {
    let mut w_in = Matrix::zeros((MLP_WIDTH, d));
    let mut b_in = Vector::zeros(MLP_WIDTH);
    let mut w_out = Matrix::zeros((d, MLP_WIDTH));
    let mut unit = 0;
    let mut add = |reads: &[(usize, f64)], bias: f64, writes: (usize, f64)| {
        for &(j, w) in reads {
            w_in[[unit, j]] = w;
        }
        b_in[unit] = bias;
        w_out[[writes.0, unit]] = writes.1;
        unit += 1;
    };

    // evidence channels are overwritten with clamp(visual * scratch, 0, visual)
    for (scratch, evidence) in [
        (SCRATCH_VISUAL, EVIDENCE_VISUAL),
        (SCRATCH_PRIOR, EVIDENCE_PRIOR),
    ] {
        add(&[(scratch, visual)], 0.0, (evidence, 1.0));
        add(&[(scratch, visual)], -visual, (evidence, -1.0));
        add(&[(evidence, 1.0)], 0.0, (evidence, -1.0));
        add(&[(evidence, -1.0)], 0.0, (evidence, 1.0));
    }

    let enc = [
        (SCRATCH_VISUAL, encoding),
        (SCRATCH_PRIOR, -encoding),
        (SCRATCH_APPEARANCE, encoding),
    ];
    let neg: Vec<(usize, f64)> = enc.iter().map(|&(j, w)| (j, -w)).collect();
    add(&enc, 0.0, (ENCODING, 1.0));
    add(&neg, 0.0, (ENCODING, -1.0));
    add(&[(ENCODING, 1.0)], 0.0, (ENCODING, -1.0));
    add(&[(ENCODING, -1.0)], 0.0, (ENCODING, 1.0));

    add(&[(QUESTION, prior)], 0.0, (PRIOR_MASS, 1.0));
    // a payload pointing against the prior channel suppresses this layer's prior write
    add(&[(SCRATCH_PRIOR, -inhibition * prior)], 0.0, (PRIOR_MASS, -1.0));

    for scratch in [SCRATCH_VISUAL, SCRATCH_PRIOR, SCRATCH_APPEARANCE] {
        add(&[(scratch, 1.0)], 0.0, (scratch, -1.0));
        add(&[(scratch, -1.0)], 0.0, (scratch, 1.0));
    }
    debug_assert_eq!(unit, MLP_WIDTH);
    Mlp { w_in, b_in, w_out }
}

/// Logit scale of one residual unit after the final layer norm.
pub fn readout_gain(d: usize) -> f64 {
    ANCHOR * (2.0 / d as f64).sqrt()
}

fn unembedding(cfg: &ModelConfig, scenario: &ScenarioSpec, rng: &mut Rng) -> Matrix {
    let d = cfg.d_model;
    let g = readout_gain(d);
    let mut w = Matrix::zeros((cfg.vocab, d));
    let sets = &scenario.variant_sets;
    for t in 0..cfg.vocab {
        let mut row = w.row_mut(t);
        if let Some(role) = sets.classify(t) {
            let slot = sets.ids(role).iter().position(|&x| x == t).expect("member");
            match role {
                super::Role::Visual => {
                    row[EVIDENCE_VISUAL] = g;
                    row[BALLAST] = -g;
                }
                super::Role::Prior => {
                    row[PRIOR_MASS] = g;
                    row[EVIDENCE_PRIOR] = g;
                    row[BALLAST] = -2.0 * g;
                }
            }
            // the anchor gap reads as 2 * ANCHOR / g units, so this is a fixed logit offset
            let off = VARIANT_OFFSETS[slot] * g / (2.0 * ANCHOR);
            row[ANCHOR_POS] -= off;
            row[ANCHOR_NEG] += off;
        } else {
            let free = d - FIRST_FREE;
            if free == 0 {
                continue;
            }
            let scale = g * cfg.vocab_noise / (free as f64).sqrt();
            let mut sum = 0.0;
            for j in FIRST_FREE..d {
                row[j] = scale * rng.normal();
                sum += row[j];
            }
            row[BALLAST] = -sum;
        }
    }
    w
}

impl ToyVlm {
    pub fn config(&self) -> &ModelConfig {
        &self.cfg
    }

    pub fn scenario(&self) -> &ScenarioSpec {
        &self.scenario
    }

    pub fn blocks(&self) -> &[Block] {
        &self.blocks
    }

    pub fn unembedding(&self) -> &Matrix {
        &self.unembed
    }

    /// Mutable access to the layer weights, for perturbation experiments.
    pub fn blocks_mut(&mut self) -> &mut [Block] {
        &mut self.blocks
    }

    /// Embedding of a token id (without anchors or positional flags).
    pub fn token_embedding(&self, id: usize) -> ArrayView1<'_, f64> {
        self.embeddings.row(id)
    }

    /// Residual stream entering layer 1.
    pub fn embed(&self, input: &ModelInput) -> Result<Matrix> {
        let (n_img, n_txt, d) = (self.cfg.n_img, self.cfg.n_txt, self.cfg.d_model);
        if input.image.dim() != (n_img, d) {
            return Err(Error::shape(format!(
                "image block {:?}, expected {:?}",
                input.image.dim(),
                (n_img, d)
            )));
        }
        if input.text.len() != n_txt || input.text_offset.dim() != (n_txt, d) {
            return Err(Error::shape(format!(
                "text of {} ids with offsets {:?}, expected {n_txt} and {:?}",
                input.text.len(),
                input.text_offset.dim(),
                (n_txt, d)
            )));
        }
        if let Some(&bad) = input.text.iter().find(|&&t| t >= self.cfg.vocab) {
            return Err(Error::invalid(format!("token id {bad} outside vocabulary")));
        }
        let mut h = Matrix::zeros((n_img + n_txt, d));
        h.slice_mut(ndarray::s![..n_img, ..]).assign(&input.image);
        for (k, &id) in input.text.iter().enumerate() {
            let mut row = h.row_mut(n_img + k);
            row.assign(&self.embeddings.row(id));
            row += &input.text_offset.row(k);
        }
        h.column_mut(ANCHOR_POS).fill(ANCHOR);
        h.column_mut(ANCHOR_NEG).fill(-ANCHOR);
        h[[n_img + n_txt - 1, READOUT]] += 1.0;
        if h.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("input embeddings".into()));
        }
        Ok(h)
    }
}

impl InspectableModel for ToyVlm {
    fn layers(&self) -> usize {
        self.cfg.layers
    }

    fn width(&self) -> usize {
        self.cfg.d_model
    }

    fn vocab(&self) -> usize {
        self.cfg.vocab
    }

    fn image_tokens(&self) -> usize {
        self.cfg.n_img
    }

    fn project(&self, state: ArrayView1<'_, f64>) -> Result<Vector> {
        let x = layer_norm(state, self.ln_gain.view(), self.ln_bias.view())?;
        Ok(self.unembed.dot(&x))
    }

    fn forward(&self, input: &ModelInput, hooks: &[Hook]) -> Result<ForwardOutput> {
        validate_hooks(hooks, self.cfg.layers)?;
        let mut h = self.embed(input)?;
        let (t, d) = h.dim();
        let mut states = Array3::zeros((self.cfg.layers + 1, t, d));
        states.index_axis_mut(Axis(0), 0).assign(&h);
        for (i, block) in self.blocks.iter().enumerate() {
            let layer = i + 1;
            block.apply(&mut h);
            apply_hooks(hooks, layer, &mut h, self.cfg.n_img)?;
            if h.iter().any(|v| !v.is_finite()) {
                return Err(Error::NonFinite(format!("residual stream after layer {layer}")));
            }
            states.index_axis_mut(Axis(0), layer).assign(&h);
        }
        let logits = self.project(h.row(t - 1))?;
        let answer = argmax(&logits);
        Ok(ForwardOutput {
            cube: HiddenStateCube::new(states)?,
            logits,
            answer,
        })
    }
}

/// Index of the largest value; the lowest index wins ties.
pub fn argmax(v: &Array1<f64>) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

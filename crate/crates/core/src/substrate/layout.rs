//! Fixed residual-stream layout of the toy model.
//!
//! Dimensions below [`FIRST_FREE`] carry structural features; the rest hold
//! random token content.

pub const ANCHOR_POS: usize = 0;
pub const ANCHOR_NEG: usize = 1;
/// Always zero; absorbs the row sums of the unembedding.
pub const BALLAST: usize = 2;
/// 1 at the answer slot only.
pub const READOUT: usize = 3;
/// 1 on text tokens; gates the prior pathway.
pub const QUESTION: usize = 4;
/// Log evidence weight on image tokens, the attention key.
pub const SALIENCE: usize = 5;
pub const PAYLOAD_VISUAL: usize = 6;
pub const PAYLOAD_PRIOR: usize = 7;
/// Appearance detail that is encoded but never decides the answer.
pub const PAYLOAD_APPEARANCE: usize = 8;
pub const SCRATCH_VISUAL: usize = 9;
pub const SCRATCH_PRIOR: usize = 10;
pub const SCRATCH_APPEARANCE: usize = 11;
pub const EVIDENCE_VISUAL: usize = 12;
pub const EVIDENCE_PRIOR: usize = 13;
pub const PRIOR_MASS: usize = 14;
pub const ENCODING: usize = 15;
pub const FIRST_FREE: usize = 16;

/// Magnitude of the two anchor features. They dominate the final
/// layer-norm statistics so one residual unit maps to about one logit.
pub const ANCHOR: f64 = 1e5;
/// Salience given to tokens that should receive no attention.
pub const SALIENCE_FLOOR: f64 = -30.0;
pub const HEAD_DIM: usize = 4;
pub const MLP_WIDTH: usize = 20;
/// Scale of random token content on free dimensions.
pub const CONTENT_SCALE: f64 = 0.5;
/// Largest cumulative schedule magnitude accepted by the builder.
pub const OVERFLOW_LIMIT: f64 = 1e4;
/// Logit offsets of the six surface-form variants relative to the primary
/// slot (index 3, space-prefixed lowercase).
pub const VARIANT_OFFSETS: [f64; 6] = [0.26, 0.77, 1.5, 0.0, 0.4, 2.0];
pub const PRIMARY_VARIANT: usize = 3;

use std::fs;
use std::io::{Read, Write};
use std::path::Path;

use ndarray::{s, Array3, ArrayView1, ArrayView2};

use crate::error::{Error, Result};

const MAGIC: &[u8; 8] = b"MLCUBE01";

/// Residual-stream states of one forward pass: index 0 holds the embeddings,
/// index `l` the output of layer `l`.
#[derive(Debug, Clone, PartialEq)]
pub struct HiddenStateCube {
    states: Array3<f64>,
}

impl HiddenStateCube {
    /// Wraps a (layers + 1) x tokens x width array.
    pub fn new(states: Array3<f64>) -> Result<Self> {
        let (n, t, d) = states.dim();
        if n < 2 || t == 0 || d == 0 {
            return Err(Error::shape(format!("cube of shape {:?}", (n, t, d))));
        }
        if states.iter().any(|v| !v.is_finite()) {
            return Err(Error::NonFinite("hidden-state cube".into()));
        }
        Ok(HiddenStateCube { states })
    }

    /// Number of transformer layers, excluding the embedding slice.
    pub fn layers(&self) -> usize {
        self.states.dim().0 - 1
    }

    pub fn tokens(&self) -> usize {
        self.states.dim().1
    }

    pub fn width(&self) -> usize {
        self.states.dim().2
    }

    pub fn layer(&self, l: usize) -> ArrayView2<'_, f64> {
        self.states.slice(s![l, .., ..])
    }

    /// State of the answer slot after layer `l`.
    pub fn last_token(&self, l: usize) -> ArrayView1<'_, f64> {
        self.states.slice(s![l, self.tokens() - 1, ..])
    }

    pub fn as_array(&self) -> &Array3<f64> {
        &self.states
    }

    /// Binary layout: 8-byte magic `MLCUBE01`, three little-endian u64
    /// dimensions (layers + 1, tokens, width), then every value as a
    /// little-endian f64 in row-major order.
    pub fn to_bytes(&self) -> Vec<u8> {
        let (n, t, d) = self.states.dim();
        let mut out = Vec::with_capacity(32 + 8 * n * t * d);
        out.extend_from_slice(MAGIC);
        for dim in [n, t, d] {
            out.extend_from_slice(&(dim as u64).to_le_bytes());
        }
        for v in self.states.iter() {
            out.extend_from_slice(&v.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() < 32 || &bytes[..8] != MAGIC {
            return Err(Error::invalid("not a hidden-state cube file"));
        }
        let dim = |i: usize| {
            let mut b = [0u8; 8];
            b.copy_from_slice(&bytes[8 + 8 * i..16 + 8 * i]);
            u64::from_le_bytes(b) as usize
        };
        let (n, t, d) = (dim(0), dim(1), dim(2));
        let count = n
            .checked_mul(t)
            .and_then(|x| x.checked_mul(d))
            .ok_or_else(|| Error::invalid("cube header overflows"))?;
        if bytes.len() != 32 + 8 * count {
            return Err(Error::shape(format!(
                "cube payload of {} bytes for shape {:?}",
                bytes.len() - 32,
                (n, t, d)
            )));
        }
        let values: Vec<f64> = bytes[32..]
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
            .collect();
        let states = Array3::from_shape_vec((n, t, d), values)
            .map_err(|e| Error::shape(e.to_string()))?;
        HiddenStateCube::new(states)
    }

    /// Writes atomically: a sibling temporary file is renamed into place.
    pub fn save(&self, path: &Path) -> Result<()> {
        if let Some(dir) = path.parent() {
            fs::create_dir_all(dir)?;
        }
        let tmp = path.with_extension("tmp");
        {
            let mut f = fs::File::create(&tmp)?;
            f.write_all(&self.to_bytes())?;
            f.sync_all()?;
        }
        fs::rename(&tmp, path)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let mut buf = Vec::new();
        fs::File::open(path)?.read_to_end(&mut buf)?;
        HiddenStateCube::from_bytes(&buf)
    }
}

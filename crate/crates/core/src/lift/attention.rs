//! Single-head cross-attention from UV queries to a compact Gaussian context.

use std::f64::consts::PI;
use std::fs::File;
use std::io::{BufReader, BufWriter};
use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::gaussians::CompactFeature;
use crate::uv::UvMap;

pub const LATENT_CHANNELS: usize = 256;
pub const LATENT_SIZE: usize = 64;
pub const DEFAULT_N_FREQ: usize = 4;

/// `[x] ‖ sin(2^i π x) ‖ cos(2^i π x)` for `i < n_freq`, per texel. Channel
/// order: the three raw coordinates, then for each frequency the three sines
/// followed by the three cosines.
pub fn positional_encode(map: &UvMap, n_freq: usize) -> Result<UvMap> {
    if map.channels() != 3 {
        return Err(Error::dim(format!(
            "positional encoding expects 3 channels, got {}",
            map.channels()
        )));
    }
    let out_c = 3 * (1 + 2 * n_freq);
    let mut out = UvMap::new(map.width(), map.height(), out_c);
    for i in 0..map.num_texels() {
        let src: [f64; 3] = map.texel(i).try_into().unwrap();
        let dst = out.texel_mut(i);
        dst[..3].copy_from_slice(&src);
        for f in 0..n_freq {
            let w = (1u64 << f) as f64 * PI;
            let base = 3 + 6 * f;
            for k in 0..3 {
                let (s, c) = (w * src[k]).sin_cos();
                dst[base + k] = s;
                dst[base + 3 + k] = c;
            }
        }
        out.set_valid(i, map.is_valid(i));
    }
    Ok(out)
}

/// Row-major dense matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
}

impl Matrix {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![0.0; rows * cols],
        }
    }

    /// Entries uniform in `±1/sqrt(rows)`.
    pub fn random(rows: usize, cols: usize, rng: &mut impl Rng) -> Self {
        let bound = 1.0 / (rows.max(1) as f64).sqrt();
        Self {
            rows,
            cols,
            data: (0..rows * cols).map(|_| rng.gen_range(-bound..bound)).collect(),
        }
    }

    #[inline]
    pub fn get(&self, r: usize, c: usize) -> f64 {
        self.data[r * self.cols + c]
    }

    /// Row vector times matrix: `x · M`.
    pub fn left_mul(&self, x: &[f64], out: &mut [f64]) {
        debug_assert_eq!(x.len(), self.rows);
        out.fill(0.0);
        for (r, &xv) in x.iter().enumerate() {
            let row = &self.data[r * self.cols..(r + 1) * self.cols];
            for (o, &m) in out.iter_mut().zip(row) {
                *o += xv * m;
            }
        }
    }

    fn to_uv_map(&self) -> UvMap {
        UvMap::from_parts(self.cols, self.rows, 1, self.data.clone(), vec![true; self.rows * self.cols])
            .expect("matrix shape is consistent")
    }

    fn from_uv_map(map: &UvMap) -> Result<Self> {
        if map.channels() != 1 {
            return Err(Error::parse("weight tensor must have one channel"));
        }
        Ok(Self {
            rows: map.height(),
            cols: map.width(),
            data: map.data().to_vec(),
        })
    }
}

/// Projection matrices of the attention block (row-vector convention).
#[derive(Debug, Clone, PartialEq)]
pub struct AttentionWeights {
    /// `d_model × d_q`
    pub query: Matrix,
    /// `C_p × d_q`
    pub key: Matrix,
    /// `C_p × d_v`
    pub value: Matrix,
    /// `d_v × d_out`
    pub output: Matrix,
}

#[derive(Debug, Serialize, Deserialize)]
struct WeightsManifest {
    format: String,
    d_model: usize,
    context_width: usize,
    d_q: usize,
    d_v: usize,
    d_out: usize,
    tensors: Vec<(String, PathBuf)>,
}

const TENSOR_NAMES: [&str; 4] = ["query", "key", "value", "output"];

impl AttentionWeights {
    pub fn random(
        d_model: usize,
        context_width: usize,
        d_q: usize,
        d_v: usize,
        d_out: usize,
        seed: u64,
    ) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        Self {
            query: Matrix::random(d_model, d_q, &mut rng),
            key: Matrix::random(context_width, d_q, &mut rng),
            value: Matrix::random(context_width, d_v, &mut rng),
            output: Matrix::random(d_v, d_out, &mut rng),
        }
    }

    pub fn d_model(&self) -> usize {
        self.query.rows
    }

    pub fn context_width(&self) -> usize {
        self.key.rows
    }

    pub fn d_q(&self) -> usize {
        self.query.cols
    }

    pub fn d_v(&self) -> usize {
        self.value.cols
    }

    pub fn d_out(&self) -> usize {
        self.output.cols
    }

    pub fn validate(&self) -> Result<()> {
        let ok = self.key.cols == self.query.cols
            && self.value.rows == self.key.rows
            && self.output.rows == self.value.cols;
        if !ok {
            return Err(Error::dim("attention projection shapes are inconsistent"));
        }
        for m in [&self.query, &self.key, &self.value, &self.output] {
            if m.data.len() != m.rows * m.cols {
                return Err(Error::dim("attention tensor has the wrong element count"));
            }
            if !m.data.iter().all(|v| v.is_finite()) {
                return Err(Error::Numeric("attention weights contain non-finite values".into()));
            }
        }
        Ok(())
    }

    /// Writes a JSON manifest at `path` and one UVM1 tensor per projection
    /// beside it (`<stem>.<name>.uvm`, one channel, width = columns).
    pub fn save(&self, path: &Path) -> Result<()> {
        let stem = path
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or("weights")
            .to_string();
        let dir = path.parent().unwrap_or(Path::new("."));
        let mut tensors = Vec::new();
        for (name, m) in TENSOR_NAMES.iter().zip([&self.query, &self.key, &self.value, &self.output]) {
            let file = PathBuf::from(format!("{stem}.{name}.uvm"));
            m.to_uv_map().write_to(BufWriter::new(File::create(dir.join(&file))?))?;
            tensors.push((name.to_string(), file));
        }
        let manifest = WeightsManifest {
            format: "uvm1-matrix-archive".into(),
            d_model: self.d_model(),
            context_width: self.context_width(),
            d_q: self.d_q(),
            d_v: self.d_v(),
            d_out: self.d_out(),
            tensors,
        };
        serde_json::to_writer_pretty(BufWriter::new(File::create(path)?), &manifest)?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        let manifest: WeightsManifest = serde_json::from_reader(BufReader::new(File::open(path)?))?;
        let dir = path.parent().unwrap_or(Path::new("."));
        let mut mats = Vec::new();
        for name in TENSOR_NAMES {
            let (_, file) = manifest
                .tensors
                .iter()
                .find(|(n, _)| n == name)
                .ok_or_else(|| Error::parse(format!("weights manifest lacks {name:?}")))?;
            let map = UvMap::read_from(BufReader::new(File::open(dir.join(file))?))?;
            mats.push(Matrix::from_uv_map(&map)?);
        }
        let output = mats.pop().unwrap();
        let value = mats.pop().unwrap();
        let key = mats.pop().unwrap();
        let query = mats.pop().unwrap();
        let w = Self {
            query,
            key,
            value,
            output,
        };
        w.validate()?;
        if (w.d_model(), w.context_width(), w.d_q(), w.d_v(), w.d_out())
            != (manifest.d_model, manifest.context_width, manifest.d_q, manifest.d_v, manifest.d_out)
        {
            return Err(Error::parse("weights manifest dimensions disagree with tensors"));
        }
        Ok(w)
    }
}

/// Keys and values projected once per context; queries are applied per texel.
pub struct AttentionKernel<'w> {
    weights: &'w AttentionWeights,
    keys: Vec<f64>,
    values: Vec<f64>,
    rows: usize,
    inv_sqrt_dq: f64,
}

impl<'w> AttentionKernel<'w> {
    pub fn new(context: &CompactFeature, weights: &'w AttentionWeights) -> Result<Self> {
        weights.validate()?;
        if context.cols != weights.context_width() {
            return Err(Error::dim(format!(
                "context has {} columns, key projection expects {}",
                context.cols,
                weights.context_width()
            )));
        }
        if context.rows == 0 {
            return Err(Error::invalid("attention context is empty"));
        }
        if !context.data.iter().all(|v| v.is_finite()) {
            return Err(Error::Numeric("attention context contains non-finite values".into()));
        }
        let (dq, dv) = (weights.d_q(), weights.d_v());
        let mut keys = vec![0.0; context.rows * dq];
        let mut values = vec![0.0; context.rows * dv];
        for r in 0..context.rows {
            weights.key.left_mul(context.row(r), &mut keys[r * dq..(r + 1) * dq]);
            weights.value.left_mul(context.row(r), &mut values[r * dv..(r + 1) * dv]);
        }
        Ok(Self {
            weights,
            keys,
            values,
            rows: context.rows,
            inv_sqrt_dq: 1.0 / (dq as f64).sqrt(),
        })
    }

    /// Softmax attention weights over the context rows for one query vector.
    /// Max-subtracted, summed left to right.
    pub fn attention(&self, query: &[f64]) -> Vec<f64> {
        let dq = self.weights.d_q();
        let mut q = vec![0.0; dq];
        self.weights.query.left_mul(query, &mut q);
        let mut scores: Vec<f64> = self
            .keys
            .chunks_exact(dq)
            .map(|k| k.iter().zip(&q).map(|(a, b)| a * b).sum::<f64>() * self.inv_sqrt_dq)
            .collect();
        let max = scores.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        let mut total = 0.0;
        for s in &mut scores {
            *s = (*s - max).exp();
            total += *s;
        }
        for s in &mut scores {
            *s /= total;
        }
        scores
    }

    /// Output vector (`d_out`) for one query.
    pub fn output(&self, query: &[f64]) -> Vec<f64> {
        let attn = self.attention(query);
        let dv = self.weights.d_v();
        let mut mixed = vec![0.0; dv];
        for (a, v) in attn.iter().zip(self.values.chunks_exact(dv)) {
            for (m, &x) in mixed.iter_mut().zip(v) {
                *m += a * x;
            }
        }
        let mut out = vec![0.0; self.weights.d_out()];
        self.weights.output.left_mul(&mixed, &mut out);
        out
    }

    pub fn context_rows(&self) -> usize {
        self.rows
    }
}

/// Avatar latent: `channels × height × width`, stored texel-interleaved.
#[derive(Debug, Clone, PartialEq)]
pub struct LatentCode(pub UvMap);

impl LatentCode {
    /// `(channels, height, width)`.
    pub fn shape(&self) -> (usize, usize, usize) {
        (self.0.channels(), self.0.height(), self.0.width())
    }
}

/// Runs every texel of `query_map` through the attention block; the latent
/// has the query map's spatial size and `d_out` channels.
pub fn cross_attention_lift(
    query_map: &UvMap,
    context: &CompactFeature,
    weights: &AttentionWeights,
) -> Result<LatentCode> {
    if query_map.channels() != weights.d_model() {
        return Err(Error::dim(format!(
            "query map has {} channels, query projection expects {}",
            query_map.channels(),
            weights.d_model()
        )));
    }
    let kernel = AttentionKernel::new(context, weights)?;
    let d_out = weights.d_out();
    let mut data = vec![0.0; query_map.num_texels() * d_out];
    data.par_chunks_mut(d_out)
        .enumerate()
        .for_each(|(i, out)| out.copy_from_slice(&kernel.output(query_map.texel(i))));
    let n = query_map.num_texels();
    Ok(LatentCode(UvMap::from_parts(
        query_map.width(),
        query_map.height(),
        d_out,
        data,
        vec![true; n],
    )?))
}

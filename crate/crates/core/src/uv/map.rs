use std::io::{Read, Write};

use crate::error::{Error, Result};

const MAGIC: &[u8; 4] = b"UVM1";

/// Row-major texel raster with interleaved channels and a coverage mask.
///
/// Texel `(x, y)` samples UV point `((x + 0.5) / width, (y + 0.5) / height)`.
/// Uncovered texels hold zeros.
#[derive(Debug, Clone, PartialEq)]
pub struct UvMap {
    width: usize,
    height: usize,
    channels: usize,
    data: Vec<f64>,
    valid: Vec<bool>,
}

impl UvMap {
    pub fn new(width: usize, height: usize, channels: usize) -> Self {
        Self {
            width,
            height,
            channels,
            data: vec![0.0; width * height * channels],
            valid: vec![false; width * height],
        }
    }

    pub fn from_parts(
        width: usize,
        height: usize,
        channels: usize,
        data: Vec<f64>,
        valid: Vec<bool>,
    ) -> Result<Self> {
        if data.len() != width * height * channels || valid.len() != width * height {
            return Err(Error::dim(format!(
                "uv map {width}x{height}x{channels} given {} values and {} mask entries",
                data.len(),
                valid.len()
            )));
        }
        Ok(Self {
            width,
            height,
            channels,
            data,
            valid,
        })
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn num_texels(&self) -> usize {
        self.width * self.height
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn data_mut(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn valid_mask(&self) -> &[bool] {
        &self.valid
    }

    pub fn valid_mask_mut(&mut self) -> &mut [bool] {
        &mut self.valid
    }

    pub fn num_valid(&self) -> usize {
        self.valid.iter().filter(|&&v| v).count()
    }

    #[inline]
    pub fn texel_index(&self, x: usize, y: usize) -> usize {
        y * self.width + x
    }

    #[inline]
    pub fn texel(&self, index: usize) -> &[f64] {
        let c = self.channels;
        &self.data[index * c..(index + 1) * c]
    }

    #[inline]
    pub fn texel_mut(&mut self, index: usize) -> &mut [f64] {
        let c = self.channels;
        &mut self.data[index * c..(index + 1) * c]
    }

    #[inline]
    pub fn is_valid(&self, index: usize) -> bool {
        self.valid[index]
    }

    pub fn set_valid(&mut self, index: usize, valid: bool) {
        self.valid[index] = valid;
    }

    /// UV coordinate of a texel center.
    pub fn texel_center(&self, x: usize, y: usize) -> (f64, f64) {
        (
            (x as f64 + 0.5) / self.width as f64,
            (y as f64 + 0.5) / self.height as f64,
        )
    }

    pub fn same_shape(&self, other: &UvMap) -> bool {
        self.width == other.width && self.height == other.height && self.channels == other.channels
    }

    /// Binary container: `"UVM1"`, `u32` width/height/channels, little-endian
    /// `f32` raster, one mask byte per texel.
    pub fn write_to<W: Write>(&self, mut w: W) -> Result<()> {
        w.write_all(MAGIC)?;
        for dim in [self.width, self.height, self.channels] {
            let dim = u32::try_from(dim).map_err(|_| Error::invalid("uv map too large"))?;
            w.write_all(&dim.to_le_bytes())?;
        }
        let mut buf = Vec::with_capacity(self.data.len() * 4 + self.valid.len());
        for &v in &self.data {
            buf.extend_from_slice(&(v as f32).to_le_bytes());
        }
        buf.extend(self.valid.iter().map(|&v| v as u8));
        w.write_all(&buf)?;
        Ok(())
    }

    pub fn read_from<R: Read>(mut r: R) -> Result<Self> {
        let mut header = [0u8; 16];
        r.read_exact(&mut header)
            .map_err(|e| Error::parse(format!("uv map header: {e}")))?;
        if &header[..4] != MAGIC {
            return Err(Error::parse("not a UVM1 file"));
        }
        let dim = |i: usize| u32::from_le_bytes(header[i..i + 4].try_into().unwrap()) as usize;
        let (width, height, channels) = (dim(4), dim(8), dim(12));
        let n = width
            .checked_mul(height)
            .and_then(|t| t.checked_mul(channels))
            .ok_or_else(|| Error::parse("uv map dimensions overflow"))?;
        let mut raw = vec![0u8; n * 4];
        r.read_exact(&mut raw)
            .map_err(|e| Error::parse(format!("uv map raster truncated: {e}")))?;
        let data = raw
            .chunks_exact(4)
            .map(|b| f32::from_le_bytes(b.try_into().unwrap()) as f64)
            .collect();
        let mut mask = vec![0u8; width * height];
        r.read_exact(&mut mask)
            .map_err(|e| Error::parse(format!("uv map mask truncated: {e}")))?;
        let valid = mask.into_iter().map(|b| b != 0).collect();
        Self::from_parts(width, height, channels, data, valid)
    }

    /// Copy of `self` with every value rounded through `f32`, matching what a
    /// write/read cycle produces.
    pub fn quantized(&self) -> Self {
        let mut out = self.clone();
        for v in &mut out.data {
            *v = *v as f32 as f64;
        }
        out
    }
}

use std::io::{Read, Write};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::math::DEGENERATE_QUAT_NORM;
use crate::uv::UvMap;

pub const PARAM_CHANNELS: usize = 14;
pub const DEFAULT_MAP_SIZE: usize = 256;
/// Lower clamp for tangent-space scales.
pub const MIN_SCALE: f64 = 1e-6;

/// Channel offsets inside a parameter-map texel.
pub struct ParamLayout;

impl ParamLayout {
    pub const ALPHA: usize = 0;
    pub const RGB: usize = 1;
    pub const OFFSET: usize = 4;
    pub const ROTATION: usize = 7;
    pub const SCALE: usize = 11;

    /// JSON sidecar describing the layout and the normalization rules.
    pub fn sidecar() -> serde_json::Value {
        #[derive(Serialize)]
        struct Channel {
            name: &'static str,
            range: [usize; 2],
            rule: &'static str,
        }
        let channels = [
            Channel { name: "alpha", range: [0, 1], rule: "clamp [0,1]" },
            Channel { name: "rgb", range: [1, 4], rule: "clamp [0,1]" },
            Channel { name: "offset_xyz", range: [4, 7], rule: "tangent units, unclamped" },
            Channel { name: "rotation_wxyz", range: [7, 11], rule: "renormalize, zero -> identity" },
            Channel { name: "scale_xyz", range: [11, 14], rule: "clamp >= 1e-6, tangent units" },
        ];
        serde_json::json!({
            "channels": PARAM_CHANNELS,
            "layout": channels,
            "invalid_texels": "all channels 0",
        })
    }
}

/// Clamps alpha/rgb to `[0,1]`, renormalizes the rotation quaternion and
/// floors scales at [`MIN_SCALE`].
#[inline]
pub fn normalize_texel(t: &mut [f64]) {
    for v in &mut t[ParamLayout::ALPHA..ParamLayout::OFFSET] {
        *v = v.clamp(0.0, 1.0);
    }
    let q = &mut t[ParamLayout::ROTATION..ParamLayout::SCALE];
    let n = (q[0] * q[0] + q[1] * q[1] + q[2] * q[2] + q[3] * q[3]).sqrt();
    if n >= DEGENERATE_QUAT_NORM {
        for v in q.iter_mut() {
            *v /= n;
        }
    } else {
        q.copy_from_slice(&[1.0, 0.0, 0.0, 0.0]);
    }
    for v in &mut t[ParamLayout::SCALE..PARAM_CHANNELS] {
        *v = v.max(MIN_SCALE);
    }
}

/// `out = normalize(canonical + offset)`; a missing offset adds zero.
#[inline]
pub fn compose_texel(canonical: &[f64], offset: Option<&[f64]>, out: &mut [f64]) {
    match offset {
        Some(o) => {
            for k in 0..PARAM_CHANNELS {
                out[k] = canonical[k] + o[k];
            }
        }
        None => {
            for k in 0..PARAM_CHANNELS {
                out[k] = canonical[k] + 0.0;
            }
        }
    }
    normalize_texel(out);
}

/// A 14-channel UV raster of tangent-space Gaussian parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianParamMap(UvMap);

impl GaussianParamMap {
    pub fn new(width: usize, height: usize) -> Self {
        Self(UvMap::new(width, height, PARAM_CHANNELS))
    }

    pub fn from_uv_map(map: UvMap) -> Result<Self> {
        if map.channels() != PARAM_CHANNELS {
            return Err(Error::dim(format!(
                "parameter map needs {PARAM_CHANNELS} channels, got {}",
                map.channels()
            )));
        }
        Ok(Self(map))
    }

    pub fn as_uv_map(&self) -> &UvMap {
        &self.0
    }

    pub fn uv_map_mut(&mut self) -> &mut UvMap {
        &mut self.0
    }

    pub fn into_uv_map(self) -> UvMap {
        self.0
    }

    pub fn width(&self) -> usize {
        self.0.width()
    }

    pub fn height(&self) -> usize {
        self.0.height()
    }

    pub fn shape(&self) -> (usize, usize, usize) {
        (PARAM_CHANNELS, self.0.height(), self.0.width())
    }

    pub fn texel(&self, i: usize) -> &[f64] {
        self.0.texel(i)
    }

    pub fn texel_mut(&mut self, i: usize) -> &mut [f64] {
        self.0.texel_mut(i)
    }

    pub fn is_valid(&self, i: usize) -> bool {
        self.0.is_valid(i)
    }

    /// The normalization pass alone (composition with no offset).
    pub fn normalized(&self) -> Self {
        let mut out = self.clone();
        for i in 0..out.0.num_texels() {
            if out.0.is_valid(i) {
                let src: [f64; PARAM_CHANNELS] = self.texel(i).try_into().unwrap();
                compose_texel(&src, None, out.texel_mut(i));
            } else {
                out.texel_mut(i).fill(0.0);
            }
        }
        out
    }

    /// `sqrt(Σ v²)` over every channel of every texel.
    pub fn l2_norm(&self) -> f64 {
        self.0.data().iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn write_to<W: Write>(&self, w: W) -> Result<()> {
        self.0.write_to(w)
    }

    pub fn read_from<R: Read>(r: R) -> Result<Self> {
        Self::from_uv_map(UvMap::read_from(r)?)
    }
}

fn check_same(a: &GaussianParamMap, b: &GaussianParamMap) -> Result<()> {
    if a.width() != b.width() || a.height() != b.height() {
        return Err(Error::dim(format!(
            "parameter maps {}x{} and {}x{} differ",
            a.width(),
            a.height(),
            b.width(),
            b.height()
        )));
    }
    Ok(())
}

/// Channelwise `canonical + offset` followed by the normalization pass. The
/// result keeps the canonical map's coverage.
pub fn compose_param_maps(
    canonical: &GaussianParamMap,
    offset: &GaussianParamMap,
) -> Result<GaussianParamMap> {
    check_same(canonical, offset)?;
    let mut out = GaussianParamMap::new(canonical.width(), canonical.height());
    for i in 0..canonical.0.num_texels() {
        if canonical.is_valid(i) {
            compose_texel(canonical.texel(i), Some(offset.texel(i)), out.texel_mut(i));
            out.0.set_valid(i, true);
        }
    }
    Ok(out)
}

#[derive(Debug, Clone, PartialEq)]
pub enum EditMode {
    /// Texels under the mask come from `b`.
    SwapRegion(Vec<bool>),
    /// `(1 − t)·a + t·b`, then normalized.
    Interpolate(f64),
}

/// Region swap or linear blend between two parameter maps.
///
/// Interpolation blends texels valid in both maps; a texel valid in only one
/// map keeps that map's parameters.
pub fn edit_param_map(
    a: &GaussianParamMap,
    b: &GaussianParamMap,
    mode: &EditMode,
) -> Result<GaussianParamMap> {
    check_same(a, b)?;
    let n = a.0.num_texels();
    let mut out = GaussianParamMap::new(a.width(), a.height());
    match mode {
        EditMode::SwapRegion(mask) => {
            if mask.len() != n {
                return Err(Error::dim(format!("mask has {} entries for {n} texels", mask.len())));
            }
            for (i, &m) in mask.iter().enumerate() {
                let src = if m { b } else { a };
                out.texel_mut(i).copy_from_slice(src.texel(i));
                out.0.set_valid(i, src.is_valid(i));
            }
        }
        EditMode::Interpolate(t) => {
            let t = *t;
            if !(0.0..=1.0).contains(&t) {
                return Err(Error::invalid(format!("blend weight {t} outside [0,1]")));
            }
            for i in 0..n {
                let (va, vb) = (a.is_valid(i), b.is_valid(i));
                let dst = out.texel_mut(i);
                match (va, vb) {
                    (true, true) => {
                        for (k, d) in dst.iter_mut().enumerate() {
                            *d = (1.0 - t) * a.texel(i)[k] + t * b.texel(i)[k];
                        }
                        normalize_texel(dst);
                    }
                    (true, false) => compose_texel(a.texel(i), None, dst),
                    (false, true) => compose_texel(b.texel(i), None, dst),
                    (false, false) => continue,
                }
                out.0.set_valid(i, true);
            }
        }
    }
    Ok(out)
}

use std::time::{Duration, Instant};

use serde::Serialize;

use super::camera::Camera;
use super::place::place_gaussians;
use super::raster::{rasterize_with, RasterSettings, RenderedImage};
use crate::body::{pose_body, PoseParams, SkinnedBody};
use crate::error::{Error, Result};
use crate::gaussians::{
    compose_param_maps, compose_texel, plan_anchors, sample_structured, AnchorPlan,
    GaussianParamMap, StructuredGaussianSet, DEFAULT_N_SURFACE, DEFAULT_N_UV, PARAM_CHANNELS,
};
use crate::uv::tangent_frames;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AvatarSettings {
    pub n_uv: usize,
    pub n_surface: usize,
    pub seed: u64,
    pub raster: RasterSettings,
}

impl Default for AvatarSettings {
    fn default() -> Self {
        Self {
            n_uv: DEFAULT_N_UV,
            n_surface: DEFAULT_N_SURFACE,
            seed: 0,
            raster: RasterSettings::default(),
        }
    }
}

/// Wall time per pipeline stage of one frame.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize)]
pub struct StageTimings {
    pub sample: Duration,
    pub pose: Duration,
    pub frames: Duration,
    pub place: Duration,
    pub rasterize: Duration,
}

impl StageTimings {
    pub fn total(&self) -> Duration {
        self.sample + self.pose + self.frames + self.place + self.rasterize
    }
}

/// Word-wise multiplicative fold; cheap enough to run every frame.
#[derive(Default)]
struct Fold(u64);

impl Fold {
    const K: u64 = 0x517c_c1b7_2722_0a95;

    fn word(&mut self, w: u64) {
        self.0 = (self.0.rotate_left(5) ^ w).wrapping_mul(Self::K);
    }

    fn floats<'a>(&mut self, vs: impl IntoIterator<Item = &'a f64>) {
        for v in vs {
            self.word(v.to_bits());
        }
    }
}

fn map_fingerprint(map: &GaussianParamMap) -> u64 {
    let uv = map.as_uv_map();
    let mut h = Fold::default();
    for d in [uv.width(), uv.height(), uv.channels()] {
        h.word(d as u64);
    }
    h.floats(uv.data());
    for chunk in uv.valid_mask().chunks(64) {
        h.word(chunk.iter().enumerate().fold(0, |a, (i, &b)| a | (b as u64) << i));
    }
    h.0
}

fn body_fingerprint(body: &SkinnedBody) -> u64 {
    let mut h = Fold::default();
    for f in body.faces() {
        f.iter().for_each(|&i| h.word(i as u64));
    }
    for tri in body.uv_corners() {
        for c in tri {
            h.floats([&c.x, &c.y]);
        }
    }
    for v in body.rest_vertices() {
        h.floats(v.iter());
    }
    h.0
}

/// Pose- and view-independent sampling state of one canonical map: anchor
/// plans plus the parameters fetched from the canonical map alone.
#[derive(Debug, Clone)]
pub struct CanonicalCache {
    plans: Vec<AnchorPlan>,
    dropped: usize,
    canonical: StructuredGaussianSet,
    map_fingerprint: u64,
    body_fingerprint: u64,
    key: (usize, usize, u64),
}

impl CanonicalCache {
    pub fn build(canonical: &GaussianParamMap, body: &SkinnedBody, settings: &AvatarSettings) -> Result<Self> {
        let uv = canonical.as_uv_map();
        let (plans, dropped) = plan_anchors(
            uv.valid_mask(),
            uv.width(),
            uv.height(),
            body,
            settings.n_uv,
            settings.n_surface,
            settings.seed,
        )?;
        let canonical_set = StructuredGaussianSet::from_plans(&plans, dropped, settings.seed, |i| {
            composed_texel(canonical, None, i)
        });
        Ok(Self {
            plans,
            dropped,
            canonical: canonical_set,
            map_fingerprint: map_fingerprint(canonical),
            body_fingerprint: body_fingerprint(body),
            key: (settings.n_uv, settings.n_surface, settings.seed),
        })
    }

    pub fn plans(&self) -> &[AnchorPlan] {
        &self.plans
    }

    pub fn canonical_set(&self) -> &StructuredGaussianSet {
        &self.canonical
    }

    fn check(&self, canonical: &GaussianParamMap, body: &SkinnedBody, settings: &AvatarSettings) -> Result<()> {
        if self.key != (settings.n_uv, settings.n_surface, settings.seed)
            || self.map_fingerprint != map_fingerprint(canonical)
            || self.body_fingerprint != body_fingerprint(body)
        {
            return Err(Error::invalid(
                "canonical cache was built for a different map, body or sampling setup",
            ));
        }
        Ok(())
    }

    /// Structured Gaussians of `canonical + offset`.
    pub fn structured(&self, canonical: &GaussianParamMap, offset: Option<&GaussianParamMap>) -> StructuredGaussianSet {
        match offset {
            None => self.canonical.clone(),
            Some(o) => StructuredGaussianSet::from_plans(&self.plans, self.dropped, self.canonical.seed, |i| {
                composed_texel(canonical, Some(o), i)
            }),
        }
    }
}

#[inline]
fn composed_texel(canonical: &GaussianParamMap, offset: Option<&GaussianParamMap>, i: usize) -> [f64; PARAM_CHANNELS] {
    let mut out = [0.0; PARAM_CHANNELS];
    compose_texel(canonical.texel(i), offset.map(|o| o.texel(i)), &mut out);
    out
}

fn check_offset(canonical: &GaussianParamMap, offset: Option<&GaussianParamMap>) -> Result<()> {
    match offset {
        Some(o) if o.width() != canonical.width() || o.height() != canonical.height() => Err(Error::dim(format!(
            "offset map {}x{} does not match canonical {}x{}",
            o.width(),
            o.height(),
            canonical.width(),
            canonical.height()
        ))),
        _ => Ok(()),
    }
}

/// Structured Gaussians of the composed map, without a cache.
pub fn sample_composed(
    canonical: &GaussianParamMap,
    offset: Option<&GaussianParamMap>,
    body: &SkinnedBody,
    settings: &AvatarSettings,
) -> Result<StructuredGaussianSet> {
    let composed = match offset {
        Some(o) => compose_param_maps(canonical, o)?,
        None => canonical.normalized(),
    };
    sample_structured(&composed, body, settings.n_uv, settings.n_surface, settings.seed)
}

/// Composes, samples, poses, places and rasterizes. A cache only skips the
/// sampling work; the raster is bit-identical either way.
pub fn render_avatar(
    canonical: &GaussianParamMap,
    offset: Option<&GaussianParamMap>,
    body: &SkinnedBody,
    pose: &PoseParams,
    cam: &Camera,
    settings: &AvatarSettings,
    cache: Option<&CanonicalCache>,
) -> Result<RenderedImage> {
    render_avatar_timed(canonical, offset, body, pose, cam, settings, cache).map(|(img, _)| img)
}

pub fn render_avatar_timed(
    canonical: &GaussianParamMap,
    offset: Option<&GaussianParamMap>,
    body: &SkinnedBody,
    pose: &PoseParams,
    cam: &Camera,
    settings: &AvatarSettings,
    cache: Option<&CanonicalCache>,
) -> Result<(RenderedImage, StageTimings)> {
    cam.validate()?;
    check_offset(canonical, offset)?;
    let mut timings = StageTimings::default();

    let t = Instant::now();
    let set = match cache {
        Some(c) => {
            c.check(canonical, body, settings)?;
            c.structured(canonical, offset)
        }
        None => sample_composed(canonical, offset, body, settings)?,
    };
    timings.sample = t.elapsed();

    let t = Instant::now();
    let posed = pose_body(body, pose)?;
    timings.pose = t.elapsed();

    let t = Instant::now();
    let frames = tangent_frames(&posed, &set.anchors())?;
    timings.frames = t.elapsed();

    let t = Instant::now();
    let placed = place_gaussians(&set, &frames)?;
    timings.place = t.elapsed();

    let t = Instant::now();
    let img = rasterize_with(&placed.gaussians, cam, &settings.raster)?;
    timings.rasterize = t.elapsed();
    Ok((img, timings))
}

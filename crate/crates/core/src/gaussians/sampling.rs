use std::io::Write;

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use super::param_map::{normalize_texel, GaussianParamMap, ParamLayout, PARAM_CHANNELS};
use crate::body::SkinnedBody;
use crate::error::{Error, Result};
use crate::math::{quat_or_identity, Quat, Vec2, Vec3};
use crate::records::write_records;
use crate::uv::{SurfacePoint, UvCoverage};

pub const DEFAULT_N_UV: usize = 65_536;
pub const DEFAULT_N_SURFACE: usize = 65_536;

/// Generator used for surface anchors, recorded in every output that depends
/// on it.
pub const SURFACE_RNG: &str = "chacha8-rand0.8-v1";

/// One bilinear tap into a parameter map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Tap {
    pub texel: u32,
    pub weight: f64,
}

/// Where an anchor sits and how it reads the parameter map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AnchorPlan {
    pub anchor: SurfacePoint,
    pub uv: Vec2,
    taps: [Tap; 4],
    n_taps: u8,
}

impl AnchorPlan {
    pub fn taps(&self) -> &[Tap] {
        &self.taps[..self.n_taps as usize]
    }

    /// Weighted sum of the tapped texels, then the normalization pass.
    #[inline]
    pub fn fetch<F>(&self, mut texel: F) -> [f64; PARAM_CHANNELS]
    where
        F: FnMut(usize) -> [f64; PARAM_CHANNELS],
    {
        let mut out = [0.0; PARAM_CHANNELS];
        for tap in self.taps() {
            let t = texel(tap.texel as usize);
            for k in 0..PARAM_CHANNELS {
                out[k] += tap.weight * t[k];
            }
        }
        normalize_texel(&mut out);
        out
    }
}

/// Bilinear taps at `uv` restricted to valid texels, weights renormalized to
/// sum to one. `None` when no valid texel carries weight.
pub fn bilinear_taps(valid: &[bool], width: usize, height: usize, uv: Vec2) -> Option<([Tap; 4], u8)> {
    let fx = uv.x * width as f64 - 0.5;
    let fy = uv.y * height as f64 - 0.5;
    let x0 = fx.floor();
    let y0 = fy.floor();
    let tx = fx - x0;
    let ty = fy - y0;
    let clamp = |v: f64, n: usize| v.max(0.0).min((n - 1) as f64) as usize;
    let xs = [clamp(x0, width), clamp(x0 + 1.0, width)];
    let ys = [clamp(y0, height), clamp(y0 + 1.0, height)];
    let ws = [
        (1.0 - tx) * (1.0 - ty),
        tx * (1.0 - ty),
        (1.0 - tx) * ty,
        tx * ty,
    ];
    let mut taps = [Tap {
        texel: 0,
        weight: 0.0,
    }; 4];
    let mut n = 0u8;
    let mut total = 0.0;
    for (k, &w) in ws.iter().enumerate() {
        let texel = ys[k / 2] * width + xs[k % 2];
        if w > 0.0 && valid[texel] {
            taps[n as usize] = Tap {
                texel: texel as u32,
                weight: w,
            };
            n += 1;
            total += w;
        }
    }
    if n == 0 {
        return None;
    }
    for tap in &mut taps[..n as usize] {
        tap.weight /= total;
    }
    Some((taps, n))
}

/// Anchor placement for a map's coverage: `n_uv` anchors on a row-major grid
/// of valid texel centers (wrapping when more anchors than texels are
/// requested) followed by `n_surface` area-uniform surface anchors.
///
/// Returns the plans and the number of surface anchors dropped because no
/// valid texel surrounds them.
pub fn plan_anchors(
    valid: &[bool],
    width: usize,
    height: usize,
    body: &SkinnedBody,
    n_uv: usize,
    n_surface: usize,
    seed: u64,
) -> Result<(Vec<AnchorPlan>, usize)> {
    let coverage = UvCoverage::build(body, width, height);
    let candidates: Vec<usize> = (0..width * height)
        .filter(|&i| valid[i] && coverage.hit(i).is_some())
        .collect();
    if candidates.is_empty() {
        return Err(Error::invalid("parameter map has no valid texels on the body"));
    }

    let nc = candidates.len();
    let mut plans = Vec::with_capacity(n_uv + n_surface);
    for i in 0..n_uv {
        let slot = if n_uv <= nc {
            (i as u128 * nc as u128 / n_uv as u128) as usize
        } else {
            i % nc
        };
        let texel = candidates[slot];
        let (x, y) = (texel % width, texel / width);
        let mut taps = [Tap {
            texel: texel as u32,
            weight: 1.0,
        }; 4];
        taps[1..].fill(Tap {
            texel: 0,
            weight: 0.0,
        });
        plans.push(AnchorPlan {
            anchor: *coverage.hit(texel).unwrap(),
            uv: Vec2::new(
                (x as f64 + 0.5) / width as f64,
                (y as f64 + 0.5) / height as f64,
            ),
            taps,
            n_taps: 1,
        });
    }

    let mut dropped = 0;
    if n_surface > 0 {
        let areas: Vec<f64> = (0..body.num_faces()).map(|f| body.face_rest_area(f)).collect();
        let faces = WeightedIndex::new(&areas)
            .map_err(|e| Error::invalid(format!("cannot sample surface: {e}")))?;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let uv_corners = body.uv_corners();
        for _ in 0..n_surface {
            let face = faces.sample(&mut rng);
            let r1: f64 = rng.gen();
            let r2: f64 = rng.gen();
            let s = r1.sqrt();
            let bary = [1.0 - s, s * (1.0 - r2), s * r2];
            let [a, b, c] = uv_corners[face];
            let uv = a * bary[0] + b * bary[1] + c * bary[2];
            match bilinear_taps(valid, width, height, uv) {
                Some((taps, n_taps)) => plans.push(AnchorPlan {
                    anchor: SurfacePoint { face, bary },
                    uv,
                    taps,
                    n_taps,
                }),
                None => dropped += 1,
            }
        }
    }
    Ok((plans, dropped))
}

/// A UV-anchored Gaussian in tangent-space coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct StructuredGaussian {
    pub anchor: SurfacePoint,
    pub uv: Vec2,
    pub offset: Vec3,
    pub rotation: Quat,
    pub scale: Vec3,
    pub alpha: f64,
    pub rgb: Vec3,
}

impl StructuredGaussian {
    pub fn from_params(anchor: SurfacePoint, uv: Vec2, p: &[f64; PARAM_CHANNELS]) -> Self {
        let (o, r, s) = (ParamLayout::OFFSET, ParamLayout::ROTATION, ParamLayout::SCALE);
        Self {
            anchor,
            uv,
            alpha: p[ParamLayout::ALPHA],
            rgb: Vec3::new(p[1], p[2], p[3]),
            offset: Vec3::new(p[o], p[o + 1], p[o + 2]),
            rotation: quat_or_identity([p[r], p[r + 1], p[r + 2], p[r + 3]]),
            scale: Vec3::new(p[s], p[s + 1], p[s + 2]),
        }
    }

    pub fn params(&self) -> [f64; PARAM_CHANNELS] {
        let q = self.rotation.quaternion();
        [
            self.alpha,
            self.rgb.x,
            self.rgb.y,
            self.rgb.z,
            self.offset.x,
            self.offset.y,
            self.offset.z,
            q.w,
            q.i,
            q.j,
            q.k,
            self.scale.x,
            self.scale.y,
            self.scale.z,
        ]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct StructuredGaussianSet {
    pub gaussians: Vec<StructuredGaussian>,
    /// Surface anchors without a valid texel nearby.
    pub dropped: usize,
    pub seed: u64,
}

impl StructuredGaussianSet {
    pub fn len(&self) -> usize {
        self.gaussians.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gaussians.is_empty()
    }

    pub fn anchors(&self) -> Vec<SurfacePoint> {
        self.gaussians.iter().map(|g| g.anchor).collect()
    }

    /// Fetches parameters for planned anchors from a texel source.
    pub fn from_plans<F>(plans: &[AnchorPlan], dropped: usize, seed: u64, texel: F) -> Self
    where
        F: Fn(usize) -> [f64; PARAM_CHANNELS] + Sync,
    {
        let gaussians = plans
            .par_iter()
            .map(|p| StructuredGaussian::from_params(p.anchor, p.uv, &p.fetch(&texel)))
            .collect();
        Self {
            gaussians,
            dropped,
            seed,
        }
    }

    /// Record stream: face, barycentrics (3), uv (2), then the 14 parameters.
    pub fn write_to<W: Write>(&self, w: W) -> Result<()> {
        let width = 6 + PARAM_CHANNELS;
        let mut data = Vec::with_capacity(self.len() * width);
        for g in &self.gaussians {
            data.push(g.anchor.face as f64);
            data.extend_from_slice(&g.anchor.bary);
            data.extend([g.uv.x, g.uv.y]);
            data.extend_from_slice(&g.params());
        }
        let mut header = serde_json::Map::new();
        header.insert("kind".into(), "structured_gaussians".into());
        header.insert("seed".into(), self.seed.into());
        header.insert("rng".into(), SURFACE_RNG.into());
        header.insert("dropped".into(), self.dropped.into());
        header.insert(
            "fields".into(),
            "face,b0,b1,b2,u,v,alpha,r,g,b,dx,dy,dz,qw,qx,qy,qz,sx,sy,sz".into(),
        );
        write_records(w, header, width, &data)
    }
}

/// Samples the parameter map at grid and surface anchors.
pub fn sample_structured(
    map: &GaussianParamMap,
    body: &SkinnedBody,
    n_uv: usize,
    n_surface: usize,
    seed: u64,
) -> Result<StructuredGaussianSet> {
    let uv = map.as_uv_map();
    let (plans, dropped) = plan_anchors(
        uv.valid_mask(),
        uv.width(),
        uv.height(),
        body,
        n_uv,
        n_surface,
        seed,
    )?;
    Ok(StructuredGaussianSet::from_plans(&plans, dropped, seed, |i| {
        map.texel(i).try_into().unwrap()
    }))
}

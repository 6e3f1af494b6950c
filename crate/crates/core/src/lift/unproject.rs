use rayon::prelude::*;

use super::bvh::SurfaceIndex;
use crate::body::PosedMesh;
use crate::error::{Error, Result};
use crate::gaussians::{normalize_texel, GaussianParamMap, PoseSpaceGaussianSet, PARAM_CHANNELS};
use crate::math::{quat_from_matrix, Vec3};
use crate::uv::face_frames;

/// How to resolve several Gaussians landing on one texel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum CollisionPolicy {
    /// Keep the highest alpha; ties keep the earlier Gaussian.
    #[default]
    MaxAlpha,
    /// Average all parameters (rotations sign-aligned, then renormalized).
    Average,
}

#[derive(Debug, Clone)]
pub struct UnprojectReport {
    pub map: GaussianParamMap,
    /// Texels written.
    pub written: usize,
    /// Gaussians whose nearest face has no tangent frame or whose UV lies
    /// outside the unit square.
    pub skipped: usize,
    /// Gaussians that lost (or were merged in) a texel collision.
    pub collisions: usize,
}

struct Candidate {
    texel: usize,
    params: [f64; PARAM_CHANNELS],
}

/// Projects every Gaussian onto its nearest surface point and stores its
/// parameters in that point's tangent space at the containing texel.
pub fn unproject_to_uv(
    set: &PoseSpaceGaussianSet,
    posed: &PosedMesh<'_>,
    width: usize,
    height: usize,
    policy: CollisionPolicy,
) -> Result<UnprojectReport> {
    if width == 0 || height == 0 {
        return Err(Error::invalid("uv raster dimensions must be positive"));
    }
    let index = SurfaceIndex::build(posed)?;
    let frames = face_frames(posed);

    let candidates: Vec<Option<Candidate>> = set
        .gaussians()
        .par_iter()
        .map(|g| {
            let hit = index.nearest(&g.position);
            let frame = frames[hit.face].as_ref()?;
            let uv = posed.uv_point(hit.face, &hit.bary);
            if !(0.0..=1.0).contains(&uv.x) || !(0.0..=1.0).contains(&uv.y) {
                return None;
            }
            let x = ((uv.x * width as f64).floor().max(0.0) as usize).min(width - 1);
            let y = ((uv.y * height as f64).floor().max(0.0) as usize).min(height - 1);
            let t = posed.surface_point(hit.face, &hit.bary);
            let rt = frame.rotation.transpose();
            let offset: Vec3 = rt * (g.position - t);
            let rot = quat_from_matrix(&rt) * g.rotation;
            let scale = g.scale / frame.scale;
            let q = rot.quaternion();
            Some(Candidate {
                texel: y * width + x,
                params: [
                    g.alpha, g.rgb.x, g.rgb.y, g.rgb.z, offset.x, offset.y, offset.z, q.w, q.i,
                    q.j, q.k, scale.x, scale.y, scale.z,
                ],
            })
        })
        .collect();

    let mut map = GaussianParamMap::new(width, height);
    let mut counts = vec![0u32; width * height];
    let mut skipped = 0;
    let mut collisions = 0;
    for cand in candidates {
        let Some(c) = cand else {
            skipped += 1;
            continue;
        };
        let n = counts[c.texel];
        let dst = map.texel_mut(c.texel);
        if n == 0 {
            dst.copy_from_slice(&c.params);
        } else {
            collisions += 1;
            match policy {
                CollisionPolicy::MaxAlpha => {
                    if c.params[0] > dst[0] {
                        dst.copy_from_slice(&c.params);
                    }
                }
                CollisionPolicy::Average => {
                    let mut p = c.params;
                    let dot: f64 = (7..11).map(|k| p[k] * dst[k]).sum();
                    if dot < 0.0 {
                        for v in &mut p[7..11] {
                            *v = -*v;
                        }
                    }
                    // running sums; divided below
                    for (d, v) in dst.iter_mut().zip(p) {
                        *d += v;
                    }
                }
            }
        }
        counts[c.texel] = n + 1;
    }

    let mut written = 0;
    for (i, &n) in counts.iter().enumerate() {
        if n == 0 {
            continue;
        }
        written += 1;
        map.uv_map_mut().set_valid(i, true);
        if policy == CollisionPolicy::Average && n > 1 {
            let t = map.texel_mut(i);
            for v in t.iter_mut() {
                *v /= n as f64;
            }
            normalize_texel(t);
        }
    }
    Ok(UnprojectReport {
        map,
        written,
        skipped,
        collisions,
    })
}

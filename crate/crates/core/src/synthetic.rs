//! Procedural avatars and scenes for tests, benchmarks and demos.

use std::f64::consts::{PI, TAU};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::body::{BodyParts, PoseParams, SkinnedBody};
use crate::error::{Error, Result};
use crate::gaussians::{GaussianParamMap, PoseGaussian, PoseSpaceGaussianSet};
use crate::math::{axis_angle, Quat, Vec2, Vec3};
use crate::render::{Camera, WorldGaussian};
use crate::uv::UvCoverage;

/// A surface of revolution around `+y` split into `around × rings` quads,
/// each quad two triangles. The UV atlas unwraps the surface onto the whole
/// unit square (`u` around, `v` up), so a map whose size is a multiple of
/// the grid puts every texel center strictly inside a triangle when the
/// per-quad texel counts differ by an odd number.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TubeSpec {
    pub around: usize,
    pub rings: usize,
    pub joints: usize,
    pub radius: f64,
    pub height: f64,
}

impl Default for TubeSpec {
    fn default() -> Self {
        Self {
            around: 128,
            rings: 256,
            joints: 4,
            radius: 0.25,
            height: 1.6,
        }
    }
}

impl TubeSpec {
    fn radius_at(&self, t: f64) -> f64 {
        self.radius * (0.8 + 0.2 * (PI * t).sin())
    }
}

/// Builds the tube body; joints form a chain along the axis with the root at
/// the origin.
pub fn tube_body(spec: &TubeSpec) -> Result<SkinnedBody> {
    if spec.around < 3 || spec.rings < 1 || spec.joints < 2 {
        return Err(Error::invalid("tube needs 3+ columns, 1+ rings and 2+ joints"));
    }
    let (na, nr) = (spec.around, spec.rings);
    let cols = na + 1;
    let mut verts = Vec::with_capacity(cols * (nr + 1));
    let mut weights = Vec::with_capacity(verts.capacity());
    let segs = (spec.joints - 1) as f64;
    for r in 0..=nr {
        let t = r as f64 / nr as f64;
        let rad = spec.radius_at(t);
        let s = t * segs;
        let j0 = (s.floor() as usize).min(spec.joints - 2);
        let w = s - j0 as f64;
        for a in 0..cols {
            let th = TAU * (a % na) as f64 / na as f64;
            verts.push(Vec3::new(rad * th.cos(), t * spec.height, -rad * th.sin()));
            weights.push(vec![(j0, 1.0 - w), (j0 + 1, w)]);
        }
    }
    let mut faces = Vec::with_capacity(2 * na * nr);
    let mut uv_corners = Vec::with_capacity(faces.capacity());
    let mut labels = Vec::with_capacity(faces.capacity());
    for r in 0..nr {
        let label = (((r as f64 + 0.5) / nr as f64 * segs).round()) as u32;
        for a in 0..na {
            let v00 = r * cols + a;
            let (v10, v01, v11) = (v00 + 1, v00 + cols, v00 + cols + 1);
            let uv = |a: usize, r: usize| Vec2::new(a as f64 / na as f64, r as f64 / nr as f64);
            faces.push([v00, v10, v11]);
            uv_corners.push([uv(a, r), uv(a + 1, r), uv(a + 1, r + 1)]);
            faces.push([v00, v11, v01]);
            uv_corners.push([uv(a, r), uv(a + 1, r + 1), uv(a, r + 1)]);
            labels.extend([label, label]);
        }
    }
    let joints = spec.joints;
    SkinnedBody::new(BodyParts {
        rest_vertices: verts,
        faces,
        uv_corners,
        joint_names: (0..joints).map(|j| format!("joint{j}")).collect(),
        joint_parents: (0..joints).map(|j| j.checked_sub(1)).collect(),
        joint_rest_positions: (0..joints)
            .map(|j| Vec3::new(0.0, spec.height * j as f64 / segs, 0.0))
            .collect(),
        skin_weights: weights,
        part_labels: labels,
        num_segments: Some(joints),
    })
}

/// Parameters written to every covered texel of a synthetic canonical map.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MapStyle {
    pub alpha: f64,
    /// Offset along the normal, meters per unit UV scale.
    pub lift: f64,
    /// Tangential Gaussian extent in texels.
    pub footprint: f64,
    /// Random rotation magnitude in radians.
    pub twist: f64,
}

impl Default for MapStyle {
    fn default() -> Self {
        Self {
            alpha: 0.9,
            lift: 0.002,
            footprint: 0.8,
            twist: 0.3,
        }
    }
}

/// A canonical map covering exactly the texels the body's atlas reaches.
/// Offsets point along the local normal only.
pub fn canonical_map(body: &SkinnedBody, width: usize, height: usize, style: &MapStyle, seed: u64) -> GaussianParamMap {
    let coverage = UvCoverage::build(body, width, height);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut map = GaussianParamMap::new(width, height);
    let texel = 1.0 / width.max(height) as f64;
    for i in 0..width * height {
        if coverage.hit(i).is_none() {
            continue;
        }
        let (x, y) = (i % width, i / width);
        let u = (x as f64 + 0.5) / width as f64;
        let v = (y as f64 + 0.5) / height as f64;
        let axis = Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        let q = if axis.norm() > 1e-3 {
            axis_angle(axis, rng.gen_range(-style.twist..=style.twist))
        } else {
            Quat::identity()
        };
        let q = q.quaternion();
        let jitter: f64 = rng.gen_range(0.8..1.2);
        let t = map.texel_mut(i);
        t.copy_from_slice(&[
            style.alpha,
            0.5 + 0.5 * (TAU * u).cos(),
            v,
            0.5 + 0.5 * (3.0 * TAU * v).sin(),
            0.0,
            0.0,
            style.lift,
            q.w,
            q.i,
            q.j,
            q.k,
            style.footprint * texel * jitter,
            style.footprint * texel / jitter,
            0.3 * style.footprint * texel,
        ]);
        map.uv_map_mut().set_valid(i, true);
    }
    map
}

/// Small random rotations at every joint and a small root shift.
pub fn random_pose(num_joints: usize, magnitude: f64, rng: &mut impl Rng) -> PoseParams {
    let joint_rotations = (0..num_joints)
        .map(|_| {
            let axis = Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
            if axis.norm() < 1e-6 {
                Quat::identity()
            } else {
                axis_angle(axis, rng.gen_range(-magnitude..=magnitude))
            }
        })
        .collect();
    PoseParams {
        joint_rotations,
        root_translation: Vec3::new(
            rng.gen_range(-0.05..0.05),
            rng.gen_range(-0.05..0.05),
            rng.gen_range(-0.05..0.05),
        ),
    }
}

/// A smooth bending sequence of `frames` poses.
pub fn pose_sequence(num_joints: usize, frames: usize) -> Vec<PoseParams> {
    (0..frames)
        .map(|f| {
            let phase = TAU * f as f64 / frames.max(1) as f64;
            PoseParams {
                joint_rotations: (0..num_joints)
                    .map(|j| {
                        if j == 0 {
                            axis_angle(Vec3::y(), 0.3 * phase.sin())
                        } else {
                            axis_angle(Vec3::z(), 0.25 * (phase + j as f64).sin())
                        }
                    })
                    .collect(),
                root_translation: Vec3::new(0.02 * phase.cos(), 0.0, 0.0),
            }
        })
        .collect()
}

/// A camera in front of the tube (on `+z`) framing its full height.
pub fn front_camera(spec: &TubeSpec, width: usize, height: usize) -> Camera {
    let target = Vec3::new(0.0, 0.5 * spec.height, 0.0);
    let dist = 1.6 * spec.height;
    let focal = 0.9 * height as f64 * dist / (1.3 * spec.height);
    Camera::look_at(target + Vec3::new(0.0, 0.0, dist), target, Vec3::y(), width, height, focal)
        .expect("fixed camera is valid")
}

fn random_unit_quat(rng: &mut impl Rng) -> Quat {
    loop {
        let v: [f64; 4] = [
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        ];
        let n = v.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 0.1 && n <= 1.0 {
            return Quat::from_quaternion(nalgebra::Quaternion::new(v[0], v[1], v[2], v[3]));
        }
    }
}

/// Gaussians scattered in `[-1, 1]³` in front of `camera_z`-looking cameras.
pub fn random_world_gaussians(n: usize, rng: &mut impl Rng) -> Vec<WorldGaussian> {
    (0..n)
        .map(|_| WorldGaussian {
            mean: Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0)),
            rotation: random_unit_quat(rng),
            scale: Vec3::new(rng.gen_range(0.01..0.3), rng.gen_range(0.01..0.3), rng.gen_range(0.01..0.3)),
            alpha: rng.gen_range(0.0..1.0),
            rgb: Vec3::new(rng.gen(), rng.gen(), rng.gen()),
        })
        .collect()
}

/// A camera on a sphere of radius `3..5` around the origin, looking at it.
pub fn random_camera(width: usize, height: usize, rng: &mut impl Rng) -> Camera {
    loop {
        let dir = Vec3::new(rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0), rng.gen_range(-1.0..1.0));
        if dir.norm() < 0.2 {
            continue;
        }
        let eye = dir.normalize() * rng.gen_range(3.0..5.0);
        let focal = rng.gen_range(0.8..1.5) * width as f64;
        if let Ok(cam) = Camera::look_at(eye, Vec3::zeros(), Vec3::y(), width, height, focal) {
            return cam;
        }
    }
}

/// Pose-space Gaussians near the surface of `points`, each with a random
/// feature row.
pub fn pose_space_gaussians(points: &[Vec3], feature_width: usize, rng: &mut impl Rng) -> PoseSpaceGaussianSet {
    let mut gaussians = Vec::with_capacity(points.len());
    let mut features = Vec::with_capacity(points.len() * feature_width);
    for (i, p) in points.iter().enumerate() {
        gaussians.push(PoseGaussian {
            position: p + Vec3::new(rng.gen_range(-0.01..0.01), rng.gen_range(-0.01..0.01), rng.gen_range(-0.01..0.01)),
            rotation: random_unit_quat(rng),
            scale: Vec3::new(rng.gen_range(0.001..0.02), rng.gen_range(0.001..0.02), rng.gen_range(0.001..0.02)),
            alpha: rng.gen(),
            rgb: Vec3::new(rng.gen(), rng.gen(), rng.gen()),
            source_view: (i % 4) as u32,
            pixel: [(i % 512) as u32, (i / 512) as u32],
        });
        features.extend((0..feature_width).map(|_| rng.gen_range(-1.0..1.0)));
    }
    PoseSpaceGaussianSet::new(gaussians, feature_width, features).expect("generated values are valid")
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::uv::face_frames;

    #[test]
    fn tube_frames_point_outward() {
        let spec = TubeSpec {
            around: 8,
            rings: 4,
            ..TubeSpec::default()
        };
        let body = tube_body(&spec).unwrap();
        let mesh = body.rest_mesh();
        for (f, frame) in face_frames(&mesh).iter().enumerate() {
            let frame = frame.expect("tube faces are non-degenerate");
            let [a, b, c] = mesh.triangle(f);
            let centroid = (a + b + c) / 3.0;
            let radial = Vec3::new(centroid.x, 0.0, centroid.z);
            assert!(frame.rotation.column(2).dot(&radial) > 0.0);
        }
    }

    #[test]
    fn canonical_map_covers_the_whole_atlas() {
        let spec = TubeSpec {
            around: 8,
            rings: 8,
            ..TubeSpec::default()
        };
        let body = tube_body(&spec).unwrap();
        let map = canonical_map(&body, 16, 8, &MapStyle::default(), 3);
        assert_eq!(map.as_uv_map().num_valid(), 16 * 8);
    }
}

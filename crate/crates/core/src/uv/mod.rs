//! UV-space rasterization of per-vertex quantities, conditioning maps and
//! per-surface-point tangent frames.

mod map;

use rayon::prelude::*;

use crate::body::{PosedMesh, SkinnedBody};
use crate::error::{Error, Result};
use crate::math::{Mat3, Vec2, Vec3};
use crate::render::Camera;

pub use map::UvMap;

/// Triangles with 3D or UV area below this have no tangent frame.
pub const DEGENERATE_AREA: f64 = 1e-12;

/// Barycentric slack for point-in-triangle tests.
const INSIDE_EPS: f64 = 1e-12;

/// A location on the mesh surface.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SurfacePoint {
    pub face: usize,
    pub bary: [f64; 3],
}

/// Barycentric coordinates of `p` in UV triangle `tri`; `None` if degenerate.
pub fn uv_barycentric(tri: &[Vec2; 3], p: Vec2) -> Option<[f64; 3]> {
    let [a, b, c] = *tri;
    let cross = |u: Vec2, v: Vec2| u.x * v.y - u.y * v.x;
    let det = cross(b - a, c - a);
    if det.abs() < 1e-300 {
        return None;
    }
    let l1 = cross(p - a, c - a) / det;
    let l2 = cross(b - a, p - a) / det;
    Some([1.0 - l1 - l2, l1, l2])
}

/// Which face (and where on it) each texel center falls on.
#[derive(Debug, Clone)]
pub struct UvCoverage {
    width: usize,
    height: usize,
    hits: Vec<Option<SurfacePoint>>,
}

impl UvCoverage {
    /// Scans faces in index order; a texel keeps the first face covering it.
    pub fn build(body: &SkinnedBody, width: usize, height: usize) -> Self {
        let mut hits = vec![None; width * height];
        let (wf, hf) = (width as f64, height as f64);
        for (face, tri) in body.uv_corners().iter().enumerate() {
            let min_u = tri.iter().map(|p| p.x).fold(f64::INFINITY, f64::min);
            let max_u = tri.iter().map(|p| p.x).fold(f64::NEG_INFINITY, f64::max);
            let min_v = tri.iter().map(|p| p.y).fold(f64::INFINITY, f64::min);
            let max_v = tri.iter().map(|p| p.y).fold(f64::NEG_INFINITY, f64::max);
            // texel x has center (x+0.5)/w; candidates satisfy min ≤ center ≤ max
            let x0 = ((min_u * wf - 0.5).floor().max(0.0)) as usize;
            let x1 = ((max_u * wf - 0.5).ceil().max(0.0) as usize).min(width.saturating_sub(1));
            let y0 = ((min_v * hf - 0.5).floor().max(0.0)) as usize;
            let y1 = ((max_v * hf - 0.5).ceil().max(0.0) as usize).min(height.saturating_sub(1));
            for y in y0..=y1 {
                for x in x0..=x1 {
                    let slot = &mut hits[y * width + x];
                    if slot.is_some() {
                        continue;
                    }
                    let p = Vec2::new((x as f64 + 0.5) / wf, (y as f64 + 0.5) / hf);
                    let Some(b) = uv_barycentric(tri, p) else {
                        continue;
                    };
                    if b.iter().all(|&l| l >= -INSIDE_EPS) {
                        *slot = Some(SurfacePoint { face, bary: b });
                    }
                }
            }
        }
        Self {
            width,
            height,
            hits,
        }
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn hits(&self) -> &[Option<SurfacePoint>] {
        &self.hits
    }

    pub fn hit(&self, texel: usize) -> Option<&SurfacePoint> {
        self.hits[texel].as_ref()
    }

    /// Rasterizes a per-face-corner attribute: `attr(face, corner, out)` fills
    /// `out` with that corner's `channels` values.
    pub fn rasterize_with<F>(&self, channels: usize, attr: F) -> UvMap
    where
        F: Fn(usize, usize, &mut [f64]) + Sync,
    {
        let mut map = UvMap::new(self.width, self.height, channels);
        let w = self.width;
        map.data_mut()
            .par_chunks_mut(w * channels)
            .enumerate()
            .for_each(|(y, row)| {
                let mut corner = vec![0.0; channels];
                for x in 0..w {
                    if let Some(hit) = &self.hits[y * w + x] {
                        let out = &mut row[x * channels..(x + 1) * channels];
                        for (k, &b) in hit.bary.iter().enumerate() {
                            attr(hit.face, k, &mut corner);
                            for (o, c) in out.iter_mut().zip(&corner) {
                                *o += b * c;
                            }
                        }
                    }
                }
            });
        for (i, hit) in self.hits.iter().enumerate() {
            map.set_valid(i, hit.is_some());
        }
        map
    }

    /// Barycentric interpolation of a flat per-vertex attribute array.
    pub fn rasterize_vertex_attribute(
        &self,
        faces: &[[usize; 3]],
        attr: &[f64],
        channels: usize,
    ) -> UvMap {
        self.rasterize_with(channels, |face, corner, out| {
            let v = faces[face][corner];
            out.copy_from_slice(&attr[v * channels..(v + 1) * channels]);
        })
    }
}

/// Rasterizes per-vertex `channels`-vectors (flattened in `attr`) into a
/// `width × height` UV map.
pub fn rasterize_uv_attribute(
    mesh: &PosedMesh<'_>,
    attr: &[f64],
    channels: usize,
    width: usize,
    height: usize,
) -> Result<UvMap> {
    if width == 0 || height == 0 || channels == 0 {
        return Err(Error::invalid("uv raster dimensions must be positive"));
    }
    if attr.len() != mesh.vertices.len() * channels {
        return Err(Error::dim(format!(
            "attribute has {} values, expected {} vertices × {channels}",
            attr.len(),
            mesh.vertices.len()
        )));
    }
    let coverage = UvCoverage::build(mesh.body, width, height);
    Ok(coverage.rasterize_vertex_attribute(mesh.faces(), attr, channels))
}

fn flatten(vs: &[Vec3]) -> Vec<f64> {
    vs.iter().flat_map(|v| [v.x, v.y, v.z]).collect()
}

/// A ray in Plücker coordinates.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PluckerRay {
    pub direction: Vec3,
    pub moment: Vec3,
}

impl PluckerRay {
    /// Ray from `origin` through `target`. A target coinciding with the origin
    /// takes `fallback_dir`.
    pub fn through(origin: Vec3, target: Vec3, fallback_dir: Vec3) -> Self {
        let d = target - origin;
        let n = d.norm();
        let direction = if n > 1e-12 {
            d / n
        } else {
            fallback_dir.normalize()
        };
        Self {
            direction,
            moment: origin.cross(&direction),
        }
    }
}

/// UV conditioning maps for one pose and viewpoint.
#[derive(Debug, Clone)]
pub struct ConditionMaps {
    /// Posed vertex positions (3 channels).
    pub position: UvMap,
    /// Posed minus neutral vertex positions (3 channels).
    pub relative: UvMap,
    /// Posed unit normals (3 channels).
    pub normals: UvMap,
    /// Camera rays through the posed surface, `(d, m)` (6 channels).
    pub plucker: UvMap,
    /// One-hot face segment labels (`num_segments` channels).
    pub segmentation: UvMap,
}

pub fn condition_maps(
    body: &SkinnedBody,
    posed: &PosedMesh<'_>,
    neutral: &PosedMesh<'_>,
    camera: &Camera,
    width: usize,
    height: usize,
) -> Result<ConditionMaps> {
    if width == 0 || height == 0 {
        return Err(Error::invalid("uv raster dimensions must be positive"));
    }
    let nv = body.num_vertices();
    if posed.vertices.len() != nv || neutral.vertices.len() != nv {
        return Err(Error::dim("posed/neutral meshes do not match the body"));
    }
    let coverage = UvCoverage::build(body, width, height);
    let faces = body.faces();

    let position = coverage.rasterize_vertex_attribute(faces, &flatten(&posed.vertices), 3);
    let rel: Vec<Vec3> = posed
        .vertices
        .iter()
        .zip(&neutral.vertices)
        .map(|(p, n)| p - n)
        .collect();
    let relative = coverage.rasterize_vertex_attribute(faces, &flatten(&rel), 3);

    let mut normals = coverage.rasterize_vertex_attribute(faces, &flatten(&posed.vertex_normals), 3);
    for i in 0..normals.num_texels() {
        if !normals.is_valid(i) {
            continue;
        }
        let t = normals.texel_mut(i);
        let n = Vec3::new(t[0], t[1], t[2]);
        let len = n.norm();
        // opposite normals can cancel across a fold; fall back to the face normal
        let unit = if len > 1e-12 {
            n / len
        } else {
            let hit = coverage.hit(i).unwrap();
            let [a, b, c] = posed.triangle(hit.face);
            let fnrm = (b - a).cross(&(c - a));
            if fnrm.norm() > 0.0 {
                fnrm.normalize()
            } else {
                Vec3::z()
            }
        };
        t.copy_from_slice(unit.as_slice());
    }

    let origin = camera.center();
    let forward = camera.forward();
    let mut plucker = UvMap::new(width, height, 6);
    for i in 0..plucker.num_texels() {
        if !position.is_valid(i) {
            continue;
        }
        let p = position.texel(i);
        let ray = PluckerRay::through(origin, Vec3::new(p[0], p[1], p[2]), forward);
        let out = plucker.texel_mut(i);
        out[..3].copy_from_slice(ray.direction.as_slice());
        out[3..].copy_from_slice(ray.moment.as_slice());
        plucker.set_valid(i, true);
    }

    let labels = body.part_labels();
    let mut segmentation = UvMap::new(width, height, body.num_segments());
    for (i, hit) in coverage.hits().iter().enumerate() {
        if let Some(hit) = hit {
            segmentation.texel_mut(i)[labels[hit.face] as usize] = 1.0;
            segmentation.set_valid(i, true);
        }
    }

    Ok(ConditionMaps {
        position,
        relative,
        normals,
        plucker,
        segmentation,
    })
}

/// Local surface frame: origin `position`, columns of `rotation` are
/// (UV-u tangent, bitangent, normal), `scale` is meters per unit UV.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TangentFrame {
    pub position: Vec3,
    pub rotation: Mat3,
    pub scale: f64,
}

/// Rotation and scale shared by every point of one face.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FaceFrame {
    pub rotation: Mat3,
    pub scale: f64,
}

/// Face frame from 3D corners and UV corners; `None` when degenerate.
pub fn face_frame(p: &[Vec3; 3], uv: &[Vec2; 3]) -> Option<FaceFrame> {
    let e1 = p[1] - p[0];
    let e2 = p[2] - p[0];
    let d1 = uv[1] - uv[0];
    let d2 = uv[2] - uv[0];
    let cross = e1.cross(&e2);
    let area3 = 0.5 * cross.norm();
    let det = d1.x * d2.y - d2.x * d1.y;
    let area_uv = 0.5 * det.abs();
    if !(area3 >= DEGENERATE_AREA) || !(area_uv >= DEGENERATE_AREA) {
        return None;
    }
    let n = cross / (2.0 * area3);
    // ∂p/∂u from [e1 e2] = [∂p/∂u ∂p/∂v] [d1 d2]
    let dpdu = (e1 * d2.y - e2 * d1.y) / det;
    let t = dpdu - n * dpdu.dot(&n);
    let tl = t.norm();
    if !(tl > 1e-12) {
        return None;
    }
    let t = t / tl;
    let b = n.cross(&t);
    Some(FaceFrame {
        rotation: Mat3::from_columns(&[t, b, n]),
        scale: (area3 / area_uv).sqrt(),
    })
}

/// Frames for every face of a posed mesh.
pub fn face_frames(posed: &PosedMesh<'_>) -> Vec<Option<FaceFrame>> {
    let uv = posed.body.uv_corners();
    (0..posed.faces().len())
        .into_par_iter()
        .map(|f| face_frame(&posed.triangle(f), &uv[f]))
        .collect()
}

fn check_bary(pt: &SurfacePoint, num_faces: usize) -> Result<()> {
    if pt.face >= num_faces {
        return Err(Error::invalid(format!("face {} out of range", pt.face)));
    }
    let sum: f64 = pt.bary.iter().sum();
    if pt.bary.iter().any(|&b| !(b >= -1e-12)) || (sum - 1.0).abs() > 1e-6 {
        return Err(Error::invalid(format!(
            "barycentric {:?} is not a convex combination",
            pt.bary
        )));
    }
    Ok(())
}

/// Tangent frames at surface points; `None` marks a degenerate face.
pub fn tangent_frames(
    posed: &PosedMesh<'_>,
    points: &[SurfacePoint],
) -> Result<Vec<Option<TangentFrame>>> {
    let nf = posed.faces().len();
    for pt in points {
        check_bary(pt, nf)?;
    }
    let uv = posed.body.uv_corners();
    if points.len() >= nf {
        let per_face = face_frames(posed);
        Ok(points
            .par_iter()
            .map(|pt| frame_at(posed, pt, per_face[pt.face].as_ref()))
            .collect())
    } else {
        Ok(points
            .iter()
            .map(|pt| {
                let ff = face_frame(&posed.triangle(pt.face), &uv[pt.face]);
                frame_at(posed, pt, ff.as_ref())
            })
            .collect())
    }
}

/// Combines a precomputed face frame with a surface point.
pub fn frame_at(
    posed: &PosedMesh<'_>,
    pt: &SurfacePoint,
    face: Option<&FaceFrame>,
) -> Option<TangentFrame> {
    face.map(|ff| TangentFrame {
        position: posed.surface_point(pt.face, &pt.bary),
        rotation: ff.rotation,
        scale: ff.scale,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::body::{BodyParts, SkinnedBody};
    use crate::math::{axis_angle, orthonormality_error, Rigid};

    fn unit_triangle_body() -> SkinnedBody {
        SkinnedBody::new(BodyParts {
            rest_vertices: vec![Vec3::zeros(), Vec3::x(), Vec3::y()],
            faces: vec![[0, 1, 2]],
            uv_corners: vec![[Vec2::new(0.0, 0.0), Vec2::new(1.0, 0.0), Vec2::new(0.0, 1.0)]],
            joint_parents: vec![None],
            joint_rest_positions: vec![Vec3::zeros()],
            skin_weights: vec![vec![(0, 1.0)]; 3],
            part_labels: vec![0],
            num_segments: Some(3),
            ..Default::default()
        })
        .unwrap()
    }

    #[test]
    fn constant_attribute_is_constant() {
        let body = unit_triangle_body();
        let mesh = body.rest_mesh();
        let map = rasterize_uv_attribute(&mesh, &[2.5; 3], 1, 8, 8).unwrap();
        for i in 0..64 {
            if map.is_valid(i) {
                assert!((map.texel(i)[0] - 2.5).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn hand_barycentric_value() {
        let body = unit_triangle_body();
        let mesh = body.rest_mesh();
        let map = rasterize_uv_attribute(&mesh, &[0.0, 1.0, 2.0], 1, 2, 2).unwrap();
        // texel (0,0) center (0.25,0.25): bary (0.5,0.25,0.25)
        let hand = 0.0 * 0.5 + 1.0 * 0.25 + 2.0 * 0.25;
        assert!(map.is_valid(0));
        assert!((map.texel(0)[0] - hand).abs() < 1e-15);
        // texel (1,1) center (0.75,0.75) lies outside
        assert!(!map.is_valid(3));
        assert_eq!(map.texel(3)[0], 0.0);
    }

    #[test]
    fn attribute_length_checked() {
        let body = unit_triangle_body();
        assert!(matches!(
            rasterize_uv_attribute(&body.rest_mesh(), &[0.0; 4], 1, 4, 4),
            Err(Error::Dimension(_))
        ));
    }

    #[test]
    fn flat_face_normal_map_and_segmentation() {
        let body = unit_triangle_body();
        let mesh = body.rest_mesh();
        let cam = Camera::looking_down_z(16, 16, 10.0);
        let maps = condition_maps(&body, &mesh, &mesh, &cam, 8, 8).unwrap();
        for i in 0..64 {
            if maps.normals.is_valid(i) {
                assert_eq!(maps.normals.texel(i), &[0.0, 0.0, 1.0]);
                assert!(maps.relative.texel(i).iter().all(|&v| v == 0.0));
                assert_eq!(maps.segmentation.texel(i), &[1.0, 0.0, 0.0]);
            } else {
                assert!(maps.segmentation.texel(i).iter().all(|&v| v == 0.0));
            }
        }
    }

    #[test]
    fn ray_through_forward_point_has_zero_moment() {
        let ray = PluckerRay::through(Vec3::zeros(), Vec3::new(0.0, 0.0, 1.0), Vec3::z());
        assert_eq!(ray.direction, Vec3::z());
        assert_eq!(ray.moment, Vec3::zeros());
    }

    #[test]
    fn identity_layout_frame() {
        let body = unit_triangle_body();
        let mesh = body.rest_mesh();
        let pt = SurfacePoint {
            face: 0,
            bary: [0.5, 0.25, 0.25],
        };
        let f = tangent_frames(&mesh, &[pt]).unwrap()[0].unwrap();
        assert!((f.rotation - Mat3::identity()).norm() < 1e-15);
        assert!((f.scale - 1.0).abs() < 1e-15);
        assert!((f.position - Vec3::new(0.25, 0.25, 0.0)).norm() < 1e-15);
    }

    #[test]
    fn frame_follows_rigid_motion() {
        let body = unit_triangle_body();
        let q = axis_angle(Vec3::new(0.3, -1.0, 0.5), 1.234);
        let g = Rigid::from_quat(&q, Vec3::new(0.1, 0.2, -0.3));
        let moved: Vec<Vec3> = body.rest_vertices().iter().map(|v| g.apply(v)).collect();
        let mesh = PosedMesh::new(&body, moved);
        let pt = SurfacePoint {
            face: 0,
            bary: [0.2, 0.3, 0.5],
        };
        let f = tangent_frames(&mesh, &[pt]).unwrap()[0].unwrap();
        let flat = tangent_frames(&body.rest_mesh(), &[pt]).unwrap()[0].unwrap();
        assert!((f.position - g.apply(&flat.position)).norm() < 1e-6);
        assert!((f.rotation - g.rotation * flat.rotation).norm() < 1e-6);
        assert!((f.scale - flat.scale).abs() < 1e-6);
        assert!(orthonormality_error(&f.rotation) < 1e-6);
    }

    #[test]
    fn degenerate_face_has_no_frame() {
        let body = unit_triangle_body();
        let squashed = vec![Vec3::zeros(), Vec3::x(), Vec3::x() * 2.0];
        let mesh = PosedMesh::new(&body, squashed);
        let pt = SurfacePoint {
            face: 0,
            bary: [1.0, 0.0, 0.0],
        };
        assert_eq!(tangent_frames(&mesh, &[pt]).unwrap()[0], None);
    }

    #[test]
    fn rejects_non_convex_barycentrics() {
        let body = unit_triangle_body();
        let pt = SurfacePoint {
            face: 0,
            bary: [0.7, 0.7, -0.4],
        };
        assert!(tangent_frames(&body.rest_mesh(), &[pt]).is_err());
    }

    #[test]
    fn mirrored_uv_layout_still_right_handed() {
        let ff = face_frame(
            &[Vec3::zeros(), Vec3::x(), Vec3::y()],
            &[Vec2::new(1.0, 0.0), Vec2::new(0.0, 0.0), Vec2::new(1.0, 1.0)],
        )
        .unwrap();
        assert!(orthonormality_error(&ff.rotation) < 1e-12);
        // u decreases along +x
        assert!((ff.rotation.column(0) + Vec3::x()).norm() < 1e-12);
    }
}

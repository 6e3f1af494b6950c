use nalgebra::{Matrix2x3, Matrix3};

use super::camera::Camera;
use super::place::WorldGaussian;
use crate::math::{Mat3, Vec2};

pub const Z_NEAR: f64 = 0.01;
/// Screen-space low-pass added to every projected covariance, in px².
pub const LOW_PASS: f64 = 0.3;

/// A Gaussian projected to the image plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Splat {
    pub mean: Vec2,
    /// `[xx, xy, yy]`
    pub cov: [f64; 3],
    pub depth: f64,
}

impl Splat {
    pub fn det(&self) -> f64 {
        self.cov[0] * self.cov[2] - self.cov[1] * self.cov[1]
    }

    /// Inverse covariance `[a, b, c]` with `q = a dx² + 2b dx dy + c dy²`.
    pub fn conic(&self) -> Option<[f64; 3]> {
        let det = self.det();
        if !(det >= 1e-12) {
            return None;
        }
        Some([self.cov[2] / det, -self.cov[1] / det, self.cov[0] / det])
    }
}

/// World covariance `R diag(s)² Rᵀ`.
pub fn world_covariance(g: &WorldGaussian) -> Mat3 {
    let m = g.rotation.to_rotation_matrix().into_inner() * Matrix3::from_diagonal(&g.scale);
    m * m.transpose()
}

/// Projects `g`; `None` when its center is not in front of the near plane.
pub fn project_gaussian(g: &WorldGaussian, cam: &Camera) -> Option<Splat> {
    let p = cam.world_to_camera(&g.mean);
    if !(p.z > Z_NEAR) {
        return None;
    }
    let (x, y, z) = (p.x, p.y, p.z);
    let j = Matrix2x3::new(
        cam.fx / z,
        0.0,
        -cam.fx * x / (z * z),
        0.0,
        cam.fy / z,
        -cam.fy * y / (z * z),
    );
    let t = j * cam.rotation;
    let cov = t * world_covariance(g) * t.transpose();
    Some(Splat {
        mean: Vec2::new(cam.fx * x / z + cam.cx, cam.fy * y / z + cam.cy),
        cov: [cov[(0, 0)] + LOW_PASS, 0.5 * (cov[(0, 1)] + cov[(1, 0)]), cov[(1, 1)] + LOW_PASS],
        depth: z,
    })
}

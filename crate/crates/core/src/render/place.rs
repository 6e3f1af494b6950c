use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::gaussians::StructuredGaussianSet;
use crate::math::{quat_from_matrix, Quat, Vec3};
use crate::uv::TangentFrame;

/// A Gaussian in world space, ready to project.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WorldGaussian {
    pub mean: Vec3,
    pub rotation: Quat,
    pub scale: Vec3,
    pub alpha: f64,
    pub rgb: Vec3,
}

#[derive(Debug, Clone)]
pub struct Placement {
    pub gaussians: Vec<WorldGaussian>,
    /// Gaussians whose anchor has no tangent frame.
    pub dropped: usize,
}

/// `mean = T + R Δxyz`, `rotation = q(R) ⊗ Δ^R`, `scale = S Δs`.
pub fn place_one(frame: &TangentFrame, offset: &Vec3, rotation: &Quat, scale: &Vec3) -> (Vec3, Quat, Vec3) {
    let mean = frame.position + frame.rotation * offset;
    let q = quat_from_matrix(&frame.rotation) * rotation;
    let q = Quat::new_normalize(q.into_inner());
    (mean, q, scale * frame.scale)
}

pub fn place_gaussians(set: &StructuredGaussianSet, frames: &[Option<TangentFrame>]) -> Result<Placement> {
    if frames.len() != set.len() {
        return Err(Error::dim(format!(
            "{} frames for {} Gaussians",
            frames.len(),
            set.len()
        )));
    }
    let placed: Vec<Option<WorldGaussian>> = set
        .gaussians
        .par_iter()
        .zip(frames.par_iter())
        .map(|(g, f)| {
            let f = f.as_ref()?;
            let (mean, rotation, scale) = place_one(f, &g.offset, &g.rotation, &g.scale);
            Some(WorldGaussian {
                mean,
                rotation,
                scale,
                alpha: g.alpha,
                rgb: g.rgb,
            })
        })
        .collect();
    let dropped = placed.iter().filter(|g| g.is_none()).count();
    Ok(Placement {
        gaussians: placed.into_iter().flatten().collect(),
        dropped,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::{axis_angle, Mat3};
    use std::f64::consts::FRAC_PI_2;

    fn frame(rotation: Mat3, scale: f64) -> TangentFrame {
        TangentFrame {
            position: Vec3::new(1.0, 2.0, 3.0),
            rotation,
            scale,
        }
    }

    #[test]
    fn identity_frame_passes_offsets_through() {
        let f = TangentFrame {
            position: Vec3::zeros(),
            rotation: Mat3::identity(),
            scale: 1.0,
        };
        let r = axis_angle(Vec3::x(), 0.3);
        let (m, q, s) = place_one(&f, &Vec3::new(0.1, 0.0, 0.0), &r, &Vec3::new(0.01, 0.02, 0.03));
        assert_eq!(m, Vec3::new(0.1, 0.0, 0.0));
        assert!(q.angle_to(&r) < 1e-12);
        assert_eq!(s, Vec3::new(0.01, 0.02, 0.03));
    }

    #[test]
    fn quarter_turn_about_z() {
        let rot = axis_angle(Vec3::z(), FRAC_PI_2).to_rotation_matrix().into_inner();
        let f = frame(rot, 2.0);
        let (m, _, s) = place_one(&f, &Vec3::new(0.1, 0.0, 0.0), &Quat::identity(), &Vec3::repeat(0.01));
        assert!((m - Vec3::new(1.0, 2.1, 3.0)).norm() < 1e-12);
        assert_eq!(s, Vec3::repeat(0.02));
    }
}

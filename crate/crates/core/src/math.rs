//! Small linear-algebra vocabulary shared by every stage.

use nalgebra::{Matrix3, Quaternion, Rotation3, UnitQuaternion, Vector2, Vector3};

use crate::error::{Error, Result};

pub type Vec2 = Vector2<f64>;
pub type Vec3 = Vector3<f64>;
pub type Mat3 = Matrix3<f64>;
pub type Quat = UnitQuaternion<f64>;

/// Quaternions with a norm below this are rejected instead of renormalized.
pub const DEGENERATE_QUAT_NORM: f64 = 1e-8;

/// A rigid motion `p -> rotation * p + translation`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Rigid {
    pub rotation: Mat3,
    pub translation: Vec3,
}

impl Default for Rigid {
    fn default() -> Self {
        Self::IDENTITY
    }
}

impl Rigid {
    pub const IDENTITY: Rigid = Rigid {
        rotation: Matrix3::new(1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0),
        translation: Vector3::new(0.0, 0.0, 0.0),
    };

    pub fn new(rotation: Mat3, translation: Vec3) -> Self {
        Self {
            rotation,
            translation,
        }
    }

    pub fn from_quat(q: &Quat, translation: Vec3) -> Self {
        Self::new(*q.to_rotation_matrix().matrix(), translation)
    }

    pub fn translation(t: Vec3) -> Self {
        Self::new(Mat3::identity(), t)
    }

    #[inline]
    pub fn apply(&self, p: &Vec3) -> Vec3 {
        self.rotation * p + self.translation
    }

    #[inline]
    pub fn apply_vector(&self, v: &Vec3) -> Vec3 {
        self.rotation * v
    }

    /// `self ∘ other`: apply `other` first.
    pub fn compose(&self, other: &Rigid) -> Rigid {
        Rigid::new(
            self.rotation * other.rotation,
            self.rotation * other.translation + self.translation,
        )
    }

    pub fn inverse(&self) -> Rigid {
        let rt = self.rotation.transpose();
        Rigid::new(rt, -(rt * self.translation))
    }

    /// Max deviation of `RᵀR` from identity and of `det R` from one.
    pub fn orthonormality_error(&self) -> f64 {
        orthonormality_error(&self.rotation)
    }
}

pub fn orthonormality_error(r: &Mat3) -> f64 {
    let gram = r.transpose() * r - Mat3::identity();
    let g = gram.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    g.max((r.determinant() - 1.0).abs())
}

/// Builds a unit quaternion from `(w, x, y, z)`, renormalizing small drift and
/// rejecting near-zero input.
pub fn quat_from_wxyz(wxyz: [f64; 4]) -> Result<Quat> {
    let q = Quaternion::new(wxyz[0], wxyz[1], wxyz[2], wxyz[3]);
    let n = q.norm();
    if !n.is_finite() || n < DEGENERATE_QUAT_NORM {
        return Err(Error::Numeric(format!(
            "degenerate quaternion {wxyz:?} (norm {n:e})"
        )));
    }
    Ok(UnitQuaternion::new_unchecked(q / n))
}

/// Like [`quat_from_wxyz`] but maps a zero quaternion to identity.
pub fn quat_or_identity(wxyz: [f64; 4]) -> Quat {
    quat_from_wxyz(wxyz).unwrap_or_else(|_| Quat::identity())
}

pub fn quat_to_wxyz(q: &Quat) -> [f64; 4] {
    [q.w, q.i, q.j, q.k]
}

pub fn quat_from_matrix(r: &Mat3) -> Quat {
    UnitQuaternion::from_rotation_matrix(&Rotation3::from_matrix_unchecked(*r))
}

/// Rotation by `angle` radians about a unit axis.
pub fn axis_angle(axis: Vec3, angle: f64) -> Quat {
    UnitQuaternion::from_axis_angle(&nalgebra::Unit::new_normalize(axis), angle)
}

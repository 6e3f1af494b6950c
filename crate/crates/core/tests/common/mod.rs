#![allow(dead_code)]

use gauss_avatar::body::{BodyParts, SkinnedBody};
use gauss_avatar::math::{Quat, Vec2, Vec3};
use nalgebra::{Matrix4, Quaternion};
use rand::Rng;

pub fn unit_quat(rng: &mut impl Rng) -> Quat {
    loop {
        let q = Quaternion::new(
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
            rng.gen_range(-1.0..1.0),
        );
        if q.norm() > 0.1 {
            return Quat::from_quaternion(q);
        }
    }
}

pub fn vec3(rng: &mut impl Rng, r: f64) -> Vec3 {
    Vec3::new(rng.gen_range(-r..r), rng.gen_range(-r..r), rng.gen_range(-r..r))
}

/// Homogeneous matrix of `p -> R p + t`.
pub fn hom(r: &Quat, t: &Vec3) -> Matrix4<f64> {
    let mut m = Matrix4::identity();
    m.fixed_view_mut::<3, 3>(0, 0).copy_from(&r.to_rotation_matrix().into_inner());
    m.fixed_view_mut::<3, 1>(0, 3).copy_from(t);
    m
}

pub fn hom_translation(t: &Vec3) -> Matrix4<f64> {
    hom(&Quat::identity(), t)
}

pub fn apply(m: &Matrix4<f64>, p: &Vec3) -> Vec3 {
    let h = m * p.push(1.0);
    Vec3::new(h.x, h.y, h.z)
}

/// A random skeleton (every parent precedes its child) skinning a random
/// triangle soup with up to four influences per vertex.
pub fn random_body(rng: &mut impl Rng, joints: usize, verts: usize, faces: usize) -> SkinnedBody {
    let rest_vertices: Vec<Vec3> = (0..verts).map(|_| vec3(rng, 1.0)).collect();
    let faces: Vec<[usize; 3]> = (0..faces)
        .map(|_| {
            let a = rng.gen_range(0..verts);
            let mut b = rng.gen_range(0..verts);
            while b == a {
                b = rng.gen_range(0..verts);
            }
            let mut c = rng.gen_range(0..verts);
            while c == a || c == b {
                c = rng.gen_range(0..verts);
            }
            [a, b, c]
        })
        .collect();
    let uv_corners = faces
        .iter()
        .map(|_| {
            [
                Vec2::new(rng.gen(), rng.gen()),
                Vec2::new(rng.gen(), rng.gen()),
                Vec2::new(rng.gen(), rng.gen()),
            ]
        })
        .collect();
    let skin_weights = (0..verts)
        .map(|_| {
            let k = rng.gen_range(1..=4.min(joints));
            (0..k).map(|_| (rng.gen_range(0..joints), rng.gen_range(0.1..1.0))).collect()
        })
        .collect();
    SkinnedBody::new(BodyParts {
        rest_vertices,
        part_labels: vec![0; faces.len()],
        faces,
        uv_corners,
        joint_names: (0..joints).map(|j| format!("j{j}")).collect(),
        joint_parents: (0..joints)
            .map(|j| if j == 0 { None } else { Some(rng.gen_range(0..j)) })
            .collect(),
        joint_rest_positions: (0..joints).map(|_| vec3(rng, 1.0)).collect(),
        skin_weights,
        num_segments: None,
    })
    .unwrap()
}

//! The skinned parametric body: loading, canonicalization, forward kinematics
//! and linear blend skinning.
//!
//! A [`SkinnedBody`] is immutable once built. Posing produces a [`PosedMesh`]
//! that borrows topology (faces, UV corners, part labels) from its body.

mod obj;
mod pose;

use std::io::{BufRead, Read};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{Mat3, Rigid, Vec2, Vec3};

pub use obj::{read_obj, write_obj, ObjMesh};
pub use pose::{read_pose, read_pose_sequence, PoseParams, PoseRecord};

/// Allowed deviation of a weight row sum from one.
pub const WEIGHT_SUM_TOL: f64 = 1e-6;

/// One `(joint, weight)` influence.
pub type Influence = (usize, f64);

#[derive(Debug, Clone)]
pub struct SkinnedBody {
    rest_vertices: Vec<Vec3>,
    faces: Vec<[usize; 3]>,
    uv_corners: Vec<[Vec2; 3]>,
    joint_names: Vec<String>,
    joint_parents: Vec<Option<usize>>,
    joint_rest_positions: Vec<Vec3>,
    skin_weights: Vec<Vec<Influence>>,
    part_labels: Vec<u32>,
    num_segments: usize,
    /// Joints ordered so every parent precedes its children.
    joint_order: Vec<usize>,
}

/// Everything needed to build a body, before validation.
#[derive(Debug, Clone, Default)]
pub struct BodyParts {
    pub rest_vertices: Vec<Vec3>,
    pub faces: Vec<[usize; 3]>,
    pub uv_corners: Vec<[Vec2; 3]>,
    pub joint_names: Vec<String>,
    pub joint_parents: Vec<Option<usize>>,
    pub joint_rest_positions: Vec<Vec3>,
    pub skin_weights: Vec<Vec<Influence>>,
    pub part_labels: Vec<u32>,
    /// Segment count; `None` uses `max(label) + 1`.
    pub num_segments: Option<usize>,
}

impl SkinnedBody {
    /// Validates the parts and renormalizes every weight row to sum to one.
    pub fn new(parts: BodyParts) -> Result<Self> {
        let BodyParts {
            rest_vertices,
            faces,
            uv_corners,
            joint_names,
            joint_parents,
            joint_rest_positions,
            mut skin_weights,
            part_labels,
            num_segments,
        } = parts;

        let nv = rest_vertices.len();
        let nj = joint_parents.len();
        if nv == 0 || faces.is_empty() {
            return Err(Error::invalid("body mesh is empty"));
        }
        if rest_vertices.iter().any(|v| !v.iter().all(|c| c.is_finite())) {
            return Err(Error::invalid("non-finite rest vertex"));
        }
        if let Some(f) = faces.iter().find(|f| f.iter().any(|&i| i >= nv)) {
            return Err(Error::invalid(format!(
                "face {f:?} references a vertex beyond {nv}"
            )));
        }
        if uv_corners.len() != faces.len() {
            return Err(Error::dim(format!(
                "{} uv triples for {} faces",
                uv_corners.len(),
                faces.len()
            )));
        }
        let uv_ok = |c: f64| (0.0..=1.0).contains(&c);
        if uv_corners
            .iter()
            .flatten()
            .any(|uv| !uv_ok(uv.x) || !uv_ok(uv.y))
        {
            return Err(Error::invalid("uv coordinate outside [0,1]²"));
        }
        if nj == 0 {
            return Err(Error::invalid("skeleton has no joints"));
        }
        if joint_rest_positions.len() != nj {
            return Err(Error::dim(format!(
                "{} rest positions for {nj} joints",
                joint_rest_positions.len()
            )));
        }
        let joint_names = if joint_names.is_empty() {
            (0..nj).map(|j| format!("joint_{j}")).collect()
        } else if joint_names.len() == nj {
            joint_names
        } else {
            return Err(Error::dim(format!(
                "{} joint names for {nj} joints",
                joint_names.len()
            )));
        };
        let joint_order = topological_order(&joint_parents)?;

        if skin_weights.len() != nv {
            return Err(Error::dim(format!(
                "skin has {} weight rows, mesh has {nv} vertices",
                skin_weights.len()
            )));
        }
        for (vi, row) in skin_weights.iter_mut().enumerate() {
            let mut sum = 0.0;
            for &(j, w) in row.iter() {
                if j >= nj {
                    return Err(Error::invalid(format!(
                        "vertex {vi} references joint {j} beyond {nj}"
                    )));
                }
                if !(w >= 0.0) || !w.is_finite() {
                    return Err(Error::invalid(format!(
                        "vertex {vi} has invalid weight {w}"
                    )));
                }
                sum += w;
            }
            if sum <= 0.0 {
                return Err(Error::invalid(format!("vertex {vi} weights sum to zero")));
            }
            row.retain(|&(_, w)| w > 0.0);
            if sum != 1.0 {
                for (_, w) in row.iter_mut() {
                    *w /= sum;
                }
            }
        }

        if part_labels.len() != faces.len() {
            return Err(Error::dim(format!(
                "{} part labels for {} faces",
                part_labels.len(),
                faces.len()
            )));
        }
        let max_label = part_labels.iter().copied().max().unwrap_or(0) as usize;
        let num_segments = num_segments.unwrap_or(max_label + 1);
        if max_label >= num_segments {
            return Err(Error::invalid(format!(
                "part label {max_label} outside [0, {num_segments})"
            )));
        }

        Ok(Self {
            rest_vertices,
            faces,
            uv_corners,
            joint_names,
            joint_parents,
            joint_rest_positions,
            skin_weights,
            part_labels,
            num_segments,
            joint_order,
        })
    }

    /// Returns a copy translated so the root joint sits at the origin.
    pub fn centered_on_root(mut self) -> Self {
        let offset = self.joint_rest_positions[self.root()];
        for v in &mut self.rest_vertices {
            *v -= offset;
        }
        for j in &mut self.joint_rest_positions {
            *j -= offset;
        }
        self
    }

    pub fn num_vertices(&self) -> usize {
        self.rest_vertices.len()
    }

    pub fn num_faces(&self) -> usize {
        self.faces.len()
    }

    pub fn num_joints(&self) -> usize {
        self.joint_parents.len()
    }

    pub fn num_segments(&self) -> usize {
        self.num_segments
    }

    pub fn root(&self) -> usize {
        self.joint_order[0]
    }

    pub fn rest_vertices(&self) -> &[Vec3] {
        &self.rest_vertices
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.faces
    }

    pub fn uv_corners(&self) -> &[[Vec2; 3]] {
        &self.uv_corners
    }

    pub fn joint_names(&self) -> &[String] {
        &self.joint_names
    }

    pub fn joint_parents(&self) -> &[Option<usize>] {
        &self.joint_parents
    }

    pub fn joint_rest_positions(&self) -> &[Vec3] {
        &self.joint_rest_positions
    }

    pub fn skin_weights(&self) -> &[Vec<Influence>] {
        &self.skin_weights
    }

    pub fn part_labels(&self) -> &[u32] {
        &self.part_labels
    }

    /// Parent-before-child joint ordering.
    pub fn joint_order(&self) -> &[usize] {
        &self.joint_order
    }

    /// Largest `|Σw − 1|` over all vertices.
    pub fn max_weight_sum_error(&self) -> f64 {
        self.skin_weights
            .iter()
            .map(|row| (row.iter().map(|&(_, w)| w).sum::<f64>() - 1.0).abs())
            .fold(0.0, f64::max)
    }

    /// The mesh in its rest configuration.
    pub fn rest_mesh(&self) -> PosedMesh<'_> {
        PosedMesh::new(self, self.rest_vertices.clone())
    }

    pub fn face_rest_area(&self, face: usize) -> f64 {
        let [a, b, c] = self.faces[face];
        let v = &self.rest_vertices;
        0.5 * (v[b] - v[a]).cross(&(v[c] - v[a])).norm()
    }
}

fn topological_order(parents: &[Option<usize>]) -> Result<Vec<usize>> {
    let n = parents.len();
    let mut children = vec![Vec::new(); n];
    let mut roots = Vec::new();
    for (j, p) in parents.iter().enumerate() {
        match *p {
            None => roots.push(j),
            Some(p) if p >= n => {
                return Err(Error::invalid(format!(
                    "joint {j} has out-of-range parent {p}"
                )))
            }
            Some(p) if p == j => return Err(Error::invalid(format!("joint {j} is its own parent"))),
            Some(p) => children[p].push(j),
        }
    }
    if roots.len() != 1 {
        return Err(Error::invalid(format!(
            "skeleton must have exactly one root, found {}",
            roots.len()
        )));
    }
    let mut order = Vec::with_capacity(n);
    let mut stack = vec![roots[0]];
    while let Some(j) = stack.pop() {
        order.push(j);
        stack.extend(children[j].iter().rev());
    }
    if order.len() != n {
        return Err(Error::invalid("joint hierarchy contains a cycle"));
    }
    Ok(order)
}

#[derive(Debug, Deserialize, Serialize)]
pub struct SkinJoint {
    #[serde(default)]
    pub name: String,
    pub parent: Option<usize>,
    pub rest_position: [f64; 3],
}

/// On-disk skin description: joints, sparse weights, face labels.
#[derive(Debug, Deserialize, Serialize)]
pub struct SkinFile {
    pub joints: Vec<SkinJoint>,
    /// Per vertex, a list of `[joint, weight]` pairs.
    pub weights: Vec<Vec<(usize, f64)>>,
    pub labels: Vec<u32>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub num_segments: Option<usize>,
}

impl SkinFile {
    pub fn from_body(body: &SkinnedBody) -> Self {
        Self {
            joints: (0..body.num_joints())
                .map(|j| SkinJoint {
                    name: body.joint_names[j].clone(),
                    parent: body.joint_parents[j],
                    rest_position: body.joint_rest_positions[j].into(),
                })
                .collect(),
            weights: body.skin_weights.clone(),
            labels: body.part_labels.clone(),
            num_segments: Some(body.num_segments),
        }
    }
}

/// Reads an OBJ mesh and a JSON skin file, validates them, renormalizes the
/// weights and moves the root joint to the origin.
pub fn load_body<M: BufRead, S: Read>(mesh_source: M, skin_source: S) -> Result<SkinnedBody> {
    let mesh = read_obj(mesh_source)?;
    let skin: SkinFile = serde_json::from_reader(skin_source)?;
    let parts = BodyParts {
        rest_vertices: mesh.positions,
        faces: mesh.faces,
        uv_corners: mesh.uv_corners,
        joint_names: skin.joints.iter().map(|j| j.name.clone()).collect(),
        joint_parents: skin.joints.iter().map(|j| j.parent).collect(),
        joint_rest_positions: skin
            .joints
            .iter()
            .map(|j| Vec3::from(j.rest_position))
            .collect(),
        skin_weights: skin.weights,
        part_labels: skin.labels,
        num_segments: skin.num_segments,
    };
    Ok(SkinnedBody::new(parts)?.centered_on_root())
}

/// Writes the body as an OBJ + skin JSON pair readable by [`load_body`].
pub fn save_body<M: std::io::Write, S: std::io::Write>(
    body: &SkinnedBody,
    mesh_sink: M,
    skin_sink: S,
) -> Result<()> {
    write_obj(mesh_sink, &body.rest_vertices, &body.faces, &body.uv_corners)?;
    serde_json::to_writer_pretty(skin_sink, &SkinFile::from_body(body))?;
    Ok(())
}

/// Per-joint rest-to-posed rigid transforms.
#[derive(Debug, Clone, PartialEq)]
pub struct JointTransforms {
    pub transforms: Vec<Rigid>,
}

impl JointTransforms {
    pub fn identity(n: usize) -> Self {
        Self {
            transforms: vec![Rigid::IDENTITY; n],
        }
    }

    /// Posed world position of every joint.
    pub fn joint_positions(&self, body: &SkinnedBody) -> Vec<Vec3> {
        self.transforms
            .iter()
            .zip(&body.joint_rest_positions)
            .map(|(t, p)| t.apply(p))
            .collect()
    }

    /// `g ∘ T_j` for every joint.
    pub fn premultiplied(&self, g: &Rigid) -> Self {
        Self {
            transforms: self.transforms.iter().map(|t| g.compose(t)).collect(),
        }
    }
}

/// Joint world frames are chained parent-to-child with each local rotation
/// about the joint's rest position; skinning transforms are
/// `world(j) ∘ rest_world(j)⁻¹`. The root translation is applied in posed
/// space.
pub fn forward_kinematics(body: &SkinnedBody, pose: &PoseParams) -> Result<JointTransforms> {
    let nj = body.num_joints();
    if pose.joint_rotations.len() != nj {
        return Err(Error::dim(format!(
            "pose has {} rotations, skeleton has {nj} joints",
            pose.joint_rotations.len()
        )));
    }
    let rest = &body.joint_rest_positions;
    let mut world = vec![Rigid::IDENTITY; nj];
    for &j in &body.joint_order {
        let q = &pose.joint_rotations[j];
        world[j] = match body.joint_parents[j] {
            None => Rigid::from_quat(q, rest[j] + pose.root_translation),
            Some(p) => world[p].compose(&Rigid::from_quat(q, rest[j] - rest[p])),
        };
    }
    let transforms = world
        .iter()
        .zip(rest)
        .map(|(w, r)| w.compose(&Rigid::translation(-r)))
        .collect();
    Ok(JointTransforms { transforms })
}

/// A posed vertex set sharing topology with its body.
#[derive(Debug, Clone)]
pub struct PosedMesh<'b> {
    pub body: &'b SkinnedBody,
    pub vertices: Vec<Vec3>,
    pub vertex_normals: Vec<Vec3>,
}

impl<'b> PosedMesh<'b> {
    /// Wraps posed vertices and computes area-weighted vertex normals.
    pub fn new(body: &'b SkinnedBody, vertices: Vec<Vec3>) -> Self {
        let vertex_normals = vertex_normals(&vertices, &body.faces);
        Self {
            body,
            vertices,
            vertex_normals,
        }
    }

    pub fn faces(&self) -> &[[usize; 3]] {
        &self.body.faces
    }

    pub fn triangle(&self, face: usize) -> [Vec3; 3] {
        let [a, b, c] = self.body.faces[face];
        [self.vertices[a], self.vertices[b], self.vertices[c]]
    }

    /// Point on `face` at barycentric coordinates `bary`.
    pub fn surface_point(&self, face: usize, bary: &[f64; 3]) -> Vec3 {
        let [a, b, c] = self.triangle(face);
        a * bary[0] + b * bary[1] + c * bary[2]
    }

    pub fn uv_point(&self, face: usize, bary: &[f64; 3]) -> Vec2 {
        let [a, b, c] = self.body.uv_corners[face];
        a * bary[0] + b * bary[1] + c * bary[2]
    }
}

/// Unit vertex normals from area-weighted face normals. Vertices with no
/// non-degenerate incident face get `+z`.
pub fn vertex_normals(vertices: &[Vec3], faces: &[[usize; 3]]) -> Vec<Vec3> {
    let mut acc = vec![Vec3::zeros(); vertices.len()];
    for &[a, b, c] in faces {
        // |e1 × e2| = 2·area, so the sum is area weighted.
        let n = (vertices[b] - vertices[a]).cross(&(vertices[c] - vertices[a]));
        acc[a] += n;
        acc[b] += n;
        acc[c] += n;
    }
    acc.into_iter()
        .map(|n| {
            let len = n.norm();
            if len > 1e-300 && len.is_finite() {
                n / len
            } else {
                Vec3::z()
            }
        })
        .collect()
}

/// Linear blend skinning: `v' = Σ_j w_j · T_j(v)`.
///
/// Evaluated as `v + Σ_j w_j ((R_j − I) v + t_j)`, which equals the blend sum
/// for rows summing to one and leaves `v` bitwise unchanged under identity
/// transforms.
pub fn lbs_deform<'b>(body: &'b SkinnedBody, transforms: &JointTransforms) -> PosedMesh<'b> {
    assert_eq!(
        transforms.transforms.len(),
        body.num_joints(),
        "joint transform count must match the skeleton"
    );
    let deltas: Vec<(Mat3, Vec3)> = transforms
        .transforms
        .iter()
        .map(|t| (t.rotation - Mat3::identity(), t.translation))
        .collect();
    let vertices = body
        .rest_vertices
        .par_iter()
        .zip(body.skin_weights.par_iter())
        .map(|(v, row)| {
            let mut d = Vec3::zeros();
            for &(j, w) in row {
                let (dr, t) = &deltas[j];
                d += (dr * v + t) * w;
            }
            v + d
        })
        .collect();
    PosedMesh::new(body, vertices)
}

/// Convenience: forward kinematics followed by skinning.
pub fn pose_body<'b>(body: &'b SkinnedBody, pose: &PoseParams) -> Result<PosedMesh<'b>> {
    let transforms = forward_kinematics(body, pose)?;
    Ok(lbs_deform(body, &transforms))
}

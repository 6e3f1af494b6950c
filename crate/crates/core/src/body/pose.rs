use std::io::Read;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::math::{quat_from_wxyz, quat_to_wxyz, Quat, Vec3};

/// Per-joint local rotations plus a posed-space root translation.
#[derive(Debug, Clone, PartialEq)]
pub struct PoseParams {
    pub joint_rotations: Vec<Quat>,
    pub root_translation: Vec3,
}

/// JSON form: rotations as `[w, x, y, z]`.
#[derive(Debug, Clone, Deserialize, Serialize)]
pub struct PoseRecord {
    pub rotations: Vec<[f64; 4]>,
    #[serde(default)]
    pub translation: [f64; 3],
}

impl PoseParams {
    pub fn identity(num_joints: usize) -> Self {
        Self {
            joint_rotations: vec![Quat::identity(); num_joints],
            root_translation: Vec3::zeros(),
        }
    }

    pub fn from_record(rec: &PoseRecord) -> Result<Self> {
        let joint_rotations = rec
            .rotations
            .iter()
            .map(|&q| quat_from_wxyz(q))
            .collect::<Result<Vec<_>>>()?;
        let t = Vec3::from(rec.translation);
        if !t.iter().all(|c| c.is_finite()) {
            return Err(Error::Numeric("non-finite root translation".into()));
        }
        Ok(Self {
            joint_rotations,
            root_translation: t,
        })
    }

    pub fn to_record(&self) -> PoseRecord {
        PoseRecord {
            rotations: self.joint_rotations.iter().map(quat_to_wxyz).collect(),
            translation: self.root_translation.into(),
        }
    }
}

pub fn read_pose<R: Read>(r: R) -> Result<PoseParams> {
    let rec: PoseRecord = serde_json::from_reader(r)?;
    PoseParams::from_record(&rec)
}

/// Reads a JSON array of pose records.
pub fn read_pose_sequence<R: Read>(r: R) -> Result<Vec<PoseParams>> {
    let recs: Vec<PoseRecord> = serde_json::from_reader(r)?;
    recs.iter().map(PoseParams::from_record).collect()
}

//! Gaussian containers and the structured-representation algebra.

mod fps;
mod param_map;
mod sampling;

use std::io::{Read, Write};

use crate::error::{Error, Result};
use crate::math::{quat_from_wxyz, Quat, Vec3};
use crate::records::{read_records, write_records};

pub use fps::farthest_point_sample;
pub use param_map::{
    compose_param_maps, compose_texel, edit_param_map, normalize_texel, EditMode,
    GaussianParamMap, ParamLayout, DEFAULT_MAP_SIZE, MIN_SCALE, PARAM_CHANNELS,
};
pub use sampling::{
    bilinear_taps, plan_anchors, sample_structured, AnchorPlan, StructuredGaussian,
    StructuredGaussianSet, Tap, DEFAULT_N_SURFACE, DEFAULT_N_UV, SURFACE_RNG,
};

/// Default opacity threshold for pose-space filtering.
pub const DEFAULT_TAU: f64 = 0.05;
/// Default compact feature size.
pub const DEFAULT_COMPACT_POINTS: usize = 2048;

/// One reconstructed Gaussian in the input body pose.
#[derive(Debug, Clone, PartialEq)]
pub struct PoseGaussian {
    pub position: Vec3,
    pub rotation: Quat,
    pub scale: Vec3,
    pub alpha: f64,
    pub rgb: Vec3,
    pub source_view: u32,
    pub pixel: [u32; 2],
}

impl PoseGaussian {
    /// `[alpha, r, g, b, x, y, z, qw, qx, qy, qz, sx, sy, sz]`, the same
    /// ordering as the parameter-map channels.
    pub fn raw_params(&self) -> [f64; PARAM_CHANNELS] {
        let q = self.rotation.quaternion();
        [
            self.alpha,
            self.rgb.x,
            self.rgb.y,
            self.rgb.z,
            self.position.x,
            self.position.y,
            self.position.z,
            q.w,
            q.i,
            q.j,
            q.k,
            self.scale.x,
            self.scale.y,
            self.scale.z,
        ]
    }

    fn check(&self, i: usize) -> Result<()> {
        let unit = |v: f64| (0.0..=1.0).contains(&v);
        if !self.position.iter().all(|c| c.is_finite()) {
            return Err(Error::invalid(format!("gaussian {i}: non-finite position")));
        }
        if !self.scale.iter().all(|&s| s > 0.0 && s.is_finite()) {
            return Err(Error::invalid(format!("gaussian {i}: non-positive scale")));
        }
        if !unit(self.alpha) || !self.rgb.iter().all(|&c| unit(c)) {
            return Err(Error::invalid(format!("gaussian {i}: alpha/rgb outside [0,1]")));
        }
        Ok(())
    }
}

/// Unstructured pixel-aligned Gaussians with optional per-Gaussian feature rows.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct PoseSpaceGaussianSet {
    gaussians: Vec<PoseGaussian>,
    feature_width: usize,
    features: Vec<f64>,
}

impl PoseSpaceGaussianSet {
    pub fn new(gaussians: Vec<PoseGaussian>, feature_width: usize, features: Vec<f64>) -> Result<Self> {
        if features.len() != gaussians.len() * feature_width {
            return Err(Error::dim(format!(
                "{} feature values for {} gaussians of width {feature_width}",
                features.len(),
                gaussians.len()
            )));
        }
        for (i, g) in gaussians.iter().enumerate() {
            g.check(i)?;
        }
        Ok(Self {
            gaussians,
            feature_width,
            features,
        })
    }

    pub fn len(&self) -> usize {
        self.gaussians.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gaussians.is_empty()
    }

    pub fn gaussians(&self) -> &[PoseGaussian] {
        &self.gaussians
    }

    pub fn feature_width(&self) -> usize {
        self.feature_width
    }

    pub fn feature_row(&self, i: usize) -> &[f64] {
        &self.features[i * self.feature_width..(i + 1) * self.feature_width]
    }

    pub fn positions(&self) -> Vec<Vec3> {
        self.gaussians.iter().map(|g| g.position).collect()
    }

    fn select(&self, keep: &[usize]) -> Self {
        let fw = self.feature_width;
        let mut features = Vec::with_capacity(keep.len() * fw);
        for &i in keep {
            features.extend_from_slice(self.feature_row(i));
        }
        Self {
            gaussians: keep.iter().map(|&i| self.gaussians[i].clone()).collect(),
            feature_width: fw,
            features,
        }
    }

    const BASE_WIDTH: usize = PARAM_CHANNELS + 3;

    /// Record stream: 14 raw parameters, source view, pixel x, pixel y, then
    /// the feature row.
    pub fn write_to<W: Write>(&self, w: W) -> Result<()> {
        let width = Self::BASE_WIDTH + self.feature_width;
        let mut data = Vec::with_capacity(self.len() * width);
        for (i, g) in self.gaussians.iter().enumerate() {
            data.extend_from_slice(&g.raw_params());
            data.extend([g.source_view as f64, g.pixel[0] as f64, g.pixel[1] as f64]);
            data.extend_from_slice(self.feature_row(i));
        }
        let mut header = serde_json::Map::new();
        header.insert("kind".into(), "pose_space_gaussians".into());
        header.insert("feature_width".into(), self.feature_width.into());
        header.insert(
            "fields".into(),
            "alpha,r,g,b,x,y,z,qw,qx,qy,qz,sx,sy,sz,view,px,py,features...".into(),
        );
        write_records(w, header, width, &data)
    }

    pub fn read_from<R: Read>(r: R) -> Result<Self> {
        let s = read_records(r)?;
        if s.header_str("kind") != Some("pose_space_gaussians") {
            return Err(Error::parse("record stream is not a pose-space gaussian set"));
        }
        let fw = s
            .header_usize("feature_width")
            .ok_or_else(|| Error::parse("missing feature_width"))?;
        if s.width != Self::BASE_WIDTH + fw {
            return Err(Error::parse("record width disagrees with feature_width"));
        }
        let mut gaussians = Vec::with_capacity(s.count);
        let mut features = Vec::with_capacity(s.count * fw);
        for i in 0..s.count {
            let r = s.record(i);
            gaussians.push(PoseGaussian {
                alpha: r[0],
                rgb: Vec3::new(r[1], r[2], r[3]),
                position: Vec3::new(r[4], r[5], r[6]),
                rotation: quat_from_wxyz([r[7], r[8], r[9], r[10]])?,
                scale: Vec3::new(r[11], r[12], r[13]),
                source_view: r[14] as u32,
                pixel: [r[15] as u32, r[16] as u32],
            });
            features.extend_from_slice(&r[Self::BASE_WIDTH..]);
        }
        Self::new(gaussians, fw, features)
    }
}

/// Keeps the Gaussians with `alpha ≥ tau`, preserving order.
pub fn filter_opacity(set: &PoseSpaceGaussianSet, tau: f64) -> PoseSpaceGaussianSet {
    let keep: Vec<usize> = set
        .gaussians
        .iter()
        .enumerate()
        .filter(|(_, g)| g.alpha >= tau)
        .map(|(i, _)| i)
        .collect();
    set.select(&keep)
}

/// `rows × cols` matrix of per-Gaussian context vectors.
#[derive(Debug, Clone, PartialEq)]
pub struct CompactFeature {
    pub rows: usize,
    pub cols: usize,
    pub data: Vec<f64>,
    /// Index of each row's Gaussian in the filtered set.
    pub source: Vec<usize>,
}

impl CompactFeature {
    pub fn row(&self, i: usize) -> &[f64] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn from_rows(rows: usize, cols: usize, data: Vec<f64>) -> Result<Self> {
        if data.len() != rows * cols {
            return Err(Error::dim(format!("{} values for {rows}x{cols}", data.len())));
        }
        Ok(Self {
            rows,
            cols,
            data,
            source: (0..rows).collect(),
        })
    }

    /// The same rows in a different order.
    pub fn permuted(&self, perm: &[usize]) -> Self {
        let mut data = Vec::with_capacity(self.data.len());
        for &i in perm {
            data.extend_from_slice(self.row(i));
        }
        Self {
            rows: self.rows,
            cols: self.cols,
            data,
            source: perm.iter().map(|&i| self.source[i]).collect(),
        }
    }
}

/// Opacity filter, then farthest-point sampling of `k` positions; each row is
/// the 14 raw parameters followed by the feature row.
pub fn build_compact_feature(
    set: &PoseSpaceGaussianSet,
    tau: f64,
    k: usize,
) -> Result<CompactFeature> {
    let filtered = filter_opacity(set, tau);
    if filtered.len() < k {
        return Err(Error::invalid(format!(
            "only {} gaussians survive filtering, {k} requested",
            filtered.len()
        )));
    }
    let picked = farthest_point_sample(&filtered.positions(), k)?;
    let cols = PARAM_CHANNELS + filtered.feature_width;
    let mut data = Vec::with_capacity(k * cols);
    for &i in &picked {
        data.extend_from_slice(&filtered.gaussians[i].raw_params());
        data.extend_from_slice(filtered.feature_row(i));
    }
    Ok(CompactFeature {
        rows: k,
        cols,
        data,
        source: picked,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn gaussian(alpha: f64, x: f64) -> PoseGaussian {
        PoseGaussian {
            position: Vec3::new(x, 0.0, 0.0),
            rotation: Quat::identity(),
            scale: Vec3::repeat(0.015625),
            alpha,
            rgb: Vec3::repeat(0.5),
            source_view: 0,
            pixel: [0, 0],
        }
    }

    fn set_with_alphas(alphas: &[f64], fw: usize) -> PoseSpaceGaussianSet {
        let gs: Vec<_> = alphas.iter().enumerate().map(|(i, &a)| gaussian(a, i as f64)).collect();
        let feats = (0..gs.len() * fw).map(|v| v as f64).collect();
        PoseSpaceGaussianSet::new(gs, fw, feats).unwrap()
    }

    #[test]
    fn filter_keeps_at_or_above_tau() {
        let set = set_with_alphas(&[0.9, 0.01, 0.5], 2);
        let f = filter_opacity(&set, 0.05);
        assert_eq!(f.len(), 2);
        assert_eq!(f.gaussians()[0].position.x, 0.0);
        assert_eq!(f.gaussians()[1].position.x, 2.0);
        assert_eq!(f.feature_row(1), &[4.0, 5.0]);
        assert_eq!(filter_opacity(&set, 0.0), set);
        assert_eq!(filter_opacity(&set, 0.5).len(), 2);
    }

    #[test]
    fn filter_survivor_count_in_reported_band() {
        let n = 65_536;
        let above = 29_491; // ⌊0.45·n⌋
        let alphas: Vec<f64> = (0..n).map(|i| if i < above { 0.8 } else { 0.01 }).collect();
        let set = set_with_alphas(&alphas, 0);
        let kept = filter_opacity(&set, DEFAULT_TAU).len();
        assert_eq!(kept, 29_491);
        let frac = kept as f64 / n as f64;
        assert!((0.40..=0.50).contains(&frac));
    }

    #[test]
    fn compact_feature_shape() {
        let alphas = vec![0.9; 40];
        let set = set_with_alphas(&alphas, 64);
        let cf = build_compact_feature(&set, 0.05, 16).unwrap();
        assert_eq!((cf.rows, cf.cols), (16, 78));
        // first row is gaussian 0
        assert_eq!(cf.row(0)[0], 0.9);
        assert_eq!(cf.row(0)[PARAM_CHANNELS], 0.0);
        assert!(build_compact_feature(&set, 0.05, 41).is_err());
        let bare = set_with_alphas(&alphas, 0);
        assert_eq!(build_compact_feature(&bare, 0.05, 4).unwrap().cols, PARAM_CHANNELS);
    }

    #[test]
    fn record_stream_round_trip() {
        let set = set_with_alphas(&[0.25, 0.5, 1.0], 3);
        let mut buf = Vec::new();
        set.write_to(&mut buf).unwrap();
        let back = PoseSpaceGaussianSet::read_from(&buf[..]).unwrap();
        assert_eq!(back, set);
    }

    #[test]
    fn rejects_out_of_range() {
        let mut g = gaussian(1.5, 0.0);
        assert!(PoseSpaceGaussianSet::new(vec![g.clone()], 0, vec![]).is_err());
        g.alpha = 0.5;
        g.scale.x = 0.0;
        assert!(PoseSpaceGaussianSet::new(vec![g], 0, vec![]).is_err());
    }
}

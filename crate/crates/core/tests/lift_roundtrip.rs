use gauss_avatar::body::{pose_body, PoseParams};
use gauss_avatar::gaussians::{sample_structured, PoseGaussian, PoseSpaceGaussianSet};
use gauss_avatar::lift::{unproject_to_uv, CollisionPolicy};
use gauss_avatar::math::{axis_angle, Quat, Vec3};
use gauss_avatar::render::place_gaussians;
use gauss_avatar::synthetic::{canonical_map, tube_body, MapStyle, TubeSpec};
use gauss_avatar::uv::{tangent_frames, SurfacePoint};

// 48×32 texels over 16×16 quads: 3×2 texels per quad keeps every texel
// center off the triangle edges
const W: usize = 48;
const H: usize = 32;

fn spec() -> TubeSpec {
    TubeSpec { around: 16, rings: 16, ..TubeSpec::default() }
}

fn as_pose_set(placed: &[gauss_avatar::render::WorldGaussian]) -> PoseSpaceGaussianSet {
    let gs = placed
        .iter()
        .map(|g| PoseGaussian {
            position: g.mean,
            rotation: g.rotation,
            scale: g.scale,
            alpha: g.alpha,
            rgb: g.rgb,
            source_view: 0,
            pixel: [0, 0],
        })
        .collect();
    PoseSpaceGaussianSet::new(gs, 0, Vec::new()).unwrap()
}

fn round_trip(pose: &PoseParams) {
    let body = tube_body(&spec()).unwrap();
    let map = canonical_map(&body, W, H, &MapStyle::default(), 17);
    let set = sample_structured(&map, &body, W * H, 0, 0).unwrap();
    let posed = pose_body(&body, pose).unwrap();
    let frames = tangent_frames(&posed, &set.anchors()).unwrap();
    let placed = place_gaussians(&set, &frames).unwrap();
    assert_eq!(placed.dropped, 0);

    let report = unproject_to_uv(&as_pose_set(&placed.gaussians), &posed, W, H, CollisionPolicy::MaxAlpha).unwrap();
    assert_eq!((report.written, report.skipped, report.collisions), (W * H, 0, 0));
    let mut worst: f64 = 0.0;
    for g in &set.gaussians {
        let x = (g.uv.x * W as f64) as usize;
        let y = (g.uv.y * H as f64) as usize;
        let t = report.map.texel(y * W + x);
        let p = g.params();
        for k in (0..7).chain(11..14) {
            worst = worst.max((t[k] - p[k]).abs());
        }
        let dot: f64 = (7..11).map(|k| t[k] * p[k]).sum();
        worst = worst.max(1.0 - dot.abs());
    }
    assert!(worst <= 1e-5, "worst deviation {worst:e}");
}

#[test]
fn round_trip_in_rest_pose() {
    round_trip(&PoseParams::identity(spec().joints));
}

#[test]
fn round_trip_under_rigid_motion() {
    let mut pose = PoseParams::identity(spec().joints);
    pose.joint_rotations[0] = axis_angle(Vec3::new(1.0, 2.0, -0.5), 0.7);
    pose.root_translation = Vec3::new(0.3, -0.2, 1.0);
    round_trip(&pose);
}

#[test]
fn zero_offset_stores_inverse_frame_rotation() {
    let body = tube_body(&spec()).unwrap();
    let posed = body.rest_mesh();
    let pt = SurfacePoint { face: 40, bary: [0.2, 0.3, 0.5] };
    let frame = tangent_frames(&posed, &[pt]).unwrap()[0].unwrap();
    for (offset, expect) in [(0.0, Vec3::zeros()), (0.01, Vec3::new(0.0, 0.0, 0.01))] {
        let g = PoseGaussian {
            position: frame.position + frame.rotation.column(2) * offset,
            rotation: Quat::identity(),
            scale: Vec3::repeat(0.01),
            alpha: 0.5,
            rgb: Vec3::repeat(0.5),
            source_view: 0,
            pixel: [0, 0],
        };
        let set = PoseSpaceGaussianSet::new(vec![g], 0, Vec::new()).unwrap();
        let r = unproject_to_uv(&set, &posed, W, H, CollisionPolicy::MaxAlpha).unwrap();
        let uv = posed.uv_point(40, &pt.bary);
        let t = r.map.texel((uv.y * H as f64) as usize * W + (uv.x * W as f64) as usize);
        assert!((Vec3::new(t[4], t[5], t[6]) - expect).norm() < 1e-9);
        let q = Quat::from_quaternion(nalgebra::Quaternion::new(t[7], t[8], t[9], t[10]));
        let inv = frame.rotation.transpose();
        assert!((q.to_rotation_matrix().into_inner() - inv).abs().max() < 1e-9);
        assert!((t[11] - 0.01 / frame.scale).abs() < 1e-12);
    }
}

#[test]
fn collisions_and_accounting() {
    let body = tube_body(&spec()).unwrap();
    let posed = body.rest_mesh();
    let pt = SurfacePoint { face: 10, bary: [0.2, 0.3, 0.5] };
    let p = posed.surface_point(pt.face, &pt.bary);
    let g = |alpha: f64, r: f64| PoseGaussian {
        position: p,
        rotation: Quat::identity(),
        scale: Vec3::repeat(0.01),
        alpha,
        rgb: Vec3::new(r, 0.0, 0.0),
        source_view: 0,
        pixel: [0, 0],
    };
    let set = PoseSpaceGaussianSet::new(vec![g(0.4, 0.1), g(0.9, 0.2), g(0.9, 0.3), g(0.2, 0.4)], 0, Vec::new()).unwrap();
    let r = unproject_to_uv(&set, &posed, W, H, CollisionPolicy::MaxAlpha).unwrap();
    assert_eq!((r.written, r.skipped, r.collisions), (1, 0, 3));
    assert_eq!(r.written + r.skipped + r.collisions, set.len());
    let i = (0..W * H).find(|&i| r.map.is_valid(i)).unwrap();
    // ties keep the earlier Gaussian
    assert_eq!(&r.map.texel(i)[..2], &[0.9, 0.2]);
    assert_eq!(r.map.as_uv_map().num_valid(), 1);

    let avg = unproject_to_uv(&set, &posed, W, H, CollisionPolicy::Average).unwrap();
    assert!((avg.map.texel(i)[0] - 0.6).abs() < 1e-12);
    assert!((avg.map.texel(i)[1] - 0.25).abs() < 1e-12);
}

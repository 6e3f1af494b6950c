use gauss_avatar::math::Vec3;
use gauss_avatar::render::{rasterize, Camera, RenderedImage, WorldGaussian};
use gauss_avatar::synthetic::{random_camera, random_world_gaussians};
use nalgebra::{Matrix2, Matrix2x3, Matrix3, Vector2};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Every Gaussian evaluated at every pixel, no tiles, no early exit.
fn brute_force(gs: &[WorldGaussian], cam: &Camera, bg: Vec3) -> RenderedImage {
    struct P {
        depth: f64,
        index: usize,
        mean: Vector2<f64>,
        inv: Matrix2<f64>,
        alpha: f64,
        rgb: Vec3,
    }
    let mut ps = Vec::new();
    for (index, g) in gs.iter().enumerate() {
        let c = cam.rotation * g.mean + cam.translation;
        if c.z <= 0.01 {
            continue;
        }
        let r = g.rotation.to_rotation_matrix().into_inner();
        let sigma = r * Matrix3::from_diagonal(&g.scale.component_mul(&g.scale)) * r.transpose();
        let j = Matrix2x3::new(cam.fx / c.z, 0.0, -cam.fx * c.x / (c.z * c.z), 0.0, cam.fy / c.z, -cam.fy * c.y / (c.z * c.z));
        let cov = j * cam.rotation * sigma * cam.rotation.transpose() * j.transpose() + Matrix2::identity() * 0.3;
        if cov.determinant() < 1e-12 {
            continue;
        }
        ps.push(P {
            depth: c.z,
            index,
            mean: Vector2::new(cam.fx * c.x / c.z + cam.cx, cam.fy * c.y / c.z + cam.cy),
            inv: cov.try_inverse().unwrap(),
            alpha: g.alpha,
            rgb: g.rgb,
        });
    }
    ps.sort_by(|a, b| a.depth.partial_cmp(&b.depth).unwrap().then(a.index.cmp(&b.index)));
    let mut img = RenderedImage::filled(cam.width, cam.height, bg);
    for y in 0..cam.height {
        for x in 0..cam.width {
            let px = Vector2::new(x as f64 + 0.5, y as f64 + 0.5);
            let mut t = 1.0;
            let mut c = Vec3::zeros();
            for p in &ps {
                let d = px - p.mean;
                let w = (p.alpha * (-0.5 * d.dot(&(p.inv * d))).exp()).min(0.999);
                if w < 1.0 / 255.0 {
                    continue;
                }
                c += p.rgb * (w * t);
                t *= 1.0 - w;
            }
            let i = y * cam.width + x;
            let out = c + bg * t;
            img.rgb[3 * i..3 * i + 3].copy_from_slice(out.as_slice());
            img.alpha[i] = 1.0 - t;
        }
    }
    img
}

#[test]
fn tiles_match_brute_force_on_random_scenes() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    let mut worst: f64 = 0.0;
    for _ in 0..100 {
        let n = rng.gen_range(0..=64);
        let gs = random_world_gaussians(n, &mut rng);
        let cam = random_camera(32, 32, &mut rng);
        let bg = Vec3::new(rng.gen(), rng.gen(), rng.gen());
        let tiled = rasterize(&gs, &cam, bg);
        worst = worst.max(tiled.max_abs_diff(&brute_force(&gs, &cam, bg)));
        assert!(tiled.alpha.iter().all(|a| (0.0..=1.0).contains(a)));
    }
    assert!(worst <= 1e-5, "max abs difference {worst:e}");
}

#[test]
fn dense_opaque_scene_matches_brute_force() {
    // exercises early termination
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let mut gs = random_world_gaussians(64, &mut rng);
    for g in &mut gs {
        g.alpha = 1.0;
        g.scale *= 3.0;
    }
    let cam = random_camera(40, 24, &mut rng);
    let bg = Vec3::new(1.0, 1.0, 1.0);
    let d = rasterize(&gs, &cam, bg).max_abs_diff(&brute_force(&gs, &cam, bg));
    assert!(d <= 1e-5, "{d:e}");
}

#[test]
fn input_order_does_not_matter_with_distinct_depths() {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut gs = random_world_gaussians(60, &mut rng);
    let cam = random_camera(48, 48, &mut rng);
    let a = rasterize(&gs, &cam, Vec3::zeros());
    gs.shuffle(&mut rng);
    assert_eq!(a, rasterize(&gs, &cam, Vec3::zeros()));
}

#[test]
fn thread_count_does_not_change_bits() {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let gs = random_world_gaussians(500, &mut rng);
    let cam = random_camera(96, 80, &mut rng);
    let render = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| rasterize(&gs, &cam, Vec3::new(0.1, 0.2, 0.3)))
    };
    let one = render(1);
    assert_eq!(one, render(3));
    assert_eq!(one, render(8));
}

#[test]
fn alpha_is_monotone_in_gaussian_alpha() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    let mut gs = random_world_gaussians(30, &mut rng);
    let cam = random_camera(32, 32, &mut rng);
    let before = rasterize(&gs, &cam, Vec3::zeros());
    gs[7].alpha = (gs[7].alpha + 0.3).min(1.0);
    let after = rasterize(&gs, &cam, Vec3::zeros());
    for (a, b) in before.alpha.iter().zip(&after.alpha) {
        assert!(b >= &(a - 1e-6));
    }
}

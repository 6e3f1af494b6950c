use gauss_avatar::gaussians::{
    compose_param_maps, filter_opacity, sample_structured, GaussianParamMap, PARAM_CHANNELS,
    DEFAULT_MAP_SIZE, DEFAULT_N_SURFACE, DEFAULT_N_UV,
};
use gauss_avatar::math::Vec3;
use gauss_avatar::synthetic::{canonical_map, pose_space_gaussians, tube_body, MapStyle, TubeSpec};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

fn small() -> gauss_avatar::body::SkinnedBody {
    tube_body(&TubeSpec { around: 12, rings: 10, ..TubeSpec::default() }).unwrap()
}

#[test]
fn defaults_yield_the_full_gaussian_budget() {
    let body = tube_body(&TubeSpec::default()).unwrap();
    let map = canonical_map(&body, DEFAULT_MAP_SIZE, DEFAULT_MAP_SIZE, &MapStyle::default(), 0);
    assert_eq!(map.shape(), (PARAM_CHANNELS, 256, 256));
    let set = sample_structured(&map, &body, DEFAULT_N_UV, DEFAULT_N_SURFACE, 0).unwrap();
    assert_eq!(set.dropped, 0);
    assert_eq!(set.len(), 131_072);
}

#[test]
fn reproducible_across_thread_counts() {
    let body = small();
    let map = canonical_map(&body, 40, 30, &MapStyle::default(), 1);
    let run = |threads| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(threads)
            .build()
            .unwrap()
            .install(|| sample_structured(&map, &body, 700, 900, 5).unwrap())
    };
    let a = run(1);
    assert_eq!(a, run(4));
    assert_eq!(a, sample_structured(&map, &body, 700, 900, 5).unwrap());
    assert_ne!(a, sample_structured(&map, &body, 700, 900, 6).unwrap());
}

#[test]
fn zero_offset_composition_equals_normalized_map() {
    let body = small();
    let mut map = canonical_map(&body, 40, 30, &MapStyle::default(), 2);
    // push some texels outside the valid ranges
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    for i in 0..200 {
        let t = map.texel_mut(i * 5);
        t[0] = rng.gen_range(-1.0..2.0);
        t[7] *= 3.0;
        t[12] = -0.1;
    }
    let mut zero = GaussianParamMap::new(40, 30);
    zero.uv_map_mut().valid_mask_mut().fill(true);
    let a = sample_structured(&compose_param_maps(&map, &zero).unwrap(), &body, 500, 500, 9).unwrap();
    let b = sample_structured(&map.normalized(), &body, 500, 500, 9).unwrap();
    assert_eq!(a, b);
    for g in &a.gaussians {
        assert!((0.0..=1.0).contains(&g.alpha));
        assert!(g.rgb.iter().all(|c| (0.0..=1.0).contains(c)));
        assert!((g.rotation.quaternion().norm() - 1.0).abs() < 1e-12);
        assert!(g.scale.iter().all(|&s| s >= 1e-6));
    }
}

#[test]
fn surface_anchors_outside_the_map_are_dropped() {
    let body = small();
    let mut map = canonical_map(&body, 40, 30, &MapStyle::default(), 4);
    // keep only the left half of the atlas
    for i in 0..40 * 30 {
        if i % 40 >= 20 {
            map.uv_map_mut().set_valid(i, false);
            map.texel_mut(i).fill(0.0);
        }
    }
    let set = sample_structured(&map, &body, 100, 2000, 4).unwrap();
    assert!(set.dropped > 500 && set.dropped < 1500, "{}", set.dropped);
    assert_eq!(set.len() + set.dropped, 2100);
    assert!(set.gaussians.iter().all(|g| g.uv.x < 0.5 + 1.0 / 40.0));
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn opacity_filter_is_idempotent(seed in any::<u64>(), tau in 0.0f64..1.0) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let pts: Vec<Vec3> = (0..200).map(|_| Vec3::new(rng.gen(), rng.gen(), rng.gen())).collect();
        let set = pose_space_gaussians(&pts, 3, &mut rng);
        let once = filter_opacity(&set, tau);
        prop_assert_eq!(filter_opacity(&once, tau), once.clone());
        prop_assert!(once.gaussians().iter().all(|g| g.alpha >= tau));
    }
}

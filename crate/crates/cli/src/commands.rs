use std::path::{Path, PathBuf};
use std::time::{Duration, Instant};

use gauss_avatar::body::{pose_body, save_body, PoseParams, SkinnedBody};
use gauss_avatar::gaussians::{
    build_compact_feature, edit_param_map, filter_opacity, EditMode, GaussianParamMap,
    DEFAULT_COMPACT_POINTS, DEFAULT_MAP_SIZE, DEFAULT_N_SURFACE, DEFAULT_N_UV, DEFAULT_TAU,
};
use gauss_avatar::lift::{
    cross_attention_lift, positional_encode, unproject_to_uv, AttentionWeights, CollisionPolicy,
    DEFAULT_N_FREQ, LATENT_CHANNELS, LATENT_SIZE,
};
use gauss_avatar::math::Vec3;
use gauss_avatar::metrics::{compute_metrics, metrics_csv, metrics_json};
use gauss_avatar::render::{
    render_avatar, render_avatar_timed, sample_composed, AvatarSettings, CanonicalCache,
    RasterSettings, StageTimings, DEFAULT_TILE_SIZE,
};
use gauss_avatar::synthetic::{
    canonical_map, front_camera, pose_sequence, pose_space_gaussians, tube_body, MapStyle,
    TubeSpec,
};
use gauss_avatar::uv::{rasterize_uv_attribute, UvCoverage};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::{json, Value};

use crate::args::*;
use crate::config::Resolver;
use crate::error::{CliError, CliResult};
use crate::files;

const MAX_MAP_SIZE: usize = 8192;
const MAX_IMAGE_SIZE: usize = 16384;

/// State shared by every command: resolved configuration plus what ends up
/// in the manifest.
pub struct Session {
    pub resolver: Resolver,
    pub manifest_path: Option<PathBuf>,
    pub outputs: Vec<PathBuf>,
    pub frame_hashes: Vec<String>,
    pub report: serde_json::Map<String, Value>,
    pub seed: Option<u64>,
}

impl Session {
    pub fn new(command: &str, common: &Common) -> CliResult<Self> {
        let resolver = Resolver::new(command, common.config.as_deref())?;
        Ok(Self {
            resolver,
            manifest_path: common.manifest.clone(),
            outputs: Vec::new(),
            frame_hashes: Vec::new(),
            report: serde_json::Map::new(),
            seed: None,
        })
    }

    fn output(&mut self, key: &str, flag: Option<PathBuf>) -> CliResult<PathBuf> {
        let p = self.resolver.required_path(key, flag)?;
        if self.manifest_path.is_none() {
            self.manifest_path = Some(manifest_beside(&p));
        }
        Ok(p)
    }

    fn out_dir(&mut self, flag: Option<PathBuf>) -> CliResult<PathBuf> {
        let p = self.resolver.required_path("out_dir", flag)?;
        if self.manifest_path.is_none() {
            self.manifest_path = Some(p.join("manifest.json"));
        }
        Ok(p)
    }

    fn seed(&mut self, flag: Option<u64>) -> CliResult<u64> {
        let s = self.resolver.knob("seed", flag, 0)?;
        self.seed = Some(s);
        Ok(s)
    }

    fn wrote(&mut self, p: &Path) {
        self.outputs.push(p.to_path_buf());
    }

    fn note(&mut self, key: &str, v: Value) {
        self.report.insert(key.to_string(), v);
    }
}

/// `out.png` → `out.manifest.json`.
pub fn manifest_beside(p: &Path) -> PathBuf {
    p.with_extension("manifest.json")
}

fn check(cond: bool, msg: impl FnOnce() -> String) -> CliResult<()> {
    if cond {
        Ok(())
    } else {
        Err(CliError::invalid(msg()))
    }
}

fn check_size(name: &str, v: usize, max: usize) -> CliResult<()> {
    check(v >= 1 && v <= max, || format!("{name} must be in 1..={max}, got {v}"))
}

fn load_body(s: &mut Session, a: BodyArgs) -> CliResult<(PathBuf, PathBuf)> {
    let mesh = s.resolver.required_path("body", a.body)?;
    let skin = s.resolver.required_path("skin", a.skin)?;
    Ok((mesh, skin))
}

fn pose_or_rest(path: Option<&Path>, body: &SkinnedBody) -> CliResult<PoseParams> {
    match path {
        Some(p) => files::pose(p),
        None => Ok(PoseParams::identity(body.num_joints())),
    }
}

fn parse_background(s: &str) -> CliResult<[f64; 3]> {
    let v: Vec<f64> = s
        .split(',')
        .map(|c| c.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| CliError::usage(format!("--background {s:?}: {e}")))?;
    <[f64; 3]>::try_from(v).map_err(|_| CliError::usage("--background takes three values r,g,b"))
}

fn avatar_settings(s: &mut Session, sampling: SamplingArgs, raster: RasterArgs) -> CliResult<AvatarSettings> {
    let n_uv = s.resolver.knob("n_uv", sampling.n_uv, DEFAULT_N_UV)?;
    let n_surface = s.resolver.knob("n_surface", sampling.n_surface, DEFAULT_N_SURFACE)?;
    let seed = s.seed(sampling.seed)?;
    let bg = raster.background.as_deref().map(parse_background).transpose()?;
    let bg = s.resolver.knob("background", bg, [0.0; 3])?;
    let tile_size = s.resolver.knob("tile_size", raster.tile_size, DEFAULT_TILE_SIZE)?;
    check(n_uv + n_surface > 0, || "n_uv + n_surface must be positive".into())?;
    check(n_uv + n_surface <= 1 << 26, || "too many Gaussians requested".into())?;
    check(bg.iter().all(|c| (0.0..=1.0).contains(c)), || "background must lie in [0,1]".into())?;
    check_size("tile_size", tile_size, 1024)?;
    Ok(AvatarSettings {
        n_uv,
        n_surface,
        seed,
        raster: RasterSettings {
            tile_size,
            background: Vec3::from(bg),
        },
    })
}

fn policy_of(p: Policy) -> CollisionPolicy {
    match p {
        Policy::MaxAlpha => CollisionPolicy::MaxAlpha,
        Policy::Average => CollisionPolicy::Average,
    }
}

pub fn lift_unproject(s: &mut Session, a: LiftUnprojectArgs) -> CliResult<()> {
    let output = s.output("output", a.output)?;
    let (mesh, skin) = load_body(s, a.body)?;
    let pose = s.resolver.path("pose", a.pose)?;
    let gaussians = s.resolver.required_path("gaussians", a.gaussians)?;
    let tau = s.resolver.knob("tau", a.tau, DEFAULT_TAU)?;
    let size = s.resolver.knob("map_size", a.map_size, DEFAULT_MAP_SIZE)?;
    let policy = s.resolver.knob("policy", a.policy, Policy::MaxAlpha)?;
    check((0.0..=1.0).contains(&tau), || format!("tau must lie in [0,1], got {tau}"))?;
    check_size("map_size", size, MAX_MAP_SIZE)?;

    let body = files::body(&mesh, &skin)?;
    let pose = pose_or_rest(pose.as_deref(), &body)?;
    let set = files::gaussians(&gaussians)?;
    let posed = pose_body(&body, &pose)?;
    let filtered = filter_opacity(&set, tau);
    let r = unproject_to_uv(&filtered, &posed, size, size, policy_of(policy))?;
    files::write_uv_map(&output, r.map.as_uv_map())?;
    s.wrote(&output);
    s.note("input", json!(set.len()));
    s.note("after_filter", json!(filtered.len()));
    s.note("written", json!(r.written));
    s.note("skipped", json!(r.skipped));
    s.note("collisions", json!(r.collisions));
    Ok(())
}

pub fn lift_attend(s: &mut Session, a: LiftAttendArgs) -> CliResult<()> {
    let output = s.output("output", a.output)?;
    let (mesh, skin) = load_body(s, a.body)?;
    let pose = s.resolver.path("pose", a.pose)?;
    let gaussians = s.resolver.required_path("gaussians", a.gaussians)?;
    let weights_path = s.resolver.path("weights", a.weights)?;
    let save_weights = s.resolver.path("save_weights", a.save_weights)?;
    let weights_seed = s.resolver.knob("weights_seed", a.weights_seed, 0)?;
    let tau = s.resolver.knob("tau", a.tau, DEFAULT_TAU)?;
    let k = s.resolver.knob("compact", a.compact, DEFAULT_COMPACT_POINTS)?;
    let n_freq = s.resolver.knob("n_freq", a.n_freq, DEFAULT_N_FREQ)?;
    let size = s.resolver.knob("latent_size", a.latent_size, LATENT_SIZE)?;
    s.seed = Some(weights_seed);
    check((0.0..=1.0).contains(&tau), || format!("tau must lie in [0,1], got {tau}"))?;
    check(k >= 1, || "compact must be positive".into())?;
    check(n_freq <= 20, || format!("n_freq must be at most 20, got {n_freq}"))?;
    check_size("latent_size", size, 1024)?;

    let body = files::body(&mesh, &skin)?;
    let pose = pose_or_rest(pose.as_deref(), &body)?;
    let set = files::gaussians(&gaussians)?;
    let posed = pose_body(&body, &pose)?;
    let flat: Vec<f64> = posed.vertices.iter().flat_map(|v| [v.x, v.y, v.z]).collect();
    let position = rasterize_uv_attribute(&posed, &flat, 3, size, size)?;
    let query = positional_encode(&position, n_freq)?;
    let context = build_compact_feature(&set, tau, k)?;
    let weights = match &weights_path {
        Some(p) => AttentionWeights::load(p)?,
        None => AttentionWeights::random(query.channels(), context.cols, 64, 64, LATENT_CHANNELS, weights_seed),
    };
    if let Some(p) = &save_weights {
        weights.save(p)?;
        s.wrote(p);
    }
    let latent = cross_attention_lift(&query, &context, &weights)?;
    files::write_uv_map(&output, &latent.0)?;
    s.wrote(&output);
    let (c, h, w) = latent.shape();
    s.note("latent_shape", json!([c, h, w]));
    s.note("context", json!([context.rows, context.cols]));
    s.note("query_channels", json!(query.channels()));
    Ok(())
}

pub fn sample(s: &mut Session, a: SampleArgs) -> CliResult<()> {
    let output = s.output("output", a.output)?;
    let (mesh, skin) = load_body(s, a.body)?;
    let canonical = s.resolver.required_path("canonical", a.canonical)?;
    let offset = s.resolver.path("offset", a.offset)?;
    let settings = avatar_settings(s, a.sampling, RasterArgs { background: None, tile_size: None })?;

    let body = files::body(&mesh, &skin)?;
    let canonical = files::param_map(&canonical)?;
    let offset = offset.as_deref().map(files::param_map).transpose()?;
    let set = sample_composed(&canonical, offset.as_ref(), &body, &settings)?;
    let mut w = files::create(&output)?;
    set.write_to(&mut w)?;
    drop(w);
    s.wrote(&output);
    s.note("gaussians", json!(set.len()));
    s.note("dropped", json!(set.dropped));
    Ok(())
}

fn parse_rect(r: &str) -> CliResult<[f64; 4]> {
    let v: Vec<f64> = r
        .split(',')
        .map(|c| c.trim().parse::<f64>())
        .collect::<Result<_, _>>()
        .map_err(|e| CliError::usage(format!("--rect {r:?}: {e}")))?;
    <[f64; 4]>::try_from(v).map_err(|_| CliError::usage("--rect takes four values u0,v0,u1,v1"))
}

pub fn edit(s: &mut Session, a: EditArgs) -> CliResult<()> {
    let output = s.output("output", a.output)?;
    let pa = s.resolver.required_path("a", a.a)?;
    let pb = s.resolver.required_path("b", a.b)?;
    let blend = s.resolver.opt_knob("blend", a.blend)?;
    let labels = s.resolver.opt_knob("labels", a.labels)?;
    let rect = a.rect.as_deref().map(parse_rect).transpose()?;
    let rect = s.resolver.opt_knob("rect", rect)?;
    let chosen = [blend.is_some(), labels.is_some(), rect.is_some()].iter().filter(|&&b| b).count();
    if chosen != 1 {
        return Err(CliError::usage("choose exactly one of --blend, --labels, --rect"));
    }
    let ma = files::param_map(&pa)?;
    let mb = files::param_map(&pb)?;
    let (w, h) = (ma.width(), ma.height());
    let mode = if let Some(t) = blend {
        check((0.0..=1.0).contains(&t), || format!("blend must lie in [0,1], got {t}"))?;
        EditMode::Interpolate(t)
    } else if let Some(labels) = labels {
        let mesh = s.resolver.required_path("body", a.body.body)?;
        let skin = s.resolver.required_path("skin", a.body.skin)?;
        let body = files::body(&mesh, &skin)?;
        let coverage = UvCoverage::build(&body, w, h);
        let face_labels = body.part_labels();
        EditMode::SwapRegion(
            coverage
                .hits()
                .iter()
                .map(|hit| hit.is_some_and(|p| labels.contains(&face_labels[p.face])))
                .collect(),
        )
    } else {
        let [u0, v0, u1, v1] = rect.unwrap();
        EditMode::SwapRegion(
            (0..w * h)
                .map(|i| {
                    let u = ((i % w) as f64 + 0.5) / w as f64;
                    let v = ((i / w) as f64 + 0.5) / h as f64;
                    (u0..=u1).contains(&u) && (v0..=v1).contains(&v)
                })
                .collect(),
        )
    };
    if let EditMode::SwapRegion(mask) = &mode {
        s.note("swapped_texels", json!(mask.iter().filter(|&&m| m).count()));
    }
    let out = edit_param_map(&ma, &mb, &mode)?;
    files::write_uv_map(&output, out.as_uv_map())?;
    s.wrote(&output);
    Ok(())
}

struct Scene {
    body: SkinnedBody,
    canonical: GaussianParamMap,
    offset: Option<GaussianParamMap>,
    camera: gauss_avatar::render::Camera,
}

fn load_scene(mesh: &Path, skin: &Path, canonical: &Path, offset: Option<&Path>, camera: &Path) -> CliResult<Scene> {
    Ok(Scene {
        body: files::body(mesh, skin)?,
        canonical: files::param_map(canonical)?,
        offset: offset.map(files::param_map).transpose()?,
        camera: files::camera(camera)?,
    })
}

pub fn render(s: &mut Session, a: RenderArgs) -> CliResult<()> {
    let output = s.output("output", a.output)?;
    let (mesh, skin) = load_body(s, a.body)?;
    let canonical = s.resolver.required_path("canonical", a.canonical)?;
    let offset = s.resolver.path("offset", a.offset)?;
    let pose = s.resolver.path("pose", a.pose)?;
    let camera = s.resolver.required_path("camera", a.camera)?;
    let raw = s.resolver.path("raw", a.raw)?;
    let settings = avatar_settings(s, a.sampling, a.raster)?;

    let scene = load_scene(&mesh, &skin, &canonical, offset.as_deref(), &camera)?;
    let pose = pose_or_rest(pose.as_deref(), &scene.body)?;
    let (img, timings) = render_avatar_timed(
        &scene.canonical,
        scene.offset.as_ref(),
        &scene.body,
        &pose,
        &scene.camera,
        &settings,
        None,
    )?;
    files::write_png(&output, &img)?;
    s.wrote(&output);
    if let Some(raw) = raw {
        files::write_uv_map(&raw, &img.to_uv_map())?;
        s.wrote(&raw);
    }
    s.frame_hashes.push(files::raster_hash(&img));
    s.note("stage_ms", stage_ms(&timings));
    Ok(())
}

pub fn frame_name(i: usize, ext: &str) -> String {
    format!("frame_{i:06}.{ext}")
}

pub fn animate(s: &mut Session, a: AnimateArgs) -> CliResult<()> {
    let out_dir = s.out_dir(a.out_dir)?;
    let (mesh, skin) = load_body(s, a.body)?;
    let canonical = s.resolver.required_path("canonical", a.canonical)?;
    let offset = s.resolver.path("offset", a.offset)?;
    let poses = s.resolver.required_path("poses", a.poses)?;
    let camera = s.resolver.required_path("camera", a.camera)?;
    let settings = avatar_settings(s, a.sampling, a.raster)?;
    let no_cache = s.resolver.knob("no_cache", a.no_cache.then_some(true), false)?;
    let raw = s.resolver.knob("raw", a.raw.then_some(true), false)?;

    let scene = load_scene(&mesh, &skin, &canonical, offset.as_deref(), &camera)?;
    let poses = files::poses(&poses)?;
    let cache = if no_cache {
        None
    } else {
        Some(CanonicalCache::build(&scene.canonical, &scene.body, &settings)?)
    };
    std::fs::create_dir_all(&out_dir)?;
    let start = Instant::now();
    for (i, pose) in poses.iter().enumerate() {
        let img = render_avatar(
            &scene.canonical,
            scene.offset.as_ref(),
            &scene.body,
            pose,
            &scene.camera,
            &settings,
            cache.as_ref(),
        )?;
        let png = out_dir.join(frame_name(i, "png"));
        files::write_png(&png, &img)?;
        s.wrote(&png);
        if raw {
            let p = out_dir.join(frame_name(i, "uvm"));
            files::write_uv_map(&p, &img.to_uv_map())?;
            s.wrote(&p);
        }
        s.frame_hashes.push(files::raster_hash(&img));
    }
    s.note("frames", json!(poses.len()));
    s.note("cache", json!(!no_cache));
    s.note("wall_ms", json!(start.elapsed().as_secs_f64() * 1e3));
    Ok(())
}

pub fn metrics(s: &mut Session, a: MetricsArgs) -> CliResult<()> {
    let output = match s.resolver.path("output", a.output)? {
        Some(p) => {
            if s.manifest_path.is_none() {
                s.manifest_path = Some(manifest_beside(&p));
            }
            Some(p)
        }
        None => None,
    };
    let csv = s.resolver.path("csv", a.csv)?;
    let offset = s.resolver.path("offset", a.offset)?;
    let n = a.rendered.len();
    if !a.reference.is_empty() && a.reference.len() != n {
        return Err(CliError::usage(format!("{n} rendered images but {} references", a.reference.len())));
    }
    if !a.mask.is_empty() && a.mask.len() != n {
        return Err(CliError::usage(format!("{n} rendered images but {} masks", a.mask.len())));
    }
    for (k, list) in [("rendered", &a.rendered), ("reference", &a.reference), ("mask", &a.mask)] {
        for (i, p) in list.iter().enumerate() {
            s.resolver.run.paths.insert(format!("{k}[{i}]"), p.clone());
        }
    }
    let offset = offset.as_deref().map(files::param_map).transpose()?;
    let mut rows = Vec::with_capacity(n);
    for i in 0..n {
        let rendered = files::image_file(&a.rendered[i])?.into_rendered();
        let reference = a.reference.get(i).map(|p| files::image_file(p)).transpose()?;
        let mask = a.mask.get(i).map(|p| files::image_file(p)).transpose()?;
        for other in reference.iter().chain(mask.iter()) {
            if (other.width, other.height) != (rendered.width, rendered.height) {
                return Err(CliError::invalid(format!(
                    "{}: size {}x{} differs from the reference size {}x{}",
                    a.rendered[i].display(),
                    rendered.width,
                    rendered.height,
                    other.width,
                    other.height
                )));
            }
        }
        let mask_values = mask.map(|m| m.alpha);
        let report = compute_metrics(
            &rendered,
            reference.as_ref().map(|r| r.rgb.as_slice()),
            mask_values.as_deref(),
            offset.as_ref(),
        )?;
        let id = a.rendered[i]
            .file_stem()
            .map(|s| s.to_string_lossy().into_owned())
            .unwrap_or_else(|| i.to_string());
        rows.push((id, report));
    }
    let json = metrics_json(&rows);
    if let Some(p) = &output {
        files::write_json(p, &json)?;
        s.wrote(p);
    }
    if let Some(p) = &csv {
        std::fs::write(p, metrics_csv(&rows)).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))?;
        s.wrote(p);
    }
    s.note("metrics", json);
    Ok(())
}

fn ms(d: Duration) -> f64 {
    d.as_secs_f64() * 1e3
}

fn stage_ms(t: &StageTimings) -> Value {
    json!({
        "sample": ms(t.sample),
        "pose": ms(t.pose),
        "frames": ms(t.frames),
        "place": ms(t.place),
        "rasterize": ms(t.rasterize),
        "total": ms(t.total()),
    })
}

pub fn bench(s: &mut Session, a: BenchArgs) -> CliResult<()> {
    let output = s.resolver.path("output", a.output)?;
    if let Some(p) = &output {
        if s.manifest_path.is_none() {
            s.manifest_path = Some(manifest_beside(p));
        }
    }
    let total = s.resolver.knob("gaussians", a.gaussians, DEFAULT_N_UV + DEFAULT_N_SURFACE)?;
    let res = s.resolver.knob("resolution", a.resolution, 512)?;
    let frames = s.resolver.knob("frames", a.frames, 5)?;
    let map_size = s.resolver.knob("map_size", a.map_size, DEFAULT_MAP_SIZE)?;
    let tile_size = s.resolver.knob("tile_size", a.tile_size, DEFAULT_TILE_SIZE)?;
    let seed = s.seed(a.seed)?;
    check((1..=1 << 24).contains(&total), || format!("gaussians must be in 1..=16777216, got {total}"))?;
    check_size("resolution", res, MAX_IMAGE_SIZE)?;
    check_size("frames", frames, 10_000)?;
    check_size("map_size", map_size, MAX_MAP_SIZE)?;
    check_size("tile_size", tile_size, 1024)?;

    let spec = TubeSpec::default();
    let body = tube_body(&spec)?;
    let map = canonical_map(&body, map_size, map_size, &MapStyle::default(), seed);
    let cam = front_camera(&spec, res, res);
    let settings = AvatarSettings {
        n_uv: total / 2,
        n_surface: total - total / 2,
        seed,
        raster: RasterSettings {
            tile_size,
            ..RasterSettings::default()
        },
    };
    let t = Instant::now();
    let cache = CanonicalCache::build(&map, &body, &settings)?;
    let cache_ms = ms(t.elapsed());
    let rendered = cache.canonical_set().len();

    let mut sum = StageTimings::default();
    let mut wall = Duration::ZERO;
    for pose in pose_sequence(body.num_joints(), frames) {
        let t = Instant::now();
        let (_, timings) = render_avatar_timed(&map, None, &body, &pose, &cam, &settings, Some(&cache))?;
        wall += t.elapsed();
        sum.sample += timings.sample;
        sum.pose += timings.pose;
        sum.frames += timings.frames;
        sum.place += timings.place;
        sum.rasterize += timings.rasterize;
    }
    let f = frames as u32;
    let mean = StageTimings {
        sample: sum.sample / f,
        pose: sum.pose / f,
        frames: sum.frames / f,
        place: sum.place / f,
        rasterize: sum.rasterize / f,
    };
    let per_frame = ms(wall) / frames as f64;
    let report = json!({
        "gaussians": rendered,
        "resolution": [res, res],
        "frames": frames,
        "threads": rayon::current_num_threads(),
        "cache_build_ms": cache_ms,
        "stage_ms": stage_ms(&mean),
        "ms_per_frame": per_frame,
        "fps": 1e3 / per_frame,
        "reference_gpu_ms_per_frame": 30.0,
    });
    if let Some(p) = &output {
        files::write_json(p, &report)?;
        s.wrote(p);
    }
    if let Value::Object(m) = report {
        s.report.extend(m);
    }
    Ok(())
}

pub fn synth(s: &mut Session, a: SynthArgs) -> CliResult<()> {
    let dir = s.out_dir(a.out_dir)?;
    let map_size = s.resolver.knob("map_size", a.map_size, DEFAULT_MAP_SIZE)?;
    let around = s.resolver.knob("around", a.around, 128)?;
    let rings = s.resolver.knob("rings", a.rings, 256)?;
    let joints = s.resolver.knob("joints", a.joints, 4)?;
    let frames = s.resolver.knob("frames", a.frames, 10)?;
    let res = s.resolver.knob("resolution", a.resolution, 512)?;
    let n_gauss = s.resolver.knob("gaussians", a.gaussians, 65_536)?;
    let seed = s.seed(a.seed)?;
    check_size("map_size", map_size, MAX_MAP_SIZE)?;
    check((3..=4096).contains(&around), || format!("around must be in 3..=4096, got {around}"))?;
    check_size("rings", rings, 4096)?;
    check((2..=64).contains(&joints), || format!("joints must be in 2..=64, got {joints}"))?;
    check_size("frames", frames, 10_000)?;
    check_size("resolution", res, MAX_IMAGE_SIZE)?;
    check_size("gaussians", n_gauss, 1 << 22)?;

    let spec = TubeSpec {
        around,
        rings,
        joints,
        ..TubeSpec::default()
    };
    let body = tube_body(&spec)?;
    std::fs::create_dir_all(&dir)?;
    let mesh_path = dir.join("body.obj");
    let skin_path = dir.join("skin.json");
    {
        let mut m = files::create(&mesh_path)?;
        let mut k = files::create(&skin_path)?;
        save_body(&body, &mut m, &mut k)?;
    }
    let canonical = canonical_map(&body, map_size, map_size, &MapStyle::default(), seed);
    let canonical_path = dir.join("canonical.uvm");
    files::write_uv_map(&canonical_path, canonical.as_uv_map())?;

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut offset = GaussianParamMap::new(map_size, map_size);
    for i in 0..map_size * map_size {
        if canonical.is_valid(i) {
            let t = offset.texel_mut(i);
            for v in &mut t[4..7] {
                *v = rng.gen_range(-0.001..0.001);
            }
            offset.uv_map_mut().set_valid(i, true);
        }
    }
    let offset_path = dir.join("offset.uvm");
    files::write_uv_map(&offset_path, offset.as_uv_map())?;

    let poses = pose_sequence(joints, frames);
    let poses_path = dir.join("poses.json");
    let records: Vec<_> = poses.iter().map(PoseParams::to_record).collect();
    files::write_json(&poses_path, &records)?;
    let pose_path = dir.join("pose.json");
    files::write_json(&pose_path, &records[0])?;
    let camera_path = dir.join("camera.json");
    files::write_json(&camera_path, &front_camera(&spec, res, res).to_record())?;

    let posed = pose_body(&body, &poses[0])?;
    let points: Vec<Vec3> = (0..n_gauss)
        .map(|_| {
            let f = rng.gen_range(0..body.num_faces());
            let r1: f64 = rng.gen();
            let r2: f64 = rng.gen();
            let q = r1.sqrt();
            posed.surface_point(f, &[1.0 - q, q * (1.0 - r2), q * r2])
        })
        .collect();
    let feature_width = 16;
    let set = pose_space_gaussians(&points, feature_width, &mut rng);
    let gaussians_path = dir.join("gaussians.grec");
    {
        let mut w = files::create(&gaussians_path)?;
        set.write_to(&mut w)?;
    }
    let weights_path = dir.join("weights.json");
    let d_model = 3 * (1 + 2 * DEFAULT_N_FREQ);
    AttentionWeights::random(d_model, 14 + feature_width, 64, 64, LATENT_CHANNELS, seed).save(&weights_path)?;

    let config_path = dir.join("config.json");
    files::write_json(
        &config_path,
        &json!({
            "body": "body.obj",
            "skin": "skin.json",
            "canonical": "canonical.uvm",
            "camera": "camera.json",
            "pose": "pose.json",
            "poses": "poses.json",
            "gaussians": "gaussians.grec",
            "weights": "weights.json",
            "seed": seed,
        }),
    )?;
    for p in [
        &mesh_path,
        &skin_path,
        &canonical_path,
        &offset_path,
        &poses_path,
        &pose_path,
        &camera_path,
        &gaussians_path,
        &weights_path,
        &config_path,
    ] {
        s.wrote(p);
    }
    s.note("faces", json!(body.num_faces()));
    s.note("vertices", json!(body.num_vertices()));
    s.note("covered_texels", json!(canonical.as_uv_map().num_valid()));
    Ok(())
}

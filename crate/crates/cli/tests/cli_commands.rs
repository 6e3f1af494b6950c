use std::path::Path;

use gauss_avatar_cli::run_command;
use serde_json::Value;

fn run(args: &[&str]) -> i32 {
    let argv: Vec<String> = args.iter().map(|s| s.to_string()).collect();
    run_command(&argv)
}

fn json(p: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(p).unwrap()).unwrap()
}

fn scene(dir: &Path) -> String {
    let out = dir.join("scene");
    let code = run(&[
        "synth", "--map-size", "48", "--around", "16", "--rings", "24", "--frames", "3",
        "--resolution", "48", "--gaussians", "300", "--out-dir", out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    out.join("config.json").to_string_lossy().into_owned()
}

#[test]
fn dispatch_errors_map_to_usage_status() {
    assert_eq!(run(&["teleport"]), 2);
    assert_eq!(run(&[]), 2);
    assert_eq!(run(&["render", "--no-such-flag"]), 2);
    assert_eq!(run(&["--help"]), 0);
    // required path missing
    assert_eq!(run(&["render", "--output", "/nonexistent/x.png"]), 2);
}

#[test]
fn io_and_invalid_statuses() {
    let dir = tempfile::tempdir().unwrap();
    let config = scene(dir.path());
    let out = dir.path().join("x.png");
    let out = out.to_str().unwrap();
    assert_eq!(run(&["render", "--config", &config, "--camera", "/nonexistent/cam.json", "-o", out]), 3);
    assert_eq!(run(&["render", "--config", &config, "--tile-size", "0", "-o", out]), 4);
    assert_eq!(run(&["render", "--config", &config, "--background", "2,0,0", "-o", out]), 4);
    let m = json(&dir.path().join("x.manifest.json"));
    assert_eq!(m["status"], "error");
    assert_eq!(m["exit_code"], 4);
    assert!(m["error"].as_str().unwrap().contains("background"));
}

#[test]
fn render_writes_image_and_manifest() {
    let dir = tempfile::tempdir().unwrap();
    let config = scene(dir.path());
    let out = dir.path().join("frame.png");
    let raw = dir.path().join("frame.uvm");
    let manifest = dir.path().join("run.json");
    let code = run(&[
        "render", "--config", &config, "--n-uv", "1000", "--n-surface", "1000",
        "--raw", raw.to_str().unwrap(), "--manifest", manifest.to_str().unwrap(),
        "-o", out.to_str().unwrap(),
    ]);
    assert_eq!(code, 0);
    let img = image::open(&out).unwrap();
    assert_eq!((img.width(), img.height()), (48, 48));
    assert!(raw.exists());
    let m = json(&manifest);
    assert_eq!(m["status"], "ok");
    assert_eq!(m["config"]["knobs"]["n_uv"], 1000);
    assert_eq!(m["seed"], 0);
    assert_eq!(m["config_hash"].as_str().unwrap().len(), 64);
    assert_eq!(m["frame_hashes"].as_array().unwrap().len(), 1);
    assert_eq!(m["outputs"].as_array().unwrap().len(), 2);
}

#[test]
fn animate_frames_match_standalone_renders() {
    let dir = tempfile::tempdir().unwrap();
    let config = scene(dir.path());
    let anim = dir.path().join("anim");
    assert_eq!(run(&["animate", "--config", &config, "--raw", "--out-dir", anim.to_str().unwrap()]), 0);
    let frames = json(&anim.join("manifest.json"))["frame_hashes"].clone();
    assert_eq!(frames.as_array().unwrap().len(), 3);

    let single = dir.path().join("single.png");
    let pose = dir.path().join("scene/pose.json");
    assert_eq!(
        run(&["render", "--config", &config, "--pose", pose.to_str().unwrap(), "-o", single.to_str().unwrap()]),
        0
    );
    let m = json(&dir.path().join("single.manifest.json"));
    assert_eq!(m["frame_hashes"][0], frames[0]);
    assert_eq!(std::fs::read(&single).unwrap(), std::fs::read(anim.join("frame_000000.png")).unwrap());

    let uncached = dir.path().join("uncached");
    assert_eq!(run(&["animate", "--config", &config, "--no-cache", "--out-dir", uncached.to_str().unwrap()]), 0);
    assert_eq!(json(&uncached.join("manifest.json"))["frame_hashes"], frames);
}

#[test]
fn flags_override_config_values() {
    let dir = tempfile::tempdir().unwrap();
    let config = scene(dir.path());
    let mut c = json(Path::new(&config));
    c["n_uv"] = 500.into();
    c["n_surface"] = 0.into();
    let custom = dir.path().join("scene/custom.json");
    std::fs::write(&custom, c.to_string()).unwrap();
    let out = dir.path().join("s.grec");
    let code = run(&["sample", "--config", custom.to_str().unwrap(), "--n-surface", "7", "-o", out.to_str().unwrap()]);
    assert_eq!(code, 0);
    let m = json(&dir.path().join("s.manifest.json"));
    assert_eq!(m["config"]["knobs"]["n_uv"], 500);
    assert_eq!(m["config"]["knobs"]["n_surface"], 7);
    assert_eq!(m["report"]["gaussians"], 507);
}

#[test]
fn lift_edit_and_metrics_chain() {
    let dir = tempfile::tempdir().unwrap();
    let config = scene(dir.path());
    let p = |s: &str| dir.path().join(s).to_string_lossy().into_owned();
    assert_eq!(run(&["lift-unproject", "--config", &config, "--map-size", "48", "-o", &p("lifted.uvm")]), 0);
    assert_eq!(
        run(&["lift-attend", "--config", &config, "--latent-size", "8", "--compact", "64", "-o", &p("latent.uvm")]),
        0
    );
    let lat = json(&dir.path().join("latent.manifest.json"));
    assert_eq!(lat["report"]["latent_shape"], serde_json::json!([256, 8, 8]));
    assert_eq!(
        run(&["edit", "--a", &p("scene/canonical.uvm"), "--b", &p("lifted.uvm"), "--blend", "0.5", "-o", &p("mix.uvm")]),
        0
    );
    assert_eq!(run(&["edit", "--a", &p("scene/canonical.uvm"), "--b", &p("lifted.uvm"), "-o", &p("bad.uvm")]), 2);

    assert_eq!(run(&["render", "--config", &config, "-o", &p("a.png")]), 0);
    assert_eq!(run(&["render", "--config", &config, "--canonical", &p("mix.uvm"), "-o", &p("b.png")]), 0);
    assert_eq!(
        run(&["metrics", "--rendered", &p("a.png"), "--reference", &p("a.png"), "--csv", &p("m.csv"), "-o", &p("m.json")]),
        0
    );
    let m = json(&dir.path().join("m.json"));
    assert_eq!(m["a"]["psnr"], 100.0);
    assert_eq!(m["a"]["lpips"], "unavailable");
    assert!(std::fs::read_to_string(dir.path().join("m.csv")).unwrap().starts_with("frame,"));
    assert_eq!(
        run(&["metrics", "--rendered", &p("a.png"), "--rendered", &p("b.png"), "--reference", &p("a.png")]),
        2
    );
}

use std::fs::File;
use std::io::{BufReader, BufWriter, Write};
use std::path::Path;

use gauss_avatar::body::{load_body, read_pose, read_pose_sequence, PoseParams, SkinnedBody};
use gauss_avatar::gaussians::{GaussianParamMap, PoseSpaceGaussianSet};
use gauss_avatar::render::{read_camera, Camera, RenderedImage};
use gauss_avatar::uv::UvMap;
use image::ExtendedColorType;
use sha2::{Digest, Sha256};

use crate::config::hex;
use crate::error::{CliError, CliResult};

fn open(path: &Path) -> CliResult<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

pub fn create(path: &Path) -> CliResult<BufWriter<File>> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

/// Attaches the path to a core error without changing its class.
fn at<T>(path: &Path, r: gauss_avatar::Result<T>) -> CliResult<T> {
    r.map_err(|e| match CliError::from(e) {
        CliError::Io(m) => CliError::Io(format!("{}: {m}", path.display())),
        CliError::Invalid(m) => CliError::Invalid(format!("{}: {m}", path.display())),
        other => other,
    })
}

pub fn body(mesh: &Path, skin: &Path) -> CliResult<SkinnedBody> {
    let m = open(mesh)?;
    at(skin, load_body(m, open(skin)?))
}

pub fn pose(path: &Path) -> CliResult<PoseParams> {
    at(path, read_pose(open(path)?))
}

pub fn poses(path: &Path) -> CliResult<Vec<PoseParams>> {
    at(path, read_pose_sequence(open(path)?))
}

pub fn camera(path: &Path) -> CliResult<Camera> {
    at(path, read_camera(open(path)?))
}

pub fn param_map(path: &Path) -> CliResult<GaussianParamMap> {
    at(path, GaussianParamMap::read_from(open(path)?))
}

pub fn uv_map(path: &Path) -> CliResult<UvMap> {
    at(path, UvMap::read_from(open(path)?))
}

pub fn gaussians(path: &Path) -> CliResult<PoseSpaceGaussianSet> {
    at(path, PoseSpaceGaussianSet::read_from(open(path)?))
}

pub fn write_uv_map(path: &Path, map: &UvMap) -> CliResult<()> {
    let mut w = create(path)?;
    map.write_to(&mut w)?;
    w.flush()?;
    Ok(())
}

pub fn write_json<T: serde::Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let mut w = create(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

pub fn write_png(path: &Path, img: &RenderedImage) -> CliResult<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(dir)?;
    }
    image::save_buffer_with_format(
        path,
        &img.to_rgba8(),
        img.width as u32,
        img.height as u32,
        ExtendedColorType::Rgba8,
        image::ImageFormat::Png,
    )?;
    Ok(())
}

/// SHA-256 over the little-endian bytes of every rgb and alpha value.
pub fn raster_hash(img: &RenderedImage) -> String {
    let mut h = Sha256::new();
    for v in img.rgb.iter().chain(&img.alpha) {
        h.update(v.to_le_bytes());
    }
    hex(&h.finalize())
}

/// An image as interleaved rgb plus alpha, from PNG or a raw UVM dump with
/// three or four channels.
pub struct LoadedImage {
    pub width: usize,
    pub height: usize,
    pub rgb: Vec<f64>,
    pub alpha: Vec<f64>,
}

impl LoadedImage {
    pub fn into_rendered(self) -> RenderedImage {
        RenderedImage {
            width: self.width,
            height: self.height,
            rgb: self.rgb,
            alpha: self.alpha,
        }
    }
}

pub fn image_file(path: &Path) -> CliResult<LoadedImage> {
    let is_raw = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("uvm"));
    if is_raw {
        let m = uv_map(path)?;
        if m.channels() != 3 && m.channels() != 4 {
            return Err(CliError::Io(format!("{}: raw image needs 3 or 4 channels", path.display())));
        }
        let n = m.num_texels();
        let mut rgb = Vec::with_capacity(3 * n);
        let mut alpha = Vec::with_capacity(n);
        for i in 0..n {
            let t = m.texel(i);
            rgb.extend_from_slice(&t[..3]);
            alpha.push(if t.len() == 4 { t[3] } else { 1.0 });
        }
        return Ok(LoadedImage {
            width: m.width(),
            height: m.height(),
            rgb,
            alpha,
        });
    }
    let img = image::open(path)
        .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?
        .to_rgba8();
    let (w, h) = img.dimensions();
    let mut rgb = Vec::with_capacity(3 * (w * h) as usize);
    let mut alpha = Vec::with_capacity((w * h) as usize);
    for p in img.pixels() {
        rgb.extend(p.0[..3].iter().map(|&c| c as f64 / 255.0));
        alpha.push(p.0[3] as f64 / 255.0);
    }
    Ok(LoadedImage {
        width: w as usize,
        height: h as usize,
        rgb,
        alpha,
    })
}

use rayon::prelude::*;

use super::camera::Camera;
use super::place::WorldGaussian;
use super::project::project_gaussian;
use crate::error::{Error, Result};
use crate::math::Vec3;
use crate::uv::UvMap;

/// Contributions below this weight are skipped.
pub const ALPHA_CUTOFF: f64 = 1.0 / 255.0;
pub const MAX_WEIGHT: f64 = 0.999;
/// Compositing stops once transmittance drops below this.
pub const MIN_TRANSMITTANCE: f64 = 1e-6;
pub const DEFAULT_TILE_SIZE: usize = 16;

/// Linear RGB plus accumulated alpha, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct RenderedImage {
    pub width: usize,
    pub height: usize,
    /// `3 · width · height`
    pub rgb: Vec<f64>,
    pub alpha: Vec<f64>,
}

impl RenderedImage {
    pub fn filled(width: usize, height: usize, background: Vec3) -> Self {
        let n = width * height;
        let mut rgb = Vec::with_capacity(3 * n);
        for _ in 0..n {
            rgb.extend_from_slice(background.as_slice());
        }
        Self {
            width,
            height,
            rgb,
            alpha: vec![0.0; n],
        }
    }

    pub fn pixel(&self, x: usize, y: usize) -> [f64; 3] {
        let i = 3 * (y * self.width + x);
        [self.rgb[i], self.rgb[i + 1], self.rgb[i + 2]]
    }

    /// 8-bit RGBA, rounded after clamping to `[0, 1]`.
    pub fn to_rgba8(&self) -> Vec<u8> {
        let q = |v: f64| (v.clamp(0.0, 1.0) * 255.0).round() as u8;
        let mut out = Vec::with_capacity(4 * self.alpha.len());
        for (c, &a) in self.rgb.chunks_exact(3).zip(&self.alpha) {
            out.extend([q(c[0]), q(c[1]), q(c[2]), q(a)]);
        }
        out
    }

    /// Four-channel `r, g, b, alpha` raster for raw dumps.
    pub fn to_uv_map(&self) -> UvMap {
        let mut data = Vec::with_capacity(4 * self.alpha.len());
        for (c, &a) in self.rgb.chunks_exact(3).zip(&self.alpha) {
            data.extend([c[0], c[1], c[2], a]);
        }
        let n = self.alpha.len();
        UvMap::from_parts(self.width, self.height, 4, data, vec![true; n]).expect("consistent shape")
    }

    pub fn max_abs_diff(&self, other: &RenderedImage) -> f64 {
        self.rgb
            .iter()
            .zip(&other.rgb)
            .chain(self.alpha.iter().zip(&other.alpha))
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RasterSettings {
    pub tile_size: usize,
    pub background: Vec3,
}

impl Default for RasterSettings {
    fn default() -> Self {
        Self {
            tile_size: DEFAULT_TILE_SIZE,
            background: Vec3::zeros(),
        }
    }
}

#[derive(Clone, Copy)]
struct Prepared {
    mx: f64,
    my: f64,
    conic: [f64; 3],
    /// Largest Mahalanobis distance² at which the weight can reach the cutoff.
    q_max: f64,
    alpha: f64,
    rgb: [f64; 3],
    x0: usize,
    x1: usize,
    y0: usize,
    y1: usize,
}

fn prepare(g: &WorldGaussian, cam: &Camera) -> Option<(f64, Prepared)> {
    if !(g.alpha >= ALPHA_CUTOFF) {
        return None;
    }
    let s = project_gaussian(g, cam)?;
    let conic = s.conic()?;
    let q_max = 2.0 * (255.0 * g.alpha).ln() * (1.0 + 1e-9) + 1e-12;
    let rx = (q_max * s.cov[0]).sqrt();
    let ry = (q_max * s.cov[2]).sqrt();
    if ![s.mean.x, s.mean.y, rx, ry].iter().all(|v| v.is_finite()) {
        return None;
    }
    // pixel i is reachable when |i + 0.5 - mean| <= r
    let lo = |m: f64, r: f64| (m - r - 0.5).ceil();
    let hi = |m: f64, r: f64| (m - 0.5 + r).floor();
    let (xa, xb) = (lo(s.mean.x, rx), hi(s.mean.x, rx));
    let (ya, yb) = (lo(s.mean.y, ry), hi(s.mean.y, ry));
    let (w, h) = (cam.width as f64, cam.height as f64);
    if xb < 0.0 || yb < 0.0 || xa >= w || ya >= h || xa > xb || ya > yb {
        return None;
    }
    Some((
        s.depth,
        Prepared {
            mx: s.mean.x,
            my: s.mean.y,
            conic,
            q_max,
            alpha: g.alpha,
            rgb: [g.rgb.x, g.rgb.y, g.rgb.z],
            x0: xa.max(0.0) as usize,
            x1: xb.min(w - 1.0) as usize,
            y0: ya.max(0.0) as usize,
            y1: yb.min(h - 1.0) as usize,
        },
    ))
}

/// Projects, culls and sorts front to back (ties by input order).
fn prepare_all(gaussians: &[WorldGaussian], cam: &Camera) -> Vec<Prepared> {
    let (depths, splats): (Vec<f64>, Vec<Prepared>) = gaussians.par_iter().filter_map(|g| prepare(g, cam)).unzip();
    // depths are positive, so their bit patterns order like the values
    let mut keys: Vec<u128> = depths
        .iter()
        .enumerate()
        .map(|(k, d)| (d.to_bits() as u128) << 32 | k as u128)
        .collect();
    keys.par_sort_unstable();
    keys.into_iter().map(|k| splats[k as u32 as usize]).collect()
}

/// Composites one tile splat by splat; each pixel still sees its splats
/// front to back, so the result matches per-pixel evaluation exactly.
fn shade_tile(x0: usize, y0: usize, x1: usize, y1: usize, list: &[u32], splats: &[Prepared]) -> Vec<([f64; 3], f64)> {
    let tw = x1 - x0;
    let n = tw * (y1 - y0);
    let mut out = vec![([0.0; 3], 1.0); n];
    let mut done = 0;
    for &k in list {
        let s = &splats[k as usize];
        let (sx0, sx1) = (s.x0.max(x0), s.x1.min(x1 - 1));
        let (sy0, sy1) = (s.y0.max(y0), s.y1.min(y1 - 1));
        for py in sy0..=sy1 {
            let dy = py as f64 + 0.5 - s.my;
            let row = (py - y0) * tw;
            for px in sx0..=sx1 {
                let (c, t) = &mut out[row + px - x0];
                if *t < MIN_TRANSMITTANCE {
                    continue;
                }
                let dx = px as f64 + 0.5 - s.mx;
                let q = s.conic[0] * dx * dx + 2.0 * s.conic[1] * dx * dy + s.conic[2] * dy * dy;
                if q > s.q_max {
                    continue;
                }
                let w = (s.alpha * (-0.5 * q).exp()).min(MAX_WEIGHT);
                if w < ALPHA_CUTOFF {
                    continue;
                }
                let wt = w * *t;
                c[0] += wt * s.rgb[0];
                c[1] += wt * s.rgb[1];
                c[2] += wt * s.rgb[2];
                *t *= 1.0 - w;
                if *t < MIN_TRANSMITTANCE {
                    done += 1;
                }
            }
        }
        if done == n {
            break;
        }
    }
    out
}

/// Tile-based front-to-back splatting with default settings.
pub fn rasterize(gaussians: &[WorldGaussian], cam: &Camera, background: Vec3) -> RenderedImage {
    rasterize_with(
        gaussians,
        cam,
        &RasterSettings {
            background,
            ..RasterSettings::default()
        },
    )
    .expect("default tile size is valid")
}

pub fn rasterize_with(
    gaussians: &[WorldGaussian],
    cam: &Camera,
    settings: &RasterSettings,
) -> Result<RenderedImage> {
    let ts = settings.tile_size;
    if ts == 0 {
        return Err(Error::invalid("tile size must be positive"));
    }
    let (w, h) = (cam.width, cam.height);
    let splats = prepare_all(gaussians, cam);
    let tx = w.div_ceil(ts);
    let ty = h.div_ceil(ts);
    let mut bins: Vec<Vec<u32>> = vec![Vec::new(); tx * ty];
    for (k, s) in splats.iter().enumerate() {
        for by in s.y0 / ts..=s.y1 / ts {
            for bx in s.x0 / ts..=s.x1 / ts {
                bins[by * tx + bx].push(k as u32);
            }
        }
    }

    let bg = settings.background;
    let tiles: Vec<Vec<([f64; 3], f64)>> = bins
        .par_iter()
        .enumerate()
        .map(|(b, list)| {
            let (bx, by) = (b % tx, b / tx);
            let (x0, y0) = (bx * ts, by * ts);
            let (x1, y1) = ((x0 + ts).min(w), (y0 + ts).min(h));
            shade_tile(x0, y0, x1, y1, list, &splats)
        })
        .collect();

    let mut img = RenderedImage::filled(w, h, bg);
    for (b, tile) in tiles.into_iter().enumerate() {
        let (x0, y0) = ((b % tx) * ts, (b / tx) * ts);
        let x1 = (x0 + ts).min(w);
        let tw = x1 - x0;
        for (k, (c, t)) in tile.into_iter().enumerate() {
            let i = (y0 + k / tw) * w + x0 + k % tw;
            img.rgb[3 * i] = c[0] + t * bg.x;
            img.rgb[3 * i + 1] = c[1] + t * bg.y;
            img.rgb[3 * i + 2] = c[2] + t * bg.z;
            img.alpha[i] = 1.0 - t;
        }
    }
    Ok(img)
}

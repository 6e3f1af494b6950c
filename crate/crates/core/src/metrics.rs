//! Image- and map-level evaluation quantities.

use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::gaussians::GaussianParamMap;
use crate::render::RenderedImage;

pub const PSNR_CAP: f64 = 100.0;
pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
pub const SSIM_K1: f64 = 0.01;
pub const SSIM_K2: f64 = 0.03;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricReport {
    pub l1: Option<f64>,
    pub mask_l1: Option<f64>,
    pub psnr: Option<f64>,
    pub ssim: Option<f64>,
    pub offset_norm: Option<f64>,
    /// Learned perceptual metrics need pretrained weights and are never
    /// computed.
    pub lpips: &'static str,
}

/// Mean absolute difference.
pub fn l1(a: &[f64], b: &[f64]) -> Result<f64> {
    same_len(a, b)?;
    Ok(a.iter().zip(b).map(|(x, y)| (x - y).abs()).sum::<f64>() / a.len().max(1) as f64)
}

pub fn mse(a: &[f64], b: &[f64]) -> Result<f64> {
    same_len(a, b)?;
    Ok(a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>() / a.len().max(1) as f64)
}

/// `10 log10(1 / mse)` on `[0, 1]` data, capped at [`PSNR_CAP`] when
/// `mse < 1e-10`.
pub fn psnr(a: &[f64], b: &[f64]) -> Result<f64> {
    let m = mse(a, b)?;
    Ok(if m < 1e-10 { PSNR_CAP } else { -10.0 * m.log10() })
}

fn same_len(a: &[f64], b: &[f64]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::dim(format!("{} values vs {}", a.len(), b.len())));
    }
    Ok(())
}

fn gaussian_window(size: usize) -> Vec<f64> {
    let c = (size as f64 - 1.0) / 2.0;
    let g: Vec<f64> = (0..size)
        .map(|i| (-((i as f64 - c).powi(2)) / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp())
        .collect();
    let s: f64 = g.iter().sum();
    let g: Vec<f64> = g.iter().map(|v| v / s).collect();
    let mut w = vec![0.0; size * size];
    for y in 0..size {
        for x in 0..size {
            w[y * size + x] = g[y] * g[x];
        }
    }
    w
}

/// Mean structural similarity of one channel stored with `stride` values per
/// pixel at offset `ch`. Valid windows only; images smaller than the window
/// use a window as large as the smaller side.
fn ssim_channel(a: &[f64], b: &[f64], width: usize, height: usize, stride: usize, ch: usize) -> f64 {
    let size = SSIM_WINDOW.min(width).min(height);
    let win = gaussian_window(size);
    let c1 = (SSIM_K1 * 1.0).powi(2);
    let c2 = (SSIM_K2 * 1.0).powi(2);
    let (ow, oh) = (width - size + 1, height - size + 1);
    let total: f64 = (0..oh)
        .into_par_iter()
        .map(|oy| {
            let mut row = 0.0;
            for ox in 0..ow {
                let (mut mx, mut my, mut xx, mut yy, mut xy) = (0.0, 0.0, 0.0, 0.0, 0.0);
                for wy in 0..size {
                    for wx in 0..size {
                        let w = win[wy * size + wx];
                        let i = ((oy + wy) * width + ox + wx) * stride + ch;
                        let (x, y) = (a[i], b[i]);
                        mx += w * x;
                        my += w * y;
                        xx += w * x * x;
                        yy += w * y * y;
                        xy += w * x * y;
                    }
                }
                let vx = xx - mx * mx;
                let vy = yy - my * my;
                let cov = xy - mx * my;
                row += ((2.0 * mx * my + c1) * (2.0 * cov + c2))
                    / ((mx * mx + my * my + c1) * (vx + vy + c2));
            }
            row
        })
        .sum();
    total / (ow * oh) as f64
}

/// SSIM averaged over channels of interleaved images.
pub fn ssim(a: &[f64], b: &[f64], width: usize, height: usize, channels: usize) -> Result<f64> {
    same_len(a, b)?;
    if a.len() != width * height * channels || width == 0 || height == 0 || channels == 0 {
        return Err(Error::dim("image buffer does not match its dimensions"));
    }
    Ok((0..channels)
        .map(|c| ssim_channel(a, b, width, height, channels, c))
        .sum::<f64>()
        / channels as f64)
}

/// `reference` is interleaved RGB at the rendered size; `mask` one value per
/// pixel.
pub fn compute_metrics(
    rendered: &RenderedImage,
    reference: Option<&[f64]>,
    mask: Option<&[f64]>,
    offset: Option<&GaussianParamMap>,
) -> Result<MetricReport> {
    let mut report = MetricReport {
        l1: None,
        mask_l1: None,
        psnr: None,
        ssim: None,
        offset_norm: None,
        lpips: "unavailable",
    };
    if let Some(r) = reference {
        if r.len() != rendered.rgb.len() {
            return Err(Error::dim(format!(
                "reference has {} values, rendered image {}",
                r.len(),
                rendered.rgb.len()
            )));
        }
        report.l1 = Some(l1(&rendered.rgb, r)?);
        report.psnr = Some(psnr(&rendered.rgb, r)?);
        report.ssim = Some(ssim(&rendered.rgb, r, rendered.width, rendered.height, 3)?);
    }
    if let Some(m) = mask {
        report.mask_l1 = Some(l1(&rendered.alpha, m)?);
    }
    report.offset_norm = offset.map(GaussianParamMap::l2_norm);
    Ok(report)
}

/// One CSV row per `(frame id, report)`; absent values are empty cells.
pub fn metrics_csv(rows: &[(String, MetricReport)]) -> String {
    let cell = |v: Option<f64>| v.map(|x| format!("{x}")).unwrap_or_default();
    let mut out = String::from("frame,l1,mask_l1,psnr,ssim,offset_norm\n");
    for (id, r) in rows {
        out.push_str(&format!(
            "{id},{},{},{},{},{}\n",
            cell(r.l1),
            cell(r.mask_l1),
            cell(r.psnr),
            cell(r.ssim),
            cell(r.offset_norm)
        ));
    }
    out
}

/// JSON object keyed by frame id.
pub fn metrics_json(rows: &[(String, MetricReport)]) -> serde_json::Value {
    let mut map = serde_json::Map::new();
    for (id, r) in rows {
        map.insert(id.clone(), serde_json::to_value(r).expect("report serializes"));
    }
    serde_json::Value::Object(map)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::math::Vec3;

    #[test]
    fn identical_images() {
        let mut img = RenderedImage::filled(13, 12, Vec3::new(0.1, 0.5, 0.9));
        img.rgb[7] = 0.3;
        let r = compute_metrics(&img, Some(&img.rgb.clone()), Some(&img.alpha.clone()), None).unwrap();
        assert_eq!(r.l1, Some(0.0));
        assert_eq!(r.mask_l1, Some(0.0));
        assert_eq!(r.psnr, Some(PSNR_CAP));
        assert!((r.ssim.unwrap() - 1.0).abs() < 1e-9);
        assert_eq!(r.offset_norm, None);
    }

    #[test]
    fn constant_offset_psnr() {
        let a = vec![0.2; 300];
        let b = vec![0.3; 300];
        assert!((psnr(&a, &b).unwrap() - 20.0).abs() < 1e-6);
        assert!((psnr(&b, &a).unwrap() - 20.0).abs() < 1e-6);
    }

    #[test]
    fn small_images_shrink_window() {
        let a: Vec<f64> = (0..4 * 5).map(|i| (i as f64 * 0.37).sin().abs()).collect();
        assert!((ssim(&a, &a, 4, 5, 1).unwrap() - 1.0).abs() < 1e-12);
        assert!(ssim(&a, &a, 4, 4, 1).is_err());
    }

    #[test]
    fn mismatched_reference() {
        let img = RenderedImage::filled(2, 2, Vec3::zeros());
        assert!(compute_metrics(&img, Some(&[0.0; 3]), None, None).is_err());
    }

    #[test]
    fn zero_offset_norm() {
        let img = RenderedImage::filled(2, 2, Vec3::zeros());
        let r = compute_metrics(&img, None, None, Some(&GaussianParamMap::new(4, 4))).unwrap();
        assert_eq!(r.offset_norm, Some(0.0));
        assert_eq!(r.l1, None);
    }
}

//! Imperceptibility (PSNR, SSIM) and robustness (NC, BER) measures.

use serde::{Deserialize, Serialize};

use crate::codec::Payload;
use crate::error::{Error, Result};
use crate::image::GrayImage;

/// Reported PSNR for identical images.
pub const PSNR_CAP: f64 = 99.0;

pub const SSIM_WINDOW: usize = 11;
pub const SSIM_SIGMA: f64 = 1.5;
pub const SSIM_K1: f64 = 0.01;
pub const SSIM_K2: f64 = 0.03;

#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct QualityReport {
    #[serde(skip_serializing_if = "Option::is_none")]
    pub psnr: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ssim: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub nc: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub ber: Option<f64>,
}

pub fn mse(a: &GrayImage, b: &GrayImage) -> Result<f64> {
    a.ensure_same_dimensions(b)?;
    let sum: u64 = a
        .pixels()
        .iter()
        .zip(b.pixels())
        .map(|(&x, &y)| {
            let d = i64::from(x) - i64::from(y);
            (d * d) as u64
        })
        .sum();
    Ok(sum as f64 / a.len() as f64)
}

/// `10·log10(255² / MSE)`, capped at [`PSNR_CAP`].
pub fn psnr(a: &GrayImage, b: &GrayImage) -> Result<f64> {
    let m = mse(a, b)?;
    if m == 0.0 {
        return Ok(PSNR_CAP);
    }
    Ok((10.0 * (255.0f64 * 255.0 / m).log10()).min(PSNR_CAP))
}

fn gaussian_window() -> Vec<f64> {
    let r = (SSIM_WINDOW / 2) as f64;
    let mut w: Vec<f64> = (0..SSIM_WINDOW)
        .map(|i| {
            let d = i as f64 - r;
            (-(d * d) / (2.0 * SSIM_SIGMA * SSIM_SIGMA)).exp()
        })
        .collect();
    let s: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= s);
    w
}

/// Separable weighted filter over the fully contained window positions.
fn filter_valid(src: &[f64], w: usize, h: usize, k: &[f64]) -> (Vec<f64>, usize, usize) {
    let n = k.len();
    let (ow, oh) = (w - n + 1, h - n + 1);
    let mut tmp = vec![0.0; ow * h];
    for y in 0..h {
        let row = &src[y * w..(y + 1) * w];
        for x in 0..ow {
            tmp[y * ow + x] = k.iter().zip(&row[x..x + n]).map(|(a, b)| a * b).sum();
        }
    }
    let mut out = vec![0.0; ow * oh];
    for y in 0..oh {
        for x in 0..ow {
            out[y * ow + x] = k.iter().enumerate().map(|(i, kv)| kv * tmp[(y + i) * ow + x]).sum();
        }
    }
    (out, ow, oh)
}

/// Mean single-scale SSIM over all 11×11 Gaussian windows (σ = 1.5) that fit
/// in the image, with `K1 = 0.01`, `K2 = 0.03`, dynamic range 255.
pub fn ssim(a: &GrayImage, b: &GrayImage) -> Result<f64> {
    a.ensure_same_dimensions(b)?;
    let (w, h) = (a.width() as usize, a.height() as usize);
    if w < SSIM_WINDOW || h < SSIM_WINDOW {
        return Err(Error::DimensionMismatch(format!(
            "SSIM needs at least {SSIM_WINDOW}x{SSIM_WINDOW}, got {w}x{h}"
        )));
    }
    let c1 = (SSIM_K1 * 255.0).powi(2);
    let c2 = (SSIM_K2 * 255.0).powi(2);
    let k = gaussian_window();
    let x = a.to_real();
    let y = b.to_real();
    let xx: Vec<f64> = x.iter().map(|v| v * v).collect();
    let yy: Vec<f64> = y.iter().map(|v| v * v).collect();
    let xy: Vec<f64> = x.iter().zip(&y).map(|(p, q)| p * q).collect();

    let (mx, _, _) = filter_valid(&x, w, h, &k);
    let (my, _, _) = filter_valid(&y, w, h, &k);
    let (sxx, _, _) = filter_valid(&xx, w, h, &k);
    let (syy, _, _) = filter_valid(&yy, w, h, &k);
    let (sxy, ow, oh) = filter_valid(&xy, w, h, &k);

    let total: f64 = (0..ow * oh)
        .map(|i| {
            let (ux, uy) = (mx[i], my[i]);
            let vx = sxx[i] - ux * ux;
            let vy = syy[i] - uy * uy;
            let cov = sxy[i] - ux * uy;
            ((2.0 * ux * uy + c1) * (2.0 * cov + c2))
                / ((ux * ux + uy * uy + c1) * (vx + vy + c2))
        })
        .sum();
    Ok(total / (ow * oh) as f64)
}

fn ensure_same_len(a: &[bool], b: &[bool]) -> Result<()> {
    if a.len() != b.len() {
        return Err(Error::DimensionMismatch(format!(
            "bit sequences of length {} and {}",
            a.len(),
            b.len()
        )));
    }
    Ok(())
}

/// Normalized cross-correlation of two bit sequences with bits as `{0, 1}`:
/// `Σ wᵢw'ᵢ / √(Σ wᵢ² · Σ w'ᵢ²)`. Two all-zero sequences score 1, exactly one
/// all-zero sequence scores 0.
pub fn nc_bits(w: &[bool], w2: &[bool]) -> Result<f64> {
    ensure_same_len(w, w2)?;
    let ones_a = w.iter().filter(|&&b| b).count();
    let ones_b = w2.iter().filter(|&&b| b).count();
    let both = w.iter().zip(w2).filter(|(&a, &b)| a && b).count();
    Ok(match (ones_a, ones_b) {
        (0, 0) => 1.0,
        (0, _) | (_, 0) => 0.0,
        _ => both as f64 / ((ones_a * ones_b) as f64).sqrt(),
    })
}

/// Hamming distance divided by length.
pub fn ber_bits(w: &[bool], w2: &[bool]) -> Result<f64> {
    ensure_same_len(w, w2)?;
    if w.is_empty() {
        return Ok(0.0);
    }
    Ok(w.iter().zip(w2).filter(|(a, b)| a != b).count() as f64 / w.len() as f64)
}

pub fn nc(w: &Payload, w2: &Payload) -> f64 {
    nc_bits(w.bits(), w2.bits()).expect("payloads share a length")
}

pub fn ber(w: &Payload, w2: &Payload) -> f64 {
    ber_bits(w.bits(), w2.bits()).expect("payloads share a length")
}

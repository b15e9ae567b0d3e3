//! Edge density and brightness per macro-block, and the adaptive strength
//! factor derived from them.
//!
//! Blocks with many edges hide modifications well and get a larger strength
//! factor; bright blocks get a smaller one:
//!
//! ```text
//! sf = clamp(|alpha * edge_count - beta * brightness_level|, sf_min, sf_max)
//! ```
//!
//! `edge_count` is the fraction of Canny edge pixels in the block and
//! `brightness_level` the block's mean intensity divided by 255, so both lie
//! in `[0, 1]`.

use std::collections::VecDeque;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{GrayImage, MacroBlockGrid, MACRO_BLOCK};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PsychovisualParams {
    pub alpha: f64,
    pub beta: f64,
    pub sf_min: f64,
    pub sf_max: f64,
    /// Standard deviation of the Gaussian pre-smoothing, in pixels.
    pub canny_sigma: f64,
    /// Hysteresis thresholds as fractions of the maximum gradient magnitude.
    pub canny_low: f64,
    pub canny_high: f64,
}

impl Default for PsychovisualParams {
    fn default() -> Self {
        Self {
            alpha: 0.5,
            beta: 0.25,
            sf_min: 0.01,
            sf_max: 0.12,
            canny_sigma: 1.4,
            canny_low: 0.1,
            canny_high: 0.2,
        }
    }
}

impl PsychovisualParams {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: &str| Err(Error::InvalidParameter(msg.to_string()));
        if !(self.alpha >= 0.0 && self.beta >= 0.0) {
            return bad("alpha and beta must be nonnegative");
        }
        if !(self.sf_min > 0.0 && self.sf_min <= self.sf_max && self.sf_max.is_finite()) {
            return bad("strength factor bounds must satisfy 0 < sf_min <= sf_max");
        }
        if !(self.canny_sigma > 0.0 && self.canny_sigma.is_finite()) {
            return bad("canny_sigma must be positive");
        }
        if !(0.0 <= self.canny_low && self.canny_low < self.canny_high && self.canny_high <= 1.0) {
            return bad("canny thresholds must satisfy 0 <= low < high <= 1");
        }
        Ok(())
    }
}

/// Binary edge map with the dimensions of its source image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct EdgeMap {
    width: u32,
    height: u32,
    edges: Vec<bool>,
}

impl EdgeMap {
    pub fn new(width: u32, height: u32, edges: Vec<bool>) -> Result<Self> {
        if edges.len() != width as usize * height as usize {
            return Err(Error::DimensionMismatch(format!(
                "{} edge flags for {width}x{height}",
                edges.len()
            )));
        }
        Ok(Self {
            width,
            height,
            edges,
        })
    }

    pub fn dimensions(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    #[inline]
    pub fn is_edge(&self, x: u32, y: u32) -> bool {
        self.edges[y as usize * self.width as usize + x as usize]
    }

    pub fn count(&self) -> usize {
        self.edges.iter().filter(|&&e| e).count()
    }

    pub fn density(&self) -> f64 {
        self.count() as f64 / self.edges.len() as f64
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.edges
    }
}

fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let radius = (3.0 * sigma).ceil() as i64;
    let mut k: Vec<f64> = (-radius..=radius)
        .map(|i| (-((i * i) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let sum: f64 = k.iter().sum();
    k.iter_mut().for_each(|v| *v /= sum);
    k
}

/// Separable convolution with edge replication.
fn smooth(src: &[f64], w: usize, h: usize, kernel: &[f64]) -> Vec<f64> {
    let r = (kernel.len() / 2) as i64;
    let clamp = |v: i64, n: usize| v.clamp(0, n as i64 - 1) as usize;
    let mut tmp = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            tmp[y * w + x] = kernel
                .iter()
                .enumerate()
                .map(|(i, k)| k * src[y * w + clamp(x as i64 + i as i64 - r, w)])
                .sum();
        }
    }
    let mut out = vec![0.0; w * h];
    for y in 0..h {
        for x in 0..w {
            out[y * w + x] = kernel
                .iter()
                .enumerate()
                .map(|(i, k)| k * tmp[clamp(y as i64 + i as i64 - r, h) * w + x])
                .sum();
        }
    }
    out
}

/// Canny edge detector: Gaussian smoothing, Sobel gradients, non-maximum
/// suppression along the quantized gradient direction, then hysteresis with
/// 8-connectivity.
pub fn canny_edges(img: &GrayImage, params: &PsychovisualParams) -> EdgeMap {
    let (w, h) = (img.width() as usize, img.height() as usize);
    let smoothed = smooth(&img.to_real(), w, h, &gaussian_kernel(params.canny_sigma));
    let at = |x: i64, y: i64| {
        let x = x.clamp(0, w as i64 - 1) as usize;
        let y = y.clamp(0, h as i64 - 1) as usize;
        smoothed[y * w + x]
    };

    let mut gx = vec![0.0; w * h];
    let mut gy = vec![0.0; w * h];
    let mut mag = vec![0.0; w * h];
    for y in 0..h as i64 {
        for x in 0..w as i64 {
            let i = y as usize * w + x as usize;
            gx[i] = (at(x + 1, y - 1) + 2.0 * at(x + 1, y) + at(x + 1, y + 1))
                - (at(x - 1, y - 1) + 2.0 * at(x - 1, y) + at(x - 1, y + 1));
            gy[i] = (at(x - 1, y + 1) + 2.0 * at(x, y + 1) + at(x + 1, y + 1))
                - (at(x - 1, y - 1) + 2.0 * at(x, y - 1) + at(x + 1, y - 1));
            mag[i] = gx[i].hypot(gy[i]);
        }
    }
    let max_mag = mag.iter().cloned().fold(0.0, f64::max);
    if max_mag <= 0.0 {
        return EdgeMap::new(img.width(), img.height(), vec![false; w * h]).unwrap();
    }

    // Non-maximum suppression. Ties are broken toward the positive side so a
    // symmetric ridge two pixels wide yields a single line.
    let mut thin = vec![0.0; w * h];
    let m = |x: i64, y: i64| -> f64 {
        if x < 0 || y < 0 || x >= w as i64 || y >= h as i64 {
            0.0
        } else {
            mag[y as usize * w + x as usize]
        }
    };
    for y in 0..h as i64 {
        for x in 0..w as i64 {
            let i = y as usize * w + x as usize;
            let v = mag[i];
            if v == 0.0 {
                continue;
            }
            let mut angle = gy[i].atan2(gx[i]).to_degrees();
            if angle < 0.0 {
                angle += 180.0;
            }
            let (dx, dy) = if !(22.5..157.5).contains(&angle) {
                (1, 0)
            } else if angle < 67.5 {
                (1, 1)
            } else if angle < 112.5 {
                (0, 1)
            } else {
                (-1, 1)
            };
            let ahead = m(x + dx, y + dy);
            let behind = m(x - dx, y - dy);
            if v > ahead && v >= behind {
                thin[i] = v;
            }
        }
    }

    let high = params.canny_high * max_mag;
    let low = params.canny_low * max_mag;
    let mut edges = vec![false; w * h];
    let mut queue = VecDeque::new();
    for (i, &v) in thin.iter().enumerate() {
        if v >= high && v > 0.0 {
            edges[i] = true;
            queue.push_back(i);
        }
    }
    while let Some(i) = queue.pop_front() {
        let (x, y) = ((i % w) as i64, (i / w) as i64);
        for dy in -1..=1 {
            for dx in -1..=1 {
                let (nx, ny) = (x + dx, y + dy);
                if nx < 0 || ny < 0 || nx >= w as i64 || ny >= h as i64 {
                    continue;
                }
                let j = ny as usize * w + nx as usize;
                if !edges[j] && thin[j] >= low && thin[j] > 0.0 {
                    edges[j] = true;
                    queue.push_back(j);
                }
            }
        }
    }
    EdgeMap::new(img.width(), img.height(), edges).unwrap()
}

/// Per-macro-block statistics that drive the strength factor.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BlockStats {
    /// Edge pixels divided by the block area.
    pub edge_count: f64,
    /// Sum of intensities divided by `255 × area`.
    pub brightness_level: f64,
    pub sf: f64,
}

pub fn block_stats(
    img: &GrayImage,
    edges: &EdgeMap,
    grid: MacroBlockGrid,
    params: &PsychovisualParams,
) -> Result<Vec<BlockStats>> {
    if edges.dimensions() != img.dimensions() {
        return Err(Error::DimensionMismatch(format!(
            "edge map {:?} vs image {:?}",
            edges.dimensions(),
            img.dimensions()
        )));
    }
    if (grid.width(), grid.height()) != img.dimensions() {
        return Err(Error::DimensionMismatch("grid does not cover the image".into()));
    }
    let area = f64::from(MACRO_BLOCK * MACRO_BLOCK);
    Ok((0..grid.len())
        .map(|b| {
            let (x0, y0) = grid.origin(b);
            let mut edge_pixels = 0u32;
            let mut sum = 0u64;
            for y in y0..y0 + MACRO_BLOCK {
                for x in x0..x0 + MACRO_BLOCK {
                    edge_pixels += u32::from(edges.is_edge(x, y));
                    sum += u64::from(img.get(x, y));
                }
            }
            let mut stats = BlockStats {
                edge_count: f64::from(edge_pixels) / area,
                brightness_level: sum as f64 / (255.0 * area),
                sf: 0.0,
            };
            stats.sf = strength_factor(&stats, params);
            stats
        })
        .collect())
}

pub fn strength_factor(stats: &BlockStats, params: &PsychovisualParams) -> f64 {
    (params.alpha * stats.edge_count - params.beta * stats.brightness_level)
        .abs()
        .clamp(params.sf_min, params.sf_max)
}

/// Canny on the whole image followed by per-block statistics.
pub fn analyze(img: &GrayImage, params: &PsychovisualParams) -> Result<Vec<BlockStats>> {
    let grid = MacroBlockGrid::for_image(img)?;
    let edges = canny_edges(img, params);
    block_stats(img, &edges, grid, params)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn stats(edge_count: f64, brightness_level: f64) -> BlockStats {
        BlockStats {
            edge_count,
            brightness_level,
            sf: 0.0,
        }
    }

    #[test]
    fn strength_factor_examples() {
        let p = PsychovisualParams {
            alpha: 0.5,
            beta: 0.25,
            ..Default::default()
        };
        assert_relative_eq!(strength_factor(&stats(0.10, 0.40), &p), 0.05, epsilon = 1e-12);
        assert_eq!(strength_factor(&stats(0.0, 0.0), &p), p.sf_min);
        let sym = PsychovisualParams {
            alpha: 0.3,
            beta: 0.3,
            ..Default::default()
        };
        assert_eq!(strength_factor(&stats(0.42, 0.42), &sym), sym.sf_min);
        assert_eq!(strength_factor(&stats(1.0, 0.0), &p), p.sf_max);
    }

    #[test]
    fn constant_image_has_no_edges() {
        let img = GrayImage::filled(64, 64, 90).unwrap();
        assert_eq!(canny_edges(&img, &PsychovisualParams::default()).count(), 0);
    }

    #[test]
    fn vertical_step_gives_one_column() {
        let img = GrayImage::from_fn(64, 64, |x, _| if x < 32 { 0 } else { 255 }).unwrap();
        let e = canny_edges(&img, &PsychovisualParams::default());
        let cols: Vec<u32> = (0..64).filter(|&x| (0..64).any(|y| e.is_edge(x, y))).collect();
        assert_eq!(cols.len(), 1, "edge columns {cols:?}");
        assert!(cols[0] == 31 || cols[0] == 32);
        assert!((0..64).all(|y| e.is_edge(cols[0], y)));
    }

    #[test]
    fn block_stats_normalization() {
        let black = GrayImage::filled(128, 128, 0).unwrap();
        let none = EdgeMap::new(128, 128, vec![false; 128 * 128]).unwrap();
        let grid = MacroBlockGrid::for_image(&black).unwrap();
        let p = PsychovisualParams::default();
        let s = block_stats(&black, &none, grid, &p).unwrap()[0];
        assert_eq!((s.edge_count, s.brightness_level), (0.0, 0.0));
        assert_eq!(s.sf, p.sf_min);

        let white = GrayImage::filled(128, 128, 255).unwrap();
        assert_eq!(block_stats(&white, &none, grid, &p).unwrap()[0].brightness_level, 1.0);

        let gray = GrayImage::filled(128, 128, 128).unwrap();
        let flags = (0..128 * 128).map(|i| i < 1638).collect();
        let edges = EdgeMap::new(128, 128, flags).unwrap();
        let s = block_stats(&gray, &edges, grid, &p).unwrap()[0];
        assert_relative_eq!(s.edge_count, 1638.0 / 16384.0, epsilon = 1e-15);
        assert_relative_eq!(s.brightness_level, 128.0 / 255.0, epsilon = 1e-15);
    }

    #[test]
    fn block_stats_rejects_mismatched_edges() {
        let img = GrayImage::filled(256, 128, 10).unwrap();
        let edges = EdgeMap::new(128, 128, vec![false; 128 * 128]).unwrap();
        let grid = MacroBlockGrid::for_image(&img).unwrap();
        assert!(block_stats(&img, &edges, grid, &PsychovisualParams::default()).is_err());
    }

    #[test]
    fn stats_ignore_pixel_arrangement() {
        let p = PsychovisualParams::default();
        let a = GrayImage::from_fn(128, 128, |x, y| ((x * 7 + y * 3) % 256) as u8).unwrap();
        let mut shuffled: Vec<u8> = a.pixels().to_vec();
        shuffled.reverse();
        let b = GrayImage::new(128, 128, shuffled).unwrap();
        let flags: Vec<bool> = (0..128 * 128).map(|i| i % 7 == 0).collect();
        let mut rev = flags.clone();
        rev.reverse();
        let grid = MacroBlockGrid::for_image(&a).unwrap();
        let sa = block_stats(&a, &EdgeMap::new(128, 128, flags).unwrap(), grid, &p).unwrap();
        let sb = block_stats(&b, &EdgeMap::new(128, 128, rev).unwrap(), grid, &p).unwrap();
        assert_eq!(sa, sb);
    }

    #[test]
    fn params_validation() {
        assert!(PsychovisualParams::default().validate().is_ok());
        let bad = PsychovisualParams {
            canny_low: 0.3,
            canny_high: 0.2,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
        let bad = PsychovisualParams {
            sf_min: 0.0,
            ..Default::default()
        };
        assert!(bad.validate().is_err());
    }
}

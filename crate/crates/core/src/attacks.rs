//! Attack battery used to measure robustness: median filtering, salt & pepper
//! noise, additive Gaussian noise, histogram equalization and JPEG
//! compression. Stochastic attacks are reproducible from their seed.

use std::fmt;
use std::io::Cursor;

use ::image::codecs::jpeg::JpegEncoder;
use ::image::{ExtendedColorType, ImageFormat};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{quantize, GrayImage};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum AttackSpec {
    /// Identity; the "without attack" row of a benchmark.
    None,
    MedianFilter {
        kernel: u32,
    },
    SaltPepper {
        density: f64,
        #[serde(default)]
        seed: u64,
    },
    /// `variance` is on the `[0, 1]` intensity scale.
    GaussianNoise {
        variance: f64,
        #[serde(default)]
        seed: u64,
    },
    HistEqualize,
    Jpeg {
        quality: u8,
    },
}

impl AttackSpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidParameter(m));
        match *self {
            AttackSpec::MedianFilter { kernel } if kernel < 3 || kernel % 2 == 0 => {
                bad(format!("median kernel must be odd and at least 3, got {kernel}"))
            }
            AttackSpec::SaltPepper { density, .. } if !(0.0..=1.0).contains(&density) => {
                bad(format!("salt & pepper density must lie in [0, 1], got {density}"))
            }
            AttackSpec::GaussianNoise { variance, .. } if !(variance >= 0.0 && variance.is_finite()) => {
                bad(format!("gaussian variance must be nonnegative, got {variance}"))
            }
            AttackSpec::Jpeg { quality } if !(1..=100).contains(&quality) => {
                bad(format!("JPEG quality must lie in 1..=100, got {quality}"))
            }
            _ => Ok(()),
        }
    }

    pub fn is_stochastic(&self) -> bool {
        matches!(self, AttackSpec::SaltPepper { .. } | AttackSpec::GaussianNoise { .. })
    }

    /// Same attack with its seed replaced (no-op for deterministic attacks).
    pub fn with_seed(self, new_seed: u64) -> Self {
        match self {
            AttackSpec::SaltPepper { density, .. } => AttackSpec::SaltPepper {
                density,
                seed: new_seed,
            },
            AttackSpec::GaussianNoise { variance, .. } => AttackSpec::GaussianNoise {
                variance,
                seed: new_seed,
            },
            other => other,
        }
    }

    /// Short stable name, without the seed.
    pub fn label(&self) -> String {
        match *self {
            AttackSpec::None => "none".into(),
            AttackSpec::MedianFilter { kernel } => format!("median_{kernel}x{kernel}"),
            AttackSpec::SaltPepper { density, .. } => format!("salt_pepper_{density}"),
            AttackSpec::GaussianNoise { variance, .. } => format!("gaussian_{variance}"),
            AttackSpec::HistEqualize => "hist_equalize".into(),
            AttackSpec::Jpeg { quality } => format!("jpeg_q{quality}"),
        }
    }

    pub fn apply(&self, img: &GrayImage) -> Result<GrayImage> {
        self.validate()?;
        match *self {
            AttackSpec::None => Ok(img.clone()),
            AttackSpec::MedianFilter { kernel } => median_filter(img, kernel),
            AttackSpec::SaltPepper { density, seed } => salt_pepper(img, density, seed),
            AttackSpec::GaussianNoise { variance, seed } => gaussian_noise(img, variance, seed),
            AttackSpec::HistEqualize => Ok(hist_equalize(img)),
            AttackSpec::Jpeg { quality } => jpeg_attack(img, quality),
        }
    }
}

impl fmt::Display for AttackSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.label())
    }
}

/// Median over a `kernel`×`kernel` window with edge replication.
pub fn median_filter(img: &GrayImage, kernel: u32) -> Result<GrayImage> {
    if kernel < 3 || kernel % 2 == 0 {
        return Err(Error::InvalidParameter(format!(
            "median kernel must be odd and at least 3, got {kernel}"
        )));
    }
    let r = i64::from(kernel / 2);
    let mut window = Vec::with_capacity((kernel * kernel) as usize);
    let mid = (kernel * kernel / 2) as usize;
    GrayImage::from_fn(img.width(), img.height(), |x, y| {
        window.clear();
        for dy in -r..=r {
            for dx in -r..=r {
                window.push(img.get_clamped(i64::from(x) + dx, i64::from(y) + dy));
            }
        }
        *window.select_nth_unstable(mid).1
    })
}

/// Each pixel is hit with probability `density`; a hit becomes 0 or 255 with
/// equal odds.
pub fn salt_pepper(img: &GrayImage, density: f64, seed: u64) -> Result<GrayImage> {
    if !(0.0..=1.0).contains(&density) {
        return Err(Error::InvalidParameter(format!(
            "salt & pepper density must lie in [0, 1], got {density}"
        )));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = img.clone();
    for p in out.pixels_mut() {
        let hit = rng.random::<f64>() < density;
        let salt = rng.random::<bool>();
        if hit {
            *p = if salt { 255 } else { 0 };
        }
    }
    Ok(out)
}

/// `p' = clamp(round(255 · (p/255 + n)))` with `n ~ N(0, variance)`.
pub fn gaussian_noise(img: &GrayImage, variance: f64, seed: u64) -> Result<GrayImage> {
    if !(variance >= 0.0 && variance.is_finite()) {
        return Err(Error::InvalidParameter(format!(
            "gaussian variance must be nonnegative, got {variance}"
        )));
    }
    if variance == 0.0 {
        return Ok(img.clone());
    }
    let normal = Normal::new(0.0, variance.sqrt()).map_err(|e| Error::InvalidParameter(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut out = img.clone();
    for p in out.pixels_mut() {
        let n: f64 = normal.sample(&mut rng);
        *p = quantize(255.0 * (f64::from(*p) / 255.0 + n));
    }
    Ok(out)
}

/// Global equalization `s = round(255 · cdf(r))`.
pub fn hist_equalize(img: &GrayImage) -> GrayImage {
    let mut hist = [0u64; 256];
    for &p in img.pixels() {
        hist[p as usize] += 1;
    }
    let total = img.len() as f64;
    let mut lut = [0u8; 256];
    let mut acc = 0u64;
    for (level, &count) in hist.iter().enumerate() {
        acc += count;
        lut[level] = quantize(255.0 * acc as f64 / total);
    }
    let mut out = img.clone();
    out.pixels_mut().iter_mut().for_each(|p| *p = lut[*p as usize]);
    out
}

/// Baseline JPEG encode at `quality`, then decode.
pub fn jpeg_attack(img: &GrayImage, quality: u8) -> Result<GrayImage> {
    if !(1..=100).contains(&quality) {
        return Err(Error::InvalidParameter(format!(
            "JPEG quality must lie in 1..=100, got {quality}"
        )));
    }
    let mut bytes = Vec::new();
    JpegEncoder::new_with_quality(&mut bytes, quality)
        .encode(img.pixels(), img.width(), img.height(), ExtendedColorType::L8)
        .map_err(|e| Error::Codec(e.to_string()))?;
    let decoded = ::image::load(Cursor::new(bytes), ImageFormat::Jpeg)
        .map_err(|e| Error::Codec(e.to_string()))?
        .into_luma8();
    GrayImage::new(decoded.width(), decoded.height(), decoded.into_raw())
}

//! Deterministic synthetic 512x512 test images.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::image::GrayImage;

pub const FIXTURE_SIZE: u32 = 512;

/// Diagonal ramp spanning 16..=239.
pub fn gradient() -> GrayImage {
    let span = f64::from(2 * (FIXTURE_SIZE - 1));
    GrayImage::from_fn(FIXTURE_SIZE, FIXTURE_SIZE, |x, y| {
        (16.0 + 223.0 * f64::from(x + y) / span).round() as u8
    })
    .expect("fixture dimensions are valid")
}

/// 32-pixel checkerboard in 72/184 over a faint horizontal ramp.
pub fn checkerboard() -> GrayImage {
    GrayImage::from_fn(FIXTURE_SIZE, FIXTURE_SIZE, |x, y| {
        let base = if (x / 32 + y / 32) % 2 == 0 { 72 } else { 184 };
        (base + x / 32) as u8
    })
    .expect("fixture dimensions are valid")
}

/// Uniform noise in 32..=223.
pub fn noise(seed: u64) -> GrayImage {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    GrayImage::from_fn(FIXTURE_SIZE, FIXTURE_SIZE, |_, _| rng.random_range(32..=223))
        .expect("fixture dimensions are valid")
}

/// Smooth interference pattern with local texture, resembling a photograph
/// more than the other fixtures.
pub fn waves() -> GrayImage {
    GrayImage::from_fn(FIXTURE_SIZE, FIXTURE_SIZE, |x, y| {
        let (fx, fy) = (f64::from(x), f64::from(y));
        let v = 128.0
            + 50.0 * (fx / 37.0).sin() * (fy / 53.0).cos()
            + 30.0 * ((fx + fy) / 11.0).sin()
            + 15.0 * ((fx - 2.0 * fy) / 5.0).cos();
        v.round().clamp(0.0, 255.0) as u8
    })
    .expect("fixture dimensions are valid")
}

/// All fixtures with their file stems.
pub fn all() -> Vec<(&'static str, GrayImage)> {
    vec![
        ("gradient", gradient()),
        ("checkerboard", checkerboard()),
        ("noise", noise(7)),
        ("waves", waves()),
    ]
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn fixtures_are_sized_and_unsaturated() {
        for (name, img) in all() {
            assert_eq!(img.dimensions(), (512, 512), "{name}");
            let (lo, hi) = img
                .pixels()
                .iter()
                .fold((255u8, 0u8), |(lo, hi), &p| (lo.min(p), hi.max(p)));
            assert!(lo > 0 && hi < 255, "{name}: {lo}..{hi}");
        }
        assert_eq!(noise(7), noise(7));
        assert_ne!(noise(7), noise(8));
    }
}

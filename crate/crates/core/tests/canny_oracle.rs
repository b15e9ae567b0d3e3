//! The hand-written Canny detector against imageproc's implementation.
//!
//! imageproc blurs into 8-bit samples before differentiating and keeps
//! gradient ties on both sides of a ridge, so its maps are slightly thicker.
//! Every edge found here must lie within one pixel of a reference edge and
//! most reference edges must be matched.

use adaptmark::psychovisual::{canny_edges, EdgeMap, PsychovisualParams};
use adaptmark::{fixtures, GrayImage};
use imageproc::filter::gaussian_blur_f32;
use imageproc::gradients::{horizontal_sobel, vertical_sobel};
use imageproc::image;

fn oracle(img: &GrayImage, params: &PsychovisualParams) -> EdgeMap {
    let buf = image::GrayImage::from_raw(img.width(), img.height(), img.pixels().to_vec()).unwrap();
    let blurred = gaussian_blur_f32(&buf, params.canny_sigma as f32);
    let (gx, gy) = (horizontal_sobel(&blurred), vertical_sobel(&blurred));
    let max = gx
        .iter()
        .zip(gy.iter())
        .map(|(h, v)| (*h as f32).hypot(*v as f32))
        .fold(0.0f32, f32::max);
    let out = imageproc::edges::canny(
        &buf,
        params.canny_low as f32 * max,
        params.canny_high as f32 * max,
    );
    EdgeMap::new(img.width(), img.height(), out.pixels().map(|p| p.0[0] > 0).collect()).unwrap()
}

/// Fraction of edges in `a` with an edge of `b` within one pixel.
fn covered(a: &EdgeMap, b: &EdgeMap) -> f64 {
    let (w, h) = a.dimensions();
    let mut hit = 0;
    for y in 0..h {
        for x in 0..w {
            if !a.is_edge(x, y) {
                continue;
            }
            let near = (y.saturating_sub(1)..=(y + 1).min(h - 1))
                .any(|yy| (x.saturating_sub(1)..=(x + 1).min(w - 1)).any(|xx| b.is_edge(xx, yy)));
            hit += usize::from(near);
        }
    }
    hit as f64 / a.count().max(1) as f64
}

fn disk_scene() -> GrayImage {
    GrayImage::from_fn(256, 256, |x, y| {
        let (dx, dy) = (f64::from(x) - 100.0, f64::from(y) - 140.0);
        let mut v = if dx * dx + dy * dy < 60.0 * 60.0 { 190 } else { 60 };
        if (170..230).contains(&x) && (30..90).contains(&y) {
            v = 120;
        }
        v
    })
    .unwrap()
}

#[test]
fn agrees_with_reference_detector() {
    let params = PsychovisualParams::default();
    for (name, img) in [("disk", disk_scene()), ("waves", fixtures::waves()), ("checker", fixtures::checkerboard())] {
        let ours = canny_edges(&img, &params);
        let theirs = oracle(&img, &params);
        assert!(ours.count() > 0, "{name}");
        let (p, r) = (covered(&ours, &theirs), covered(&theirs, &ours));
        eprintln!("{name}: ours {} theirs {} precision {p:.3} recall {r:.3}", ours.count(), theirs.count());
        assert!(p >= 0.98 && r >= 0.9, "{name}: precision {p}, recall {r}");
        // Ties on symmetric steps double the reference ridge at most.
        assert!(ours.count() <= theirs.count() && 2 * ours.count() + 64 >= theirs.count(), "{name}");
    }
}

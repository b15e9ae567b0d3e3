//! Grayscale raster, PGM/PNG I/O and 128×128 macro-block partitioning.

use std::fs;
use std::io::{BufReader, Cursor};
use std::path::Path;

use ::image::codecs::png::PngEncoder;
use ::image::codecs::pnm::{PnmEncoder, PnmSubtype, SampleEncoding};
use ::image::{DynamicImage, ExtendedColorType, ImageEncoder, ImageFormat, ImageReader};

use crate::error::{Error, Result};

/// Side length of a macro-block in pixels.
pub const MACRO_BLOCK: u32 = 128;

/// 8-bit single-channel image, row-major.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct GrayImage {
    width: u32,
    height: u32,
    pixels: Vec<u8>,
}

impl GrayImage {
    pub fn new(width: u32, height: u32, pixels: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::EmptyImage);
        }
        let expected = width as usize * height as usize;
        if pixels.len() != expected {
            return Err(Error::PixelCount {
                expected,
                actual: pixels.len(),
            });
        }
        Ok(Self {
            width,
            height,
            pixels,
        })
    }

    /// Builds an image by evaluating `f(x, y)` for every pixel.
    pub fn from_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> u8) -> Result<Self> {
        let mut pixels = Vec::with_capacity(width as usize * height as usize);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y));
            }
        }
        Self::new(width, height, pixels)
    }

    pub fn filled(width: u32, height: u32, value: u8) -> Result<Self> {
        Self::new(width, height, vec![value; width as usize * height as usize])
    }

    /// Quantizes real samples: rounds to nearest and clamps to `[0, 255]`.
    pub fn from_real(width: u32, height: u32, samples: &[f64]) -> Result<Self> {
        let pixels = samples.iter().map(|&v| quantize(v)).collect();
        Self::new(width, height, pixels)
    }

    #[inline]
    pub fn width(&self) -> u32 {
        self.width
    }

    #[inline]
    pub fn height(&self) -> u32 {
        self.height
    }

    #[inline]
    pub fn dimensions(&self) -> (u32, u32) {
        (self.width, self.height)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.pixels.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.pixels.is_empty()
    }

    #[inline]
    pub fn pixels(&self) -> &[u8] {
        &self.pixels
    }

    #[inline]
    pub fn pixels_mut(&mut self) -> &mut [u8] {
        &mut self.pixels
    }

    pub fn into_pixels(self) -> Vec<u8> {
        self.pixels
    }

    #[inline]
    pub fn get(&self, x: u32, y: u32) -> u8 {
        self.pixels[y as usize * self.width as usize + x as usize]
    }

    #[inline]
    pub fn set(&mut self, x: u32, y: u32, value: u8) {
        let w = self.width as usize;
        self.pixels[y as usize * w + x as usize] = value;
    }

    /// Pixel lookup with coordinates clamped to the image (edge replication).
    #[inline]
    pub fn get_clamped(&self, x: i64, y: i64) -> u8 {
        let x = x.clamp(0, self.width as i64 - 1) as u32;
        let y = y.clamp(0, self.height as i64 - 1) as u32;
        self.get(x, y)
    }

    pub fn to_real(&self) -> Vec<f64> {
        self.pixels.iter().map(|&p| f64::from(p)).collect()
    }

    /// Copies the `w`×`h` window whose top-left corner is `(x0, y0)`.
    pub fn crop(&self, x0: u32, y0: u32, w: u32, h: u32) -> Result<Self> {
        if x0 + w > self.width || y0 + h > self.height {
            return Err(Error::DimensionMismatch(format!(
                "crop {w}x{h}+{x0}+{y0} exceeds {}x{}",
                self.width, self.height
            )));
        }
        let mut pixels = Vec::with_capacity(w as usize * h as usize);
        for y in y0..y0 + h {
            let start = y as usize * self.width as usize + x0 as usize;
            pixels.extend_from_slice(&self.pixels[start..start + w as usize]);
        }
        Self::new(w, h, pixels)
    }

    pub(crate) fn ensure_same_dimensions(&self, other: &Self) -> Result<()> {
        if self.dimensions() != other.dimensions() {
            return Err(Error::DimensionMismatch(format!(
                "{}x{} vs {}x{}",
                self.width, self.height, other.width, other.height
            )));
        }
        Ok(())
    }
}

#[inline]
pub(crate) fn quantize(v: f64) -> u8 {
    v.round().clamp(0.0, 255.0) as u8
}

/// ITU-R BT.601 luma, rounded to the nearest integer.
#[inline]
pub fn luma_bt601(r: u8, g: u8, b: u8) -> u8 {
    quantize(0.299 * f64::from(r) + 0.587 * f64::from(g) + 0.114 * f64::from(b))
}

fn from_dynamic(img: DynamicImage) -> Result<GrayImage> {
    let (w, h) = (img.width(), img.height());
    let pixels = match img {
        DynamicImage::ImageLuma8(buf) => buf.into_raw(),
        gray @ (DynamicImage::ImageLumaA8(_)
        | DynamicImage::ImageLuma16(_)
        | DynamicImage::ImageLumaA16(_)) => gray.into_luma8().into_raw(),
        color => color
            .into_rgb8()
            .pixels()
            .map(|p| luma_bt601(p[0], p[1], p[2]))
            .collect(),
    };
    GrayImage::new(w, h, pixels)
}

/// Reads a PGM (P2/P5) or PNG file. Color input is reduced to BT.601 luma.
pub fn load_image(path: impl AsRef<Path>) -> Result<GrayImage> {
    let path = path.as_ref();
    let read_err = |source| Error::Read {
        path: path.to_path_buf(),
        source,
    };
    let file = fs::File::open(path).map_err(|e| read_err(e.into()))?;
    let reader = ImageReader::new(BufReader::new(file))
        .with_guessed_format()
        .map_err(|e| read_err(e.into()))?;
    match reader.format() {
        Some(ImageFormat::Png) | Some(ImageFormat::Pnm) => {}
        _ => return Err(Error::UnsupportedFormat(path.to_path_buf())),
    }
    let decoded = reader.decode().map_err(read_err)?;
    if decoded.width() == 0 || decoded.height() == 0 {
        return Err(Error::EmptyImage);
    }
    from_dynamic(decoded)
}

/// Decodes an in-memory PGM or PNG.
pub fn decode_image(bytes: &[u8]) -> Result<GrayImage> {
    let reader = ImageReader::new(Cursor::new(bytes))
        .with_guessed_format()
        .map_err(|e| Error::Codec(e.to_string()))?;
    match reader.format() {
        Some(ImageFormat::Png) | Some(ImageFormat::Pnm) => {}
        _ => return Err(Error::UnsupportedFormat("<memory>".into())),
    }
    from_dynamic(reader.decode().map_err(|e| Error::Codec(e.to_string()))?)
}

/// Encoding chosen from the file extension: `.png`, or `.pgm`/`.pnm` (binary P5).
fn encode_for(img: &GrayImage, path: &Path) -> Result<Vec<u8>> {
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(str::to_ascii_lowercase);
    let mut out = Vec::new();
    let res = match ext.as_deref() {
        Some("png") => PngEncoder::new(&mut out).write_image(
            img.pixels(),
            img.width,
            img.height,
            ExtendedColorType::L8,
        ),
        Some("pgm") | Some("pnm") => PnmEncoder::new(&mut out)
            .with_subtype(PnmSubtype::Graymap(SampleEncoding::Binary))
            .write_image(img.pixels(), img.width, img.height, ExtendedColorType::L8),
        _ => return Err(Error::UnsupportedFormat(path.to_path_buf())),
    };
    res.map_err(|e| Error::Codec(e.to_string()))?;
    Ok(out)
}

/// Writes `img` as PGM or PNG depending on the extension of `path`.
///
/// The image is encoded in memory first; if writing fails midway the partial
/// file is removed.
pub fn save_image(img: &GrayImage, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let bytes = encode_for(img, path)?;
    if let Err(source) = fs::write(path, &bytes) {
        let _ = fs::remove_file(path);
        return Err(Error::Write {
            path: path.to_path_buf(),
            source,
        });
    }
    Ok(())
}

/// Layout of the non-overlapping macro-blocks covering an image.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct MacroBlockGrid {
    pub blocks_x: usize,
    pub blocks_y: usize,
}

impl MacroBlockGrid {
    pub const BLOCK_SIZE: u32 = MACRO_BLOCK;

    /// Grid for `width`×`height`; both must be exact multiples of 128.
    pub fn new(width: u32, height: u32) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::EmptyImage);
        }
        if width % MACRO_BLOCK != 0 || height % MACRO_BLOCK != 0 {
            return Err(Error::NotBlockAligned {
                width,
                height,
                block: MACRO_BLOCK,
            });
        }
        Ok(Self {
            blocks_x: (width / MACRO_BLOCK) as usize,
            blocks_y: (height / MACRO_BLOCK) as usize,
        })
    }

    pub fn for_image(img: &GrayImage) -> Result<Self> {
        Self::new(img.width, img.height)
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.blocks_x * self.blocks_y
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn width(&self) -> u32 {
        self.blocks_x as u32 * MACRO_BLOCK
    }

    pub fn height(&self) -> u32 {
        self.blocks_y as u32 * MACRO_BLOCK
    }

    /// Pixel origin of block `index` in raster order.
    #[inline]
    pub fn origin(&self, index: usize) -> (u32, u32) {
        let bx = (index % self.blocks_x) as u32;
        let by = (index / self.blocks_x) as u32;
        (bx * MACRO_BLOCK, by * MACRO_BLOCK)
    }
}

/// Splits `img` into 128×128 blocks in row-major raster order.
pub fn partition(img: &GrayImage) -> Result<(Vec<GrayImage>, MacroBlockGrid)> {
    let grid = MacroBlockGrid::for_image(img)?;
    let blocks = (0..grid.len())
        .map(|i| {
            let (x0, y0) = grid.origin(i);
            img.crop(x0, y0, MACRO_BLOCK, MACRO_BLOCK)
        })
        .collect::<Result<Vec<_>>>()?;
    Ok((blocks, grid))
}

/// Inverse of [`partition`].
pub fn reassemble(blocks: &[GrayImage], grid: MacroBlockGrid) -> Result<GrayImage> {
    if blocks.len() != grid.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} blocks for a {}x{} grid",
            blocks.len(),
            grid.blocks_x,
            grid.blocks_y
        )));
    }
    let (w, h) = (grid.width(), grid.height());
    let mut out = vec![0u8; w as usize * h as usize];
    let bs = MACRO_BLOCK as usize;
    for (i, block) in blocks.iter().enumerate() {
        if block.dimensions() != (MACRO_BLOCK, MACRO_BLOCK) {
            return Err(Error::DimensionMismatch(format!(
                "block {i} is {}x{}",
                block.width, block.height
            )));
        }
        let (x0, y0) = grid.origin(i);
        for row in 0..bs {
            let dst = (y0 as usize + row) * w as usize + x0 as usize;
            out[dst..dst + bs].copy_from_slice(&block.pixels[row * bs..(row + 1) * bs]);
        }
    }
    GrayImage::new(w, h, out)
}

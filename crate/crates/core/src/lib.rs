//! Adaptive blind watermarking for grayscale images.
//!
//! A 256-bit payload is written into coefficient pairs of 8×8 DCT blocks taken
//! from the detail subbands of a two-level wavelet decomposition of every
//! 128×128 macro-block. Each payload bit is embedded several times and
//! recovered by majority vote, without access to the original image. The
//! embedding strength of every macro-block adapts to its edge density and
//! brightness.
//!
//! Modules:
//! - [`image`]: raster type, file I/O and macro-block partitioning.
//! - [`transforms`]: two-level 2-D DWT and orthonormal 8×8 DCT.
//! - [`psychovisual`]: Canny edges, per-block statistics and strength factor.
//! - [`codec`]: slot layout, pair embedding and extraction, voting.
//! - [`attacks`]: the robustness attack battery.
//! - [`metrics`]: PSNR, SSIM, NC and BER.
//! - [`fixtures`]: deterministic synthetic test images.

pub mod attacks;
pub mod codec;
pub mod error;
pub mod fixtures;
pub mod image;
pub mod metrics;
pub mod psychovisual;
pub mod transforms;

pub use crate::codec::{embed, embed_with_strengths, extract, EmbedParams, Extraction, Payload};
pub use crate::error::{Error, Result};
pub use crate::image::GrayImage;
pub use crate::psychovisual::PsychovisualParams;

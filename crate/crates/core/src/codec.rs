//! Embedding and blind extraction of a 256-bit payload.
//!
//! Every 8×8 tile of the LH1, HL1, LH2, HL2 and HH2 subbands of each
//! macro-block is a *slot* carrying one copy of one payload bit in the pair of
//! DCT coefficients at `(6, 4)` and `(4, 6)`. A 128×128 macro-block therefore
//! holds `64 + 64 + 16 + 16 + 16 = 176` slots, and a 512×512 image exactly
//! `11 × 256` of them.
//!
//! Bit 0 is represented by `C[6,4] > C[4,6]`, bit 1 by the reverse order. The
//! embedder moves a pair into the right order following a three-way rule
//! driven by the threshold `T = sf·(|C[v,u]| + |C[u,v]|) + 0.001`; the
//! extractor only compares the two coefficients, so it needs neither the
//! cover image nor the strength factors.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::image::{GrayImage, MacroBlockGrid, MACRO_BLOCK};
use crate::psychovisual::{self, PsychovisualParams};
use crate::transforms::{self, dct_8x8, idct_8x8, Plane, Subband, SubbandSet, Wavelet};

pub const PAYLOAD_BITS: usize = 256;
pub const PAYLOAD_BYTES: usize = PAYLOAD_BITS / 8;

/// Additive floor of the threshold.
pub const THRESHOLD_FLOOR: f64 = 0.001;

/// Smallest decision margin ever left after embedding, so that a zero floor
/// still yields a strict order.
const MIN_MARGIN: f64 = 1e-9;

/// A 256-bit watermark. Bit 0 is the most significant bit of the first byte.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Payload {
    bits: [bool; PAYLOAD_BITS],
}

impl Payload {
    pub fn from_bits(bits: &[bool]) -> Result<Self> {
        let bits: [bool; PAYLOAD_BITS] = bits
            .try_into()
            .map_err(|_| Error::Payload(format!("got {} bits", bits.len())))?;
        Ok(Self { bits })
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self> {
        if bytes.len() != PAYLOAD_BYTES {
            return Err(Error::Payload(format!(
                "got {} bytes, expected {PAYLOAD_BYTES}",
                bytes.len()
            )));
        }
        let mut bits = [false; PAYLOAD_BITS];
        for (i, bit) in bits.iter_mut().enumerate() {
            *bit = bytes[i / 8] >> (7 - i % 8) & 1 == 1;
        }
        Ok(Self { bits })
    }

    /// Parses 64 hexadecimal digits.
    pub fn from_hex(hex: &str) -> Result<Self> {
        let hex = hex.trim();
        if hex.len() != PAYLOAD_BITS / 4 {
            return Err(Error::Payload(format!(
                "expected {} hex digits, got {}",
                PAYLOAD_BITS / 4,
                hex.len()
            )));
        }
        let bytes = (0..PAYLOAD_BYTES)
            .map(|i| {
                hex.get(2 * i..2 * i + 2)
                    .and_then(|pair| u8::from_str_radix(pair, 16).ok())
                    .ok_or_else(|| Error::Payload(format!("invalid hex digit in {hex:?}")))
            })
            .collect::<Result<Vec<u8>>>()?;
        Self::from_bytes(&bytes)
    }

    pub fn random<R: Rng + ?Sized>(rng: &mut R) -> Self {
        let mut bits = [false; PAYLOAD_BITS];
        bits.iter_mut().for_each(|b| *b = rng.random());
        Self { bits }
    }

    pub fn bits(&self) -> &[bool; PAYLOAD_BITS] {
        &self.bits
    }

    pub fn to_bytes(&self) -> [u8; PAYLOAD_BYTES] {
        let mut out = [0u8; PAYLOAD_BYTES];
        for (i, &b) in self.bits.iter().enumerate() {
            out[i / 8] |= u8::from(b) << (7 - i % 8);
        }
        out
    }

    pub fn to_hex(&self) -> String {
        self.to_bytes().iter().map(|b| format!("{b:02x}")).collect()
    }

    pub fn complement(&self) -> Self {
        let mut bits = self.bits;
        bits.iter_mut().for_each(|b| *b = !*b);
        Self { bits }
    }
}

impl std::fmt::Debug for Payload {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "Payload({})", self.to_hex())
    }
}

/// Zero-based `(row, column)` position in an 8×8 DCT block.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct DctPos(pub usize, pub usize);

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EmbedParams {
    /// Position of `C[v,u]`, favored by bit 0.
    pub pos_a: DctPos,
    /// Position of `C[u,v]`, favored by bit 1.
    pub pos_b: DctPos,
    /// Copies of every payload bit.
    pub redundancy: usize,
    pub subband_order: Vec<Subband>,
    /// Minimum magnitude of both coefficients of a marked pair whose margin
    /// would otherwise fall below twice this value.
    pub magnitude_floor: f64,
    pub psychovisual: PsychovisualParams,
    pub adaptive: bool,
    /// Strength factor for every block when `adaptive` is off.
    pub fixed_sf: f64,
    pub wavelet: Wavelet,
}

impl Default for EmbedParams {
    fn default() -> Self {
        Self {
            pos_a: DctPos(6, 4),
            pos_b: DctPos(4, 6),
            redundancy: 11,
            subband_order: vec![
                Subband::LH1,
                Subband::HL1,
                Subband::LH2,
                Subband::HL2,
                Subband::HH2,
            ],
            magnitude_floor: 2.0,
            psychovisual: PsychovisualParams::default(),
            adaptive: true,
            fixed_sf: 0.04,
            wavelet: Wavelet::Haar,
        }
    }
}

impl EmbedParams {
    pub fn non_adaptive() -> Self {
        Self {
            adaptive: false,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidParameter(msg));
        for DctPos(v, u) in [self.pos_a, self.pos_b] {
            if v >= 8 || u >= 8 {
                return bad(format!("DCT position ({v},{u}) outside the 8x8 block"));
            }
        }
        if self.pos_a == self.pos_b {
            return bad("the two DCT positions must differ".into());
        }
        if self.redundancy == 0 || self.redundancy % 2 == 0 {
            return bad(format!("redundancy must be odd, got {}", self.redundancy));
        }
        if self.subband_order.is_empty() {
            return bad("subband_order is empty".into());
        }
        for (i, b) in self.subband_order.iter().enumerate() {
            if self.subband_order[..i].contains(b) {
                return bad(format!("subband {} listed twice", b.name()));
            }
        }
        if !(self.magnitude_floor >= 0.0 && self.magnitude_floor.is_finite()) {
            return bad("magnitude_floor must be a finite nonnegative number".into());
        }
        if !(self.fixed_sf >= 0.0 && self.fixed_sf.is_finite()) {
            return bad("fixed_sf must be a finite nonnegative number".into());
        }
        self.psychovisual.validate()
    }

    /// Slots in one macro-block.
    pub fn slots_per_block(&self) -> usize {
        self.subband_order.iter().map(|&b| tiles_in(b)).sum()
    }
}

fn band_size(band: Subband) -> usize {
    SubbandSet::SOURCE_SIZE >> band.level()
}

fn tiles_in(band: Subband) -> usize {
    (band_size(band) / 8).pow(2)
}

/// Location of one slot.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SlotAddr {
    pub macro_block: usize,
    pub subband: Subband,
    /// Raster index of the 8×8 tile within the subband.
    pub tile: usize,
}

/// Slot enumeration: macro-blocks in raster order, then `subband_order`, then
/// tiles in raster order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SlotMap {
    slots: Vec<SlotAddr>,
    per_block: usize,
}

impl SlotMap {
    pub fn capacity(&self) -> usize {
        self.slots.len()
    }

    pub fn per_block(&self) -> usize {
        self.per_block
    }

    pub fn slots(&self) -> &[SlotAddr] {
        &self.slots
    }

    pub fn get(&self, index: usize) -> Option<SlotAddr> {
        self.slots.get(index).copied()
    }
}

pub fn build_slot_map(grid: MacroBlockGrid, params: &EmbedParams) -> SlotMap {
    let mut slots = Vec::with_capacity(grid.len() * params.slots_per_block());
    for macro_block in 0..grid.len() {
        for &subband in &params.subband_order {
            slots.extend((0..tiles_in(subband)).map(|tile| SlotAddr {
                macro_block,
                subband,
                tile,
            }));
        }
    }
    SlotMap {
        slots,
        per_block: params.slots_per_block(),
    }
}

/// Copy-major assignment: slot `s` carries bit `s mod payload_len` of copy
/// `s div payload_len`.
pub fn assign_bit(slot: usize, redundancy: usize, payload_len: usize) -> Result<(usize, usize)> {
    if payload_len == 0 || slot >= redundancy * payload_len {
        return Err(Error::SlotOutOfRange {
            slot,
            redundancy,
            payload_len,
        });
    }
    Ok((slot % payload_len, slot / payload_len))
}

/// The coefficients `C[v,u]` (at `pos_a`) and `C[u,v]` (at `pos_b`).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CoeffPair {
    pub c_vu: f64,
    pub c_uv: f64,
}

impl CoeffPair {
    pub fn new(c_vu: f64, c_uv: f64) -> Self {
        Self { c_vu, c_uv }
    }
}

pub fn compute_threshold(pair: CoeffPair, sf: f64) -> f64 {
    sf * (pair.c_vu.abs() + pair.c_uv.abs()) + THRESHOLD_FLOOR
}

/// Zero counts as nonnegative.
#[inline]
fn same_sign(a: f64, b: f64) -> bool {
    (a < 0.0) == (b < 0.0)
}

/// Moves `pair` so that [`extract_pair`] returns `bit`.
///
/// With `fav` the coefficient the bit favors (`C[v,u]` for 0, `C[u,v]` for 1)
/// and `other` the remaining one:
/// - `fav − other > T` with equal signs: unchanged;
/// - `other − fav > T` with equal signs: `fav = |fav|/2`, `other = −|other|/2`;
/// - otherwise: `fav = |fav|`, `other = −|other|`.
///
/// Afterwards, if `fav − other` is below `2·floor`, the pair is widened: a
/// pair with `fav ≥ 0 ≥ other` gets both magnitudes raised to at least
/// `floor`; a same-sign pair is pushed apart symmetrically to margin
/// `2·floor`.
pub fn embed_pair(pair: CoeffPair, bit: bool, threshold: f64, floor: f64) -> CoeffPair {
    let (fav, other) = if bit {
        (pair.c_uv, pair.c_vu)
    } else {
        (pair.c_vu, pair.c_uv)
    };
    let (mut fav, mut other) = if fav - other > threshold && same_sign(fav, other) {
        (fav, other)
    } else if other - fav > threshold && same_sign(fav, other) {
        (fav.abs() / 2.0, -other.abs() / 2.0)
    } else {
        (fav.abs(), -other.abs())
    };
    let floor = floor.max(MIN_MARGIN);
    let margin = fav - other;
    if margin < 2.0 * floor {
        if fav >= 0.0 && other <= 0.0 {
            fav = fav.max(floor);
            other = other.min(-floor);
        } else {
            let push = floor - margin / 2.0;
            fav += push;
            other -= push;
        }
    }
    if bit {
        CoeffPair::new(other, fav)
    } else {
        CoeffPair::new(fav, other)
    }
}

/// Blind decision rule; `true` is bit 1.
pub fn extract_pair(pair: CoeffPair) -> bool {
    let CoeffPair { c_vu, c_uv } = pair;
    if same_sign(c_vu, c_uv) && c_vu > c_uv {
        false
    } else if same_sign(c_vu, c_uv) && c_uv > c_vu {
        true
    } else {
        c_vu < 0.0
    }
}

/// Majority bit and the fraction of votes agreeing with it.
pub fn majority_vote(votes: &[bool]) -> (bool, f64) {
    let ones = votes.iter().filter(|&&v| v).count();
    let bit = 2 * ones > votes.len();
    let agree = if bit { ones } else { votes.len() - ones };
    (bit, agree as f64 / votes.len().max(1) as f64)
}

fn read_pair(block: &transforms::DctBlock, params: &EmbedParams) -> CoeffPair {
    CoeffPair::new(
        block.get(params.pos_a.0, params.pos_a.1),
        block.get(params.pos_b.0, params.pos_b.1),
    )
}

fn tile_coords(band: Subband, tile: usize) -> (usize, usize) {
    let per_row = band_size(band) / 8;
    (tile % per_row, tile / per_row)
}

/// Embeds one bit per slot of a macro-block, in slot order, directly in its
/// subbands. Only the bands listed in `subband_order` are touched.
pub fn embed_subbands(
    bands: &mut SubbandSet,
    bits: &[bool],
    sf: f64,
    params: &EmbedParams,
) -> Result<()> {
    if bits.len() != params.slots_per_block() {
        return Err(Error::Codec(format!(
            "{} bits for {} slots",
            bits.len(),
            params.slots_per_block()
        )));
    }
    let mut bits = bits.iter();
    for &band in &params.subband_order {
        let plane = bands.band_mut(band);
        for tile in 0..tiles_in(band) {
            let (tx, ty) = tile_coords(band, tile);
            let mut block = dct_8x8(&plane.tile8(tx, ty))?;
            let pair = read_pair(&block, params);
            let threshold = compute_threshold(pair, sf);
            let bit = *bits.next().expect("length checked above");
            let marked = embed_pair(pair, bit, threshold, params.magnitude_floor);
            block.set(params.pos_a.0, params.pos_a.1, marked.c_vu);
            block.set(params.pos_b.0, params.pos_b.1, marked.c_uv);
            plane.set_tile8(tx, ty, &idct_8x8(&block));
        }
    }
    Ok(())
}

/// Reads one bit per slot of a macro-block, in slot order.
pub fn extract_subbands(bands: &SubbandSet, params: &EmbedParams) -> Result<Vec<bool>> {
    let mut out = Vec::with_capacity(params.slots_per_block());
    for &band in &params.subband_order {
        let plane = bands.band(band);
        for tile in 0..tiles_in(band) {
            let (tx, ty) = tile_coords(band, tile);
            out.push(extract_pair(read_pair(&dct_8x8(&plane.tile8(tx, ty))?, params)));
        }
    }
    Ok(out)
}

fn check_capacity(grid: MacroBlockGrid, params: &EmbedParams) -> Result<SlotMap> {
    let map = build_slot_map(grid, params);
    let required = params.redundancy * PAYLOAD_BITS;
    if map.capacity() != required {
        return Err(Error::Capacity {
            capacity: map.capacity(),
            required,
            redundancy: params.redundancy,
            payload_bits: PAYLOAD_BITS,
        });
    }
    Ok(map)
}

fn block_plane(img: &GrayImage, grid: MacroBlockGrid, index: usize) -> Plane {
    let (x0, y0) = grid.origin(index);
    let n = MACRO_BLOCK as usize;
    let mut data = Vec::with_capacity(n * n);
    for y in y0..y0 + MACRO_BLOCK {
        let start = y as usize * img.width() as usize + x0 as usize;
        data.extend(img.pixels()[start..start + n].iter().map(|&p| f64::from(p)));
    }
    Plane::from_vec(n, n, data).expect("macro-block size")
}

/// Strength factor of every macro-block: from the cover image's edges and
/// brightness when adaptive, else `fixed_sf` everywhere.
pub fn block_strengths(cover: &GrayImage, params: &EmbedParams) -> Result<Vec<f64>> {
    let grid = MacroBlockGrid::for_image(cover)?;
    if params.adaptive {
        Ok(psychovisual::analyze(cover, &params.psychovisual)?
            .iter()
            .map(|s| s.sf)
            .collect())
    } else {
        Ok(vec![params.fixed_sf; grid.len()])
    }
}

/// Watermarks `cover` with `payload`.
pub fn embed(cover: &GrayImage, payload: &Payload, params: &EmbedParams) -> Result<GrayImage> {
    params.validate()?;
    let strengths = block_strengths(cover, params)?;
    embed_with_strengths(cover, payload, &strengths, params)
}

/// Like [`embed`], with the per-macro-block strength factors supplied by the
/// caller (one per block, raster order).
pub fn embed_with_strengths(
    cover: &GrayImage,
    payload: &Payload,
    strengths: &[f64],
    params: &EmbedParams,
) -> Result<GrayImage> {
    params.validate()?;
    let grid = MacroBlockGrid::for_image(cover)?;
    let map = check_capacity(grid, params)?;
    if strengths.len() != grid.len() {
        return Err(Error::DimensionMismatch(format!(
            "{} strength factors for {} macro-blocks",
            strengths.len(),
            grid.len()
        )));
    }
    let per_block = map.per_block();

    let marked: Vec<Plane> = (0..grid.len())
        .into_par_iter()
        .map(|mb| {
            let bits: Vec<bool> = (mb * per_block..(mb + 1) * per_block)
                .map(|slot| {
                    assign_bit(slot, params.redundancy, PAYLOAD_BITS)
                        .map(|(bit, _)| payload.bits[bit])
                })
                .collect::<Result<_>>()?;
            let mut bands = transforms::dwt2_two_level(&block_plane(cover, grid, mb), params.wavelet)?;
            embed_subbands(&mut bands, &bits, strengths[mb], params)?;
            transforms::idwt2_two_level(&bands, params.wavelet)
        })
        .collect::<Result<_>>()?;

    let (w, h) = cover.dimensions();
    let mut samples = vec![0.0; w as usize * h as usize];
    let n = MACRO_BLOCK as usize;
    for (mb, plane) in marked.iter().enumerate() {
        let (x0, y0) = grid.origin(mb);
        for row in 0..n {
            let dst = (y0 as usize + row) * w as usize + x0 as usize;
            samples[dst..dst + n].copy_from_slice(&plane.data()[row * n..(row + 1) * n]);
        }
    }
    GrayImage::from_real(w, h, &samples)
}

/// Result of blind extraction.
#[derive(Debug, Clone, PartialEq)]
pub struct Extraction {
    pub payload: Payload,
    /// Per bit, the fraction of copies agreeing with the voted value.
    pub confidence: Vec<f64>,
    /// Raw per-copy decisions, `copies[copy][bit]`.
    pub copies: Vec<Vec<bool>>,
}

impl Extraction {
    pub fn mean_confidence(&self) -> f64 {
        self.confidence.iter().sum::<f64>() / self.confidence.len() as f64
    }
}

/// Recovers the payload from `img` alone.
pub fn extract(img: &GrayImage, params: &EmbedParams) -> Result<Extraction> {
    params.validate()?;
    let grid = MacroBlockGrid::for_image(img)?;
    let map = check_capacity(grid, params)?;
    let per_block = map.per_block();

    let decisions: Vec<Vec<bool>> = (0..grid.len())
        .into_par_iter()
        .map(|mb| {
            let bands = transforms::dwt2_two_level(&block_plane(img, grid, mb), params.wavelet)?;
            extract_subbands(&bands, params)
        })
        .collect::<Result<_>>()?;

    let mut copies = vec![vec![false; PAYLOAD_BITS]; params.redundancy];
    for (mb, block) in decisions.iter().enumerate() {
        for (offset, &d) in block.iter().enumerate() {
            let (bit, copy) = assign_bit(mb * per_block + offset, params.redundancy, PAYLOAD_BITS)?;
            copies[copy][bit] = d;
        }
    }

    let mut bits = [false; PAYLOAD_BITS];
    let mut confidence = Vec::with_capacity(PAYLOAD_BITS);
    let mut votes = Vec::with_capacity(params.redundancy);
    for (i, out) in bits.iter_mut().enumerate() {
        votes.clear();
        votes.extend(copies.iter().map(|c| c[i]));
        let (bit, agree) = majority_vote(&votes);
        *out = bit;
        confidence.push(agree);
    }
    Ok(Extraction {
        payload: Payload { bits },
        confidence,
        copies,
    })
}

//! Block-DCT baseline image codec.
//!
//! Each channel is padded to a multiple of 8 by edge replication, split into
//! 8×8 blocks, transformed with an orthonormal 2-D DCT-II and quantized with
//! the JPEG luminance table scaled by quality (IJG scaling). Coefficients are
//! zigzag-scanned and entropy coded with the fixed JPEG luminance DC/AC
//! Huffman tables (differential DC, run/size AC symbols, EOB and ZRL). The DC
//! step never exceeds 16, keeping flat blocks within one intensity level.
//!
//! Stream layout: `"GDCT" | version u8 | width u32 | height u32 |
//! channels u8 | quality u8 | bitstream` (channels coded one after another,
//! blocks in raster order, final byte zero-padded).

use alloc::vec;
use alloc::vec::Vec;

use crate::bits::{BitReader, BitWriter};
use crate::image::{clamp_u8, Image};

pub const DCT_MAGIC: &[u8; 4] = b"GDCT";
pub const DCT_VERSION: u8 = 1;
const DC_STEP_MAX: f64 = 16.0;
const HEADER_LEN: usize = 15;

#[rustfmt::skip]
const LUMA_QTABLE: [u16; 64] = [
    16, 11, 10, 16,  24,  40,  51,  61,
    12, 12, 14, 19,  26,  58,  60,  55,
    14, 13, 16, 24,  40,  57,  69,  56,
    14, 17, 22, 29,  51,  87,  80,  62,
    18, 22, 37, 56,  68, 109, 103,  77,
    24, 35, 55, 64,  81, 104, 113,  92,
    49, 64, 78, 87, 103, 121, 120, 101,
    72, 92, 95, 98, 112, 100, 103,  99,
];

#[rustfmt::skip]
const UNZIGZAG: [usize; 64] = [
     0,  1,  8, 16,  9,  2,  3, 10,
    17, 24, 32, 25, 18, 11,  4,  5,
    12, 19, 26, 33, 40, 48, 41, 34,
    27, 20, 13,  6,  7, 14, 21, 28,
    35, 42, 49, 56, 57, 50, 43, 36,
    29, 22, 15, 23, 30, 37, 44, 51,
    58, 59, 52, 45, 38, 31, 39, 46,
    53, 60, 61, 54, 47, 55, 62, 63,
];

const DC_LENGTHS: [u8; 16] = [0, 1, 5, 1, 1, 1, 1, 1, 1, 0, 0, 0, 0, 0, 0, 0];
const DC_VALUES: [u8; 12] = [0, 1, 2, 3, 4, 5, 6, 7, 8, 9, 10, 11];
const AC_LENGTHS: [u8; 16] = [0, 2, 1, 3, 3, 2, 4, 3, 5, 5, 4, 4, 0, 0, 1, 0x7d];
#[rustfmt::skip]
const AC_VALUES: [u8; 162] = [
    0x01, 0x02, 0x03, 0x00, 0x04, 0x11, 0x05, 0x12, 0x21, 0x31, 0x41, 0x06, 0x13, 0x51, 0x61, 0x07,
    0x22, 0x71, 0x14, 0x32, 0x81, 0x91, 0xA1, 0x08, 0x23, 0x42, 0xB1, 0xC1, 0x15, 0x52, 0xD1, 0xF0,
    0x24, 0x33, 0x62, 0x72, 0x82, 0x09, 0x0A, 0x16, 0x17, 0x18, 0x19, 0x1A, 0x25, 0x26, 0x27, 0x28,
    0x29, 0x2A, 0x34, 0x35, 0x36, 0x37, 0x38, 0x39, 0x3A, 0x43, 0x44, 0x45, 0x46, 0x47, 0x48, 0x49,
    0x4A, 0x53, 0x54, 0x55, 0x56, 0x57, 0x58, 0x59, 0x5A, 0x63, 0x64, 0x65, 0x66, 0x67, 0x68, 0x69,
    0x6A, 0x73, 0x74, 0x75, 0x76, 0x77, 0x78, 0x79, 0x7A, 0x83, 0x84, 0x85, 0x86, 0x87, 0x88, 0x89,
    0x8A, 0x92, 0x93, 0x94, 0x95, 0x96, 0x97, 0x98, 0x99, 0x9A, 0xA2, 0xA3, 0xA4, 0xA5, 0xA6, 0xA7,
    0xA8, 0xA9, 0xAA, 0xB2, 0xB3, 0xB4, 0xB5, 0xB6, 0xB7, 0xB8, 0xB9, 0xBA, 0xC2, 0xC3, 0xC4, 0xC5,
    0xC6, 0xC7, 0xC8, 0xC9, 0xCA, 0xD2, 0xD3, 0xD4, 0xD5, 0xD6, 0xD7, 0xD8, 0xD9, 0xDA, 0xE1, 0xE2,
    0xE3, 0xE4, 0xE5, 0xE6, 0xE7, 0xE8, 0xE9, 0xEA, 0xF1, 0xF2, 0xF3, 0xF4, 0xF5, 0xF6, 0xF7, 0xF8,
    0xF9, 0xFA,
];

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum DctError {
    #[error("quality {0} outside 1..=100")]
    Quality(u8),
    #[error("corrupt stream: {0}")]
    Corrupt(&'static str),
}

/// Canonical Huffman code: `(length, code)` per symbol value.
struct Huffman {
    codes: [(u8, u16); 256],
    /// (length, code, symbol) sorted by length then code.
    table: Vec<(u8, u16, u8)>,
}

impl Huffman {
    fn new(lengths: &[u8; 16], values: &[u8]) -> Self {
        let mut codes = [(0u8, 0u16); 256];
        let mut table = Vec::with_capacity(values.len());
        let mut code = 0u16;
        let mut k = 0;
        for (i, &n) in lengths.iter().enumerate() {
            let len = i as u8 + 1;
            for _ in 0..n {
                codes[values[k] as usize] = (len, code);
                table.push((len, code, values[k]));
                code += 1;
                k += 1;
            }
            code <<= 1;
        }
        Huffman { codes, table }
    }

    fn write(&self, w: &mut BitWriter, symbol: u8) {
        let (len, code) = self.codes[symbol as usize];
        debug_assert!(len > 0, "symbol {symbol} has no code");
        w.write(u32::from(code), len);
    }

    fn read(&self, r: &mut BitReader<'_>) -> Result<u8, DctError> {
        let mut code = 0u16;
        let mut len = 0u8;
        let mut idx = 0;
        while len < 16 {
            code = (code << 1) | u16::from(r.read_bit().ok_or(DctError::Corrupt("truncated bitstream"))?);
            len += 1;
            while idx < self.table.len() && self.table[idx].0 == len {
                if self.table[idx].1 == code {
                    return Ok(self.table[idx].2);
                }
                idx += 1;
            }
        }
        Err(DctError::Corrupt("invalid huffman code"))
    }
}

fn quant_table(quality: u8) -> [f64; 64] {
    let q = u32::from(quality);
    let scale = if q < 50 { 5000 / q } else { 200 - 2 * q };
    let mut t = [0.0; 64];
    for (o, &b) in t.iter_mut().zip(&LUMA_QTABLE) {
        *o = ((u32::from(b) * scale + 50) / 100).clamp(1, 255) as f64;
    }
    t[0] = t[0].min(DC_STEP_MAX);
    t
}

fn dct_matrix() -> [f64; 64] {
    let mut m = [0.0; 64];
    for u in 0..8 {
        let c = if u == 0 { libm::sqrt(1.0 / 8.0) } else { libm::sqrt(2.0 / 8.0) };
        for x in 0..8 {
            m[u * 8 + x] = c * libm::cos((2 * x + 1) as f64 * u as f64 * core::f64::consts::PI / 16.0);
        }
    }
    m
}

/// Orthonormal 2-D DCT-II of an 8×8 block.
pub fn fdct8x8(block: &[f64; 64]) -> [f64; 64] {
    let m = dct_matrix();
    let mut tmp = [0.0; 64];
    for u in 0..8 {
        for y in 0..8 {
            tmp[u * 8 + y] = (0..8).map(|x| m[u * 8 + x] * block[y * 8 + x]).sum();
        }
    }
    let mut out = [0.0; 64];
    for v in 0..8 {
        for u in 0..8 {
            out[v * 8 + u] = (0..8).map(|y| m[v * 8 + y] * tmp[u * 8 + y]).sum();
        }
    }
    out
}

/// Inverse of [`fdct8x8`].
pub fn idct8x8(coef: &[f64; 64]) -> [f64; 64] {
    let m = dct_matrix();
    let mut tmp = [0.0; 64];
    for u in 0..8 {
        for y in 0..8 {
            tmp[u * 8 + y] = (0..8).map(|v| m[v * 8 + y] * coef[v * 8 + u]).sum();
        }
    }
    let mut out = [0.0; 64];
    for y in 0..8 {
        for x in 0..8 {
            out[y * 8 + x] = (0..8).map(|u| m[u * 8 + x] * tmp[u * 8 + y]).sum();
        }
    }
    out
}

fn magnitude_category(v: i32) -> u8 {
    (32 - v.unsigned_abs().leading_zeros()) as u8
}

fn write_value(w: &mut BitWriter, v: i32, size: u8) {
    if size == 0 {
        return;
    }
    let bits = if v < 0 { v - 1 } else { v } as u32 & ((1u32 << size) - 1);
    w.write(bits, size);
}

fn read_value(r: &mut BitReader<'_>, size: u8) -> Result<i32, DctError> {
    if size == 0 {
        return Ok(0);
    }
    let raw = r.read(size).ok_or(DctError::Corrupt("truncated bitstream"))? as i32;
    Ok(if raw < (1 << (size - 1)) { raw - (1 << size) + 1 } else { raw })
}

/// Number of 8×8 DCTs (2-D) needed for an image of these dimensions.
pub fn block_count(width: usize, height: usize, channels: usize) -> usize {
    width.div_ceil(8) * height.div_ceil(8) * channels
}

pub fn dct_baseline_encode(image: &Image, quality: u8) -> Result<Vec<u8>, DctError> {
    if !(1..=100).contains(&quality) {
        return Err(DctError::Quality(quality));
    }
    let qt = quant_table(quality);
    let dc = Huffman::new(&DC_LENGTHS, &DC_VALUES);
    let ac = Huffman::new(&AC_LENGTHS, &AC_VALUES);
    let (w, h) = (image.width(), image.height());
    let mut out = Vec::new();
    out.extend_from_slice(DCT_MAGIC);
    out.push(DCT_VERSION);
    out.extend_from_slice(&(w as u32).to_le_bytes());
    out.extend_from_slice(&(h as u32).to_le_bytes());
    out.push(image.channels() as u8);
    out.push(quality);

    let mut bw = BitWriter::new();
    for c in 0..image.channels() {
        let plane = image.channel(c);
        let mut prev_dc = 0i32;
        for by in (0..h).step_by(8) {
            for bx in (0..w).step_by(8) {
                let mut block = [0.0; 64];
                for y in 0..8 {
                    for x in 0..8 {
                        let v = clamp_u8(plane.at_clamped((bx + x) as isize, (by + y) as isize));
                        block[y * 8 + x] = f64::from(v) - 128.0;
                    }
                }
                let coef = fdct8x8(&block);
                let mut q = [0i32; 64];
                for i in 0..64 {
                    q[i] = libm::round(coef[i] / qt[i]) as i32;
                }
                q[0] = q[0].clamp(prev_dc - 2047, prev_dc + 2047);
                for v in q.iter_mut().skip(1) {
                    *v = (*v).clamp(-1023, 1023);
                }
                let diff = q[0] - prev_dc;
                prev_dc = q[0];
                let size = magnitude_category(diff);
                dc.write(&mut bw, size);
                write_value(&mut bw, diff, size);

                let mut run = 0u8;
                for k in 1..64 {
                    let v = q[UNZIGZAG[k]];
                    if v == 0 {
                        run += 1;
                        continue;
                    }
                    while run > 15 {
                        ac.write(&mut bw, 0xF0);
                        run -= 16;
                    }
                    let size = magnitude_category(v);
                    ac.write(&mut bw, (run << 4) | size);
                    write_value(&mut bw, v, size);
                    run = 0;
                }
                if run > 0 {
                    ac.write(&mut bw, 0x00);
                }
            }
        }
    }
    out.extend(bw.finish());
    Ok(out)
}

pub fn dct_baseline_decode(bytes: &[u8]) -> Result<Image, DctError> {
    if bytes.len() < HEADER_LEN {
        return Err(DctError::Corrupt("truncated header"));
    }
    if &bytes[..4] != DCT_MAGIC {
        return Err(DctError::Corrupt("bad magic"));
    }
    if bytes[4] != DCT_VERSION {
        return Err(DctError::Corrupt("unsupported version"));
    }
    let w = u32::from_le_bytes(bytes[5..9].try_into().unwrap()) as usize;
    let h = u32::from_le_bytes(bytes[9..13].try_into().unwrap()) as usize;
    let channels = bytes[13] as usize;
    let quality = bytes[14];
    if !(1..=100).contains(&quality) {
        return Err(DctError::Corrupt("bad quality"));
    }
    if w == 0 || h == 0 || (channels != 1 && channels != 3) {
        return Err(DctError::Corrupt("bad dimensions"));
    }
    // every block costs at least two bits, which bounds hostile dimensions
    let blocks = w.div_ceil(8).checked_mul(h.div_ceil(8)).and_then(|b| b.checked_mul(channels));
    match blocks {
        Some(b) if b <= (bytes.len() - HEADER_LEN) * 4 => {}
        _ => return Err(DctError::Corrupt("dimensions exceed stream")),
    }
    let qt = quant_table(quality);
    let dc = Huffman::new(&DC_LENGTHS, &DC_VALUES);
    let ac = Huffman::new(&AC_LENGTHS, &AC_VALUES);
    let mut r = BitReader::new(&bytes[HEADER_LEN..]);
    let mut data = vec![0f32; w * h * channels];
    for c in 0..channels {
        let mut prev_dc = 0i32;
        for by in (0..h).step_by(8) {
            for bx in (0..w).step_by(8) {
                let mut q = [0i32; 64];
                let size = dc.read(&mut r)?;
                if size > 11 {
                    return Err(DctError::Corrupt("bad DC category"));
                }
                prev_dc += read_value(&mut r, size)?;
                q[0] = prev_dc;
                let mut k = 1;
                while k < 64 {
                    let sym = ac.read(&mut r)?;
                    let run = (sym >> 4) as usize;
                    let size = sym & 0x0F;
                    if size == 0 {
                        if run == 15 {
                            k += 16;
                            continue;
                        }
                        break;
                    }
                    k += run;
                    if k >= 64 {
                        return Err(DctError::Corrupt("AC run past block end"));
                    }
                    q[UNZIGZAG[k]] = read_value(&mut r, size)?;
                    k += 1;
                }
                if k > 64 {
                    return Err(DctError::Corrupt("AC run past block end"));
                }
                let mut coef = [0.0; 64];
                for i in 0..64 {
                    coef[i] = f64::from(q[i]) * qt[i];
                }
                let px = idct8x8(&coef);
                for y in 0..8 {
                    for x in 0..8 {
                        let (ix, iy) = (bx + x, by + y);
                        if ix < w && iy < h {
                            data[(iy * w + ix) * channels + c] = f32::from(clamp_u8(px[y * 8 + x] + 128.0));
                        }
                    }
                }
            }
        }
    }
    if (bytes.len() - HEADER_LEN) * 8 - r.bit_pos() >= 8 {
        return Err(DctError::Corrupt("trailing data"));
    }
    while let Some(b) = r.read_bit() {
        if b {
            return Err(DctError::Corrupt("nonzero padding"));
        }
    }
    Image::new(w, h, channels, data).map_err(|_| DctError::Corrupt("bad dimensions"))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};

    fn gray(w: usize, h: usize, f: impl Fn(usize, usize) -> f32) -> Image {
        let data = (0..w * h).map(|i| f(i % w, i / w)).collect();
        Image::new(w, h, 1, data).unwrap()
    }

    /// Naive separable-free oracle: direct 2-D DCT sum.
    fn oracle_dct(block: &[f64; 64]) -> [f64; 64] {
        let mut out = [0.0; 64];
        for v in 0..8 {
            for u in 0..8 {
                let cu = if u == 0 { (1.0f64 / 8.0).sqrt() } else { (2.0f64 / 8.0).sqrt() };
                let cv = if v == 0 { (1.0f64 / 8.0).sqrt() } else { (2.0f64 / 8.0).sqrt() };
                let mut s = 0.0;
                for y in 0..8 {
                    for x in 0..8 {
                        s += block[y * 8 + x]
                            * ((2 * x + 1) as f64 * u as f64 * core::f64::consts::PI / 16.0).cos()
                            * ((2 * y + 1) as f64 * v as f64 * core::f64::consts::PI / 16.0).cos();
                    }
                }
                out[v * 8 + u] = cu * cv * s;
            }
        }
        out
    }

    #[test]
    fn transform_matches_direct_sum() {
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        let mut block = [0.0; 64];
        block.iter_mut().for_each(|v| *v = rng.random_range(-128.0..128.0));
        let fast = fdct8x8(&block);
        let slow = oracle_dct(&block);
        for i in 0..64 {
            assert!((fast[i] - slow[i]).abs() < 1e-9);
        }
        let back = idct8x8(&fast);
        for i in 0..64 {
            assert!((back[i] - block[i]).abs() < 1e-9);
        }
    }

    #[test]
    fn constant_image_any_quality() {
        for q in [1, 10, 50, 90, 100] {
            let img = gray(20, 12, |_, _| 77.0);
            let out = dct_baseline_decode(&dct_baseline_encode(&img, q).unwrap()).unwrap();
            assert!(out.data().iter().all(|&v| (v - 77.0).abs() <= 1.0), "quality {q}");
        }
    }

    #[test]
    fn ramp_at_quality_100() {
        let img = gray(8, 8, |x, y| (x * 16 + y * 8) as f32);
        let out = dct_baseline_decode(&dct_baseline_encode(&img, 100).unwrap()).unwrap();
        for (a, b) in img.data().iter().zip(out.data()) {
            assert!((a - b).abs() <= 1.0);
        }
    }

    #[test]
    fn size_shrinks_with_quality() {
        let img = gray(64, 64, |x, y| {
            let (xf, yf) = (x as f32, y as f32);
            128.0 + 60.0 * (xf / 5.0).sin() * (yf / 7.0).cos() + ((x * 31 + y * 17) % 23) as f32
        });
        let mut prev = usize::MAX;
        for q in (10..=90).rev().step_by(10) {
            let n = dct_baseline_encode(&img, q).unwrap().len();
            assert!(n <= prev, "quality {q}: {n} > {prev}");
            prev = n;
        }
    }

    #[test]
    fn color_round_trip_shape() {
        let data = (0..16 * 8 * 3).map(|i| (i % 256) as f32).collect();
        let img = Image::new(16, 8, 3, data).unwrap();
        let out = dct_baseline_decode(&dct_baseline_encode(&img, 95).unwrap()).unwrap();
        assert_eq!((out.width(), out.height(), out.channels()), (16, 8, 3));
    }

    #[test]
    fn corrupt_streams_error() {
        let img = gray(16, 16, |x, y| (x * y) as f32);
        let enc = dct_baseline_encode(&img, 50).unwrap();
        assert!(dct_baseline_decode(&enc[..10]).is_err());
        let mut bad = enc.clone();
        bad[0] = b'X';
        assert!(dct_baseline_decode(&bad).is_err());
        assert!(dct_baseline_decode(&enc[..enc.len() - 3]).is_err());
        assert_eq!(dct_baseline_encode(&img, 0), Err(DctError::Quality(0)));
        assert_eq!(dct_baseline_encode(&img, 101), Err(DctError::Quality(101)));
    }
}

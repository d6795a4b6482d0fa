//! Baseline JPEG round trips and quality estimation from quantization tables.

use std::path::Path;

use jpeg_encoder::{ColorType, Encoder, SamplingFactor};
use serde::{Deserialize, Serialize};

use crate::error::{DifError, Result};
use crate::image::{self, Image};

/// Encode at `quality` with 4:2:0 chroma subsampling.
pub fn encode(img: &Image, quality: u8) -> Result<Vec<u8>> {
    if !(1..=100).contains(&quality) {
        return Err(DifError::Config(format!("JPEG quality must lie in [1, 100], got {quality}")));
    }
    let rgb = image::to_rgb8(img)?;
    let (w, h) = (rgb.width(), rgb.height());
    if w > u16::MAX as u32 || h > u16::MAX as u32 {
        return Err(DifError::Data(format!("{w}x{h} is too large for baseline JPEG")));
    }
    let mut buf = Vec::new();
    let mut enc = Encoder::new(&mut buf, quality);
    enc.set_sampling_factor(SamplingFactor::R_4_2_0);
    enc.encode(rgb.as_raw(), w as u16, h as u16, ColorType::Rgb)
        .map_err(|e| DifError::Data(format!("JPEG encoding failed: {e}")))?;
    Ok(buf)
}

pub fn decode(bytes: &[u8]) -> Result<Image> {
    let img = ::image::load_from_memory_with_format(bytes, ::image::ImageFormat::Jpeg)
        .map_err(|e| DifError::Data(format!("JPEG decoding failed: {e}")))?;
    Ok(image::from_rgb8(&img.to_rgb8()))
}

pub fn round_trip(img: &Image, quality: u8) -> Result<Image> {
    decode(&encode(img, quality)?)
}

/// Luminance table of Annex K, natural (row-major) order.
const ANNEX_K_LUMA: [u32; 64] = [
    16, 11, 10, 16, 24, 40, 51, 61, 12, 12, 14, 19, 26, 58, 60, 55, 14, 13, 16, 24, 40, 57, 69, 56, 14, 17, 22, 29, 51, 87,
    80, 62, 18, 22, 37, 56, 68, 109, 103, 77, 24, 35, 55, 64, 81, 104, 113, 92, 49, 64, 78, 87, 103, 121, 120, 101, 72, 92,
    95, 98, 112, 100, 103, 99,
];

/// Natural-order index of each zig-zag position.
const ZIGZAG: [usize; 64] = [
    0, 1, 8, 16, 9, 2, 3, 10, 17, 24, 32, 25, 18, 11, 4, 5, 12, 19, 26, 33, 40, 48, 41, 34, 27, 20, 13, 6, 7, 14, 21, 28,
    35, 42, 49, 56, 57, 50, 43, 36, 29, 22, 15, 23, 30, 37, 44, 51, 58, 59, 52, 45, 38, 31, 39, 46, 53, 60, 61, 54, 47, 55,
    62, 63,
];

/// The IJG scaling of the Annex K table at `quality`, natural order.
pub fn scaled_luma_table(quality: u32) -> [u32; 64] {
    let q = quality.clamp(1, 100);
    let scale = if q < 50 { 5000 / q } else { 200 - 2 * q };
    ANNEX_K_LUMA.map(|v| ((v * scale + 50) / 100).clamp(1, 255))
}

/// First quantization table with id 0, converted to natural order.
pub fn luma_table(bytes: &[u8]) -> Option<[u32; 64]> {
    if bytes.get(..2) != Some(&[0xFF, 0xD8]) {
        return None;
    }
    let mut pos = 2;
    while pos + 4 <= bytes.len() {
        if bytes[pos] != 0xFF {
            return None;
        }
        let marker = bytes[pos + 1];
        if marker == 0xFF {
            pos += 1;
            continue;
        }
        if marker == 0xD9 || marker == 0xDA {
            return None;
        }
        let len = u16::from_be_bytes([bytes[pos + 2], bytes[pos + 3]]) as usize;
        let seg = bytes.get(pos + 4..pos + 2 + len)?;
        if marker == 0xDB {
            let mut s = 0;
            while s < seg.len() {
                let (precision, id) = (seg[s] >> 4, seg[s] & 0x0F);
                let width = if precision == 0 { 1 } else { 2 };
                let raw = seg.get(s + 1..s + 1 + 64 * width)?;
                if id == 0 {
                    let mut table = [0u32; 64];
                    for (k, &nat) in ZIGZAG.iter().enumerate() {
                        table[nat] = if width == 1 {
                            raw[k] as u32
                        } else {
                            u16::from_be_bytes([raw[2 * k], raw[2 * k + 1]]) as u32
                        };
                    }
                    return Some(table);
                }
                s += 1 + 64 * width;
            }
        }
        pos += 2 + len;
    }
    None
}

/// Quality whose scaled Annex K table is closest to `table`.
pub fn estimate_quality(table: &[u32; 64]) -> u32 {
    (1..=100)
        .min_by_key(|&q| {
            let t = scaled_luma_table(q);
            let err: u64 = t.iter().zip(table).map(|(&a, &b)| a.abs_diff(b) as u64).sum();
            (err, 100 - q)
        })
        .unwrap_or(100)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QualityStats {
    pub count: usize,
    pub skipped: usize,
    pub mean: f64,
    pub median: f64,
    pub qualities: Vec<u32>,
}

/// Estimated quality of every JPEG directly inside `dir`; other files are counted as skipped.
pub fn jpeg_quality_stats(dir: impl AsRef<Path>) -> Result<QualityStats> {
    let dir = dir.as_ref();
    let mut paths: Vec<_> = std::fs::read_dir(dir)
        .map_err(|e| DifError::io(dir, e))?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_file())
        .collect();
    paths.sort();
    let mut qualities = Vec::new();
    let mut skipped = 0;
    for p in paths {
        let bytes = std::fs::read(&p).map_err(|e| DifError::io(&p, e))?;
        match luma_table(&bytes) {
            Some(t) => qualities.push(estimate_quality(&t)),
            None => skipped += 1,
        }
    }
    if qualities.is_empty() {
        return Err(DifError::Data(format!("no JPEG files in {}", dir.display())));
    }
    let mut sorted = qualities.clone();
    sorted.sort_unstable();
    let n = sorted.len();
    let median = if n % 2 == 1 {
        sorted[n / 2] as f64
    } else {
        (sorted[n / 2 - 1] + sorted[n / 2]) as f64 / 2.0
    };
    Ok(QualityStats {
        count: n,
        skipped,
        mean: qualities.iter().map(|&q| q as f64).sum::<f64>() / n as f64,
        median,
        qualities,
    })
}

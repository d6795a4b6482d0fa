//! `[3, H, W]` float images in `[0, 1]` and the pixel-level helpers shared by
//! the denoiser, the perturbation suite and the lab.

use std::path::Path;

use dif_nn::Tensor;
use image::{GrayImage, RgbImage};

use crate::error::{DifError, Result};

/// Channel-first RGB image, values nominally in `[0, 1]`.
pub type Image = Tensor<f32>;

pub fn dims(img: &Image) -> Result<(usize, usize, usize)> {
    match *img.shape() {
        [c, h, w] => Ok((c, h, w)),
        ref s => Err(DifError::Data(format!("expected a [C, H, W] image, got shape {s:?}"))),
    }
}

pub fn from_rgb8(img: &RgbImage) -> Image {
    let (w, h) = (img.width() as usize, img.height() as usize);
    let raw = img.as_raw();
    Tensor::from_fn(&[3, h, w], |i| {
        let (c, p) = (i / (h * w), i % (h * w));
        raw[p * 3 + c] as f32 / 255.0
    })
}

pub fn to_rgb8(img: &Image) -> Result<RgbImage> {
    let (c, h, w) = dims(img)?;
    if c != 3 {
        return Err(DifError::Data(format!("expected 3 channels, got {c}")));
    }
    let d = img.data();
    let mut buf = vec![0u8; h * w * 3];
    for ch in 0..3 {
        for p in 0..h * w {
            buf[p * 3 + ch] = quantize(d[ch * h * w + p]);
        }
    }
    RgbImage::from_raw(w as u32, h as u32, buf).ok_or_else(|| DifError::Data("image buffer size".into()))
}

fn quantize(v: f32) -> u8 {
    (v.clamp(0.0, 1.0) * 255.0).round() as u8
}

pub fn load(path: impl AsRef<Path>) -> Result<Image> {
    let path = path.as_ref();
    let img = image::open(path).map_err(|e| DifError::Image {
        path: path.display().to_string(),
        detail: e.to_string(),
    })?;
    Ok(from_rgb8(&img.to_rgb8()))
}

/// Write an 8-bit PNG (or any format the extension names), clamping to `[0, 1]`.
pub fn save(path: impl AsRef<Path>, img: &Image) -> Result<()> {
    let path = path.as_ref();
    to_rgb8(img)?.save(path).map_err(|e| DifError::Image {
        path: path.display().to_string(),
        detail: e.to_string(),
    })
}

/// Save a single-channel map after min-max normalization.
pub fn save_gray_normalized(path: impl AsRef<Path>, values: &[f32], h: usize, w: usize) -> Result<()> {
    let path = path.as_ref();
    if values.len() != h * w {
        return Err(DifError::Data(format!("{} values for a {h}x{w} map", values.len())));
    }
    let (lo, hi) = min_max(values);
    let span = if hi > lo { hi - lo } else { 1.0 };
    let buf = values.iter().map(|&v| quantize((v - lo) / span)).collect();
    let img = GrayImage::from_raw(w as u32, h as u32, buf).ok_or_else(|| DifError::Data("map buffer size".into()))?;
    img.save(path).map_err(|e| DifError::Image {
        path: path.display().to_string(),
        detail: e.to_string(),
    })
}

fn min_max(values: &[f32]) -> (f32, f32) {
    values
        .iter()
        .fold((f32::INFINITY, f32::NEG_INFINITY), |(lo, hi), &v| (lo.min(v), hi.max(v)))
}

/// Min-max normalize the whole image to `[0, 1]` for viewing.
pub fn normalize_for_view(img: &Image) -> Image {
    let (lo, hi) = min_max(img.data());
    let span = if hi > lo { hi - lo } else { 1.0 };
    img.map(|v| (v - lo) / span)
}

pub fn crop(img: &Image, top: usize, left: usize, h: usize, w: usize) -> Result<Image> {
    let (c, ih, iw) = dims(img)?;
    if top + h > ih || left + w > iw {
        return Err(DifError::Data(format!(
            "crop {h}x{w} at ({top}, {left}) exceeds {ih}x{iw} image"
        )));
    }
    let d = img.data();
    let mut out = Vec::with_capacity(c * h * w);
    for ch in 0..c {
        for y in top..top + h {
            let row = ch * ih * iw + y * iw;
            out.extend_from_slice(&d[row + left..row + left + w]);
        }
    }
    Ok(Tensor::from_vec(&[c, h, w], out)?)
}

/// Center crop to `size x size`; `None` if the image is too small.
pub fn center_crop(img: &Image, size: usize) -> Result<Option<Image>> {
    let (_, h, w) = dims(img)?;
    if h < size || w < size {
        return Ok(None);
    }
    crop(img, (h - size) / 2, (w - size) / 2, size, size).map(Some)
}

/// Mirror index without repeating the edge pixel (`-1 -> 1`).
pub fn reflect(i: isize, n: usize) -> usize {
    if n == 1 {
        return 0;
    }
    let period = 2 * (n as isize - 1);
    let m = i.rem_euclid(period);
    (if m < n as isize { m } else { period - m }) as usize
}

pub fn reflect_pad(img: &Image, pad: usize) -> Result<Image> {
    let (c, h, w) = dims(img)?;
    let (ph, pw) = (h + 2 * pad, w + 2 * pad);
    let d = img.data();
    let p = pad as isize;
    let cols: Vec<usize> = (0..pw).map(|x| reflect(x as isize - p, w)).collect();
    let mut out = Vec::with_capacity(c * ph * pw);
    for ch in 0..c {
        for y in 0..ph {
            let row = ch * h * w + reflect(y as isize - p, h) * w;
            out.extend(cols.iter().map(|&x| d[row + x]));
        }
    }
    Ok(Tensor::from_vec(&[c, ph, pw], out)?)
}

/// Normalized 1-D Gaussian taps over `[-r, r]` with `r = ceil(4 sigma)`.
pub fn gaussian_kernel(sigma: f64) -> Vec<f64> {
    let r = (4.0 * sigma).ceil() as isize;
    let taps: Vec<f64> = (-r..=r)
        .map(|i| (-(i * i) as f64 / (2.0 * sigma * sigma)).exp())
        .collect();
    let s: f64 = taps.iter().sum();
    taps.into_iter().map(|t| t / s).collect()
}

/// Separable Gaussian blur with reflected borders.
pub fn gaussian_blur(img: &Image, sigma: f64) -> Result<Image> {
    if !(sigma > 0.0) {
        return Err(DifError::Config(format!("blur sigma must be positive, got {sigma}")));
    }
    let (c, h, w) = dims(img)?;
    let k = gaussian_kernel(sigma);
    let r = (k.len() / 2) as isize;
    let d = img.data();
    let mut tmp = vec![0f64; c * h * w];
    for ch in 0..c {
        for y in 0..h {
            let row = ch * h * w + y * w;
            for x in 0..w {
                tmp[row + x] = k
                    .iter()
                    .enumerate()
                    .map(|(j, t)| t * d[row + reflect(x as isize + j as isize - r, w)] as f64)
                    .sum();
            }
        }
    }
    let mut out = vec![0f32; c * h * w];
    for ch in 0..c {
        let plane = ch * h * w;
        for y in 0..h {
            for x in 0..w {
                let v: f64 = k
                    .iter()
                    .enumerate()
                    .map(|(j, t)| t * tmp[plane + reflect(y as isize + j as isize - r, h) * w + x])
                    .sum();
                out[plane + y * w + x] = v as f32;
            }
        }
    }
    Ok(Tensor::from_vec(&[c, h, w], out)?)
}

/// Add a leading batch axis of one.
pub fn batch1(img: &Image) -> Result<Tensor<f32>> {
    let (c, h, w) = dims(img)?;
    Ok(img.clone().reshape(&[1, c, h, w])?)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn ramp(c: usize, h: usize, w: usize) -> Image {
        Tensor::from_fn(&[c, h, w], |i| i as f32 / (c * h * w) as f32)
    }

    #[test]
    fn reflect_indices() {
        let got: Vec<usize> = (-3..7).map(|i| reflect(i, 4)).collect();
        assert_eq!(got, vec![3, 2, 1, 0, 1, 2, 3, 2, 1, 0]);
        assert_eq!(reflect(-5, 1), 0);
    }

    #[test]
    fn pad_keeps_interior() {
        let img = ramp(3, 5, 6);
        let p = reflect_pad(&img, 2).unwrap();
        assert_eq!(p.shape(), &[3, 9, 10]);
        assert_eq!(crop(&p, 2, 2, 5, 6).unwrap(), img);
    }

    #[test]
    fn center_crop_window() {
        let img = ramp(3, 8, 10);
        let c = center_crop(&img, 4).unwrap().unwrap();
        assert_eq!(c, crop(&img, 2, 3, 4, 4).unwrap());
        assert!(center_crop(&img, 9).unwrap().is_none());
    }

    #[test]
    fn blur_preserves_constants_and_kills_nyquist() {
        let flat = Tensor::full(&[3, 12, 12], 0.4f32);
        let b = gaussian_blur(&flat, 3.0).unwrap();
        assert!(b.data().iter().all(|v| (v - 0.4).abs() < 1e-6));
        let checker = Tensor::from_fn(&[1, 32, 32], |i| if (i / 32 + i % 32) % 2 == 0 { 1.0 } else { -1.0 });
        let b = gaussian_blur(&checker, 3.0).unwrap();
        assert!(b.max_abs() < 0.01, "{}", b.max_abs());
    }

    #[test]
    fn rgb8_round_trip() {
        let img = Tensor::from_fn(&[3, 4, 5], |i| (i % 256) as f32 / 255.0);
        assert_eq!(from_rgb8(&to_rgb8(&img).unwrap()), img);
    }
}

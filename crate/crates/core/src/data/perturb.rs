//! Post-processing applied to test (and optionally training) images.

use dif_nn::Tensor;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::jpeg;
use crate::error::{DifError, Result};
use crate::image::{self, Image};

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum Perturbation {
    #[default]
    None,
    Jpeg {
        quality: u8,
    },
    /// Nearest-neighbour down to half size and back up.
    ResizeHalfNn,
    GaussianBlur {
        sigma: f64,
    },
    /// A uniform choice among none, JPEG 75, JPEG 50, half resize and blur 3,
    /// drawn per image from the seed.
    MixedRandom {
        seed: u64,
    },
}

impl Perturbation {
    pub fn validate(&self) -> Result<()> {
        match *self {
            Perturbation::Jpeg { quality } if !(1..=100).contains(&quality) => {
                Err(DifError::Config(format!("JPEG quality must lie in [1, 100], got {quality}")))
            }
            Perturbation::GaussianBlur { sigma } if !(sigma > 0.0) => {
                Err(DifError::Config(format!("blur sigma must be positive, got {sigma}")))
            }
            _ => Ok(()),
        }
    }

    /// Resolve a mixed choice for the image at `index`; other kinds pass through.
    pub fn for_item(&self, index: usize) -> Perturbation {
        match *self {
            Perturbation::MixedRandom { seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(index as u64);
                match rng.random_range(0..5) {
                    0 => Perturbation::None,
                    1 => Perturbation::Jpeg { quality: 75 },
                    2 => Perturbation::Jpeg { quality: 50 },
                    3 => Perturbation::ResizeHalfNn,
                    _ => Perturbation::GaussianBlur { sigma: 3.0 },
                }
            }
            ref other => other.clone(),
        }
    }

    /// Short tag for file and report names.
    pub fn tag(&self) -> String {
        match self {
            Perturbation::None => "none".into(),
            Perturbation::Jpeg { quality } => format!("jpeg{quality}"),
            Perturbation::ResizeHalfNn => "resize-half".into(),
            Perturbation::GaussianBlur { sigma } => format!("blur{sigma}"),
            Perturbation::MixedRandom { seed } => format!("mixed{seed}"),
        }
    }
}

/// Nearest-neighbour half-size subsample followed by pixel replication.
pub fn resize_half_nn(img: &Image) -> Result<Image> {
    let (c, h, w) = image::dims(img)?;
    if h % 2 == 1 || w % 2 == 1 {
        return Err(DifError::Data(format!("half resize needs even sides, got {h}x{w}")));
    }
    let d = img.data();
    Ok(Tensor::from_fn(&[c, h, w], |i| {
        let (ch, y, x) = (i / (h * w), (i / w) % h, i % w);
        d[ch * h * w + (y & !1) * w + (x & !1)]
    }))
}

/// Apply `p` to the image at position `index` of a corpus.
pub fn perturb_item(img: &Image, p: &Perturbation, index: usize) -> Result<Image> {
    p.validate()?;
    match p.for_item(index) {
        Perturbation::None => Ok(img.clone()),
        Perturbation::Jpeg { quality } => jpeg::round_trip(img, quality),
        Perturbation::ResizeHalfNn => resize_half_nn(img),
        Perturbation::GaussianBlur { sigma } => image::gaussian_blur(img, sigma),
        Perturbation::MixedRandom { .. } => unreachable!("resolved by for_item"),
    }
}

pub fn perturb(img: &Image, p: &Perturbation) -> Result<Image> {
    perturb_item(img, p, 0)
}

pub fn perturb_all(images: &[Image], p: &Perturbation) -> Result<Vec<Image>> {
    images.iter().enumerate().map(|(i, img)| perturb_item(img, p, i)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn checker(size: usize) -> Image {
        Tensor::from_fn(&[3, size, size], |i| if (i / size + i % size) % 2 == 0 { 0.6 } else { 0.4 })
    }

    #[test]
    fn none_is_identity() {
        let img = checker(8);
        assert_eq!(perturb(&img, &Perturbation::None).unwrap(), img);
    }

    #[test]
    fn half_resize_flattens_checkerboard() {
        let out = perturb(&checker(8), &Perturbation::ResizeHalfNn).unwrap();
        assert!(out.data().iter().all(|&v| v == 0.6));
        assert!(perturb(&checker(7), &Perturbation::ResizeHalfNn).is_err());
    }

    #[test]
    fn blur_attenuates_nyquist() {
        let out = perturb(&checker(32), &Perturbation::GaussianBlur { sigma: 3.0 }).unwrap();
        let amp = out.data().iter().map(|v| (v - 0.5).abs()).fold(0.0, f32::max);
        assert!(amp < 0.01 * 0.1, "{amp}");
    }

    #[test]
    fn mixed_is_seeded() {
        let p = Perturbation::MixedRandom { seed: 4 };
        let a: Vec<_> = (0..50).map(|i| p.for_item(i)).collect();
        let b: Vec<_> = (0..50).map(|i| p.for_item(i)).collect();
        assert_eq!(a, b);
        assert!(a.iter().any(|x| *x == Perturbation::None));
        assert!(a.iter().any(|x| *x == Perturbation::ResizeHalfNn));
    }

    #[test]
    fn validation() {
        assert!(Perturbation::Jpeg { quality: 0 }.validate().is_err());
        assert!(Perturbation::GaussianBlur { sigma: -1.0 }.validate().is_err());
    }
}

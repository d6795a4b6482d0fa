//! Synthetic ground truth: smooth "real" images and known fingerprint
//! patterns injected into them.

use dif_nn::Tensor;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{DifError, Result};
use crate::image::Image;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PatternKind {
    /// Square checkerboard repeating every `period` pixels.
    Checkerboard { period: usize },
    /// Bright lines along every `period`-th row and column.
    AxisGrid { period: usize },
    /// Random `tile x tile` block per channel, tiled over the image.
    FixedRandom { seed: u64, tile: usize },
    /// `(1 - t) a + t b`, renormalized.
    Interpolated {
        a: Box<PatternKind>,
        b: Box<PatternKind>,
        t: f64,
    },
}

impl PatternKind {
    /// Render at `size`, zero-mean per channel with unit peak.
    pub fn render(&self, size: usize) -> Result<Image> {
        if size == 0 {
            return Err(DifError::Config("pattern size must be positive".into()));
        }
        let raw = match self {
            PatternKind::Checkerboard { period } => {
                let p = *period;
                if p < 2 || p % 2 == 1 || size % p != 0 {
                    return Err(DifError::Config(format!(
                        "checkerboard period {p} must be even and divide {size}"
                    )));
                }
                let half = p / 2;
                Tensor::from_fn(&[3, size, size], |i| {
                    let (y, x) = ((i / size) % size, i % size);
                    if (y / half + x / half) % 2 == 0 {
                        1.0
                    } else {
                        -1.0
                    }
                })
            }
            PatternKind::AxisGrid { period } => {
                let p = *period;
                if p < 2 {
                    return Err(DifError::Config(format!("grid period {p} must be at least 2")));
                }
                Tensor::from_fn(&[3, size, size], |i| {
                    let (y, x) = ((i / size) % size, i % size);
                    (y % p == 0 || x % p == 0) as u8 as f32
                })
            }
            PatternKind::FixedRandom { seed, tile } => {
                let t = *tile;
                if t == 0 || size % t != 0 {
                    return Err(DifError::Config(format!("random tile {t} must divide {size}")));
                }
                let mut rng = ChaCha8Rng::seed_from_u64(*seed);
                let cell: Vec<f32> = (0..3 * t * t).map(|_| rng.random_range(-1.0..1.0)).collect();
                Tensor::from_fn(&[3, size, size], |i| {
                    let (c, y, x) = (i / (size * size), (i / size) % size, i % size);
                    cell[c * t * t + (y % t) * t + x % t]
                })
            }
            PatternKind::Interpolated { a, b, t } => {
                if !(0.0..=1.0).contains(t) {
                    return Err(DifError::Config(format!("interpolation weight {t} outside [0, 1]")));
                }
                if *t == 0.0 {
                    return a.render(size);
                }
                if *t == 1.0 {
                    return b.render(size);
                }
                let (ra, rb) = (a.render(size)?, b.render(size)?);
                ra.zip_map(&rb, |x, y| ((1.0 - t) * x as f64 + t * y as f64) as f32)?
            }
        };
        normalize(raw)
    }
}

/// Zero-mean per channel, then scale so the largest magnitude is 1.
fn normalize(mut x: Image) -> Result<Image> {
    let plane = x.len() / 3;
    for ch in x.data_mut().chunks_mut(plane) {
        let mean = ch.iter().map(|&v| v as f64).sum::<f64>() / plane as f64;
        ch.iter_mut().for_each(|v| *v = (*v as f64 - mean) as f32);
    }
    let peak = x.max_abs();
    if !(peak > 0.0) {
        return Err(DifError::Degenerate("pattern is constant".into()));
    }
    x.scale(1.0 / peak);
    Ok(x)
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OraclePattern {
    #[serde(flatten)]
    pub kind: PatternKind,
    /// Peak amplitude in 1/255 units.
    pub amplitude: f64,
}

impl OraclePattern {
    pub fn new(kind: PatternKind, amplitude: f64) -> Self {
        Self { kind, amplitude }
    }

    /// The pattern at its amplitude, in pixel units.
    pub fn render(&self, size: usize) -> Result<Image> {
        let mut p = self.kind.render(size)?;
        p.scale((self.amplitude / 255.0) as f32);
        Ok(p)
    }
}

/// `clamp(real + amplitude * P + N(0, sigma))` per image; `sigma` in 1/255 units.
pub fn synth_inject(reals: &[Image], pattern: &OraclePattern, noise_sigma: f64, seed: u64) -> Result<Vec<Image>> {
    if pattern.amplitude < 0.0 || noise_sigma < 0.0 {
        return Err(DifError::Config("amplitude and noise must be non-negative".into()));
    }
    let Some(first) = reals.first() else {
        return Ok(Vec::new());
    };
    let size = *first.shape().last().unwrap_or(&0);
    let p = if pattern.amplitude > 0.0 {
        pattern.render(size)?
    } else {
        Tensor::zeros(first.shape())
    };
    let sigma = (noise_sigma / 255.0) as f32;
    reals
        .iter()
        .enumerate()
        .map(|(i, r)| {
            if r.shape() != p.shape() {
                return Err(DifError::Data(format!("image {i} has shape {:?}, pattern {:?}", r.shape(), p.shape())));
            }
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(i as u64);
            Ok(Tensor::from_fn(r.shape(), |k| {
                let n: f32 = if sigma > 0.0 { sigma * rng.sample::<f32, _>(StandardNormal) } else { 0.0 };
                (r.data()[k] + p.data()[k] + n).clamp(0.0, 1.0)
            }))
        })
        .collect()
}

/// Smooth synthetic photograph: tinted gradient, a few soft blobs and a
/// low-frequency texture, kept away from the clipping limits.
pub fn synthetic_real(size: usize, seed: u64) -> Image {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let s = size as f64;
    let base: [f64; 3] = std::array::from_fn(|_| rng.random_range(0.3..0.7));
    let grad: [f64; 2] = std::array::from_fn(|_| rng.random_range(-0.15..0.15));
    let blobs: Vec<(f64, f64, f64, f64)> = (0..4)
        .map(|_| {
            (
                rng.random_range(0.0..s),
                rng.random_range(0.0..s),
                rng.random_range(0.08..0.3) * s,
                rng.random_range(-0.12..0.12),
            )
        })
        .collect();
    // At most one cycle per 16 pixels, well below the pattern frequencies.
    let waves: Vec<(f64, f64, f64, f64)> = (0..3)
        .map(|_| {
            let f = rng.random_range(0.005..1.0 / 16.0);
            let th: f64 = rng.random_range(0.0..std::f64::consts::PI);
            (f * th.cos(), f * th.sin(), rng.random_range(0.0..6.3), rng.random_range(0.01..0.04))
        })
        .collect();
    let tint: [f64; 3] = std::array::from_fn(|_| rng.random_range(0.8..1.2));
    Tensor::from_fn(&[3, size, size], |i| {
        let (c, y, x) = (i / (size * size), ((i / size) % size) as f64, (i % size) as f64);
        let mut v = base[c] + grad[0] * (y / s - 0.5) + grad[1] * (x / s - 0.5);
        for &(by, bx, r, a) in &blobs {
            let d2 = ((y - by).powi(2) + (x - bx).powi(2)) / (r * r);
            v += a * tint[c] * (-d2).exp();
        }
        for &(fy, fx, ph, a) in &waves {
            v += a * (2.0 * std::f64::consts::PI * (fy * y + fx * x) + ph).sin();
        }
        v.clamp(0.05, 0.95) as f32
    })
}

/// Matched real/generated corpora from distinct base images; both classes
/// receive the same sensor-like noise so only the pattern separates them.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleConfig {
    pub size: usize,
    /// Images per class.
    pub count: usize,
    pub pattern: OraclePattern,
    /// In 1/255 units.
    pub noise_sigma: f64,
    pub seed: u64,
}

pub const DEFAULT_NOISE_SIGMA: f64 = 5.0;

pub struct OracleData {
    pub real: Vec<Image>,
    pub gen: Vec<Image>,
}

pub fn generate(cfg: &OracleConfig) -> Result<OracleData> {
    let bases = |offset: u64| -> Vec<Image> {
        (0..cfg.count as u64)
            .map(|i| synthetic_real(cfg.size, cfg.seed.wrapping_mul(1_000_003).wrapping_add(2 * i + offset)))
            .collect()
    };
    let silent = OraclePattern {
        amplitude: 0.0,
        ..cfg.pattern.clone()
    };
    Ok(OracleData {
        real: synth_inject(&bases(0), &silent, cfg.noise_sigma, cfg.seed ^ 0xa11)?,
        gen: synth_inject(&bases(1), &cfg.pattern, cfg.noise_sigma, cfg.seed ^ 0xb22)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn channel_means(x: &Image) -> Vec<f64> {
        let n = x.len() / 3;
        x.data().chunks(n).map(|c| c.iter().map(|&v| v as f64).sum::<f64>() / n as f64).collect()
    }

    #[test]
    fn patterns_are_zero_mean_unit_peak() {
        let kinds = [
            PatternKind::Checkerboard { period: 2 },
            PatternKind::Checkerboard { period: 8 },
            PatternKind::AxisGrid { period: 8 },
            PatternKind::FixedRandom { seed: 3, tile: 16 },
        ];
        for k in kinds {
            let p = k.render(32).unwrap();
            assert!(channel_means(&p).iter().all(|m| m.abs() < 1e-6), "{k:?}");
            assert!((p.max_abs() - 1.0).abs() < 1e-6);
        }
        assert!(PatternKind::Checkerboard { period: 3 }.render(12).is_err());
    }

    #[test]
    fn interpolation_endpoints() {
        let a = PatternKind::Checkerboard { period: 2 };
        let b = PatternKind::FixedRandom { seed: 1, tile: 8 };
        let at = |t| PatternKind::Interpolated { a: Box::new(a.clone()), b: Box::new(b.clone()), t }.render(16).unwrap();
        assert_eq!(at(0.0), a.render(16).unwrap());
        assert_eq!(at(1.0), b.render(16).unwrap());
        assert!(channel_means(&at(0.4)).iter().all(|m| m.abs() < 1e-6));
    }

    #[test]
    fn silent_injection_is_identity() {
        let reals = vec![synthetic_real(16, 1), synthetic_real(16, 2)];
        let p = OraclePattern::new(PatternKind::Checkerboard { period: 2 }, 0.0);
        assert_eq!(synth_inject(&reals, &p, 0.0, 9).unwrap(), reals);
    }

    #[test]
    fn injection_adds_the_pattern() {
        let reals = vec![synthetic_real(16, 1)];
        let p = OraclePattern::new(PatternKind::Checkerboard { period: 2 }, 4.0);
        let out = synth_inject(&reals, &p, 0.0, 9).unwrap();
        let diff = out[0].zip_map(&reals[0], |a, b| a - b).unwrap();
        assert!(diff.zip_map(&p.render(16).unwrap(), |a, b| a - b).unwrap().max_abs() < 1e-6);
    }

    #[test]
    fn synthetic_reals_are_smooth_and_in_range() {
        let img = synthetic_real(64, 5);
        assert!(img.data().iter().all(|&v| (0.05..=0.95).contains(&v)));
        let max_step = img
            .data()
            .windows(2)
            .enumerate()
            .filter(|(i, _)| (i + 1) % 64 != 0)
            .map(|(_, w)| (w[1] - w[0]).abs())
            .fold(0.0, f32::max);
        assert!(max_step < 0.05, "{max_step}");
        assert_ne!(synthetic_real(64, 5), synthetic_real(64, 6));
    }
}

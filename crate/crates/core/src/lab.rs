//! Monochrome reconstruction experiment: fit a generator to a flat gray
//! image and measure the spectral signature of what it cannot fit.

use std::path::Path;

use dif_nn::{build, Adam, Graph, Mode, ModelSpec, Tensor, Var};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{DifError, Result};
use crate::image::{self, Image};
use crate::spectral::{fft2_magnitude, fftshift};
use crate::train::adam_update;

pub const LAB_LR: f64 = 5e-4;

#[derive(Clone, Debug)]
pub struct MonochromeRun {
    pub spec: ModelSpec,
    pub target_gray: f64,
    pub steps: usize,
    pub final_mse: f64,
    /// Final output minus the target, `[3, S, S]`.
    pub artifact: Image,
    pub output: Image,
    pub loss_history: Vec<f64>,
}

/// Fit `spec`'s generator, fed a fixed `Z`, to a constant gray image with MSE.
/// The tanh output is mapped to `[0, 1]` before the loss.
pub fn reconstruct_monochrome(spec: &ModelSpec, gray: f64, steps: usize, seed: u64) -> Result<MonochromeRun> {
    if !(0.0..=1.0).contains(&gray) {
        return Err(DifError::Config(format!("gray level must lie in [0, 1], got {gray}")));
    }
    let mut model = build::<f32>(spec)?;
    let s = spec.working_size;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let [zc, zh, zw] = spec.input_shape();
    let z = Tensor::from_fn(&[1, zc, zh, zw], |_| rng.random::<f32>());
    let target = Tensor::full(&[1, 3, s, s], gray as f32);
    let mut adam = Adam::new(LAB_LR);
    let mut history = Vec::with_capacity(steps);

    let to_unit = |g: &mut Graph<f32>, out: Var| g.affine(out, 0.5, 0.5);
    for step in 0..steps {
        let mut g = Graph::new();
        let zv = g.constant(z.clone());
        let fwd = model.forward(&mut g, zv, Mode::Train)?;
        let y = to_unit(&mut g, fwd.output);
        let loss = g.mse(y, &target)?;
        let lv = g.value(loss).data()[0] as f64;
        if !lv.is_finite() {
            return Err(DifError::Diverged {
                step,
                detail: format!("{} reconstruction loss is not finite", spec.arch.name()),
            });
        }
        history.push(lv);
        let mut grads = g.backward(loss)?;
        adam_update(&mut model, &mut adam, &mut grads, &fwd.params)?;
    }

    // Evaluate as trained: batch statistics, no running-stat update.
    let mut g = Graph::new();
    let zv = g.constant(z);
    let params: Vec<Var> = model.params().into_iter().map(|(_, t)| g.constant(t.clone())).collect();
    let (out, _) = model.forward_with(&mut g, zv, &params, Mode::Train)?;
    let y = to_unit(&mut g, out);
    let output = g.value(y).clone().reshape(&[3, s, s])?;
    let artifact = output.map(|v| v - gray as f32);
    let final_mse = artifact.data().iter().map(|&a| (a as f64) * (a as f64)).sum::<f64>() / artifact.len() as f64;
    if !final_mse.is_finite() {
        return Err(DifError::Diverged {
            step: steps,
            detail: "final output is not finite".into(),
        });
    }
    Ok(MonochromeRun {
        spec: spec.clone(),
        target_gray: gray,
        steps,
        final_mse,
        artifact,
        output,
        loss_history: history,
    })
}

/// Per-channel `log(1 + |FFT(x - mean)|)`, DC at `(h/2, w/2)`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpectrumMap {
    pub h: usize,
    pub w: usize,
    pub channels: Vec<Vec<f64>>,
}

impl SpectrumMap {
    /// Channel-averaged map for display.
    pub fn mean_map(&self) -> Vec<f64> {
        let mut m = vec![0.0; self.h * self.w];
        for ch in &self.channels {
            for (a, v) in m.iter_mut().zip(ch) {
                *a += v / self.channels.len() as f64;
            }
        }
        m
    }

    pub fn save_png(&self, path: impl AsRef<Path>) -> Result<()> {
        let m: Vec<f32> = self.mean_map().into_iter().map(|v| v as f32).collect();
        image::save_gray_normalized(path, &m, self.h, self.w)
    }

    fn center(&self) -> (usize, usize) {
        (self.h / 2, self.w / 2)
    }
}

pub fn spectrum_logmag(img: &Image) -> Result<SpectrumMap> {
    let (_, h, w) = image::dims(img)?;
    if !img.is_finite() {
        return Err(DifError::Data("spectrum of a non-finite image".into()));
    }
    let channels = img
        .data()
        .chunks(h * w)
        .map(|ch| {
            let mean = ch.iter().map(|&v| v as f64).sum::<f64>() / ch.len() as f64;
            let plane: Vec<f64> = ch.iter().map(|&v| v as f64 - mean).collect();
            let logmag: Vec<f64> = fft2_magnitude(&plane, h, w).into_iter().map(f64::ln_1p).collect();
            fftshift(&logmag, h, w)
        })
        .collect();
    Ok(SpectrumMap { h, w, channels })
}

const TINY: f64 = 1e-12;

fn median(mut v: Vec<f64>) -> f64 {
    if v.is_empty() {
        return 0.0;
    }
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        0.5 * (v[n / 2 - 1] + v[n / 2])
    }
}

/// `num / den`, with 0 for an all-zero spectrum and a floored denominator
/// for exactly periodic content whose background is numerically zero.
fn ratio(num: f64, den: f64) -> f64 {
    if num < TINY {
        0.0
    } else {
        num / den.max(TINY)
    }
}

/// Mean over the bins at harmonics of `S/p` on both axes, over the median
/// of all non-DC bins; averaged over channels.
pub fn harmonic_peak_score(s: &SpectrumMap, period: usize) -> Result<f64> {
    if period == 0 || s.h % period != 0 || s.w % period != 0 {
        return Err(DifError::Config(format!(
            "period {period} does not divide the {}x{} spectrum",
            s.h, s.w
        )));
    }
    let (cy, cx) = s.center();
    let (sy, sx) = (s.h / period, s.w / period);
    let mut total = 0.0;
    for ch in &s.channels {
        let (mut peaks, mut rest) = (Vec::new(), Vec::new());
        for y in 0..s.h {
            for x in 0..s.w {
                if (y, x) == (cy, cx) {
                    continue;
                }
                let v = ch[y * s.w + x];
                rest.push(v);
                if y.abs_diff(cy) % sy == 0 && x.abs_diff(cx) % sx == 0 {
                    peaks.push(v);
                }
            }
        }
        let mean = peaks.iter().sum::<f64>() / peaks.len().max(1) as f64;
        total += ratio(mean, median(rest));
    }
    Ok(total / s.channels.len() as f64)
}

/// Mean over the central row and column (DC excluded) over the median of
/// the off-axis bins; averaged over channels.
pub fn cross_line_score(s: &SpectrumMap) -> f64 {
    let (cy, cx) = s.center();
    let mut total = 0.0;
    for ch in &s.channels {
        let (mut axis, mut rest) = (Vec::new(), Vec::new());
        for y in 0..s.h {
            for x in 0..s.w {
                let v = ch[y * s.w + x];
                match (y == cy, x == cx) {
                    (true, true) => {}
                    (false, false) => rest.push(v),
                    _ => axis.push(v),
                }
            }
        }
        let mean = axis.iter().sum::<f64>() / axis.len().max(1) as f64;
        total += ratio(mean, median(rest));
    }
    total / s.channels.len() as f64
}

/// Scores of one run, as written by the lab command.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabScores {
    pub arch: String,
    pub working_size: usize,
    pub steps: usize,
    pub gray: f64,
    pub final_mse: f64,
    pub harmonic_peak_score_16: f64,
    pub cross_line_score: f64,
}

pub fn score_run(run: &MonochromeRun) -> Result<(SpectrumMap, LabScores)> {
    let spec = spectrum_logmag(&run.artifact)?;
    let harmonic = harmonic_peak_score(&spec, 16)?;
    let cross = cross_line_score(&spec);
    Ok((
        spec,
        LabScores {
            arch: run.spec.arch.name().to_string(),
            working_size: run.spec.working_size,
            steps: run.steps,
            gray: run.target_gray,
            final_mse: run.final_mse,
            harmonic_peak_score_16: harmonic,
            cross_line_score: cross,
        },
    ))
}

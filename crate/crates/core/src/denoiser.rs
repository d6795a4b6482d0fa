//! DnCNN-S denoising filter and the residual extractors built on it.

use dif_nn::{build, Adam, Arch, Graph, Mode, Model, ModelSpec, Tensor};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::checkpoint::{load_model, push_model, sha256_hex, Checkpoint};
use crate::error::{DifError, Result};
use crate::image::{self, Image};
use crate::train::adam_update;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DenoiserConfig {
    pub epochs: usize,
    pub lr: f64,
    pub crop: usize,
    /// Noise level range in 1/255 units.
    pub sigma_range: [f64; 2],
    /// At most this many training images are used.
    pub images: usize,
    pub batch: usize,
    pub depth: usize,
    pub width: usize,
    /// Reflection margin added before filtering and cropped afterwards.
    pub pad: usize,
    pub seed: u64,
}

impl Default for DenoiserConfig {
    fn default() -> Self {
        Self {
            epochs: 2000,
            lr: 1e-4,
            crop: 48,
            sigma_range: [5.0, 15.0],
            images: 1024,
            batch: 128,
            depth: 17,
            width: 64,
            pad: 10,
            seed: 0,
        }
    }
}

impl DenoiserConfig {
    pub fn validate(&self) -> Result<()> {
        let [lo, hi] = self.sigma_range;
        let bad = |m: &str| Err(DifError::Config(m.to_string()));
        if !(0.0 <= lo && lo <= hi) {
            return bad("sigma range must satisfy 0 <= lo <= hi");
        }
        if self.crop == 0 || self.batch == 0 || self.images == 0 {
            return bad("crop, batch and image count must be positive");
        }
        if self.depth < 2 || self.width == 0 {
            return bad("DnCNN needs depth >= 2 and a positive width");
        }
        if !(self.lr > 0.0) {
            return bad("learning rate must be positive");
        }
        Ok(())
    }

    pub fn hash(&self) -> String {
        sha256_hex(&serde_json::to_vec(self).expect("config serializes"))
    }
}

/// Anything that maps an image to its high-frequency residual.
pub trait ResidualFilter {
    fn residual(&self, img: &Image) -> Result<Image>;
    /// Stable identifier stored with fingerprints extracted through this filter.
    fn id(&self) -> &str;
}

/// Trained DnCNN plus its own fingerprint `F_DnCNN`.
#[derive(Clone, Debug)]
pub struct DenoiserBundle {
    pub model: Model<f32>,
    /// Mean raw residual over the training images at working size.
    pub fingerprint: Image,
    pub config: DenoiserConfig,
    pub working_size: usize,
    /// Mean training loss per epoch.
    pub loss_history: Vec<f64>,
    id: String,
}

/// Raw DnCNN noise estimate: reflect-pad, predict, crop the margin back off.
pub fn raw_residual(model: &Model<f32>, img: &Image, pad: usize) -> Result<Image> {
    let (c, h, w) = image::dims(img)?;
    let padded = image::reflect_pad(img, pad)?;
    let out = model.predict(&image::batch1(&padded)?)?;
    let out = out.reshape(&[c, h + 2 * pad, w + 2 * pad])?;
    image::crop(&out, pad, pad, h, w)
}

pub fn train_dncnn(images: &[Image], cfg: &DenoiserConfig) -> Result<DenoiserBundle> {
    cfg.validate()?;
    let first = images
        .first()
        .ok_or_else(|| DifError::Data("denoiser training needs at least one real image".into()))?;
    let (_, size, _) = image::dims(first)?;
    for img in images {
        let (c, h, w) = image::dims(img)?;
        if (c, h, w) != (3, size, size) {
            return Err(DifError::Data(format!(
                "training images must all be 3x{size}x{size}, got {c}x{h}x{w}"
            )));
        }
    }
    if size < cfg.crop {
        return Err(DifError::Data(format!("images of size {size} are smaller than the {} crop", cfg.crop)));
    }
    let images = &images[..images.len().min(cfg.images)];

    let mut spec = ModelSpec::new(Arch::DnCNN, size, cfg.seed);
    spec.depth = cfg.depth;
    spec.hidden_width = cfg.width;
    let mut model = build::<f32>(&spec)?;
    let mut adam = Adam::new(cfg.lr);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0x5eed_d0c0);
    let mut order: Vec<usize> = (0..images.len()).collect();
    let mut history = Vec::with_capacity(cfg.epochs);
    let k = cfg.crop;

    for epoch in 0..cfg.epochs {
        order.shuffle(&mut rng);
        let (mut total, mut batches) = (0.0, 0);
        for chunk in order.chunks(cfg.batch) {
            let mut noisy = Vec::with_capacity(chunk.len() * 3 * k * k);
            let mut noise = Vec::with_capacity(chunk.len() * 3 * k * k);
            for &i in chunk {
                let top = rng.random_range(0..=size - k);
                let left = rng.random_range(0..=size - k);
                let patch = image::crop(&images[i], top, left, k, k)?;
                let sigma = rng.random_range(cfg.sigma_range[0]..=cfg.sigma_range[1]) / 255.0;
                for &v in patch.data() {
                    let n = sigma as f32 * rng.sample::<f32, _>(StandardNormal);
                    noisy.push(v + n);
                    noise.push(n);
                }
            }
            let shape = [chunk.len(), 3, k, k];
            let mut g = Graph::new();
            let x = g.constant(Tensor::from_vec(&shape, noisy)?);
            let fwd = model.forward(&mut g, x, Mode::Train)?;
            let loss = g.mse(fwd.output, &Tensor::from_vec(&shape, noise)?)?;
            let lv = g.value(loss).data()[0] as f64;
            if !lv.is_finite() {
                return Err(DifError::Diverged {
                    step: epoch,
                    detail: "denoiser loss is not finite".into(),
                });
            }
            let mut grads = g.backward(loss)?;
            adam_update(&mut model, &mut adam, &mut grads, &fwd.params)?;
            total += lv;
            batches += 1;
        }
        let mean = total / batches as f64;
        history.push(mean);
        if cfg.epochs < 20 || epoch % (cfg.epochs / 20) == 0 || epoch + 1 == cfg.epochs {
            log::info!("denoiser epoch {}/{}: loss {mean:.3e}", epoch + 1, cfg.epochs);
        }
    }

    let mut fingerprint = Tensor::zeros(&[3, size, size]);
    for img in images {
        fingerprint.axpy(1.0, &raw_residual(&model, img, cfg.pad)?)?;
    }
    fingerprint.scale(1.0 / images.len() as f32);
    DenoiserBundle::new(model, fingerprint, cfg.clone(), history)
}

impl DenoiserBundle {
    pub fn new(model: Model<f32>, fingerprint: Image, config: DenoiserConfig, loss_history: Vec<f64>) -> Result<Self> {
        let (_, size, _) = image::dims(&fingerprint)?;
        let mut b = Self {
            model,
            fingerprint,
            config,
            working_size: size,
            loss_history,
            id: String::new(),
        };
        b.id = b.to_checkpoint()?.content_hash()?;
        Ok(b)
    }

    /// Residual with the denoiser's own fingerprint removed.
    pub fn extract(&self, img: &Image) -> Result<Image> {
        self.extract_with_pad(img, self.config.pad)
    }

    pub fn extract_with_pad(&self, img: &Image, pad: usize) -> Result<Image> {
        let (c, h, w) = image::dims(img)?;
        if (c, h, w) != (3, self.working_size, self.working_size) {
            return Err(DifError::Data(format!(
                "image is {c}x{h}x{w}, denoiser works at 3x{0}x{0}",
                self.working_size
            )));
        }
        let mut r = raw_residual(&self.model, img, pad)?;
        r.axpy(-1.0, &self.fingerprint)?;
        Ok(r)
    }

    pub fn to_checkpoint(&self) -> Result<Checkpoint> {
        let mut ckpt = Checkpoint::new(
            "denoiser",
            json!({
                "config": self.config,
                "config_hash": self.config.hash(),
                "working_size": self.working_size,
                "sigma_range": self.config.sigma_range,
                "loss_history": self.loss_history,
            }),
        );
        push_model(&mut ckpt, "dncnn.", &self.model)?;
        ckpt.push("dncnn_fingerprint", self.fingerprint.clone());
        Ok(ckpt)
    }

    pub fn from_checkpoint(ckpt: &Checkpoint) -> Result<Self> {
        ckpt.expect_kind("denoiser")?;
        let config: DenoiserConfig = serde_json::from_value(
            ckpt.metadata
                .get("config")
                .cloned()
                .ok_or_else(|| DifError::Data("denoiser checkpoint lacks its config".into()))?,
        )?;
        let history: Vec<f64> = serde_json::from_value(ckpt.metadata.get("loss_history").cloned().unwrap_or_default())
            .unwrap_or_default();
        let model = load_model(ckpt, "dncnn.")?;
        Self::new(model, ckpt.tensor("dncnn_fingerprint")?.clone(), config, history)
    }
}

impl ResidualFilter for DenoiserBundle {
    fn residual(&self, img: &Image) -> Result<Image> {
        self.extract(img)
    }

    fn id(&self) -> &str {
        &self.id
    }
}

/// Baseline filter: the image minus its Gaussian blur.
#[derive(Clone, Debug)]
pub struct HighPass {
    pub sigma: f64,
    id: String,
}

impl HighPass {
    pub const DEFAULT_SIGMA: f64 = 3.0;

    pub fn new(sigma: f64) -> Result<Self> {
        if !(sigma > 0.0) {
            return Err(DifError::Config(format!("high-pass sigma must be positive, got {sigma}")));
        }
        Ok(Self {
            sigma,
            id: format!("gaussian-highpass:{sigma}"),
        })
    }
}

pub fn gaussian_highpass_residual(img: &Image, sigma: f64) -> Result<Image> {
    let blurred = image::gaussian_blur(img, sigma)?;
    Ok(img.zip_map(&blurred, |a, b| a - b)?)
}

impl ResidualFilter for HighPass {
    fn residual(&self, img: &Image) -> Result<Image> {
        gaussian_highpass_residual(img, self.sigma)
    }

    fn id(&self) -> &str {
        &self.id
    }
}

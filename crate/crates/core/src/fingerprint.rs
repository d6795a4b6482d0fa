//! Correlation metric, contrastive sample loss and fingerprint extraction.

use std::sync::Arc;

use dif_nn::{build, Adam, Arch, BackwardCtx, Float, Function, Graph, Mode, ModelSpec, Tensor, Var, Z_CHANNELS};
use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::checkpoint::Checkpoint;
use crate::error::{DifError, Result};
use crate::image::{self, Image};
use crate::spectral::{fft2_magnitude, fftshift};
use crate::train::adam_update;

/// How `zm_un` groups values before normalizing.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CorrelationScope {
    /// Pearson correlation per channel, averaged over channels.
    #[default]
    PerChannel,
    /// One correlation over the flattened tensor.
    WholeTensor,
}

impl CorrelationScope {
    fn groups(self, shape: &[usize]) -> usize {
        match (self, shape) {
            (CorrelationScope::PerChannel, [c, _, _]) | (CorrelationScope::PerChannel, [1, c, _, _]) => *c,
            _ => 1,
        }
    }
}

/// Whether the different-class term of the sample loss is clipped at zero.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum LossForm {
    /// `(t D + (1 - t)(m - D)) / m` exactly as written.
    #[default]
    Literal,
    /// Contrastive-style `(t D + (1 - t) max(0, m - D)) / m`.
    Hinged,
}

fn zm_un_groups(data: &[f64], groups: usize) -> Result<Vec<f64>> {
    if groups == 0 || data.len() % groups != 0 || data.is_empty() {
        return Err(DifError::Data(format!("cannot split {} values into {groups} channels", data.len())));
    }
    let n = data.len() / groups;
    let mut out = Vec::with_capacity(data.len());
    for (c, ch) in data.chunks(n).enumerate() {
        let mean = ch.iter().sum::<f64>() / n as f64;
        let norm = ch.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>().sqrt();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(DifError::Degenerate(format!("channel {c} has zero variance")));
        }
        out.extend(ch.iter().map(|v| (v - mean) / norm));
    }
    Ok(out)
}

fn to_f64<T: Float>(t: &Tensor<T>) -> Vec<f64> {
    t.data().iter().map(|v| v.as_f64()).collect()
}

/// Zero-mean, unit-norm version of `x`, per channel (`[C, H, W]` or `[1, C, H, W]`).
pub fn zm_un<T: Float>(x: &Tensor<T>, scope: CorrelationScope) -> Result<Tensor<T>> {
    let out = zm_un_groups(&to_f64(x), scope.groups(x.shape()))?;
    Ok(Tensor::from_vec(x.shape(), out.into_iter().map(T::from_f64).collect())?)
}

/// The correlation `rho` of two equally sized tensors, in `[-1, 1]`.
pub fn correlation<T: Float>(a: &Tensor<T>, b: &Tensor<T>, scope: CorrelationScope) -> Result<f64> {
    if a.len() != b.len() {
        return Err(DifError::Data(format!(
            "correlation of shapes {:?} and {:?}",
            a.shape(),
            b.shape()
        )));
    }
    let groups = scope.groups(a.shape());
    let (na, nb) = (zm_un_groups(&to_f64(a), groups)?, zm_un_groups(&to_f64(b), groups)?);
    let dot: f64 = na.iter().zip(&nb).map(|(x, y)| x * y).sum();
    Ok((dot / groups as f64).clamp(-1.0, 1.0))
}

/// `D_ij = |rho_i - rho_j|`.
pub fn correlation_distance(rho_i: f64, rho_j: f64) -> f64 {
    (rho_i - rho_j).abs()
}

/// Sample loss of one pair; `same_class` is the similarity factor `t`.
pub fn sample_loss(d: f64, same_class: bool, margin: f64, form: LossForm) -> Result<f64> {
    if !(margin > 0.0) {
        return Err(DifError::Config(format!("margin must be positive, got {margin}")));
    }
    Ok(if same_class {
        d / margin
    } else {
        match form {
            LossForm::Literal => (margin - d) / margin,
            LossForm::Hinged => (margin - d).max(0.0) / margin,
        }
    })
}

/// Residuals pre-normalized for repeated correlation against candidates.
#[derive(Clone, Debug)]
pub struct NormalizedSet {
    /// Row-major `[count, len]`.
    data: Vec<f32>,
    len: usize,
    groups: usize,
    scope: CorrelationScope,
}

impl NormalizedSet {
    pub fn new(residuals: &[Image], scope: CorrelationScope) -> Result<Self> {
        let first = residuals
            .first()
            .ok_or_else(|| DifError::Data("no residuals to normalize".into()))?;
        let len = first.len();
        let groups = scope.groups(first.shape());
        let mut data = Vec::with_capacity(len * residuals.len());
        for (i, r) in residuals.iter().enumerate() {
            if r.shape() != first.shape() {
                return Err(DifError::Data(format!(
                    "residual {i} has shape {:?}, expected {:?}",
                    r.shape(),
                    first.shape()
                )));
            }
            let n = zm_un_groups(&to_f64(r), groups)
                .map_err(|e| DifError::Degenerate(format!("residual {i}: {e}")))?;
            data.extend(n.into_iter().map(|v| v as f32));
        }
        Ok(Self { data, len, groups, scope })
    }

    pub fn count(&self) -> usize {
        self.data.len() / self.len
    }

    pub fn scope(&self) -> CorrelationScope {
        self.scope
    }

    fn row(&self, i: usize) -> &[f32] {
        &self.data[i * self.len..(i + 1) * self.len]
    }

    /// Correlation of residual `i` with an already normalized candidate.
    fn rho(&self, i: usize, fnorm: &[f64]) -> f64 {
        let dot: f64 = self.row(i).iter().zip(fnorm).map(|(&r, &f)| r as f64 * f).sum();
        dot / self.groups as f64
    }

    /// Correlation of every residual with `f`.
    pub fn correlations(&self, f: &Tensor<f32>) -> Result<Vec<f64>> {
        if f.len() != self.len {
            return Err(DifError::Data(format!("fingerprint has {} values, residuals {}", f.len(), self.len)));
        }
        let fnorm = zm_un_groups(&to_f64(f), self.groups)?;
        Ok((0..self.count()).map(|i| self.rho(i, &fnorm).clamp(-1.0, 1.0)).collect())
    }
}

struct CorrelationFn {
    set: Arc<NormalizedSet>,
    rows: Vec<usize>,
    fnorm: Vec<f64>,
    inv_norms: Vec<f64>,
}

impl<T: Float> Function<T> for CorrelationFn {
    fn name(&self) -> &'static str {
        "correlation"
    }

    fn backward(&self, ctx: BackwardCtx<'_, T>) -> Result<Vec<Option<Tensor<T>>>, dif_nn::NnError> {
        // d rho / d F_c = (r_c - mean(r_c) - rho_c fhat_c) / (|F_c - mean| * groups).
        // Stored rows are zero-mean only to f32 precision, so the mean is
        // projected out here rather than assumed.
        let set = &self.set;
        let n = set.len / set.groups;
        let mut grad = vec![0f64; set.len];
        for (k, &row) in self.rows.iter().enumerate() {
            let gk = ctx.grad.data()[k].as_f64() / set.groups as f64;
            if gk == 0.0 {
                continue;
            }
            let r = set.row(row);
            for c in 0..set.groups {
                let span = c * n..(c + 1) * n;
                let rc = &r[span.clone()];
                let fc = &self.fnorm[span.clone()];
                let rho_c: f64 = rc.iter().zip(fc).map(|(&a, &b)| a as f64 * b).sum();
                let mean_r = rc.iter().map(|&a| a as f64).sum::<f64>() / n as f64;
                let s = gk * self.inv_norms[c];
                for ((gv, &a), &b) in grad[span].iter_mut().zip(rc).zip(fc) {
                    *gv += s * (a as f64 - mean_r - rho_c * b);
                }
            }
        }
        let shape = ctx.inputs[0].shape();
        Ok(vec![Some(Tensor::from_vec(shape, grad.into_iter().map(T::from_f64).collect())?)])
    }
}

/// Record `rho(R_row, F)` for the selected rows on the tape; output shape `[rows]`.
pub fn tape_correlations<T: Float>(g: &mut Graph<T>, f: Var, set: &Arc<NormalizedSet>, rows: &[usize]) -> Result<Var> {
    let fv = g.value(f);
    if fv.len() != set.len {
        return Err(DifError::Data(format!("candidate has {} values, residuals {}", fv.len(), set.len)));
    }
    if let Some(&bad) = rows.iter().find(|&&r| r >= set.count()) {
        return Err(DifError::Data(format!("residual row {bad} out of range")));
    }
    let raw = to_f64(fv);
    let n = set.len / set.groups;
    let mut inv_norms = Vec::with_capacity(set.groups);
    for ch in raw.chunks(n) {
        let mean = ch.iter().sum::<f64>() / n as f64;
        inv_norms.push(1.0 / ch.iter().map(|v| (v - mean) * (v - mean)).sum::<f64>().sqrt());
    }
    let fnorm = zm_un_groups(&raw, set.groups)?;
    let rho: Vec<T> = rows.iter().map(|&r| T::from_f64(set.rho(r, &fnorm))).collect();
    let out = Tensor::from_vec(&[rows.len()], rho)?;
    Ok(g.apply(
        &[f],
        out,
        Box::new(CorrelationFn {
            set: Arc::clone(set),
            rows: rows.to_vec(),
            fnorm,
            inv_norms,
        }),
    ))
}

struct PairLossFn {
    generated: Vec<bool>,
    margin: f64,
    form: LossForm,
    pairs: usize,
}

impl<T: Float> Function<T> for PairLossFn {
    fn name(&self) -> &'static str {
        "pair_loss"
    }

    fn backward(&self, ctx: BackwardCtx<'_, T>) -> Result<Vec<Option<Tensor<T>>>, dif_nn::NnError> {
        let rho = to_f64(ctx.inputs[0]);
        let scale = ctx.grad.data()[0].as_f64() / (self.pairs as f64 * self.margin);
        let mut grad = vec![0f64; rho.len()];
        for i in 0..rho.len() {
            for j in i + 1..rho.len() {
                let diff = rho[i] - rho[j];
                let d_loss_d_dist = if self.generated[i] == self.generated[j] {
                    1.0
                } else if self.form == LossForm::Literal || diff.abs() < self.margin {
                    -1.0
                } else {
                    0.0
                };
                let s = scale * d_loss_d_dist * diff.signum() * (diff != 0.0) as u8 as f64;
                grad[i] += s;
                grad[j] -= s;
            }
        }
        Ok(vec![Some(Tensor::from_vec(
            ctx.inputs[0].shape(),
            grad.into_iter().map(T::from_f64).collect(),
        )?)])
    }
}

/// Mean sample loss over all pairs of the correlations in `rho`.
pub fn tape_pair_loss<T: Float>(g: &mut Graph<T>, rho: Var, generated: &[bool], margin: f64, form: LossForm) -> Result<Var> {
    let r = to_f64(g.value(rho));
    if r.len() != generated.len() || r.len() < 2 {
        return Err(DifError::Data(format!(
            "pair loss needs >= 2 correlations with labels, got {} and {}",
            r.len(),
            generated.len()
        )));
    }
    let mut total = 0.0;
    let mut pairs = 0;
    for i in 0..r.len() {
        for j in i + 1..r.len() {
            let d = correlation_distance(r[i], r[j]);
            total += sample_loss(d, generated[i] == generated[j], margin, form)?;
            pairs += 1;
        }
    }
    let out = Tensor::scalar(T::from_f64(total / pairs as f64));
    Ok(g.apply(
        &[rho],
        out,
        Box::new(PairLossFn {
            generated: generated.to_vec(),
            margin,
            form,
            pairs,
        }),
    ))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct ExtractionConfig {
    pub arch: Arch,
    pub margin: f64,
    pub lr: f64,
    pub steps: usize,
    pub ema_decay: f64,
    /// Residuals drawn per class per step.
    pub batch: usize,
    pub scope: CorrelationScope,
    pub loss: LossForm,
    pub seed: u64,
}

impl Default for ExtractionConfig {
    fn default() -> Self {
        Self {
            arch: Arch::UNet,
            margin: 0.01,
            lr: 5e-4,
            steps: 2000,
            ema_decay: 0.99,
            batch: 8,
            scope: CorrelationScope::PerChannel,
            loss: LossForm::Literal,
            seed: 0,
        }
    }
}

impl ExtractionConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(DifError::Config(m));
        if !(self.margin > 0.0) {
            return bad(format!("margin must be positive, got {}", self.margin));
        }
        if !(self.lr > 0.0) {
            return bad(format!("learning rate must be positive, got {}", self.lr));
        }
        if !(0.0..1.0).contains(&self.ema_decay) {
            return bad(format!("EMA decay must lie in [0, 1), got {}", self.ema_decay));
        }
        if self.batch == 0 {
            return bad("batch must be positive".into());
        }
        if !Arch::GENERATORS.contains(&self.arch) {
            return bad(format!("{} is not a generator architecture", self.arch.name()));
        }
        Ok(())
    }
}

/// An extracted fingerprint with the reference means of its training sets.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FingerprintRecord {
    #[serde(skip, default = "placeholder_image")]
    pub fingerprint: Image,
    pub mu_real: f64,
    pub mu_gen: f64,
    pub n_real: usize,
    pub n_gen: usize,
    pub working_size: usize,
    pub margin: f64,
    pub ema_decay: f64,
    pub scope: CorrelationScope,
    pub denoiser_id: String,
    pub source_model_id: String,
    pub seed: u64,
    pub method: String,
}

impl FingerprintRecord {
    /// Attach reference means: each class mean is taken over that class's
    /// own training correlations. The sample loss cannot tell `F` from `-F`,
    /// so the sign is fixed here to make `mu_gen >= mu_real`; nearest-mean
    /// decisions are unchanged by the flip.
    pub fn calibrate(
        mut fingerprint: Image,
        rho_real: &[f64],
        rho_gen: &[f64],
        ids: (&str, &str),
        method: &str,
        cfg: &ExtractionConfig,
    ) -> Result<Self> {
        let (_, size, _) = image::dims(&fingerprint)?;
        if rho_real.is_empty() || rho_gen.is_empty() {
            return Err(DifError::Data("reference means need both classes".into()));
        }
        let mean = |v: &[f64]| v.iter().sum::<f64>() / v.len() as f64;
        let (denoiser_id, source_model_id) = ids;
        let (mut mu_real, mut mu_gen) = (mean(rho_real), mean(rho_gen));
        if mu_gen < mu_real {
            fingerprint.scale(-1.0);
            (mu_real, mu_gen) = (-mu_real, -mu_gen);
        }
        Ok(Self {
            fingerprint,
            mu_real,
            mu_gen,
            n_real: rho_real.len(),
            n_gen: rho_gen.len(),
            working_size: size,
            margin: cfg.margin,
            ema_decay: cfg.ema_decay,
            scope: cfg.scope,
            denoiser_id: denoiser_id.to_string(),
            source_model_id: source_model_id.to_string(),
            seed: cfg.seed,
            method: method.to_string(),
        })
    }

    pub fn to_checkpoint(&self) -> Result<Checkpoint> {
        let mut c = Checkpoint::new("fingerprint", serde_json::to_value(self)?);
        c.push("fingerprint", self.fingerprint.clone());
        Ok(c)
    }

    pub fn from_checkpoint(c: &Checkpoint) -> Result<Self> {
        c.expect_kind("fingerprint")?;
        let mut meta = c.metadata.clone();
        if let Some(m) = meta.as_object_mut() {
            m.remove("type");
        }
        let mut rec: Self = serde_json::from_value(meta)?;
        rec.fingerprint = c.tensor("fingerprint")?.clone();
        Ok(rec)
    }
}

fn placeholder_image() -> Image {
    Tensor::zeros(&[3, 1, 1])
}

impl Default for FingerprintRecord {
    fn default() -> Self {
        Self {
            fingerprint: placeholder_image(),
            mu_real: 0.0,
            mu_gen: 0.0,
            n_real: 0,
            n_gen: 0,
            working_size: 0,
            margin: 0.0,
            ema_decay: 0.0,
            scope: CorrelationScope::PerChannel,
            denoiser_id: String::new(),
            source_model_id: String::new(),
            seed: 0,
            method: String::new(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Extraction {
    pub record: FingerprintRecord,
    pub loss_history: Vec<f64>,
    /// Set when the loss failed to decrease over the first tenth of the run.
    pub stalled: bool,
}

fn check_classes(real: &[Image], gen: &[Image], batch: usize) -> Result<()> {
    for (name, set) in [("real", real), ("generated", gen)] {
        if set.is_empty() {
            return Err(DifError::Data(format!("no {name} residuals")));
        }
        if set.len() < batch {
            return Err(DifError::Data(format!(
                "{} {name} residuals, fewer than the per-class batch of {batch}",
                set.len()
            )));
        }
    }
    Ok(())
}

/// Standard deviation of every value of every residual pooled together.
fn pooled_std(sets: &[&[Image]]) -> f64 {
    let (mut n, mut s, mut s2) = (0usize, 0f64, 0f64);
    for set in sets {
        for r in *set {
            for &v in r.data() {
                let v = v as f64;
                n += 1;
                s += v;
                s2 += v * v;
            }
        }
    }
    let mean = s / n as f64;
    (s2 / n as f64 - mean * mean).max(0.0).sqrt()
}

/// Optimize a generator so its output correlates with generated residuals
/// and not with real ones; accumulate its outputs into the fingerprint.
pub fn extract_fingerprint(
    res_real: &[Image],
    res_gen: &[Image],
    denoiser_id: &str,
    source_model_id: &str,
    cfg: &ExtractionConfig,
) -> Result<Extraction> {
    cfg.validate()?;
    check_classes(res_real, res_gen, cfg.batch)?;
    let (c, size, w) = image::dims(&res_real[0])?;
    if c != 3 || w != size {
        return Err(DifError::Data(format!("residuals must be 3xSxS, got {c}x{size}x{w}")));
    }
    let both: Vec<Image> = res_real.iter().chain(res_gen).cloned().collect();
    let pool = Arc::new(NormalizedSet::new(&both, cfg.scope)?);
    drop(both);
    let n_real = res_real.len();
    let scale = pooled_std(&[res_real, res_gen]);
    if !(scale > 0.0) {
        return Err(DifError::Degenerate("training residuals are constant".into()));
    }

    let spec = ModelSpec::new(cfg.arch, size, cfg.seed);
    let mut model = build::<f32>(&spec)?;
    let mut adam = Adam::new(cfg.lr);
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed ^ 0xf1_9e_7a_11);
    let z_shape = {
        let [zc, zh, zw] = spec.input_shape();
        debug_assert_eq!(zc, Z_CHANNELS);
        [1, zc, zh, zw]
    };
    let labels: Vec<bool> = std::iter::repeat_n(false, cfg.batch)
        .chain(std::iter::repeat_n(true, cfg.batch))
        .collect();

    let mut ema: Option<Tensor<f32>> = None;
    let mut history = Vec::with_capacity(cfg.steps);
    for step in 0..cfg.steps {
        let z = Tensor::from_fn(&z_shape, |_| rng.random::<f32>());
        let mut rows: Vec<usize> = sample(&mut rng, n_real, cfg.batch).into_vec();
        rows.extend(sample(&mut rng, res_gen.len(), cfg.batch).into_iter().map(|i| n_real + i));

        let mut g = Graph::new();
        let zv = g.constant(z);
        let fwd = model.forward(&mut g, zv, Mode::Train)?;
        let cand = g.affine(fwd.output, scale, 0.0);
        let rho = tape_correlations(&mut g, cand, &pool, &rows)?;
        let loss = tape_pair_loss(&mut g, rho, &labels, cfg.margin, cfg.loss)?;
        let lv = g.value(loss).data()[0] as f64;
        if !lv.is_finite() {
            return Err(DifError::Diverged {
                step,
                detail: "fingerprint loss is not finite".into(),
            });
        }
        history.push(lv);
        let mut grads = g.backward(loss)?;
        adam_update(&mut model, &mut adam, &mut grads, &fwd.params)?;

        let cand = g.value(cand).clone().reshape(&[3, size, size])?;
        ema = Some(match ema {
            None => cand,
            Some(mut f) => {
                f.scale(cfg.ema_decay as f32);
                f.axpy((1.0 - cfg.ema_decay) as f32, &cand)?;
                f
            }
        });
        if cfg.steps >= 10 && (step + 1) % (cfg.steps / 10) == 0 {
            log::info!("extraction step {}/{}: loss {lv:.4}", step + 1, cfg.steps);
        }
    }
    let stalled = loss_stalled(&history);
    if stalled {
        log::warn!("fingerprint loss did not decrease over the first 10% of steps");
    }
    let fingerprint = ema.ok_or_else(|| DifError::Config("extraction needs at least one step".into()))?;
    let rho = pool.correlations(&fingerprint)?;
    let (rho_real, rho_gen) = rho.split_at(n_real);
    let record = FingerprintRecord::calibrate(fingerprint, rho_real, rho_gen, (denoiser_id, source_model_id), "extraction", cfg)?;
    Ok(Extraction {
        record,
        loss_history: history,
        stalled,
    })
}

/// Compare the two halves of the first tenth of the run.
pub fn loss_stalled(history: &[f64]) -> bool {
    let n = (history.len() / 10).max(2).min(history.len());
    if n < 2 {
        return false;
    }
    let head = &history[..n];
    let (a, b) = head.split_at(n / 2);
    let mean = |s: &[f64]| s.iter().sum::<f64>() / s.len() as f64;
    mean(b) >= mean(a)
}

/// Elementwise mean of the residuals (the averaging baseline).
pub fn average_fingerprint(residuals: &[Image]) -> Result<Image> {
    let first = residuals
        .first()
        .ok_or_else(|| DifError::Data("no residuals to average".into()))?;
    let mut acc = vec![0f64; first.len()];
    for r in residuals {
        if r.shape() != first.shape() {
            return Err(DifError::Data(format!("shape {:?} vs {:?}", r.shape(), first.shape())));
        }
        for (a, &v) in acc.iter_mut().zip(r.data()) {
            *a += v as f64;
        }
    }
    let n = residuals.len() as f64;
    Ok(Tensor::from_vec(first.shape(), acc.into_iter().map(|a| (a / n) as f32).collect())?)
}

/// Averaging baseline packaged as a record, reference means included.
pub fn averaged_record(res_real: &[Image], res_gen: &[Image], denoiser_id: &str, source_model_id: &str, scope: CorrelationScope) -> Result<FingerprintRecord> {
    check_classes(res_real, res_gen, 1)?;
    let cfg = ExtractionConfig {
        scope,
        ..Default::default()
    };
    let f = average_fingerprint(res_gen)?;
    let rho_real = NormalizedSet::new(res_real, scope)?.correlations(&f)?;
    let rho_gen = NormalizedSet::new(res_gen, scope)?.correlations(&f)?;
    FingerprintRecord::calibrate(f, &rho_real, &rho_gen, (denoiser_id, source_model_id), "averaging", &cfg)
}

/// Centered FFT magnitude of every channel.
pub fn fourier_magnitude(x: &Image) -> Result<Image> {
    let (c, h, w) = image::dims(x)?;
    let mut out = Vec::with_capacity(x.len());
    for ch in x.data().chunks(h * w) {
        let plane: Vec<f64> = ch.iter().map(|&v| v as f64).collect();
        let mag = fftshift(&fft2_magnitude(&plane, h, w), h, w);
        out.extend(mag.into_iter().map(|m| m as f32));
    }
    Ok(Tensor::from_vec(&[c, h, w], out)?)
}

/// Correlation of the centered Fourier magnitudes of `r` and `f`.
pub fn fourier_correlation(r: &Image, f: &Image, scope: CorrelationScope) -> Result<f64> {
    if r.shape() != f.shape() {
        return Err(DifError::Data(format!("shapes {:?} and {:?}", r.shape(), f.shape())));
    }
    correlation(&fourier_magnitude(r)?, &fourier_magnitude(f)?, scope)
}

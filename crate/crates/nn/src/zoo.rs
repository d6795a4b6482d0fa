//! Declarative model zoo.
//!
//! Every architecture is a flat list of [`Layer`]s plus a small program of
//! [`Step`]s that wires skip connections. One interpreter runs all of them.

use std::fmt::Write as _;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{NnError, Result};
use crate::float::Float;
use crate::graph::{Graph, Var};
use crate::layers::{Layer, LayerKind, Mode};
use crate::ops::BatchStats;
use crate::tensor::Tensor;

/// Number of channels of the random input `Z` fed to generator nets.
pub const Z_CHANNELS: usize = 16;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Arch {
    UNet,
    U1Net,
    CNet,
    UpNet,
    DNet,
    DnCNN,
}

impl Arch {
    pub const GENERATORS: [Arch; 5] = [Arch::UNet, Arch::U1Net, Arch::CNet, Arch::UpNet, Arch::DNet];

    pub fn name(self) -> &'static str {
        match self {
            Arch::UNet => "unet",
            Arch::U1Net => "u1net",
            Arch::CNet => "cnet",
            Arch::UpNet => "upnet",
            Arch::DNet => "dnet",
            Arch::DnCNN => "dncnn",
        }
    }

    /// Whether the net consumes `Z` at 1/16 of the working size.
    pub fn low_res_input(self) -> bool {
        matches!(self, Arch::UpNet | Arch::DNet)
    }
}

impl std::str::FromStr for Arch {
    type Err = NnError;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().replace(['-', '_'], "").as_str() {
            "unet" => Ok(Arch::UNet),
            "u1net" => Ok(Arch::U1Net),
            "cnet" => Ok(Arch::CNet),
            "upnet" => Ok(Arch::UpNet),
            "dnet" => Ok(Arch::DNet),
            "dncnn" => Ok(Arch::DnCNN),
            other => Err(NnError::Spec(format!("unknown architecture '{other}'"))),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ModelSpec {
    pub arch: Arch,
    pub in_channels: usize,
    pub working_size: usize,
    /// Width of C-Net / Up-Net hidden layers and of DnCNN.
    pub hidden_width: usize,
    /// Number of conv layers for C-Net and DnCNN; ignored elsewhere.
    pub depth: usize,
    pub seed: u64,
}

impl ModelSpec {
    /// Spec with the default widths and depths for `arch`.
    pub fn new(arch: Arch, working_size: usize, seed: u64) -> Self {
        let (in_channels, hidden_width, depth) = match arch {
            Arch::DnCNN => (3, 64, 17),
            Arch::CNet => (Z_CHANNELS, 32, 8),
            _ => (Z_CHANNELS, 32, 0),
        };
        Self {
            arch,
            in_channels,
            working_size,
            hidden_width,
            depth,
            seed,
        }
    }

    pub fn validate(&self) -> Result<()> {
        let s = self.working_size;
        if s == 0 {
            return Err(NnError::Spec("working size must be positive".into()));
        }
        match self.arch {
            Arch::UNet | Arch::U1Net | Arch::DNet | Arch::UpNet if s % 16 != 0 => Err(NnError::Spec(format!(
                "{} needs a working size divisible by 16, got {s}",
                self.arch.name()
            ))),
            Arch::DnCNN if self.in_channels != 3 => Err(NnError::Spec(format!(
                "DnCNN maps 3 channels to 3, got in_channels {}",
                self.in_channels
            ))),
            Arch::DnCNN | Arch::CNet if self.depth < 2 => {
                Err(NnError::Spec(format!("depth must be >= 2, got {}", self.depth)))
            }
            Arch::CNet | Arch::UpNet | Arch::DnCNN if self.hidden_width == 0 => {
                Err(NnError::Spec("hidden width must be positive".into()))
            }
            _ if self.in_channels == 0 => Err(NnError::Spec("in_channels must be positive".into())),
            _ => Ok(()),
        }
    }

    /// Shape of one input sample, `[C, H, W]`.
    pub fn input_shape(&self) -> [usize; 3] {
        let s = if self.arch.low_res_input() {
            self.working_size / 16
        } else {
            self.working_size
        };
        [self.in_channels, s, s]
    }

    pub fn output_shape(&self) -> [usize; 3] {
        [3, self.working_size, self.working_size]
    }
}

/// Skip-connection wiring between layers.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Step {
    Layer(usize),
    /// Save the current activation for a later [`Step::ConcatSkip`].
    PushSkip,
    /// Concatenate the most recently saved activation after the current one.
    ConcatSkip,
}

#[derive(Clone, Debug, PartialEq)]
pub struct Model<T: Float = f32> {
    pub spec: ModelSpec,
    pub layers: Vec<Layer<T>>,
    pub program: Vec<Step>,
}

/// Result of recording a forward pass on a tape.
pub struct Forward {
    pub output: Var,
    /// Vars of all trainable tensors, in [`Model::params`] order.
    pub params: Vec<Var>,
}

struct Builder<'r> {
    layers: Vec<LayerKind>,
    program: Vec<Step>,
    rng: &'r mut ChaCha8Rng,
}

impl Builder<'_> {
    fn push(&mut self, kind: LayerKind) {
        self.program.push(Step::Layer(self.layers.len()));
        self.layers.push(kind);
    }

    fn conv_bn_act(&mut self, cin: usize, cout: usize, kernel: usize) {
        self.push(LayerKind::conv(cin, cout, kernel));
        self.push(LayerKind::batchnorm(cout));
        self.push(LayerKind::leaky());
    }

    fn finish<T: Float>(self, spec: ModelSpec) -> Result<Model<T>> {
        let layers = self
            .layers
            .into_iter()
            .map(|k| Layer::init(k, self.rng))
            .collect::<Result<Vec<_>>>()?;
        Ok(Model {
            spec,
            layers,
            program: self.program,
        })
    }
}

const ENCODER: [(usize, usize); 4] = [(16, 32), (32, 64), (64, 128), (128, 256)];
const DECODER: [(usize, usize); 4] = [(256, 128), (128, 64), (64, 32), (32, 32)];

fn unet_like<T: Float>(spec: ModelSpec, kernel: usize) -> Result<Model<T>> {
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut b = Builder {
        layers: Vec::new(),
        program: Vec::new(),
        rng: &mut rng,
    };
    let mut cin = spec.in_channels;
    for (_, cout) in ENCODER {
        b.conv_bn_act(cin, cout, kernel);
        b.conv_bn_act(cout, cout, kernel);
        b.program.push(Step::PushSkip);
        b.push(LayerKind::MaxPool2x2);
        cin = cout;
    }
    for (skip_c, cout) in DECODER {
        b.push(LayerKind::ConvTranspose2d {
            in_channels: cin,
            out_channels: cin,
        });
        b.program.push(Step::ConcatSkip);
        b.conv_bn_act(cin + skip_c, cout, kernel);
        b.conv_bn_act(cout, cout, kernel);
        cin = cout;
    }
    b.push(LayerKind::conv(cin, 3, kernel));
    b.push(LayerKind::Tanh);
    b.finish(spec)
}

/// U-Net of the extraction step: four conv blocks down, four deconv blocks
/// up with same-resolution skip concatenation, conv + tanh head.
pub fn build_unet<T: Float>(spec: &ModelSpec) -> Result<Model<T>> {
    expect_arch(spec, Arch::UNet)?;
    unet_like(spec.clone(), 3)
}

/// U-Net with every convolution reduced to 1x1 (no padding anywhere).
pub fn build_u1net<T: Float>(spec: &ModelSpec) -> Result<Model<T>> {
    expect_arch(spec, Arch::U1Net)?;
    unet_like(spec.clone(), 1)
}

/// The U-Net decoder alone, without skips, fed by `Z` at 1/16 resolution.
pub fn build_dnet<T: Float>(spec: &ModelSpec) -> Result<Model<T>> {
    expect_arch(spec, Arch::DNet)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut b = Builder {
        layers: Vec::new(),
        program: Vec::new(),
        rng: &mut rng,
    };
    let mut cin = spec.in_channels;
    for (i, (skip_c, cout)) in DECODER.into_iter().enumerate() {
        // The first deconv lifts Z to the decoder's 256 channels; the
        // channels a skip would have supplied are absent.
        let up = if i == 0 { skip_c } else { cin };
        b.push(LayerKind::ConvTranspose2d {
            in_channels: cin,
            out_channels: up,
        });
        b.conv_bn_act(up, cout, 3);
        b.conv_bn_act(cout, cout, 3);
        cin = cout;
    }
    b.push(LayerKind::conv(cin, 3, 3));
    b.push(LayerKind::Tanh);
    b.finish(spec.clone())
}

/// Eight 3x3 convolutions (padding 1), no resampling.
pub fn build_cnet<T: Float>(spec: &ModelSpec) -> Result<Model<T>> {
    expect_arch(spec, Arch::CNet)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut b = Builder {
        layers: Vec::new(),
        program: Vec::new(),
        rng: &mut rng,
    };
    let w = spec.hidden_width;
    let mut cin = spec.in_channels;
    for _ in 0..spec.depth - 1 {
        b.push(LayerKind::conv(cin, w, 3));
        b.push(LayerKind::leaky());
        cin = w;
    }
    b.push(LayerKind::conv(cin, 3, 3));
    b.push(LayerKind::Tanh);
    b.finish(spec.clone())
}

/// Four blocks of 1x1 conv followed by a 2x2 stride-2 deconv; nothing pads.
pub fn build_upnet<T: Float>(spec: &ModelSpec) -> Result<Model<T>> {
    expect_arch(spec, Arch::UpNet)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut b = Builder {
        layers: Vec::new(),
        program: Vec::new(),
        rng: &mut rng,
    };
    let w = spec.hidden_width;
    let mut cin = spec.in_channels;
    for block in 0..4 {
        b.push(LayerKind::conv(cin, w, 1));
        b.push(LayerKind::leaky());
        let out = if block == 3 { 3 } else { w };
        b.push(LayerKind::ConvTranspose2d {
            in_channels: w,
            out_channels: out,
        });
        if block < 3 {
            b.push(LayerKind::leaky());
        }
        cin = w;
    }
    b.push(LayerKind::Tanh);
    b.finish(spec.clone())
}

/// DnCNN-S: conv+ReLU, (depth-2) x conv+BN+ReLU, conv. Predicts the noise.
pub fn build_dncnn<T: Float>(spec: &ModelSpec) -> Result<Model<T>> {
    expect_arch(spec, Arch::DnCNN)?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let mut b = Builder {
        layers: Vec::new(),
        program: Vec::new(),
        rng: &mut rng,
    };
    let w = spec.hidden_width;
    b.push(LayerKind::conv(3, w, 3));
    b.push(LayerKind::Relu);
    for _ in 0..spec.depth - 2 {
        b.push(LayerKind::conv(w, w, 3));
        b.push(LayerKind::batchnorm(w));
        b.push(LayerKind::Relu);
    }
    b.push(LayerKind::conv(w, 3, 3));
    b.finish(spec.clone())
}

fn expect_arch(spec: &ModelSpec, arch: Arch) -> Result<()> {
    if spec.arch != arch {
        return Err(NnError::Spec(format!(
            "expected a {} spec, got {}",
            arch.name(),
            spec.arch.name()
        )));
    }
    spec.validate()
}

/// Build whichever architecture `spec` names.
pub fn build<T: Float>(spec: &ModelSpec) -> Result<Model<T>> {
    match spec.arch {
        Arch::UNet => build_unet(spec),
        Arch::U1Net => build_u1net(spec),
        Arch::CNet => build_cnet(spec),
        Arch::UpNet => build_upnet(spec),
        Arch::DNet => build_dnet(spec),
        Arch::DnCNN => build_dncnn(spec),
    }
}

impl<T: Float> Model<T> {
    pub fn param_count(&self) -> usize {
        self.layers.iter().map(Layer::param_count).sum()
    }

    /// Trainable tensors as `(name, tensor)`, weight before bias per layer.
    pub fn params(&self) -> Vec<(String, &Tensor<T>)> {
        let mut out = Vec::new();
        for (i, l) in self.layers.iter().enumerate() {
            if let Some(w) = &l.weight {
                out.push((format!("layer{i}.weight"), w));
            }
            if let Some(b) = &l.bias {
                out.push((format!("layer{i}.bias"), b));
            }
        }
        out
    }

    pub fn params_mut(&mut self) -> Vec<&mut Tensor<T>> {
        let mut out = Vec::new();
        for l in &mut self.layers {
            if let Some(w) = l.weight.as_mut() {
                out.push(w);
            }
            if let Some(b) = l.bias.as_mut() {
                out.push(b);
            }
        }
        out
    }

    pub fn param_names(&self) -> Vec<String> {
        self.params().into_iter().map(|(n, _)| n).collect()
    }

    /// Parameters plus batch-norm running statistics, for persistence.
    pub fn state(&self) -> Vec<(String, &Tensor<T>)> {
        let mut out = Vec::new();
        for (i, l) in self.layers.iter().enumerate() {
            let slots = [
                ("weight", &l.weight),
                ("bias", &l.bias),
                ("running_mean", &l.running_mean),
                ("running_var", &l.running_var),
            ];
            for (name, t) in slots {
                if let Some(t) = t {
                    out.push((format!("layer{i}.{name}"), t));
                }
            }
        }
        out
    }

    /// Overwrite the state from `(name, tensor)` pairs produced by [`Model::state`].
    pub fn load_state(&mut self, tensors: &[(String, Tensor<T>)]) -> Result<()> {
        let expected = self.state().len();
        if tensors.len() != expected {
            return Err(NnError::Spec(format!(
                "state has {} tensors, model expects {expected}",
                tensors.len()
            )));
        }
        for (name, t) in tensors {
            let (layer, slot) = name
                .strip_prefix("layer")
                .and_then(|r| r.split_once('.'))
                .ok_or_else(|| NnError::Spec(format!("bad state name '{name}'")))?;
            let idx: usize = layer
                .parse()
                .map_err(|_| NnError::Spec(format!("bad state name '{name}'")))?;
            let l = self
                .layers
                .get_mut(idx)
                .ok_or_else(|| NnError::Spec(format!("no layer {idx}")))?;
            let dst = match slot {
                "weight" => &mut l.weight,
                "bias" => &mut l.bias,
                "running_mean" => &mut l.running_mean,
                "running_var" => &mut l.running_var,
                _ => return Err(NnError::Spec(format!("bad state name '{name}'"))),
            };
            match dst {
                Some(d) if d.shape() == t.shape() => *d = t.clone(),
                _ => {
                    return Err(NnError::Spec(format!(
                        "state tensor '{name}' {:?} does not fit the model",
                        t.shape()
                    )))
                }
            }
        }
        Ok(())
    }

    /// Record a forward pass with externally supplied parameter vars.
    ///
    /// Returns batch statistics of every training-mode batch-norm layer so the
    /// caller can decide whether to fold them into the running estimates.
    pub fn forward_with(
        &self,
        g: &mut Graph<T>,
        x: Var,
        params: &[Var],
        mode: Mode,
    ) -> Result<(Var, Vec<(usize, BatchStats)>)> {
        let mut offsets = Vec::with_capacity(self.layers.len());
        let mut n = 0;
        for l in &self.layers {
            offsets.push(n);
            n += l.weight.is_some() as usize + l.bias.is_some() as usize;
        }
        if params.len() != n {
            return Err(NnError::Graph(format!(
                "model has {n} parameter tensors, got {} vars",
                params.len()
            )));
        }
        let mut cur = x;
        let mut skips = Vec::new();
        let mut stats = Vec::new();
        for step in &self.program {
            match *step {
                Step::Layer(i) => {
                    let l = &self.layers[i];
                    let np = l.weight.is_some() as usize + l.bias.is_some() as usize;
                    let (out, st) = l.forward(g, cur, &params[offsets[i]..offsets[i] + np], mode)?;
                    if let Some(st) = st {
                        stats.push((i, st));
                    }
                    cur = out;
                }
                Step::PushSkip => skips.push(cur),
                Step::ConcatSkip => {
                    let s = skips
                        .pop()
                        .ok_or_else(|| NnError::Graph("skip stack underflow".into()))?;
                    cur = g.concat_channels(cur, s)?;
                }
            }
        }
        Ok((cur, stats))
    }

    /// Record a forward pass, creating parameter leaves on the tape. In
    /// training mode batch-norm running statistics are updated.
    pub fn forward(&mut self, g: &mut Graph<T>, x: Var, mode: Mode) -> Result<Forward> {
        let params: Vec<Var> = self
            .params()
            .into_iter()
            .map(|(_, t)| t.clone())
            .collect::<Vec<_>>()
            .into_iter()
            .map(|t| g.leaf(t))
            .collect();
        let (output, stats) = self.forward_with(g, x, &params, mode)?;
        if mode == Mode::Train {
            for (i, st) in stats {
                self.layers[i].update_running_stats(&st);
            }
        }
        Ok(Forward { output, params })
    }

    /// Evaluate without keeping gradients (inputs are constants on a scratch tape).
    pub fn predict(&self, x: &Tensor<T>) -> Result<Tensor<T>> {
        let mut g = Graph::new();
        let xv = g.constant(x.clone());
        let params: Vec<Var> = self.params().into_iter().map(|(_, t)| g.constant(t.clone())).collect();
        let (out, _) = self.forward_with(&mut g, xv, &params, Mode::Eval)?;
        Ok(g.value(out).clone())
    }

    /// Layer-by-layer summary with output shapes for one input sample.
    pub fn summary(&self) -> Result<String> {
        let mut g = Graph::new();
        let mut shape = vec![1];
        shape.extend_from_slice(&self.spec.input_shape());
        let x = g.constant(Tensor::zeros(&shape));
        let params: Vec<Var> = self.params().into_iter().map(|(_, t)| g.constant(t.clone())).collect();
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{} (working size {}, {} parameters)",
            self.spec.arch.name(),
            self.spec.working_size,
            self.param_count()
        );
        let mut cur = x;
        let mut skips = Vec::new();
        let mut offset = 0;
        let mut offsets = Vec::new();
        for l in &self.layers {
            offsets.push(offset);
            offset += l.weight.is_some() as usize + l.bias.is_some() as usize;
        }
        for step in &self.program {
            match *step {
                Step::Layer(i) => {
                    let l = &self.layers[i];
                    let np = l.weight.is_some() as usize + l.bias.is_some() as usize;
                    cur = l.forward(&mut g, cur, &params[offsets[i]..offsets[i] + np], Mode::Eval)?.0;
                    let _ = writeln!(s, "  {:<32} -> {:?}", l.describe(), g.value(cur).shape());
                }
                Step::PushSkip => {
                    skips.push(cur);
                    let _ = writeln!(s, "  {:<32}", "save skip");
                }
                Step::ConcatSkip => {
                    let sk = skips.pop().ok_or_else(|| NnError::Graph("skip stack underflow".into()))?;
                    cur = g.concat_channels(cur, sk)?;
                    let _ = writeln!(s, "  {:<32} -> {:?}", "concat skip", g.value(cur).shape());
                }
            }
        }
        Ok(s)
    }

    /// Convert every tensor to another scalar type.
    pub fn cast<U: Float>(&self) -> Model<U> {
        Model {
            spec: self.spec.clone(),
            layers: self
                .layers
                .iter()
                .map(|l| Layer {
                    kind: l.kind.clone(),
                    weight: l.weight.as_ref().map(Tensor::cast),
                    bias: l.bias.as_ref().map(Tensor::cast),
                    running_mean: l.running_mean.as_ref().map(Tensor::cast),
                    running_var: l.running_var.as_ref().map(Tensor::cast),
                })
                .collect(),
            program: self.program.clone(),
        }
    }
}

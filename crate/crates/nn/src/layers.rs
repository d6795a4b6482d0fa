use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::error::{NnError, Result};
use crate::float::Float;
use crate::graph::{Graph, Var};
use crate::ops::{Activation, BatchStats, BnMode, ConvGeometry};
use crate::tensor::Tensor;

pub const LEAKY_SLOPE: f64 = 0.2;
pub const BN_MOMENTUM: f64 = 0.1;
pub const BN_EPS: f64 = 1e-5;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Mode {
    Train,
    Eval,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum LayerKind {
    Conv2d {
        in_channels: usize,
        out_channels: usize,
        kernel: usize,
        stride: usize,
        padding: usize,
    },
    /// Always kernel 2, stride 2.
    ConvTranspose2d {
        in_channels: usize,
        out_channels: usize,
    },
    BatchNorm2d {
        channels: usize,
        momentum: f64,
        eps: f64,
    },
    MaxPool2x2,
    LeakyRelu {
        slope: f64,
    },
    Relu,
    Tanh,
}

impl LayerKind {
    pub fn conv(in_channels: usize, out_channels: usize, kernel: usize) -> Self {
        LayerKind::Conv2d {
            in_channels,
            out_channels,
            kernel,
            stride: 1,
            padding: kernel / 2,
        }
    }

    pub fn batchnorm(channels: usize) -> Self {
        LayerKind::BatchNorm2d {
            channels,
            momentum: BN_MOMENTUM,
            eps: BN_EPS,
        }
    }

    pub fn leaky() -> Self {
        LayerKind::LeakyRelu { slope: LEAKY_SLOPE }
    }

    fn label(&self) -> String {
        match self {
            LayerKind::Conv2d {
                in_channels,
                out_channels,
                kernel,
                padding,
                ..
            } => format!("conv{kernel}x{kernel} {in_channels}->{out_channels} pad {padding}"),
            LayerKind::ConvTranspose2d {
                in_channels,
                out_channels,
            } => format!("deconv2x2/2 {in_channels}->{out_channels}"),
            LayerKind::BatchNorm2d { channels, .. } => format!("batchnorm {channels}"),
            LayerKind::MaxPool2x2 => "maxpool2x2".into(),
            LayerKind::LeakyRelu { slope } => format!("leaky-relu {slope}"),
            LayerKind::Relu => "relu".into(),
            LayerKind::Tanh => "tanh".into(),
        }
    }
}

/// One layer with its parameters and (for batch-norm) running statistics.
///
/// For batch-norm `weight`/`bias` hold gamma/beta.
#[derive(Clone, Debug, PartialEq)]
pub struct Layer<T: Float = f32> {
    pub kind: LayerKind,
    pub weight: Option<Tensor<T>>,
    pub bias: Option<Tensor<T>>,
    pub running_mean: Option<Tensor<T>>,
    pub running_var: Option<Tensor<T>>,
}

impl<T: Float> Layer<T> {
    /// Fresh layer; convolutions get fan-in scaled normal weights and zero bias,
    /// batch-norm gets gamma = 1, beta = 0.
    pub fn init(kind: LayerKind, rng: &mut impl Rng) -> Result<Self> {
        let mut layer = Layer {
            kind: kind.clone(),
            weight: None,
            bias: None,
            running_mean: None,
            running_var: None,
        };
        match kind {
            LayerKind::Conv2d {
                in_channels,
                out_channels,
                kernel,
                stride,
                ..
            } => {
                if stride == 0 || kernel == 0 {
                    return Err(NnError::Spec(format!("degenerate conv {kind:?}")));
                }
                let fan_in = in_channels * kernel * kernel;
                layer.weight = Some(kaiming(&[out_channels, in_channels, kernel, kernel], fan_in, rng));
                layer.bias = Some(Tensor::zeros(&[out_channels]));
            }
            LayerKind::ConvTranspose2d {
                in_channels,
                out_channels,
            } => {
                layer.weight = Some(kaiming(&[in_channels, out_channels, 2, 2], in_channels, rng));
                layer.bias = Some(Tensor::zeros(&[out_channels]));
            }
            LayerKind::BatchNorm2d { channels, eps, .. } => {
                if eps <= 0.0 {
                    return Err(NnError::Spec(format!("batch-norm eps must be > 0, got {eps}")));
                }
                layer.weight = Some(Tensor::full(&[channels], T::one()));
                layer.bias = Some(Tensor::zeros(&[channels]));
                layer.running_mean = Some(Tensor::zeros(&[channels]));
                layer.running_var = Some(Tensor::full(&[channels], T::one()));
            }
            LayerKind::MaxPool2x2 | LayerKind::LeakyRelu { .. } | LayerKind::Relu | LayerKind::Tanh => {}
        }
        Ok(layer)
    }

    pub fn param_count(&self) -> usize {
        self.weight.as_ref().map_or(0, |t| t.len()) + self.bias.as_ref().map_or(0, |t| t.len())
    }

    pub fn describe(&self) -> String {
        self.kind.label()
    }

    /// Record this layer on the tape. `params` holds the vars for
    /// `weight` then `bias` (whichever exist).
    pub fn forward(
        &self,
        g: &mut Graph<T>,
        x: Var,
        params: &[Var],
        mode: Mode,
    ) -> Result<(Var, Option<BatchStats>)> {
        match &self.kind {
            LayerKind::Conv2d {
                kernel,
                stride,
                padding,
                ..
            } => {
                let geo = ConvGeometry {
                    kernel: *kernel,
                    stride: *stride,
                    padding: *padding,
                };
                Ok((g.conv2d(x, params[0], params.get(1).copied(), geo)?, None))
            }
            LayerKind::ConvTranspose2d { .. } => Ok((
                g.conv_transpose2d_k2s2(x, params[0], params.get(1).copied())?,
                None,
            )),
            LayerKind::BatchNorm2d { eps, .. } => {
                let bn_mode = match mode {
                    Mode::Train => BnMode::Train,
                    Mode::Eval => BnMode::Eval {
                        running_mean: self.running_mean.as_ref().expect("batch-norm state").data(),
                        running_var: self.running_var.as_ref().expect("batch-norm state").data(),
                    },
                };
                g.batchnorm2d(x, params[0], params[1], *eps, bn_mode)
            }
            LayerKind::MaxPool2x2 => Ok((g.maxpool2x2(x)?, None)),
            LayerKind::LeakyRelu { slope } => Ok((g.activation(x, Activation::LeakyRelu(*slope)), None)),
            LayerKind::Relu => Ok((g.activation(x, Activation::Relu), None)),
            LayerKind::Tanh => Ok((g.activation(x, Activation::Tanh), None)),
        }
    }

    /// Fold batch statistics into the running estimates.
    pub fn update_running_stats(&mut self, stats: &BatchStats) {
        let LayerKind::BatchNorm2d { momentum, .. } = self.kind else {
            return;
        };
        if let (Some(rm), Some(rv)) = (self.running_mean.as_mut(), self.running_var.as_mut()) {
            for (i, (m, v)) in stats.mean.iter().zip(&stats.var_unbiased).enumerate() {
                let om = rm.data()[i].as_f64();
                let ov = rv.data()[i].as_f64();
                rm.data_mut()[i] = T::from_f64((1.0 - momentum) * om + momentum * m);
                rv.data_mut()[i] = T::from_f64((1.0 - momentum) * ov + momentum * v);
            }
        }
    }
}

fn kaiming<T: Float>(shape: &[usize], fan_in: usize, rng: &mut impl Rng) -> Tensor<T> {
    let std = (2.0 / fan_in.max(1) as f64).sqrt();
    Tensor::from_fn(shape, |_| {
        let z: f64 = rng.sample(StandardNormal);
        T::from_f64(z * std)
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn running_stats_follow_momentum() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let mut bn = Layer::<f64>::init(LayerKind::batchnorm(1), &mut rng).unwrap();
        bn.update_running_stats(&BatchStats {
            mean: vec![1.0],
            var_unbiased: vec![3.0],
        });
        assert!((bn.running_mean.as_ref().unwrap().data()[0] - 0.1).abs() < 1e-12);
        assert!((bn.running_var.as_ref().unwrap().data()[0] - 1.2).abs() < 1e-12);
    }

    #[test]
    fn non_positive_eps_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let kind = LayerKind::BatchNorm2d {
            channels: 2,
            momentum: 0.1,
            eps: 0.0,
        };
        assert!(Layer::<f32>::init(kind, &mut rng).is_err());
    }
}

use crate::error::{dim_err, Result};
use crate::float::Float;
use crate::graph::{BackwardCtx, Function, Graph, Var};
use crate::tensor::Tensor;

/// Per-channel statistics of one training-mode batch-norm evaluation.
#[derive(Clone, Debug)]
pub struct BatchStats {
    pub mean: Vec<f64>,
    /// Unbiased variance, the estimate folded into running statistics.
    pub var_unbiased: Vec<f64>,
}

/// Which statistics normalize the input.
#[derive(Clone, Copy, Debug)]
pub enum BnMode<'a, T> {
    Train,
    Eval {
        running_mean: &'a [T],
        running_var: &'a [T],
    },
}

struct BatchNormFn<T> {
    xhat: Vec<T>,
    inv_std: Vec<T>,
    train: bool,
}

fn check_affine<T: Float>(x: &Tensor<T>, gamma: &Tensor<T>, beta: &Tensor<T>) -> Result<(usize, usize, usize)> {
    let (n, c, h, w) = x.dims4()?;
    if gamma.shape() != [c] || beta.shape() != [c] {
        return Err(dim_err(
            "batchnorm2d",
            format!(
                "input {:?} needs gamma/beta of [{c}], got {:?}/{:?}",
                x.shape(),
                gamma.shape(),
                beta.shape()
            ),
        ));
    }
    Ok((n, c, h * w))
}

pub fn batchnorm2d_forward<T: Float>(
    x: &Tensor<T>,
    gamma: &Tensor<T>,
    beta: &Tensor<T>,
    eps: f64,
    mode: BnMode<'_, T>,
) -> Result<(Tensor<T>, Vec<T>, Vec<T>, Option<BatchStats>)> {
    let (n, c, plane) = check_affine(x, gamma, beta)?;
    let m = n * plane;
    let xd = x.data();
    // slices of channel `ci` across the batch
    let chunks = |ci: usize| (0..n).map(move |b| (b * c + ci) * plane..(b * c + ci + 1) * plane);
    let mut means = vec![0.0f64; c];
    let mut vars = vec![0.0f64; c];
    let stats = match mode {
        BnMode::Train => {
            if m < 2 {
                return Err(dim_err(
                    "batchnorm2d",
                    format!("training mode needs >1 value per channel, got {:?}", x.shape()),
                ));
            }
            for ci in 0..c {
                let s: f64 = chunks(ci).map(|r| sum_f64(&xd[r])).sum();
                let mean = s / m as f64;
                let mt = T::from_f64(mean);
                let ss: f64 = chunks(ci)
                    .map(|r| {
                        xd[r].iter().fold(T::zero(), |acc, &v| {
                            let d = v - mt;
                            acc + d * d
                        })
                    })
                    .map(T::as_f64)
                    .sum();
                means[ci] = mean;
                vars[ci] = ss / m as f64;
            }
            Some(BatchStats {
                mean: means.clone(),
                var_unbiased: vars.iter().map(|v| v * m as f64 / (m - 1) as f64).collect(),
            })
        }
        BnMode::Eval {
            running_mean,
            running_var,
        } => {
            if running_mean.len() != c || running_var.len() != c {
                return Err(dim_err("batchnorm2d", "running statistics length mismatch"));
            }
            for ci in 0..c {
                means[ci] = running_mean[ci].as_f64();
                vars[ci] = running_var[ci].as_f64();
            }
            None
        }
    };
    let inv_std: Vec<T> = vars.iter().map(|v| T::from_f64(1.0 / (v + eps).sqrt())).collect();
    let mut xhat = vec![T::zero(); xd.len()];
    let mut out = Tensor::zeros(x.shape());
    let od = out.data_mut();
    for ci in 0..c {
        let mean = T::from_f64(means[ci]);
        let (g, bt, is) = (gamma.data()[ci], beta.data()[ci], inv_std[ci]);
        for r in chunks(ci) {
            for ((o, h), &v) in od[r.clone()].iter_mut().zip(&mut xhat[r.clone()]).zip(&xd[r]) {
                let xh = (v - mean) * is;
                *h = xh;
                *o = g * xh + bt;
            }
        }
    }
    Ok((out, xhat, inv_std, stats))
}

/// Sum in blocks of the native type, accumulated in f64.
fn sum_f64<T: Float>(v: &[T]) -> f64 {
    v.chunks(256).map(|c| c.iter().copied().sum::<T>().as_f64()).sum()
}

impl<T: Float> Function<T> for BatchNormFn<T> {
    fn name(&self) -> &'static str {
        "batchnorm2d"
    }

    fn backward(&self, ctx: BackwardCtx<'_, T>) -> Result<Vec<Option<Tensor<T>>>> {
        let x = ctx.inputs[0];
        let gamma = ctx.inputs[1];
        let (n, c, _, _) = x.dims4()?;
        let plane = x.len() / (n * c);
        let m = (n * plane) as f64;
        let dy = ctx.grad.data();
        let chunks = |ci: usize| (0..n).map(move |b| (b * c + ci) * plane..(b * c + ci + 1) * plane);
        let mut sum_dy = vec![0.0f64; c];
        let mut sum_dy_xhat = vec![0.0f64; c];
        for ci in 0..c {
            for r in chunks(ci) {
                sum_dy[ci] += sum_f64(&dy[r.clone()]);
                sum_dy_xhat[ci] += dy[r.clone()]
                    .chunks(256)
                    .zip(self.xhat[r].chunks(256))
                    .map(|(a, b)| a.iter().zip(b).fold(T::zero(), |acc, (&p, &q)| acc + p * q).as_f64())
                    .sum::<f64>();
            }
        }
        let dgamma = Tensor::from_fn(&[c], |ci| T::from_f64(sum_dy_xhat[ci]));
        let dbeta = Tensor::from_fn(&[c], |ci| T::from_f64(sum_dy[ci]));
        let dx = if ctx.needs_grad[0] {
            let mut dx = Tensor::zeros(x.shape());
            let dxd = dx.data_mut();
            for ci in 0..c {
                let scale = gamma.data()[ci] * self.inv_std[ci];
                let (mdy, mdyx) = if self.train {
                    (T::from_f64(sum_dy[ci] / m), T::from_f64(sum_dy_xhat[ci] / m))
                } else {
                    (T::zero(), T::zero())
                };
                for r in chunks(ci) {
                    for ((d, &g), &h) in dxd[r.clone()].iter_mut().zip(&dy[r.clone()]).zip(&self.xhat[r]) {
                        *d = scale * (g - mdy - h * mdyx);
                    }
                }
            }
            Some(dx)
        } else {
            None
        };
        Ok(vec![dx, Some(dgamma), Some(dbeta)])
    }
}

impl<T: Float> Graph<T> {
    /// Batch normalization over `(N, H, W)` per channel.
    pub fn batchnorm2d(
        &mut self,
        x: Var,
        gamma: Var,
        beta: Var,
        eps: f64,
        mode: BnMode<'_, T>,
    ) -> Result<(Var, Option<BatchStats>)> {
        let train = matches!(mode, BnMode::Train);
        let (out, xhat, inv_std, stats) =
            batchnorm2d_forward(self.value(x), self.value(gamma), self.value(beta), eps, mode)?;
        let v = self.apply(
            &[x, gamma, beta],
            out,
            Box::new(BatchNormFn {
                xhat,
                inv_std,
                train,
            }),
        );
        Ok((v, stats))
    }
}

use crate::error::{dim_err, Result};
use crate::float::Float;
use crate::graph::{BackwardCtx, Function, Graph, Var};
use crate::tensor::Tensor;

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum Activation {
    LeakyRelu(f64),
    Relu,
    Tanh,
}

impl Activation {
    pub fn apply<T: Float>(self, x: T) -> T {
        match self {
            Activation::LeakyRelu(slope) => {
                if x > T::zero() {
                    x
                } else {
                    x * T::from_f64(slope)
                }
            }
            Activation::Relu => x.max(T::zero()),
            Activation::Tanh => x.tanh(),
        }
    }
}

struct ActivationFn(Activation);

impl<T: Float> Function<T> for ActivationFn {
    fn name(&self) -> &'static str {
        "activation"
    }

    fn backward(&self, ctx: BackwardCtx<'_, T>) -> Result<Vec<Option<Tensor<T>>>> {
        let dx = match self.0 {
            Activation::LeakyRelu(slope) => {
                let s = T::from_f64(slope);
                ctx.inputs[0].zip_map(ctx.grad, |x, g| g * if x > T::zero() { T::one() } else { s })?
            }
            Activation::Relu => {
                ctx.inputs[0].zip_map(ctx.grad, |x, g| if x > T::zero() { g } else { T::zero() })?
            }
            Activation::Tanh => ctx.output.zip_map(ctx.grad, |y, g| g * (T::one() - y * y))?,
        };
        Ok(vec![Some(dx)])
    }
}

/// `a * x + b` with constant scalars.
struct AffineFn {
    a: f64,
}

impl<T: Float> Function<T> for AffineFn {
    fn name(&self) -> &'static str {
        "affine"
    }

    fn backward(&self, ctx: BackwardCtx<'_, T>) -> Result<Vec<Option<Tensor<T>>>> {
        let a = T::from_f64(self.a);
        Ok(vec![Some(ctx.grad.map(|g| g * a))])
    }
}

struct ConcatFn {
    split: usize,
}

impl<T: Float> Function<T> for ConcatFn {
    fn name(&self) -> &'static str {
        "concat_channels"
    }

    fn backward(&self, ctx: BackwardCtx<'_, T>) -> Result<Vec<Option<Tensor<T>>>> {
        let (n, c, h, w) = ctx.grad.dims4()?;
        let plane = h * w;
        let ca = self.split;
        let cb = c - ca;
        let mut ga = Vec::with_capacity(n * ca * plane);
        let mut gb = Vec::with_capacity(n * cb * plane);
        for b in 0..n {
            let s = &ctx.grad.data()[b * c * plane..(b + 1) * c * plane];
            ga.extend_from_slice(&s[..ca * plane]);
            gb.extend_from_slice(&s[ca * plane..]);
        }
        Ok(vec![
            Some(Tensor::from_vec(ctx.inputs[0].shape(), ga)?),
            Some(Tensor::from_vec(ctx.inputs[1].shape(), gb)?),
        ])
    }
}

/// Mean squared error against a constant target.
struct MseFn {
    target: Tensor<f64>,
}

impl<T: Float> Function<T> for MseFn {
    fn name(&self) -> &'static str {
        "mse"
    }

    fn backward(&self, ctx: BackwardCtx<'_, T>) -> Result<Vec<Option<Tensor<T>>>> {
        let x = ctx.inputs[0];
        let g = ctx.grad.data()[0].as_f64() * 2.0 / x.len() as f64;
        let dx = Tensor::from_fn(x.shape(), |i| {
            T::from_f64(g * (x.data()[i].as_f64() - self.target.data()[i]))
        });
        Ok(vec![Some(dx)])
    }
}

/// `sum(x * weights)` with constant weights.
struct DotFn {
    weights: Tensor<f64>,
}

impl<T: Float> Function<T> for DotFn {
    fn name(&self) -> &'static str {
        "dot"
    }

    fn backward(&self, ctx: BackwardCtx<'_, T>) -> Result<Vec<Option<Tensor<T>>>> {
        let g = ctx.grad.data()[0].as_f64();
        let dx = Tensor::from_fn(ctx.inputs[0].shape(), |i| T::from_f64(g * self.weights.data()[i]));
        Ok(vec![Some(dx)])
    }
}

impl<T: Float> Graph<T> {
    pub fn activation(&mut self, x: Var, act: Activation) -> Var {
        let xv = self.value(x);
        let out = match act {
            Activation::LeakyRelu(slope) => {
                let s = T::from_f64(slope);
                xv.map(|v| v * if v > T::zero() { T::one() } else { s })
            }
            Activation::Relu => xv.map(|v| v.max(T::zero())),
            Activation::Tanh => xv.map(|v| v.tanh()),
        };
        self.apply(&[x], out, Box::new(ActivationFn(act)))
    }

    pub fn affine(&mut self, x: Var, a: f64, b: f64) -> Var {
        let (ta, tb) = (T::from_f64(a), T::from_f64(b));
        let out = self.value(x).map(|v| ta * v + tb);
        self.apply(&[x], out, Box::new(AffineFn { a }))
    }

    /// Concatenate two `[N,C,H,W]` tensors along the channel axis.
    pub fn concat_channels(&mut self, a: Var, b: Var) -> Result<Var> {
        let (ta, tb) = (self.value(a), self.value(b));
        let (na, ca, ha, wa) = ta.dims4()?;
        let (nb, cb, hb, wb) = tb.dims4()?;
        if (na, ha, wa) != (nb, hb, wb) {
            return Err(dim_err(
                "concat_channels",
                format!("{:?} vs {:?}", ta.shape(), tb.shape()),
            ));
        }
        let plane = ha * wa;
        let mut data = Vec::with_capacity(ta.len() + tb.len());
        for n in 0..na {
            data.extend_from_slice(&ta.data()[n * ca * plane..(n + 1) * ca * plane]);
            data.extend_from_slice(&tb.data()[n * cb * plane..(n + 1) * cb * plane]);
        }
        let out = Tensor::from_vec(&[na, ca + cb, ha, wa], data)?;
        Ok(self.apply(&[a, b], out, Box::new(ConcatFn { split: ca })))
    }

    pub fn mse(&mut self, x: Var, target: &Tensor<T>) -> Result<Var> {
        let xv = self.value(x);
        if xv.len() != target.len() {
            return Err(dim_err(
                "mse",
                format!("{:?} vs target {:?}", xv.shape(), target.shape()),
            ));
        }
        let se: f64 = xv
            .data()
            .iter()
            .zip(target.data())
            .map(|(a, b)| {
                let d = a.as_f64() - b.as_f64();
                d * d
            })
            .sum();
        let out = Tensor::scalar(T::from_f64(se / xv.len() as f64));
        Ok(self.apply(
            &[x],
            out,
            Box::new(MseFn {
                target: target.cast(),
            }),
        ))
    }

    pub fn dot_const(&mut self, x: Var, weights: &Tensor<T>) -> Result<Var> {
        let xv = self.value(x);
        if xv.len() != weights.len() {
            return Err(dim_err(
                "dot",
                format!("{:?} vs weights {:?}", xv.shape(), weights.shape()),
            ));
        }
        let s: f64 = xv
            .data()
            .iter()
            .zip(weights.data())
            .map(|(a, b)| a.as_f64() * b.as_f64())
            .sum();
        let out = Tensor::scalar(T::from_f64(s));
        Ok(self.apply(
            &[x],
            out,
            Box::new(DotFn {
                weights: weights.cast(),
            }),
        ))
    }

    pub fn sum(&mut self, x: Var) -> Result<Var> {
        let ones = Tensor::full(self.value(x).shape(), T::one());
        self.dot_const(x, &ones)
    }
}

use crate::error::{dim_err, Result};
use crate::float::Float;
use crate::graph::{BackwardCtx, Function, Graph, Var};
use crate::tensor::Tensor;

/// 2x2 max-pooling with stride 2. Returns the pooled tensor and, for every
/// output element, the flat index of the winning input element.
pub fn maxpool2x2_forward<T: Float>(x: &Tensor<T>) -> Result<(Tensor<T>, Vec<usize>)> {
    let (n, c, h, w) = x.dims4()?;
    if h % 2 != 0 || w % 2 != 0 {
        return Err(dim_err(
            "maxpool2x2",
            format!("spatial dims must be even, got {:?}", x.shape()),
        ));
    }
    let (ho, wo) = (h / 2, w / 2);
    let mut out = Tensor::zeros(&[n, c, ho, wo]);
    let mut arg = vec![0usize; n * c * ho * wo];
    let xd = x.data();
    for plane in 0..n * c {
        let base = plane * h * w;
        for i in 0..ho {
            for j in 0..wo {
                let mut best = base + 2 * i * w + 2 * j;
                for (di, dj) in [(0, 1), (1, 0), (1, 1)] {
                    let idx = base + (2 * i + di) * w + 2 * j + dj;
                    if xd[idx] > xd[best] {
                        best = idx;
                    }
                }
                let o = (plane * ho + i) * wo + j;
                out.data_mut()[o] = xd[best];
                arg[o] = best;
            }
        }
    }
    Ok((out, arg))
}

struct MaxPoolFn {
    argmax: Vec<usize>,
}

impl<T: Float> Function<T> for MaxPoolFn {
    fn name(&self) -> &'static str {
        "maxpool2x2"
    }

    fn backward(&self, ctx: BackwardCtx<'_, T>) -> Result<Vec<Option<Tensor<T>>>> {
        let mut dx = Tensor::zeros(ctx.inputs[0].shape());
        for (&src, &g) in self.argmax.iter().zip(ctx.grad.data()) {
            dx.data_mut()[src] += g;
        }
        Ok(vec![Some(dx)])
    }
}

impl<T: Float> Graph<T> {
    pub fn maxpool2x2(&mut self, x: Var) -> Result<Var> {
        let (out, argmax) = maxpool2x2_forward(self.value(x))?;
        Ok(self.apply(&[x], out, Box::new(MaxPoolFn { argmax })))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn picks_maximum() {
        let x = Tensor::<f32>::from_vec(&[1, 1, 2, 2], vec![1.0, 2.0, 3.0, 4.0]).unwrap();
        let (y, arg) = maxpool2x2_forward(&x).unwrap();
        assert_eq!(y.data(), &[4.0]);
        assert_eq!(arg, vec![3]);
    }

    #[test]
    fn odd_dims_rejected() {
        let x = Tensor::<f32>::zeros(&[1, 1, 3, 4]);
        assert!(maxpool2x2_forward(&x).is_err());
    }
}

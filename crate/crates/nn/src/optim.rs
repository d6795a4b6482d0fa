use crate::error::{NnError, Result};
use crate::float::Float;
use crate::tensor::Tensor;

/// Adam with bias correction.
#[derive(Clone, Debug)]
pub struct Adam<T: Float = f32> {
    pub lr: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub eps: f64,
    step: u64,
    m: Vec<Tensor<T>>,
    v: Vec<Tensor<T>>,
}

impl<T: Float> Adam<T> {
    pub fn new(lr: f64) -> Self {
        Self {
            lr,
            beta1: 0.9,
            beta2: 0.999,
            eps: 1e-8,
            step: 0,
            m: Vec::new(),
            v: Vec::new(),
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// Apply one update. `names` label parameters in error messages.
    pub fn step(&mut self, params: &mut [&mut Tensor<T>], grads: &[Tensor<T>], names: &[String]) -> Result<()> {
        if params.len() != grads.len() {
            return Err(NnError::Graph(format!(
                "{} parameters but {} gradients",
                params.len(),
                grads.len()
            )));
        }
        for (i, g) in grads.iter().enumerate() {
            if !g.is_finite() {
                let name = names.get(i).cloned().unwrap_or_else(|| format!("param{i}"));
                return Err(NnError::NonFinite(format!("gradient of {name}")));
            }
            params[i].same_shape(g, "adam")?;
        }
        if self.m.is_empty() {
            self.m = grads.iter().map(|g| Tensor::zeros(g.shape())).collect();
            self.v = self.m.clone();
        }
        self.step += 1;
        let t = self.step as i32;
        let bc1 = 1.0 - self.beta1.powi(t);
        let bc2 = 1.0 - self.beta2.powi(t);
        let (b1, b2) = (T::from_f64(self.beta1), T::from_f64(self.beta2));
        let (ob1, ob2) = (T::from_f64(1.0 - self.beta1), T::from_f64(1.0 - self.beta2));
        let step_size = T::from_f64(self.lr / bc1);
        let inv_sqrt_bc2 = T::from_f64(1.0 / bc2.sqrt());
        let eps = T::from_f64(self.eps);
        for ((p, g), (m, v)) in params
            .iter_mut()
            .zip(grads)
            .zip(self.m.iter_mut().zip(self.v.iter_mut()))
        {
            let pd = p.data_mut();
            for (k, &gk) in g.data().iter().enumerate() {
                let mk = b1 * m.data()[k] + ob1 * gk;
                let vk = b2 * v.data()[k] + ob2 * gk * gk;
                m.data_mut()[k] = mk;
                v.data_mut()[k] = vk;
                pd[k] -= step_size * mk / (vk.sqrt() * inv_sqrt_bc2 + eps);
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn names() -> Vec<String> {
        vec!["w".into()]
    }

    #[test]
    fn zero_gradient_leaves_parameter() {
        let mut p = Tensor::<f64>::full(&[2], 0.7);
        let mut adam = Adam::new(5e-4);
        adam.step(&mut [&mut p], &[Tensor::zeros(&[2])], &names()).unwrap();
        assert_eq!(p.data(), &[0.7, 0.7]);
    }

    #[test]
    fn first_step_moves_by_lr() {
        let mut p = Tensor::<f64>::zeros(&[1]);
        let mut adam = Adam::new(5e-4);
        adam.step(&mut [&mut p], &[Tensor::full(&[1], 1.0)], &names()).unwrap();
        // m_hat = 1, v_hat = 1 -> delta = -lr / (1 + eps)
        let want = -5e-4 / (1.0 + 1e-8);
        assert!((p.data()[0] - want).abs() < 1e-15);
    }

    #[test]
    fn nan_gradient_names_parameter() {
        let mut p = Tensor::<f32>::zeros(&[1]);
        let mut adam = Adam::new(1e-3);
        let err = adam
            .step(&mut [&mut p], &[Tensor::full(&[1], f32::NAN)], &["enc.conv".to_string()])
            .unwrap_err();
        assert!(err.to_string().contains("enc.conv"));
        assert_eq!(adam.step_count(), 0);
    }

    #[test]
    fn quadratic_loss_decreases() {
        // f(x) = (x - 3)^2, gradient 2(x - 3)
        let mut p = Tensor::<f64>::zeros(&[1]);
        let mut adam = Adam::new(0.1);
        let mut last = 9.0;
        for _ in 0..2 {
            let g = Tensor::full(&[1], 2.0 * (p.data()[0] - 3.0));
            adam.step(&mut [&mut p], &[g], &names()).unwrap();
            let loss = (p.data()[0] - 3.0f64).powi(2);
            assert!(loss < last);
            last = loss;
        }
    }
}

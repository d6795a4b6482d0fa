use dif_nn::{Adam, Gradients, Model, Tensor, Var};

use crate::error::Result;

/// Hand the tape gradients of `vars` (in [`Model::params`] order) to Adam.
pub(crate) fn adam_update(model: &mut Model<f32>, adam: &mut Adam<f32>, grads: &mut Gradients<f32>, vars: &[Var]) -> Result<()> {
    let names = model.param_names();
    let mut params = model.params_mut();
    let g: Vec<Tensor<f32>> = vars
        .iter()
        .zip(params.iter())
        .map(|(&v, p)| grads.take(v).unwrap_or_else(|| Tensor::zeros(p.shape())))
        .collect();
    adam.step(&mut params, &g, &names)?;
    Ok(())
}

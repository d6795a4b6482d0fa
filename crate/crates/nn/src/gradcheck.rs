//! Finite-difference verification of backward rules (64-bit only).
//!
//! The checked function may return any shape; it is reduced to a scalar by a
//! fixed random projection so every output element contributes.

use rand::seq::index::sample;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::Result;
use crate::graph::{Graph, Var};
use crate::layers::Mode;
use crate::tensor::Tensor;
use crate::zoo::Model;

#[derive(Clone, Debug)]
pub struct GradCheckConfig {
    /// Central-difference step.
    pub step: f64,
    /// Coordinates checked per input tensor; `None` checks all of them.
    pub coords_per_input: Option<usize>,
    pub seed: u64,
    /// Further step sizes tried on coordinates whose error at `step` exceeds
    /// `retry_above`; the smallest error wins. Deep nets with ReLU-like kinks
    /// or max-pooling need this: a large step may cross a kink, a small one
    /// drowns in round-off, and no single step suits every coordinate.
    pub retry_steps: Vec<f64>,
    pub retry_above: f64,
}

impl Default for GradCheckConfig {
    fn default() -> Self {
        Self {
            step: 1e-5,
            coords_per_input: None,
            seed: 0,
            retry_steps: Vec::new(),
            retry_above: f64::INFINITY,
        }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Mismatch {
    pub input: usize,
    pub index: usize,
    pub analytic: f64,
    pub numeric: f64,
}

#[derive(Clone, Debug, Default)]
pub struct GradCheckReport {
    pub max_rel_err: f64,
    pub checked: usize,
    pub worst: Option<Mismatch>,
}

/// Relative error of one coordinate. The floor keeps coordinates whose true
/// gradient is essentially zero from dominating the report.
pub fn rel_err(analytic: f64, numeric: f64, floor: f64) -> f64 {
    let denom = analytic.abs().max(numeric.abs()).max(floor);
    if denom == 0.0 {
        0.0
    } else {
        (analytic - numeric).abs() / denom
    }
}

/// Compare the tape gradient of `f` against central differences.
pub fn gradcheck<F>(inputs: &[Tensor<f64>], cfg: &GradCheckConfig, f: F) -> Result<GradCheckReport>
where
    F: Fn(&mut Graph<f64>, &[Var]) -> Result<Var>,
{
    let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed);

    let mut g = Graph::new();
    let vars: Vec<Var> = inputs.iter().map(|t| g.leaf(t.clone())).collect();
    let out = f(&mut g, &vars)?;
    let proj = Tensor::from_fn(g.value(out).shape(), |_| rng.random_range(-1.0..1.0));
    let loss = g.dot_const(out, &proj)?;
    let grads = g.backward(loss)?;

    let eval = |values: &[Tensor<f64>]| -> Result<f64> {
        let mut g = Graph::new();
        let vars: Vec<Var> = values.iter().map(|t| g.constant(t.clone())).collect();
        let out = f(&mut g, &vars)?;
        let l = g.dot_const(out, &proj)?;
        Ok(g.value(l).data()[0])
    };

    let mut work = inputs.to_vec();
    let diff = |work: &mut [Tensor<f64>], i: usize, idx: usize, h: f64| -> Result<f64> {
        let orig = work[i].data()[idx];
        work[i].data_mut()[idx] = orig + h;
        let up = eval(work)?;
        work[i].data_mut()[idx] = orig - h;
        let down = eval(work)?;
        work[i].data_mut()[idx] = orig;
        Ok((up - down) / (2.0 * h))
    };
    let mut pairs = Vec::new();
    for (i, input) in inputs.iter().enumerate() {
        let coords: Vec<usize> = match cfg.coords_per_input {
            Some(k) if k < input.len() => sample(&mut rng, input.len(), k).into_vec(),
            _ => (0..input.len()).collect(),
        };
        let analytic = grads.get(vars[i]).cloned().unwrap_or_else(|| Tensor::zeros(input.shape()));
        for idx in coords {
            pairs.push(Mismatch {
                input: i,
                index: idx,
                analytic: analytic.data()[idx],
                numeric: diff(&mut work, i, idx, cfg.step)?,
            });
        }
    }

    let floor = 1e-3 * pairs.iter().map(|p| p.numeric.abs()).fold(0.0, f64::max);
    for p in &mut pairs {
        for &h in &cfg.retry_steps {
            if rel_err(p.analytic, p.numeric, floor) <= cfg.retry_above {
                break;
            }
            let n = diff(&mut work, p.input, p.index, h)?;
            if rel_err(p.analytic, n, floor) < rel_err(p.analytic, p.numeric, floor) {
                p.numeric = n;
            }
        }
    }
    let mut report = GradCheckReport {
        checked: pairs.len(),
        ..Default::default()
    };
    for p in pairs {
        let e = rel_err(p.analytic, p.numeric, floor);
        if e > report.max_rel_err || report.worst.is_none() {
            report.max_rel_err = report.max_rel_err.max(e);
            report.worst = Some(p);
        }
    }
    Ok(report)
}

/// Check a whole model end to end: the input and every parameter tensor.
pub fn gradcheck_model(model: &Model<f64>, x: &Tensor<f64>, mode: Mode, cfg: &GradCheckConfig) -> Result<GradCheckReport> {
    let mut inputs = vec![x.clone()];
    inputs.extend(model.params().into_iter().map(|(_, t)| t.clone()));
    gradcheck(&inputs, cfg, |g, v| Ok(model.forward_with(g, v[0], &v[1..], mode)?.0))
}

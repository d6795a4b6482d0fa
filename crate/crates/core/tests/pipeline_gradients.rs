use std::sync::Arc;

use dif_core::fingerprint::*;
use dif_core::Image;
use dif_nn::gradcheck::{gradcheck, GradCheckConfig};
use dif_nn::{build, Arch, Mode, ModelSpec, Tensor};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const TOL: f64 = 1e-6;

fn residuals(rng: &mut ChaCha8Rng, n: usize, size: usize) -> Vec<Image> {
    (0..n)
        .map(|_| Tensor::from_fn(&[3, size, size], |_| rng.random_range(-1.0..1.0)))
        .collect()
}

fn cfg(seed: u64) -> GradCheckConfig {
    GradCheckConfig {
        seed,
        ..Default::default()
    }
}

fn check(seed: u64, scope: CorrelationScope, form: LossForm) -> f64 {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let set = Arc::new(NormalizedSet::new(&residuals(&mut rng, 10, 5), scope).unwrap());
    let rows = [0, 3, 4, 1, 7, 9, 8, 5];
    let labels = [false, false, false, false, true, true, true, true];
    let f = Tensor::from_fn(&[1, 3, 5, 5], |_| rng.random_range(-1.0..1.0));
    // At 0.1 some hinges are active and some clipped. A much wider margin
    // would leave an O(1) loss with tiny gradients, below what central
    // differences resolve.
    let margin = if form == LossForm::Hinged { 0.1 } else { 0.01 };
    let r = gradcheck(&[f], &cfg(seed), |g, v| {
        let rho = tape_correlations(g, v[0], &set, &rows).unwrap();
        Ok(tape_pair_loss(g, rho, &labels, margin, form).unwrap())
    })
    .unwrap();
    r.max_rel_err
}

#[test]
fn correlation_to_loss_over_twenty_seeds() {
    for seed in 0..20 {
        for scope in [CorrelationScope::PerChannel, CorrelationScope::WholeTensor] {
            for form in [LossForm::Literal, LossForm::Hinged] {
                let e = check(seed, scope, form);
                assert!(e < TOL, "seed {seed} {scope:?} {form:?}: {e}");
            }
        }
    }
}

#[test]
fn correlations_alone_over_twenty_seeds() {
    for seed in 0..20 {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let set = Arc::new(NormalizedSet::new(&residuals(&mut rng, 4, 4), CorrelationScope::PerChannel).unwrap());
        let f = Tensor::from_fn(&[3, 4, 4], |_| rng.random_range(-1.0..1.0));
        let r = gradcheck(&[f], &cfg(seed), |g, v| Ok(tape_correlations(g, v[0], &set, &[2, 0, 3]).unwrap())).unwrap();
        assert!(r.max_rel_err < TOL, "seed {seed}: {r:?}");
    }
}

/// The full extraction objective: Z through a small generator, scaled,
/// correlated against residuals and reduced by the pair loss.
#[test]
fn generator_to_loss() {
    for (seed, arch) in [(1, Arch::UpNet), (2, Arch::CNet), (3, Arch::UpNet)] {
        let spec = ModelSpec::new(arch, 16, seed);
        let model = build::<f64>(&spec).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let set = Arc::new(NormalizedSet::new(&residuals(&mut rng, 6, 16), CorrelationScope::PerChannel).unwrap());
        let [c, h, w] = spec.input_shape();
        let z = Tensor::from_fn(&[1, c, h, w], |_| rng.random::<f64>());
        let mut inputs = vec![z];
        inputs.extend(model.params().into_iter().map(|(_, t)| t.clone()));
        let cfg = GradCheckConfig {
            coords_per_input: Some(6),
            ..cfg(seed)
        };
        let r = gradcheck(&inputs, &cfg, |g, v| {
            let (out, _) = model.forward_with(g, v[0], &v[1..], Mode::Train)?;
            let f = g.affine(out, 0.05, 0.0);
            let rho = tape_correlations(g, f, &set, &[0, 1, 2, 3, 4, 5]).unwrap();
            Ok(tape_pair_loss(g, rho, &[false, false, false, true, true, true], 0.01, LossForm::Literal).unwrap())
        })
        .unwrap();
        assert!(r.max_rel_err < TOL, "{arch:?}: {r:?}");
    }
}

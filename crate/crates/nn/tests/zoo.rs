use dif_nn::{build, Arch, Graph, LayerKind, Mode, ModelSpec, Tensor};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Parameter count of a layer list, computed directly from layer hyper-parameters.
fn count(kinds: &[LayerKind]) -> usize {
    kinds
        .iter()
        .map(|k| match *k {
            LayerKind::Conv2d {
                in_channels: i,
                out_channels: o,
                kernel: k,
                ..
            } => k * k * i * o + o,
            LayerKind::ConvTranspose2d {
                in_channels: i,
                out_channels: o,
            } => 4 * i * o + o,
            LayerKind::BatchNorm2d { channels, .. } => 2 * channels,
            _ => 0,
        })
        .sum()
}

/// Closed form for the U-Net: two conv+BN per encoder stage, one deconv and
/// two conv+BN per decoder stage, conv head.
fn unet_params(k: usize) -> usize {
    let conv = |i: usize, o: usize| k * k * i * o + o + 2 * o;
    let enc = [(16, 32), (32, 64), (64, 128), (128, 256)]
        .iter()
        .map(|&(i, o)| conv(i, o) + conv(o, o))
        .sum::<usize>();
    let dec = [(256, 256, 128), (128, 128, 64), (64, 64, 32), (32, 32, 32)]
        .iter()
        .map(|&(c, skip, o)| 4 * c * c + c + conv(c + skip, o) + conv(o, o))
        .sum::<usize>();
    enc + dec + k * k * 32 * 3 + 3
}

#[test]
fn unet_parameter_count_is_frozen() {
    let m = build::<f32>(&ModelSpec::new(Arch::UNet, 32, 0)).unwrap();
    assert_eq!(unet_params(3), 2_524_291);
    assert_eq!(m.param_count(), unet_params(3));
    let kinds: Vec<_> = m.layers.iter().map(|l| l.kind.clone()).collect();
    assert_eq!(count(&kinds), m.param_count());
}

#[test]
fn u1net_is_unet_with_pointwise_convs() {
    let m = build::<f32>(&ModelSpec::new(Arch::U1Net, 32, 0)).unwrap();
    assert_eq!(m.param_count(), unet_params(1));
    for l in &m.layers {
        if let LayerKind::Conv2d { kernel, padding, .. } = l.kind {
            assert_eq!((kernel, padding), (1, 0));
        }
    }
}

fn run(arch: Arch, size: usize, batch: usize) -> Tensor<f32> {
    let spec = ModelSpec::new(arch, size, 4);
    let m = build::<f32>(&spec).unwrap();
    let mut shape = vec![batch];
    shape.extend(spec.input_shape());
    let mut rng = ChaCha8Rng::seed_from_u64(0);
    let x = Tensor::from_fn(&shape, |_| rng.random_range(0.0..1.0));
    m.predict(&x).unwrap()
}

#[test]
fn generators_map_z_to_rgb_at_working_size() {
    for arch in Arch::GENERATORS {
        let y = run(arch, 32, 2);
        assert_eq!(y.shape(), &[2, 3, 32, 32], "{}", arch.name());
        assert!(y.data().iter().all(|v| v.abs() <= 1.0), "tanh output range");
    }
}

#[test]
fn dnet_lifts_16x16_to_256() {
    let spec = ModelSpec::new(Arch::DNet, 256, 0);
    assert_eq!(spec.input_shape(), [16, 16, 16]);
    assert_eq!(run(Arch::DNet, 256, 1).shape(), &[1, 3, 256, 256]);
}

#[test]
fn dnet_has_no_skips() {
    let m = build::<f32>(&ModelSpec::new(Arch::DNet, 32, 0)).unwrap();
    assert!(m.program.iter().all(|s| matches!(s, dif_nn::Step::Layer(_))));
}

#[test]
fn cnet_has_eight_convs_and_no_resampling() {
    let m = build::<f32>(&ModelSpec::new(Arch::CNet, 32, 0)).unwrap();
    let convs = m.layers.iter().filter(|l| matches!(l.kind, LayerKind::Conv2d { .. })).count();
    assert_eq!(convs, 8);
    assert!(m
        .layers
        .iter()
        .all(|l| !matches!(l.kind, LayerKind::MaxPool2x2 | LayerKind::ConvTranspose2d { .. })));
}

#[test]
fn dncnn_shape_preserving_for_odd_sizes() {
    let mut spec = ModelSpec::new(Arch::DnCNN, 0, 1);
    spec.depth = 4;
    spec.hidden_width = 8;
    spec.working_size = 7;
    let m = build::<f32>(&spec).unwrap();
    for (h, w) in [(3, 3), (5, 9), (7, 4)] {
        let x = Tensor::full(&[1, 3, h, w], 0.5);
        assert_eq!(m.predict(&x).unwrap().shape(), &[1, 3, h, w]);
    }
    let full = build::<f32>(&ModelSpec::new(Arch::DnCNN, 48, 1)).unwrap();
    let convs = full.layers.iter().filter(|l| matches!(l.kind, LayerKind::Conv2d { .. })).count();
    let bns = full.layers.iter().filter(|l| matches!(l.kind, LayerKind::BatchNorm2d { .. })).count();
    assert_eq!((convs, bns), (17, 15));
}

#[test]
fn forward_is_deterministic() {
    assert!(run(Arch::UNet, 32, 1) == run(Arch::UNet, 32, 1));
}

#[test]
fn same_seed_same_weights() {
    let spec = ModelSpec::new(Arch::CNet, 16, 77);
    assert!(build::<f32>(&spec).unwrap() == build::<f32>(&spec).unwrap());
    let other = ModelSpec { seed: 78, ..spec.clone() };
    assert!(build::<f32>(&spec).unwrap().state() != build::<f32>(&other).unwrap().state());
}

#[test]
fn state_round_trip() {
    let spec = ModelSpec::new(Arch::UNet, 16, 3);
    let mut a = build::<f32>(&spec).unwrap();
    let mut g = Graph::new();
    let x = g.constant(Tensor::full(&[2, 16, 16, 16], 0.3));
    a.forward(&mut g, x, Mode::Train).unwrap();
    let state: Vec<(String, Tensor<f32>)> = a.state().into_iter().map(|(n, t)| (n, t.clone())).collect();
    let mut b = build::<f32>(&ModelSpec { seed: 4, ..spec }).unwrap();
    b.load_state(&state).unwrap();
    assert!(a.state() == b.state());
    assert!(b.load_state(&state[1..]).is_err());
}

#[test]
fn summary_lists_shapes() {
    let m = build::<f32>(&ModelSpec::new(Arch::UNet, 32, 0)).unwrap();
    let s = m.summary().unwrap();
    assert!(s.contains("2524291"));
    assert!(s.contains("[1, 256, 4, 4]"));
    assert!(s.contains("[1, 3, 32, 32]"));
}

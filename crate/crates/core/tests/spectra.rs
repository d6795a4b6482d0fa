use dif_core::checkpoint::Checkpoint;
use dif_core::data::oracle::synthetic_real;
use dif_core::denoiser::{raw_residual, DenoiserBundle, DenoiserConfig};
use dif_core::fingerprint::{fourier_correlation, CorrelationScope};
use dif_core::lab::{cross_line_score, harmonic_peak_score, spectrum_logmag};
use dif_core::{FingerprintRecord, Image};
use dif_nn::{build, Arch, ModelSpec, Tensor};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

const PC: CorrelationScope = CorrelationScope::PerChannel;

fn noise(seed: u64, size: usize) -> Image {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    Tensor::from_fn(&[3, size, size], |_| rng.sample::<f32, _>(StandardNormal))
}

fn roll(x: &Image, dy: usize, dx: usize) -> Image {
    let (h, w) = (x.shape()[1], x.shape()[2]);
    Tensor::from_fn(x.shape(), |i| {
        let (c, y, xx) = (i / (h * w), (i / w) % h, i % w);
        x.data()[c * h * w + ((y + h - dy) % h) * w + (xx + w - dx) % w]
    })
}

#[test]
fn fourier_correlation_ignores_circular_shifts() {
    for seed in 0..20 {
        let f = noise(seed, 32);
        let r = fourier_correlation(&roll(&f, 5, 11), &f, PC).unwrap();
        assert!(r > 0.999, "seed {seed}: {r}");
    }
}

#[test]
fn fourier_correlation_of_independent_noise_is_small() {
    let rs: Vec<f64> = (0..20)
        .map(|s| fourier_correlation(&noise(100 + s, 32), &noise(200 + s, 32), PC).unwrap())
        .collect();
    let mean = rs.iter().sum::<f64>() / rs.len() as f64;
    assert!(mean.abs() < 0.05, "{rs:?}");
    assert!(rs.iter().all(|r| r.abs() < 0.2), "{rs:?}");
}

#[test]
fn white_noise_has_no_harmonic_peaks() {
    for seed in 0..10 {
        let s = spectrum_logmag(&noise(seed, 128)).unwrap();
        let h = harmonic_peak_score(&s, 16).unwrap();
        assert!((h - 1.0).abs() < 0.3, "seed {seed}: {h}");
        let c = cross_line_score(&s);
        assert!((c - 1.0).abs() < 0.3, "seed {seed}: {c}");
    }
}

#[test]
fn period_sixteen_blocks_peak_on_harmonics() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let tile: Vec<f32> = (0..16 * 16).map(|_| rng.random_range(-1.0..1.0)).collect();
    let img = Tensor::from_fn(&[3, 128, 128], |i| tile[((i / 128) % 16) * 16 + i % 16]);
    let s = spectrum_logmag(&img).unwrap();
    assert!(harmonic_peak_score(&s, 16).unwrap() >= 10.0);
}

#[test]
fn boundary_step_shows_on_the_axes() {
    // A bright frame around the border: energy concentrates on the central
    // row and column of the spectrum.
    let img = Tensor::from_fn(&[3, 64, 64], |i| {
        let (y, x) = ((i / 64) % 64, i % 64);
        if y < 2 || x < 2 || y >= 62 || x >= 62 { 1.0 } else { 0.0 }
    });
    let s = spectrum_logmag(&img.zip_map(&noise(1, 64), |a, n| a + 0.01 * n).unwrap()).unwrap();
    assert!(cross_line_score(&s) > 2.0);
}

#[test]
fn denoiser_residual_is_independent_of_padding_beyond_receptive_field() {
    let cfg = DenoiserConfig { depth: 5, width: 8, ..Default::default() };
    let spec = ModelSpec { depth: cfg.depth, hidden_width: cfg.width, ..ModelSpec::new(Arch::DnCNN, 24, 1) };
    let model = build::<f32>(&spec).unwrap();
    let img = synthetic_real(24, 2).zip_map(&noise(3, 24), |a, n| a + 0.02 * n).unwrap();
    let a = raw_residual(&model, &img, 10).unwrap();
    let b = raw_residual(&model, &img, 14).unwrap();
    assert_eq!(a.shape(), &[3, 24, 24]);
    let diff = a.zip_map(&b, |x, y| x - y).unwrap().max_abs();
    assert!(diff < 1e-6, "{diff}");
}

#[test]
fn zero_epoch_bundle_round_trips_through_bytes() {
    let imgs: Vec<Image> = (0..4).map(|i| synthetic_real(16, i)).collect();
    let cfg = DenoiserConfig { epochs: 0, depth: 3, width: 4, crop: 8, ..Default::default() };
    let b = dif_core::denoiser::train_dncnn(&imgs, &cfg).unwrap();
    let bytes = b.to_checkpoint().unwrap().to_bytes().unwrap();
    let back = DenoiserBundle::from_checkpoint(&Checkpoint::from_bytes(&bytes).unwrap()).unwrap();
    assert_eq!(back.to_checkpoint().unwrap().to_bytes().unwrap(), bytes);
    assert_eq!(back.extract(&imgs[0]).unwrap(), b.extract(&imgs[0]).unwrap());
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn fingerprint_record_round_trip_is_bit_exact(seed in any::<u64>(), mu_r in -1.0f64..1.0, mu_g in -1.0f64..1.0, size in 1usize..9) {
        let rec = FingerprintRecord {
            fingerprint: noise(seed, size),
            mu_real: mu_r,
            mu_gen: mu_g,
            n_real: 3,
            n_gen: 5,
            working_size: size,
            margin: 0.01,
            ema_decay: 0.99,
            denoiser_id: "abc".into(),
            source_model_id: "g".into(),
            seed,
            method: "extraction".into(),
            ..Default::default()
        };
        let bytes = rec.to_checkpoint().unwrap().to_bytes().unwrap();
        let back = FingerprintRecord::from_checkpoint(&Checkpoint::from_bytes(&bytes).unwrap()).unwrap();
        prop_assert_eq!(back.fingerprint.data().iter().map(|v| v.to_bits()).collect::<Vec<_>>(),
                        rec.fingerprint.data().iter().map(|v| v.to_bits()).collect::<Vec<_>>());
        prop_assert_eq!(back.mu_real.to_bits(), mu_r.to_bits());
        prop_assert_eq!(back.mu_gen.to_bits(), mu_g.to_bits());
        prop_assert_eq!(&back, &rec);
    }
}

mod common;

use blurstack::codec::{deserialize, serialize, CodecChoice, EncoderConfig, SpreadChoice};
use blurstack::scale_space::SplitMix64;
use blurstack::signal::{decode1d, encode1d, tone_capture, tone_energy, Signal1D, Stack1D};
use proptest::prelude::*;

fn noisy_sine() -> (Vec<f64>, Signal1D) {
    let mut g = SplitMix64::new(5);
    let tone: Vec<f64> = (0..4096)
        .map(|n| 100.0 * (std::f64::consts::TAU * n as f64 / 512.0).sin())
        .collect();
    let samples = tone
        .iter()
        .map(|v| (128.0 + v + 10.0 * common::gaussian(&mut g)).round().clamp(0.0, 255.0) as i32)
        .collect();
    (tone, Signal1D::new(samples, 8000).unwrap())
}

#[test]
fn default_schedule_starts_at_half_length() {
    let (_, s) = noisy_sine();
    let st = encode1d(&s, &EncoderConfig::default()).unwrap();
    assert_eq!(st.stack().sigmas()[0], 2048.0);
    assert_eq!(*st.stack().sigmas().last().unwrap(), 1.0);
}

#[test]
fn sine_lives_in_layers_near_its_scale() {
    let (tone, s) = noisy_sine();
    let st = encode1d(&s, &EncoderConfig::default()).unwrap();
    let reference = tone_energy(&tone, 512.0);
    let sigmas = st.stack().sigmas();
    let near: Vec<usize> = (1..=sigmas.len())
        .filter(|&i| (32.0..=128.0).contains(&sigmas[i - 1]))
        .collect();
    assert!(tone_capture(&st, &near, 512.0, reference).unwrap() >= 0.9);
    // The widest blurs average a period-512 tone away.
    assert!(tone_capture(&st, &[1, 2], 512.0, reference).unwrap() < 0.01);
}

#[test]
fn lossy_layers_stay_exact() {
    let (_, s) = noisy_sine();
    let cfg = EncoderConfig {
        layer_codec: CodecChoice::downq(),
        spread: SpreadChoice::Uniform(3),
        seed: 8,
        ..EncoderConfig::default()
    };
    let st = encode1d(&s, &cfg).unwrap();
    assert_eq!(decode1d(&st).unwrap(), s);
}

#[test]
fn pcm_survives_container() {
    let pcm: Vec<i32> = (0..2000).map(|i| ((i as f64 * 0.05).sin() * 20000.0) as i32).collect();
    let s = Signal1D::from_pcm(&pcm, 44100).unwrap();
    let st = encode1d(&s, &EncoderConfig::default()).unwrap();
    let back = decode1d(&Stack1D::from_stack(deserialize(&serialize(st.stack())).unwrap()).unwrap()).unwrap();
    assert_eq!(back, s);
    let step = 1.0 / s.scale;
    for (a, b) in back.to_pcm().iter().zip(&pcm) {
        assert!(((a - b).abs() as f64) <= step / 2.0 + 1.0);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(32))]

    #[test]
    fn lossless_round_trip(samples in proptest::collection::vec(0i32..256, 2..600), seed in any::<u64>()) {
        let s = Signal1D::new(samples, 1000).unwrap();
        let cfg = EncoderConfig { spread: SpreadChoice::Uniform(2), seed, ..EncoderConfig::default() };
        prop_assert_eq!(decode1d(&encode1d(&s, &cfg).unwrap()).unwrap(), s);
    }
}

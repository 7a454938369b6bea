//! One-dimensional variant of the codec for sampled series such as audio.
//!
//! A signal is held as a `length x 1` plane and runs through the same
//! blur / store / extract loop as images, with a 1-D blur. Layer codecs
//! degenerate naturally: downq box-downsamples along time only.

use crate::codec::{decode, encode_domain, BlurStack, Domain, EncoderConfig};
use crate::error::{Error, Result};
use crate::raster::{clamp8, Plane, RasterImage};

/// Samples normalized into `0..=255`, plus the affine map back to the source
/// units: `source = sample / scale + offset`.
#[derive(Debug, Clone, PartialEq)]
pub struct Signal1D {
    pub samples: Vec<i32>,
    pub sample_rate: u32,
    pub scale: f64,
    pub offset: f64,
}

impl Signal1D {
    pub fn new(samples: Vec<i32>, sample_rate: u32) -> Result<Self> {
        if samples.len() < 2 {
            return Err(Error::param("signals need at least 2 samples"));
        }
        Ok(Signal1D {
            samples,
            sample_rate,
            scale: 1.0,
            offset: 0.0,
        })
    }

    /// Maps integer PCM samples affinely onto `0..=255`.
    pub fn from_pcm(pcm: &[i32], sample_rate: u32) -> Result<Self> {
        if pcm.len() < 2 {
            return Err(Error::param("signals need at least 2 samples"));
        }
        let lo = *pcm.iter().min().unwrap() as f64;
        let hi = *pcm.iter().max().unwrap() as f64;
        let scale = if hi > lo { 255.0 / (hi - lo) } else { 1.0 };
        let samples = pcm.iter().map(|&v| ((v as f64 - lo) * scale).round() as i32).collect();
        Ok(Signal1D {
            samples,
            sample_rate,
            scale,
            offset: lo,
        })
    }

    /// Inverse of [`Signal1D::from_pcm`], up to the 8-bit quantization.
    pub fn to_pcm(&self) -> Vec<i32> {
        self.samples
            .iter()
            .map(|&s| (s as f64 / self.scale + self.offset).round() as i32)
            .collect()
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Headerless 8-bit samples.
    pub fn to_bytes(&self) -> Vec<u8> {
        self.samples.iter().map(|&v| clamp8(v) as u8).collect()
    }

    /// The one-line text sidecar accompanying [`Signal1D::to_bytes`].
    pub fn sidecar(&self) -> String {
        format!(
            "length={} sample_rate={} scale={} offset={}\n",
            self.samples.len(),
            self.sample_rate,
            self.scale,
            self.offset
        )
    }

    pub fn from_files(bytes: &[u8], sidecar: &str) -> Result<Self> {
        let mut length = None;
        let mut sample_rate = None;
        let mut scale = 1.0;
        let mut offset = 0.0;
        let line = sidecar.lines().next().unwrap_or("");
        for (pos, field) in line.split_whitespace().enumerate() {
            let bad = || Error::Parse {
                offset: pos,
                message: format!("sidecar field `{field}`"),
            };
            let (key, value) = field.split_once('=').ok_or_else(bad)?;
            match key {
                "length" => length = Some(value.parse::<usize>().map_err(|_| bad())?),
                "sample_rate" => sample_rate = Some(value.parse::<u32>().map_err(|_| bad())?),
                "scale" => scale = value.parse().map_err(|_| bad())?,
                "offset" => offset = value.parse().map_err(|_| bad())?,
                _ => return Err(bad()),
            }
        }
        let length = length.ok_or_else(|| Error::param("sidecar lacks length"))?;
        if length != bytes.len() {
            return Err(Error::Shape(format!(
                "sidecar length {length} but {} sample bytes",
                bytes.len()
            )));
        }
        if !(scale > 0.0 && f64::is_finite(scale)) {
            return Err(Error::param(format!("invalid scale {scale}")));
        }
        let mut s = Signal1D::new(bytes.iter().map(|&b| b as i32).collect(), sample_rate.unwrap_or(0))?;
        s.scale = scale;
        s.offset = offset;
        Ok(s)
    }
}

/// A blur stack over a signal (height 1, signal domain).
#[derive(Debug, Clone, PartialEq)]
pub struct Stack1D(BlurStack);

impl Stack1D {
    pub fn from_stack(stack: BlurStack) -> Result<Self> {
        if stack.height != 1 || stack.channels != 1 || !matches!(stack.domain, Domain::Signal { .. }) {
            return Err(Error::param("stack does not hold a 1-D signal"));
        }
        Ok(Stack1D(stack))
    }

    pub fn stack(&self) -> &BlurStack {
        &self.0
    }

    pub fn into_inner(self) -> BlurStack {
        self.0
    }

    pub fn len(&self) -> usize {
        self.0.width
    }

    pub fn is_empty(&self) -> bool {
        self.0.width == 0
    }

    /// Decoded layer `index` (1-based) as a sample vector.
    pub fn layer(&self, index: usize) -> Result<Vec<i32>> {
        Ok(self.0.layer_planes(index)?[0].samples().to_vec())
    }

    pub fn base(&self) -> Result<Vec<i32>> {
        Ok(self.0.base_planes()?[0].samples().to_vec())
    }
}

/// Encodes a signal. The default halving schedule starts at `length / 2`.
pub fn encode1d(signal: &Signal1D, cfg: &EncoderConfig) -> Result<Stack1D> {
    if signal.len() < 2 {
        return Err(Error::param("signals need at least 2 samples"));
    }
    let plane = Plane::new(signal.len(), 1, signal.samples.clone())?;
    let domain = Domain::Signal {
        sample_rate: signal.sample_rate,
        scale: signal.scale,
        offset: signal.offset,
    };
    let mut cfg = cfg.clone();
    cfg.channel_mode = crate::codec::ChannelMode::Joint;
    Stack1D::from_stack(encode_domain(&RasterImage::grey(plane), &cfg, domain)?)
}

pub fn decode1d(stack: &Stack1D) -> Result<Signal1D> {
    let image = decode(stack.stack())?;
    let Domain::Signal {
        sample_rate,
        scale,
        offset,
    } = stack.stack().domain
    else {
        unreachable!("checked by Stack1D::from_stack");
    };
    Ok(Signal1D {
        samples: image.into_planes().remove(0).into_samples(),
        sample_rate,
        scale,
        offset,
    })
}

/// Energy (squared amplitude) of the sinusoid of the given period in
/// `samples`, after removing the mean.
pub fn tone_energy(samples: &[f64], period: f64) -> f64 {
    if samples.is_empty() || period.is_nan() || period <= 0.0 {
        return 0.0;
    }
    let n = samples.len() as f64;
    let mean = samples.iter().sum::<f64>() / n;
    let (mut s, mut c) = (0.0, 0.0);
    for (i, &v) in samples.iter().enumerate() {
        let phase = std::f64::consts::TAU * i as f64 / period;
        s += (v - mean) * phase.sin();
        c += (v - mean) * phase.cos();
    }
    let k = 2.0 / n;
    (s * k).powi(2) + (c * k).powi(2)
}

/// Fraction of `reference_energy` found at `period` in the sum of the
/// decoded layers listed (1-based).
pub fn tone_capture(stack: &Stack1D, layers: &[usize], period: f64, reference_energy: f64) -> Result<f64> {
    if reference_energy.is_nan() || reference_energy <= 0.0 {
        return Err(Error::param("reference energy must be positive"));
    }
    let mut sum = vec![0.0; stack.len()];
    for &i in layers {
        for (acc, v) in sum.iter_mut().zip(stack.layer(i)?) {
            *acc += v as f64;
        }
    }
    Ok(tone_energy(&sum, period) / reference_energy)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::codec::{deserialize, serialize};

    #[test]
    fn constant_signal_decomposition() {
        let s = Signal1D::new(vec![77; 64], 8000).unwrap();
        let st = encode1d(&s, &EncoderConfig::default()).unwrap();
        assert!(st.layer(1).unwrap().iter().all(|&v| v == 77));
        for i in 2..=st.stack().layer_count() {
            assert!(st.layer(i).unwrap().iter().all(|&v| v == 128));
        }
        assert!(st.base().unwrap().iter().all(|&v| v == 128));
    }

    #[test]
    fn pcm_mapping_round_trip() {
        let pcm: Vec<i32> = (0..100).map(|i| i * 300 - 15000).collect();
        let s = Signal1D::from_pcm(&pcm, 44100).unwrap();
        assert_eq!(s.samples[0], 0);
        assert_eq!(s.samples[99], 255);
        for (a, b) in s.to_pcm().iter().zip(&pcm) {
            assert!((a - b).abs() <= 60);
        }
    }

    #[test]
    fn tone_energy_of_pure_sine() {
        let x: Vec<f64> = (0..1024)
            .map(|i| 50.0 + 3.0 * (std::f64::consts::TAU * i as f64 / 64.0).sin())
            .collect();
        assert!((tone_energy(&x, 64.0) - 9.0).abs() < 1e-9);
        assert!(tone_energy(&x, 128.0) < 1e-9);
    }

    #[test]
    fn too_short_is_rejected() {
        assert!(Signal1D::new(vec![1], 1).is_err());
    }

    #[test]
    fn sidecar_round_trip() {
        let mut s = Signal1D::new(vec![1, 2, 3], 22050).unwrap();
        s.scale = 0.5;
        s.offset = -3.0;
        let back = Signal1D::from_files(&s.to_bytes(), &s.sidecar()).unwrap();
        assert_eq!(back, s);
        assert!(Signal1D::from_files(&[1, 2], &s.sidecar()).is_err());
        assert!(Signal1D::from_files(&[1, 2, 3], "length=3 bogus=1").is_err());
    }

    #[test]
    fn container_round_trip_keeps_domain() {
        let s = Signal1D::new((0..300).map(|i| i * 7 % 256).collect(), 16000).unwrap();
        let st = encode1d(&s, &EncoderConfig::default()).unwrap();
        let back = Stack1D::from_stack(deserialize(&serialize(st.stack())).unwrap()).unwrap();
        assert_eq!(back, st);
        assert_eq!(decode1d(&back).unwrap(), s);
    }

    #[test]
    fn image_stack_is_not_a_signal() {
        let img = RasterImage::grey(Plane::filled(4, 1, 9));
        let st = crate::codec::encode(&img, &EncoderConfig::default()).unwrap();
        assert!(Stack1D::from_stack(st).is_err());
    }
}

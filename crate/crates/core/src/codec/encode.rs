use rayon::prelude::*;

use super::layer::{encode_planes, LayerCodec, DEFAULT_QUANT_BITS};
use super::reconstruct::decode;
use super::stack::{BaseRecord, BlurLayer, BlurStack, ChannelMode, Domain, Payloads};
use crate::error::{Error, Result};
use crate::raster::{clamp8, grain_extract_mode, Plane, RasterImage, ResidualMode, MID_GREY};
use crate::scale_space::{
    blur1d_f64, blur_f64, build_schedule, layer_seed, paper_spread, schedule_from, spread_planes, BlurSchedule,
};

/// Where the blur sigmas come from.
#[derive(Debug, Clone, PartialEq)]
pub enum ScheduleSpec {
    /// A fixed list (for example [`BlurSchedule::paper`]).
    Explicit(BlurSchedule),
    /// Start at half the largest dimension, or at `sigma0` when given.
    Halving {
        sigma0: Option<f64>,
        factor: f64,
        sigma_min: f64,
    },
}

impl Default for ScheduleSpec {
    fn default() -> Self {
        ScheduleSpec::Halving {
            sigma0: None,
            factor: 2.0,
            sigma_min: 1.0,
        }
    }
}

impl ScheduleSpec {
    pub fn paper() -> Self {
        ScheduleSpec::Explicit(BlurSchedule::paper())
    }

    pub fn resolve(&self, width: usize, height: usize) -> Result<BlurSchedule> {
        match self {
            ScheduleSpec::Explicit(s) => Ok(s.clone()),
            ScheduleSpec::Halving {
                sigma0: None,
                factor,
                sigma_min,
            } => build_schedule(width, height, *factor, *sigma_min),
            ScheduleSpec::Halving {
                sigma0: Some(s0),
                factor,
                sigma_min,
            } => schedule_from(*s0, *factor, *sigma_min),
        }
    }

    /// Candidate schedules for tunable loss, from the configured one toward
    /// the densest allowed (reduction factor `sqrt(factor)`).
    fn densifications(&self, width: usize, height: usize) -> Result<Vec<BlurSchedule>> {
        match self {
            ScheduleSpec::Explicit(s) => Ok(vec![s.clone(), s.densified()]),
            ScheduleSpec::Halving {
                sigma0,
                factor,
                sigma_min,
            } => [1.0, 0.75, 0.5]
                .iter()
                .map(|e| {
                    ScheduleSpec::Halving {
                        sigma0: *sigma0,
                        factor: factor.powf(*e),
                        sigma_min: *sigma_min,
                    }
                    .resolve(width, height)
                })
                .collect(),
        }
    }
}

/// Spread radii configuration.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub enum SpreadChoice {
    #[default]
    Disabled,
    /// Same radius for every layer.
    Uniform(u16),
    /// The 13-entry reference radii aligned to the schedule's finest layers.
    PaperPreset,
    /// One radius per layer.
    PerLayer(Vec<u16>),
}

impl SpreadChoice {
    fn radii(&self, layers: usize) -> Result<Vec<u16>> {
        match self {
            SpreadChoice::Disabled => Ok(vec![0; layers]),
            SpreadChoice::Uniform(r) => Ok(vec![*r; layers]),
            SpreadChoice::PaperPreset => Ok(paper_spread(layers)),
            SpreadChoice::PerLayer(r) if r.len() == layers => Ok(r.clone()),
            SpreadChoice::PerLayer(r) => Err(Error::param(format!(
                "{} spread radii for a {layers}-layer schedule",
                r.len()
            ))),
        }
    }
}

/// Codec selection, resolved per layer.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CodecChoice {
    Raw,
    Deflate,
    /// `downsample: None` picks `clamp(floor(sigma / 2), 1, 32)` for layers
    /// and 1 for the base.
    DownQ {
        quant_bits: u8,
        downsample: Option<u16>,
    },
}

impl CodecChoice {
    pub fn downq() -> Self {
        CodecChoice::DownQ {
            quant_bits: DEFAULT_QUANT_BITS,
            downsample: None,
        }
    }

    fn for_layer(self, sigma: f64) -> LayerCodec {
        match self {
            CodecChoice::Raw => LayerCodec::Raw,
            CodecChoice::Deflate => LayerCodec::Deflate,
            CodecChoice::DownQ { quant_bits, downsample } => LayerCodec::DownQ {
                quant_bits,
                downsample: downsample.unwrap_or_else(|| super::layer::default_downsample(sigma)),
            },
        }
    }

    fn for_base(self) -> LayerCodec {
        match self {
            CodecChoice::DownQ { quant_bits, downsample } => LayerCodec::DownQ {
                quant_bits,
                downsample: downsample.unwrap_or(1),
            },
            other => other.for_layer(1.0),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EncoderConfig {
    pub schedule: ScheduleSpec,
    pub spread: SpreadChoice,
    pub seed: u64,
    pub layer_codec: CodecChoice,
    pub base_codec: CodecChoice,
    pub residual_mode: ResidualMode,
    pub channel_mode: ChannelMode,
    /// Maximum absolute sample error accepted after reconstruction.
    pub loss_tolerance: Option<f64>,
}

impl Default for EncoderConfig {
    fn default() -> Self {
        EncoderConfig {
            schedule: ScheduleSpec::default(),
            spread: SpreadChoice::Disabled,
            seed: 0,
            layer_codec: CodecChoice::Deflate,
            base_codec: CodecChoice::Deflate,
            residual_mode: ResidualMode::Wide16,
            channel_mode: ChannelMode::Joint,
            loss_tolerance: None,
        }
    }
}

impl EncoderConfig {
    /// Lossless codecs with the reference sigma list.
    pub fn lossless_paper() -> Self {
        EncoderConfig {
            schedule: ScheduleSpec::paper(),
            ..Default::default()
        }
    }
}

/// Encodes an image into a blur stack.
///
/// Each iteration blurs the (optionally spread) working image, stores the
/// blur through the layer codec and subtracts the *decoded* layer from the
/// working image, so that lossy layer codecs never break reconstruction.
pub fn encode(image: &RasterImage, cfg: &EncoderConfig) -> Result<BlurStack> {
    encode_domain(image, cfg, Domain::Image)
}

pub(crate) fn encode_domain(image: &RasterImage, cfg: &EncoderConfig, domain: Domain) -> Result<BlurStack> {
    if let Some(t) = cfg.loss_tolerance {
        if t.is_nan() || t < 0.0 {
            return Err(Error::param(format!("loss tolerance must be non-negative, got {t}")));
        }
    }
    let (w, h) = (image.width(), image.height());
    let Some(tolerance) = cfg.loss_tolerance else {
        let schedule = cfg.schedule.resolve(w, h)?;
        return encode_with_schedule(image, cfg, &schedule, domain);
    };

    let candidates = cfg.schedule.densifications(w, h)?;
    let mut last = None;
    for schedule in &candidates {
        let stack = encode_with_schedule(image, cfg, schedule, domain)?;
        if max_abs_error(image, &decode(&stack)?) <= tolerance {
            return Ok(stack);
        }
        last = Some(stack);
    }
    Ok(last.expect("at least one candidate schedule"))
}

pub(crate) fn max_abs_error(a: &RasterImage, b: &RasterImage) -> f64 {
    a.planes()
        .iter()
        .zip(b.planes())
        .flat_map(|(p, q)| p.samples().iter().zip(q.samples()))
        .map(|(&x, &y)| (clamp8(x) - clamp8(y)).abs())
        .max()
        .unwrap_or(0) as f64
}

/// Encodes with a resolved schedule.
pub fn encode_with_schedule(
    image: &RasterImage,
    cfg: &EncoderConfig,
    schedule: &BlurSchedule,
    domain: Domain,
) -> Result<BlurStack> {
    if schedule.is_empty() {
        return Err(Error::param("empty schedule"));
    }
    let radii = cfg.spread.radii(schedule.len())?;
    // f32 is what the container stores; keep memory and disk identical.
    let sigmas: Vec<f32> = schedule.sigmas().iter().map(|&s| s as f32).collect();
    if sigmas.windows(2).any(|w| w[0] <= w[1]) {
        return Err(Error::param("schedule is not strictly decreasing at f32 precision"));
    }
    let is_signal = matches!(domain, Domain::Signal { .. });

    let groups: Vec<Vec<Plane>> = match cfg.channel_mode {
        ChannelMode::Joint => vec![image.planes().to_vec()],
        ChannelMode::PerChannel => image.planes().iter().map(|p| vec![p.clone()]).collect(),
    };
    let runs = groups
        .into_par_iter()
        .enumerate()
        .map(|(g, planes)| {
            let stream_seed = match cfg.channel_mode {
                ChannelMode::Joint => cfg.seed,
                ChannelMode::PerChannel => cfg.seed ^ ((g as u64) << 32),
            };
            run_group(planes, cfg, &sigmas, &radii, stream_seed, is_signal)
        })
        .collect::<Result<Vec<_>>>()?;

    // Interleave per-group results into records.
    let mut layers = Vec::with_capacity(sigmas.len());
    for (i, (&sigma, &radius)) in sigmas.iter().zip(&radii).enumerate() {
        let mut bytes = Vec::new();
        let mut planes = Vec::new();
        for run in &runs {
            bytes.push(run.layers[i].0.clone());
            planes.extend(run.layers[i].1.iter().cloned());
        }
        layers.push(BlurLayer {
            sigma,
            spread_radius: radius,
            codec: cfg.layer_codec.for_layer(sigma as f64),
            payloads: Payloads::with_decoded(bytes, planes),
        });
    }
    let base_codec = cfg.base_codec.for_base();
    let mut base_bytes = Vec::new();
    let mut base_planes = Vec::new();
    for run in runs {
        base_bytes.push(encode_planes(&run.base, base_codec)?);
        base_planes.extend(run.base);
    }
    let base_planes = if base_codec == LayerCodec::Raw || base_codec == LayerCodec::Deflate {
        base_planes
    } else {
        let mut decoded = Vec::new();
        for b in &base_bytes {
            decoded.extend(super::layer::decode_planes(b)?);
        }
        decoded
    };

    Ok(BlurStack {
        width: image.width(),
        height: image.height(),
        channels: image.channels(),
        channel_mode: cfg.channel_mode,
        residual_mode: cfg.residual_mode,
        seed: cfg.seed,
        domain,
        layers,
        base: BaseRecord {
            codec: base_codec,
            greyscale: false,
            payloads: Payloads::with_decoded(base_bytes, base_planes),
        },
    })
}

struct GroupRun {
    /// Per layer: payload bytes and the decoded planes.
    layers: Vec<(Vec<u8>, Vec<Plane>)>,
    base: Vec<Plane>,
}

fn run_group(
    mut work: Vec<Plane>,
    cfg: &EncoderConfig,
    sigmas: &[f32],
    radii: &[u16],
    stream_seed: u64,
    is_signal: bool,
) -> Result<GroupRun> {
    let mut layers = Vec::with_capacity(sigmas.len());
    for (i, (&sigma, &radius)) in sigmas.iter().zip(radii).enumerate() {
        let sigma = sigma as f64;
        let source = if radius > 0 {
            spread_planes(&work, radius as u32, layer_seed(stream_seed, i as u64 + 1))
        } else {
            work.clone()
        };
        let blurred = source
            .iter()
            .map(|p| blur_to_8bit(p, sigma, is_signal))
            .collect::<Result<Vec<_>>>()?;
        let codec = cfg.layer_codec.for_layer(sigma);
        let payload = encode_planes(&blurred, codec)?;
        let decoded = if matches!(codec, LayerCodec::DownQ { .. }) {
            super::layer::decode_planes(&payload)?
        } else {
            blurred
        };
        work = work
            .iter()
            .zip(&decoded)
            .map(|(w, d)| grain_extract_mode(w, d, MID_GREY, cfg.residual_mode))
            .collect::<Result<Vec<_>>>()?;
        layers.push((payload, decoded));
    }
    Ok(GroupRun { layers, base: work })
}

fn blur_to_8bit(p: &Plane, sigma: f64, is_signal: bool) -> Result<Plane> {
    let src: Vec<f64> = p.samples().iter().map(|&v| v as f64).collect();
    let out = if is_signal {
        blur1d_f64(&src, sigma)?
    } else {
        blur_f64(&src, p.width(), p.height(), sigma)?
    };
    let samples = out.iter().map(|v| clamp8(v.round() as i32)).collect();
    Plane::new(p.width(), p.height(), samples)
}

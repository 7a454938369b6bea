//! Stack inspection, noise-layer identification, denoising, difference images
//! and corruption tests.

use serde::Serialize;

use crate::codec::{base_record, decode, decoded_layers, encode_planes, layer_record, merge, BlurStack, Payloads};
use crate::error::{Error, Result};
use crate::raster::{clamp8, plane_stats, psnr, psnr_from_mse, to_greyscale, Plane, PlaneStats, RasterImage, MID_GREY};
use crate::scale_space::{blur_f64, gaussian_blur};

/// Default `hf_ratio` threshold above which a bottom-half layer is noisy.
pub const NOISE_THRESHOLD: f64 = 0.6;

/// Added to the standard deviation in `hf_ratio`, in sample units, so that
/// nearly flat layers whose only texture is rounding are not reported as noise.
pub const HF_EPSILON: f64 = 1.0;

#[derive(Debug, Clone, PartialEq)]
pub struct LayerReport {
    /// 1-based; the base is `N + 1`.
    pub index: usize,
    /// 0 for the base.
    pub sigma: f64,
    /// Serialized record length in bytes.
    pub payload_bytes: usize,
    pub stats: Vec<PlaneStats>,
    pub hf_ratio: f64,
    pub noisy: bool,
}

impl LayerReport {
    pub fn mean(&self) -> f64 {
        average(self.stats.iter().map(|s| s.mean))
    }

    pub fn stddev(&self) -> f64 {
        average(self.stats.iter().map(|s| s.stddev))
    }

    pub fn grey_deviation(&self) -> f64 {
        average(self.stats.iter().map(|s| s.grey_deviation))
    }
}

fn average(it: impl ExactSizeIterator<Item = f64>) -> f64 {
    let n = it.len().max(1) as f64;
    it.sum::<f64>() / n
}

/// `RMS(plane - blur(plane, 2)) / (stddev + HF_EPSILON)` pooled over channels.
pub fn hf_ratio(planes: &[Plane]) -> Result<f64> {
    let mut sq = 0.0;
    let mut var = 0.0;
    let mut n = 0usize;
    for p in planes {
        let src: Vec<f64> = p.samples().iter().map(|&v| v as f64).collect();
        let smooth = blur_f64(&src, p.width(), p.height(), 2.0)?;
        sq += src.iter().zip(&smooth).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
        let s = plane_stats(p);
        var += s.stddev * s.stddev * p.len() as f64;
        n += p.len();
    }
    let rms = (sq / n as f64).sqrt();
    let stddev = (var / n as f64).sqrt();
    Ok(rms / (stddev + HF_EPSILON))
}

/// Root-mean-square high-frequency energy of an image: `RMS(x - blur(x, 2))`.
pub fn hf_energy(image: &RasterImage) -> Result<f64> {
    let mut sq = 0.0;
    for p in image.planes() {
        let src: Vec<f64> = p.samples().iter().map(|&v| v as f64).collect();
        let smooth = blur_f64(&src, p.width(), p.height(), 2.0)?;
        sq += src.iter().zip(&smooth).map(|(a, b)| (a - b) * (a - b)).sum::<f64>();
    }
    Ok((sq / image.sample_count() as f64).sqrt())
}

/// First index of the bottom half: layers with index `> ceil(N / 2)`.
pub fn bottom_half_start(n: usize) -> usize {
    n.div_ceil(2) + 1
}

pub fn layer_report(stack: &BlurStack) -> Result<Vec<LayerReport>> {
    layer_report_with(stack, NOISE_THRESHOLD)
}

/// One report per layer followed by one for the base.
pub fn layer_report_with(stack: &BlurStack, threshold: f64) -> Result<Vec<LayerReport>> {
    let n = stack.layer_count();
    let bottom = bottom_half_start(n);
    let layers = decoded_layers(stack)?;
    let mut out = Vec::with_capacity(n + 1);
    for (i, (layer, planes)) in stack.layers.iter().zip(&layers).enumerate() {
        let index = i + 1;
        let hf = hf_ratio(planes)?;
        out.push(LayerReport {
            index,
            sigma: layer.sigma as f64,
            payload_bytes: layer_record(layer).len(),
            stats: planes.iter().map(plane_stats).collect(),
            hf_ratio: hf,
            noisy: hf > threshold && index >= bottom,
        });
    }
    let base = stack.base.payloads.decoded(crate::error::RecordId::Base)?;
    let hf = hf_ratio(base)?;
    out.push(LayerReport {
        index: n + 1,
        sigma: 0.0,
        payload_bytes: base_record(&stack.base).len(),
        stats: base.iter().map(plane_stats).collect(),
        hf_ratio: hf,
        noisy: hf > threshold,
    });
    Ok(out)
}

/// Indices (1-based, layers only) whose report is flagged noisy.
pub fn classify_noisy_layers(stack: &BlurStack) -> Result<Vec<usize>> {
    Ok(layer_report(stack)?
        .into_iter()
        .take(stack.layer_count())
        .filter(|r| r.noisy)
        .map(|r| r.index)
        .collect())
}

#[derive(Serialize)]
struct ReportRow {
    index: usize,
    sigma: f64,
    bytes: usize,
    mean: f64,
    stddev: f64,
    grey_deviation: f64,
    hf_ratio: f64,
    noisy: bool,
}

/// JSON document: `{"layers": [{index, sigma, bytes, mean, stddev, grey_deviation, hf_ratio, noisy}, ...]}`.
pub fn report_json(reports: &[LayerReport]) -> String {
    let rows: Vec<ReportRow> = reports
        .iter()
        .map(|r| ReportRow {
            index: r.index,
            sigma: r.sigma,
            bytes: r.payload_bytes,
            mean: r.mean(),
            stddev: r.stddev(),
            grey_deviation: r.grey_deviation(),
            hf_ratio: r.hf_ratio,
            noisy: r.noisy,
        })
        .collect();
    serde_json::to_string_pretty(&serde_json::json!({ "layers": rows })).expect("report is serializable")
}

/// Line-oriented table, one header line and one row per record.
pub fn report_table(reports: &[LayerReport]) -> String {
    let mut out = String::from("index\tsigma\tbytes\tmean\tstddev\tgrey_deviation\thf_ratio\tnoisy\n");
    let base = reports.len();
    for r in reports {
        let index = if r.index == base {
            "base".to_string()
        } else {
            r.index.to_string()
        };
        out.push_str(&format!(
            "{index}\t{}\t{}\t{:.2}\t{:.2}\t{:.2}\t{:.3}\t{}\n",
            r.sigma,
            r.payload_bytes,
            r.mean(),
            r.stddev(),
            r.grey_deviation(),
            r.hf_ratio,
            if r.noisy { "yes" } else { "no" }
        ));
    }
    out
}

/// Parameters of the layer/base smoothing recipe.
#[derive(Debug, Clone, PartialEq)]
pub struct DenoiseSpec {
    /// 1-based layer indices to re-blur.
    pub layers: Vec<usize>,
    pub layer_sigma: f64,
    pub base_grey: bool,
    /// Blur applied to the base, if any.
    pub base_sigma: Option<f64>,
}

/// Re-blurs the listed decoded layers and optionally greys and blurs the
/// base, re-encoding each touched record with its original codec. Untouched
/// records are carried over byte for byte.
pub fn denoise(stack: &BlurStack, spec: &DenoiseSpec) -> Result<BlurStack> {
    let n = stack.layer_count();
    if let Some(&bad) = spec.layers.iter().find(|&&i| i == 0 || i > n) {
        return Err(Error::param(format!("layer {bad} out of range 1..={n}")));
    }
    let mut out = stack.clone();
    for &index in &spec.layers {
        let planes = stack.layer_planes(index)?;
        let blurred = planes
            .iter()
            .map(|p| gaussian_blur(p, spec.layer_sigma).map(|b| b.clamped()))
            .collect::<Result<Vec<_>>>()?;
        let layer = &mut out.layers[index - 1];
        layer.payloads = reencode(&blurred, stack.payloads_per_record(), layer.codec)?;
    }

    if spec.base_grey || spec.base_sigma.is_some() {
        let mut base = stack.base_planes()?;
        let mut greyscale = stack.base.greyscale;
        if spec.base_grey && !greyscale && base.len() == 3 {
            base = to_greyscale(&RasterImage::new(base)?).into_planes();
            greyscale = true;
        } else if greyscale {
            base.truncate(1);
        }
        if let Some(sigma) = spec.base_sigma {
            base = base
                .iter()
                .map(|p| gaussian_blur(p, sigma))
                .collect::<Result<Vec<_>>>()?;
        }
        let per_record = if greyscale { 1 } else { stack.payloads_per_record() };
        out.base.payloads = reencode(&base, per_record, stack.base.codec)?;
        out.base.greyscale = greyscale;
    }
    out.validate()?;
    Ok(out)
}

fn reencode(planes: &[Plane], per_record: usize, codec: crate::codec::LayerCodec) -> Result<Payloads> {
    let group = planes.len() / per_record;
    let bytes = planes
        .chunks(group)
        .map(|chunk| encode_planes(chunk, codec))
        .collect::<Result<Vec<_>>>()?;
    Ok(Payloads::new(bytes))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DiffMode {
    /// `|a - b|`; black where equal.
    Absolute,
    /// `clamp(a - b + 128)`; mid-grey where equal.
    Grain,
}

pub fn diff_image(a: &RasterImage, b: &RasterImage, mode: DiffMode) -> Result<RasterImage> {
    if a.channels() != b.channels() || a.width() != b.width() || a.height() != b.height() {
        return Err(Error::Shape(format!(
            "{}x{}x{} vs {}x{}x{}",
            a.width(),
            a.height(),
            a.channels(),
            b.width(),
            b.height(),
            b.channels()
        )));
    }
    let planes = a
        .planes()
        .iter()
        .zip(b.planes())
        .map(|(pa, pb)| {
            let samples = pa
                .samples()
                .iter()
                .zip(pb.samples())
                .map(|(&x, &y)| match mode {
                    DiffMode::Absolute => (x - y).abs(),
                    DiffMode::Grain => clamp8(x - y + MID_GREY),
                })
                .collect();
            Plane::new(pa.width(), pa.height(), samples)
        })
        .collect::<Result<Vec<_>>>()?;
    RasterImage::new(planes)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorruptionReport {
    /// PSNR of the intact reconstruction against itself (always infinite).
    pub psnr_clean: f64,
    /// Measured PSNR with the layer replaced by flat 128.
    pub psnr_corrupted: f64,
    /// `10 log10(255^2 / MSE(layer, 128))`, the prediction of the additive model.
    pub psnr_predicted: f64,
}

/// Replaces layer `index` by a flat 128 plane and measures the damage.
pub fn corruption_test(stack: &BlurStack, index: usize) -> Result<CorruptionReport> {
    let n = stack.layer_count();
    if index == 0 || index > n {
        return Err(Error::param(format!("layer {index} out of range 1..={n}")));
    }
    let reference = decode(stack)?;
    let mut layers = decoded_layers(stack)?;
    let victim = std::mem::replace(
        &mut layers[index - 1],
        vec![Plane::filled(stack.width, stack.height, MID_GREY); stack.channels],
    );
    let order: Vec<usize> = (1..=n).rev().collect();
    let corrupted = merge(stack.base_planes()?, &layers, &order, stack.residual_mode)?;

    let mut sq = 0u64;
    let mut count = 0usize;
    for p in &victim {
        for &v in p.samples() {
            let d = (v - MID_GREY) as i64;
            sq += (d * d) as u64;
        }
        count += p.len();
    }
    Ok(CorruptionReport {
        psnr_clean: psnr(&reference, &reference)?,
        psnr_corrupted: psnr(&reference, &corrupted)?,
        psnr_predicted: psnr_from_mse(sq as f64 / count as f64),
    })
}

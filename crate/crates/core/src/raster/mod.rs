//! Planar sample grids, grain arithmetic, pixel metrics and PNM I/O.
//!
//! Samples are stored as `i32` so that working images produced by repeated
//! grain extraction can leave the nominal `0..=255` range without wrapping.
//! Only the final output of a reconstruction is clamped back to 8 bits.

mod pnm;
pub(crate) mod resample;

pub use pnm::{load_pnm, save_pnm};
pub use resample::{box_downsample, resize_bilinear, upscale_bilinear};

use crate::error::{Error, Result};

/// Mid-grey offset used by grain extract / grain merge.
pub const MID_GREY: i32 = 128;

/// A single channel of samples in row-major order.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Plane {
    width: usize,
    height: usize,
    samples: Vec<i32>,
}

impl Plane {
    pub fn new(width: usize, height: usize, samples: Vec<i32>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::shape(format!(
                "plane dimensions must be positive, got {width}x{height}"
            )));
        }
        if samples.len() != width * height {
            return Err(Error::shape(format!(
                "{} samples for a {width}x{height} plane",
                samples.len()
            )));
        }
        Ok(Plane { width, height, samples })
    }

    pub fn filled(width: usize, height: usize, value: i32) -> Self {
        assert!(width > 0 && height > 0, "plane dimensions must be positive");
        Plane {
            width,
            height,
            samples: vec![value; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, mut f: impl FnMut(usize, usize) -> i32) -> Self {
        assert!(width > 0 && height > 0, "plane dimensions must be positive");
        let mut samples = Vec::with_capacity(width * height);
        for y in 0..height {
            for x in 0..width {
                samples.push(f(x, y));
            }
        }
        Plane { width, height, samples }
    }

    #[inline]
    pub fn width(&self) -> usize {
        self.width
    }

    #[inline]
    pub fn height(&self) -> usize {
        self.height
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.samples.len()
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    #[inline]
    pub fn samples(&self) -> &[i32] {
        &self.samples
    }

    #[inline]
    pub fn samples_mut(&mut self) -> &mut [i32] {
        &mut self.samples
    }

    pub fn into_samples(self) -> Vec<i32> {
        self.samples
    }

    #[inline]
    pub fn get(&self, x: usize, y: usize) -> i32 {
        self.samples[y * self.width + x]
    }

    #[inline]
    pub fn set(&mut self, x: usize, y: usize, v: i32) {
        self.samples[y * self.width + x] = v;
    }

    pub fn rows(&self) -> std::slice::ChunksExact<'_, i32> {
        self.samples.chunks_exact(self.width)
    }

    pub fn same_shape(&self, other: &Plane) -> bool {
        self.width == other.width && self.height == other.height
    }

    pub(crate) fn check_shape(&self, other: &Plane) -> Result<()> {
        if self.same_shape(other) {
            Ok(())
        } else {
            Err(Error::shape(format!(
                "{}x{} vs {}x{}",
                self.width, self.height, other.width, other.height
            )))
        }
    }

    pub fn map(&self, f: impl Fn(i32) -> i32) -> Plane {
        Plane {
            width: self.width,
            height: self.height,
            samples: self.samples.iter().map(|&v| f(v)).collect(),
        }
    }

    pub fn clamped(&self) -> Plane {
        self.map(clamp8)
    }

    pub fn is_8bit(&self) -> bool {
        self.samples.iter().all(|v| (0..=255).contains(v))
    }

    pub fn min_max(&self) -> (i32, i32) {
        self.samples
            .iter()
            .fold((i32::MAX, i32::MIN), |(lo, hi), &v| (lo.min(v), hi.max(v)))
    }
}

#[inline]
pub fn clamp8(v: i32) -> i32 {
    v.clamp(0, 255)
}

/// How residual arithmetic treats values outside `0..=255`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ResidualMode {
    /// Unclamped arithmetic; reconstruction is exact.
    #[default]
    Wide16,
    /// Clamp every intermediate to 8 bits, like a layer-based image editor.
    /// Lossy wherever a residual saturates.
    Clamp8,
}

impl ResidualMode {
    pub fn code(self) -> u8 {
        match self {
            ResidualMode::Wide16 => 0,
            ResidualMode::Clamp8 => 1,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(ResidualMode::Wide16),
            1 => Some(ResidualMode::Clamp8),
            _ => None,
        }
    }
}

/// `a - b + offset` per sample.
pub fn grain_extract(a: &Plane, b: &Plane, offset: i32) -> Result<Plane> {
    grain_extract_mode(a, b, offset, ResidualMode::Wide16)
}

/// `a + b - offset` per sample. Exact inverse of [`grain_extract`] in wide mode.
pub fn grain_merge(a: &Plane, b: &Plane, offset: i32) -> Result<Plane> {
    grain_merge_mode(a, b, offset, ResidualMode::Wide16)
}

pub fn grain_extract_mode(a: &Plane, b: &Plane, offset: i32, mode: ResidualMode) -> Result<Plane> {
    a.check_shape(b)?;
    Ok(zip_with(a, b, |x, y| finish(x - y + offset, mode)))
}

pub fn grain_merge_mode(a: &Plane, b: &Plane, offset: i32, mode: ResidualMode) -> Result<Plane> {
    a.check_shape(b)?;
    Ok(zip_with(a, b, |x, y| finish(x + y - offset, mode)))
}

#[inline]
fn finish(v: i32, mode: ResidualMode) -> i32 {
    match mode {
        ResidualMode::Wide16 => v,
        ResidualMode::Clamp8 => clamp8(v),
    }
}

fn zip_with(a: &Plane, b: &Plane, f: impl Fn(i32, i32) -> i32) -> Plane {
    Plane {
        width: a.width,
        height: a.height,
        samples: a.samples.iter().zip(&b.samples).map(|(&x, &y)| f(x, y)).collect(),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ColorSpace {
    Grey,
    Rgb,
}

impl ColorSpace {
    pub fn channels(self) -> usize {
        match self {
            ColorSpace::Grey => 1,
            ColorSpace::Rgb => 3,
        }
    }

    pub fn from_channels(n: usize) -> Option<Self> {
        match n {
            1 => Some(ColorSpace::Grey),
            3 => Some(ColorSpace::Rgb),
            _ => None,
        }
    }
}

/// One or three planes of identical dimensions.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct RasterImage {
    planes: Vec<Plane>,
}

impl RasterImage {
    pub fn new(planes: Vec<Plane>) -> Result<Self> {
        if ColorSpace::from_channels(planes.len()).is_none() {
            return Err(Error::shape(format!(
                "images have 1 or 3 channels, got {}",
                planes.len()
            )));
        }
        let first = &planes[0];
        if let Some(p) = planes.iter().find(|p| !p.same_shape(first)) {
            return Err(Error::shape(format!(
                "channel planes differ: {}x{} vs {}x{}",
                first.width, first.height, p.width, p.height
            )));
        }
        Ok(RasterImage { planes })
    }

    pub fn grey(plane: Plane) -> Self {
        RasterImage { planes: vec![plane] }
    }

    pub fn rgb(r: Plane, g: Plane, b: Plane) -> Result<Self> {
        Self::new(vec![r, g, b])
    }

    pub fn width(&self) -> usize {
        self.planes[0].width
    }

    pub fn height(&self) -> usize {
        self.planes[0].height
    }

    pub fn channels(&self) -> usize {
        self.planes.len()
    }

    pub fn color_space(&self) -> ColorSpace {
        ColorSpace::from_channels(self.planes.len()).expect("validated at construction")
    }

    pub fn planes(&self) -> &[Plane] {
        &self.planes
    }

    pub fn plane(&self, c: usize) -> &Plane {
        &self.planes[c]
    }

    pub fn into_planes(self) -> Vec<Plane> {
        self.planes
    }

    pub fn sample_count(&self) -> usize {
        self.width() * self.height() * self.channels()
    }

    pub fn clamped(&self) -> RasterImage {
        RasterImage {
            planes: self.planes.iter().map(Plane::clamped).collect(),
        }
    }

    pub fn map_planes(&self, f: impl Fn(&Plane) -> Plane) -> RasterImage {
        RasterImage {
            planes: self.planes.iter().map(f).collect(),
        }
    }

    pub(crate) fn check_shape(&self, other: &RasterImage) -> Result<()> {
        if self.channels() != other.channels() {
            return Err(Error::shape(format!(
                "{} channels vs {} channels",
                self.channels(),
                other.channels()
            )));
        }
        self.planes[0].check_shape(&other.planes[0])
    }
}

/// Peak signal-to-noise ratio in dB over all samples clamped to `0..=255`.
/// Returns `f64::INFINITY` when the images are identical after clamping.
pub fn psnr(a: &RasterImage, b: &RasterImage) -> Result<f64> {
    a.check_shape(b)?;
    let mut sq = 0u64;
    for (pa, pb) in a.planes.iter().zip(&b.planes) {
        for (&x, &y) in pa.samples.iter().zip(&pb.samples) {
            let d = (clamp8(x) - clamp8(y)) as i64;
            sq += (d * d) as u64;
        }
    }
    Ok(psnr_from_mse(sq as f64 / a.sample_count() as f64))
}

pub fn psnr_from_mse(mse: f64) -> f64 {
    if mse == 0.0 {
        f64::INFINITY
    } else {
        10.0 * (255.0 * 255.0 / mse).log10()
    }
}

/// Summary statistics of one plane.
#[derive(Debug, Clone, PartialEq)]
pub struct PlaneStats {
    pub mean: f64,
    pub stddev: f64,
    pub min: i32,
    pub max: i32,
    /// Counts per 8-bit value; samples outside `0..=255` land in the end bins.
    pub histogram: [u64; 256],
    /// Mean of `|v - 128|`.
    pub grey_deviation: f64,
}

pub fn plane_stats(p: &Plane) -> PlaneStats {
    let n = p.len() as f64;
    let mut histogram = [0u64; 256];
    let mut sum = 0i64;
    let mut dev = 0i64;
    for &v in &p.samples {
        histogram[clamp8(v) as usize] += 1;
        sum += v as i64;
        dev += (v - MID_GREY).abs() as i64;
    }
    let mean = sum as f64 / n;
    let var = p
        .samples
        .iter()
        .map(|&v| {
            let d = v as f64 - mean;
            d * d
        })
        .sum::<f64>()
        / n;
    let (min, max) = p.min_max();
    PlaneStats {
        mean,
        stddev: var.sqrt(),
        min,
        max,
        histogram,
        grey_deviation: dev as f64 / n,
    }
}

/// Rec.601 luma, rounded. Grey input is returned unchanged.
pub fn to_greyscale(image: &RasterImage) -> RasterImage {
    if image.channels() == 1 {
        return image.clone();
    }
    let [r, g, b] = [&image.planes[0], &image.planes[1], &image.planes[2]];
    let samples = r
        .samples
        .iter()
        .zip(&g.samples)
        .zip(&b.samples)
        .map(|((&r, &g), &b)| (0.299 * r as f64 + 0.587 * g as f64 + 0.114 * b as f64).round() as i32)
        .collect();
    RasterImage::grey(Plane {
        width: r.width,
        height: r.height,
        samples,
    })
}

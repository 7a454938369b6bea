use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::raster::resample::{box_downsample_f64, resize_bilinear_f64};
use crate::raster::Plane;

/// Above this sigma the blur runs on a half-resolution copy (recursively).
pub const CASCADE_SIGMA: f64 = 64.0;

/// Normalized Gaussian weights for offsets `-r..=r` with `r = ceil(3 sigma)`.
pub fn gaussian_kernel(sigma: f64) -> Result<Vec<f64>> {
    check_sigma(sigma)?;
    let radius = (3.0 * sigma).ceil() as i64;
    let denom = 2.0 * sigma * sigma;
    let mut w: Vec<f64> = (-radius..=radius).map(|k| (-((k * k) as f64) / denom).exp()).collect();
    let sum: f64 = w.iter().sum();
    w.iter_mut().for_each(|v| *v /= sum);
    Ok(w)
}

fn check_sigma(sigma: f64) -> Result<()> {
    if sigma > 0.0 && sigma.is_finite() {
        Ok(())
    } else {
        Err(Error::param(format!("sigma must be positive, got {sigma}")))
    }
}

/// Separable Gaussian blur with edge replication, rounded back to integers.
pub fn gaussian_blur(p: &Plane, sigma: f64) -> Result<Plane> {
    let src: Vec<f64> = p.samples().iter().map(|&v| v as f64).collect();
    let out = blur_f64(&src, p.width(), p.height(), sigma)?;
    Ok(Plane::new(p.width(), p.height(), round_vec(&out)).expect("shape preserved"))
}

/// 1-D Gaussian blur with edge replication.
pub fn blur1d(samples: &[i32], sigma: f64) -> Result<Vec<i32>> {
    let src: Vec<f64> = samples.iter().map(|&v| v as f64).collect();
    Ok(round_vec(&blur1d_f64(&src, sigma)?))
}

/// Unrounded 2-D blur of a row-major `width x height` field.
pub fn blur_f64(src: &[f64], width: usize, height: usize, sigma: f64) -> Result<Vec<f64>> {
    check_sigma(sigma)?;
    assert_eq!(src.len(), width * height, "field length must match dimensions");
    if sigma > CASCADE_SIGMA && (width > 1 || height > 1) {
        let (half, hw, hh) = box_downsample_f64(src, width, height, 2);
        let blurred = blur_f64(&half, hw, hh, sigma / 2.0)?;
        return Ok(resize_bilinear_f64(&blurred, hw, hh, width, height));
    }
    let kernel = gaussian_kernel(sigma)?;
    let rows = horizontal_pass(src, width, &kernel);
    Ok(vertical_pass(&rows, width, height, &kernel))
}

/// Unrounded 1-D blur.
pub fn blur1d_f64(src: &[f64], sigma: f64) -> Result<Vec<f64>> {
    check_sigma(sigma)?;
    if sigma > CASCADE_SIGMA && src.len() > 1 {
        let (half, hw, _) = box_downsample_f64(src, src.len(), 1, 2);
        let blurred = blur1d_f64(&half, sigma / 2.0)?;
        return Ok(resize_bilinear_f64(&blurred, hw, 1, src.len(), 1));
    }
    let kernel = gaussian_kernel(sigma)?;
    let mut out = vec![0.0; src.len()];
    convolve_row(src, &kernel, &mut out);
    Ok(out)
}

fn round_vec(v: &[f64]) -> Vec<i32> {
    v.iter().map(|x| x.round() as i32).collect()
}

fn horizontal_pass(src: &[f64], width: usize, kernel: &[f64]) -> Vec<f64> {
    let mut out = vec![0.0; src.len()];
    out.par_chunks_mut(width)
        .zip(src.par_chunks(width))
        .for_each(|(dst, row)| convolve_row(row, kernel, dst));
    out
}

fn convolve_row(row: &[f64], kernel: &[f64], dst: &mut [f64]) {
    let radius = kernel.len() / 2;
    let n = row.len();
    let (first, last) = (row[0], row[n - 1]);
    let mut padded = Vec::with_capacity(n + 2 * radius);
    padded.extend(std::iter::repeat(first).take(radius));
    padded.extend_from_slice(row);
    padded.extend(std::iter::repeat(last).take(radius));
    for (x, d) in dst.iter_mut().enumerate() {
        *d = padded[x..x + kernel.len()].iter().zip(kernel).map(|(a, b)| a * b).sum();
    }
}

fn vertical_pass(src: &[f64], width: usize, height: usize, kernel: &[f64]) -> Vec<f64> {
    let radius = (kernel.len() / 2) as isize;
    let last = height as isize - 1;
    let mut out = vec![0.0; src.len()];
    out.par_chunks_mut(width).enumerate().for_each(|(y, dst)| {
        for (k, &w) in kernel.iter().enumerate() {
            let sy = (y as isize + k as isize - radius).clamp(0, last) as usize;
            let row = &src[sy * width..(sy + 1) * width];
            for (d, &s) in dst.iter_mut().zip(row) {
                *d += w * s;
            }
        }
    });
    out
}

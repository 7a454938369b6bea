use rayon::prelude::*;

use super::stack::BlurStack;
use crate::error::{Error, Result};
use crate::raster::{grain_merge_mode, upscale_bilinear, Plane, RasterImage, ResidualMode, MID_GREY};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Order {
    /// Base first, then the finest layers: detail appears before colour.
    BottomUp,
    /// Coarsest layers first over a flat mid-grey stand-in.
    TopDown,
}

/// Full reconstruction: the base grain-merged with every decoded layer
/// from the finest to the coarsest, clamped to 8 bits at the end.
pub fn decode(stack: &BlurStack) -> Result<RasterImage> {
    let all: Vec<usize> = (1..=stack.layer_count()).rev().collect();
    let layers = decoded_layers(stack)?;
    merge(stack.base_planes()?, &layers, &all, stack.residual_mode)
}

/// Decodes every layer payload (in parallel), returning planes per layer.
pub fn decoded_layers(stack: &BlurStack) -> Result<Vec<Vec<Plane>>> {
    (1..=stack.layer_count())
        .into_par_iter()
        .map(|i| stack.layer_planes(i).map(<[Plane]>::to_vec))
        .collect()
}

/// Merges `order` (1-based layer indices) into `start`, one channel at a time.
pub(crate) fn merge(
    start: Vec<Plane>,
    layers: &[Vec<Plane>],
    order: &[usize],
    mode: ResidualMode,
) -> Result<RasterImage> {
    let planes = start
        .into_iter()
        .enumerate()
        .map(|(c, mut acc)| {
            for &i in order {
                acc = grain_merge_mode(&acc, &layers[i - 1][c], MID_GREY, mode)?;
            }
            Ok(acc.clamped())
        })
        .collect::<Result<Vec<_>>>()?;
    RasterImage::new(planes)
}

/// Reconstruction from `k` of the `N` layers.
///
/// Bottom-up merges the base with layers `N..=N-k+1`. Top-down merges layers
/// `1..=k` over a flat 128 plane, which stands in for the missing layers and
/// the base until `k == N`. Either order at `k == N` equals [`decode`].
pub fn partial_reconstruct(stack: &BlurStack, k: usize, order: Order) -> Result<RasterImage> {
    let n = stack.layer_count();
    if k > n {
        return Err(Error::param(format!("k = {k} exceeds the {n} layers")));
    }
    if k == n {
        return decode(stack);
    }
    let layers = decoded_layers(stack)?;
    match order {
        Order::BottomUp => {
            let idx: Vec<usize> = (n - k + 1..=n).rev().collect();
            merge(stack.base_planes()?, &layers, &idx, stack.residual_mode)
        }
        Order::TopDown => {
            let idx: Vec<usize> = (1..=k).collect();
            let flat = vec![Plane::filled(stack.width, stack.height, MID_GREY); stack.channels];
            merge(flat, &layers, &idx, stack.residual_mode)
        }
    }
}

/// Upscales every decoded layer and the base bilinearly by `scale`, then merges.
pub fn enlarge(stack: &BlurStack, scale: usize) -> Result<RasterImage> {
    if scale < 1 {
        return Err(Error::param("scale must be at least 1"));
    }
    if scale == 1 {
        return decode(stack);
    }
    let layers: Vec<Vec<Plane>> = decoded_layers(stack)?
        .into_par_iter()
        .map(|planes| planes.iter().map(|p| upscale_bilinear(p, scale)).collect())
        .collect();
    let base = stack
        .base_planes()?
        .iter()
        .map(|p| upscale_bilinear(p, scale))
        .collect();
    let all: Vec<usize> = (1..=stack.layer_count()).rev().collect();
    merge(base, &layers, &all, stack.residual_mode)
}

#![allow(dead_code)]

use blurstack::raster::{Plane, RasterImage};
use blurstack::scale_space::SplitMix64;

pub fn uniform_random_rgb(size: usize, seed: u64) -> RasterImage {
    let mut g = SplitMix64::new(seed);
    let planes = (0..3)
        .map(|_| Plane::from_fn(size, size, |_, _| (g.next_u64() >> 56) as i32))
        .collect();
    RasterImage::new(planes).unwrap()
}

pub fn gradient_rgb(size: usize) -> RasterImage {
    let s = (size - 1).max(1) as f64;
    RasterImage::rgb(
        Plane::from_fn(size, size, |x, _| (255.0 * x as f64 / s).round() as i32),
        Plane::from_fn(size, size, |_, y| (255.0 * y as f64 / s).round() as i32),
        Plane::from_fn(size, size, |x, y| (255.0 * (x + y) as f64 / (2.0 * s)).round() as i32),
    )
    .unwrap()
}

/// Standard normal deviate via Box-Muller.
pub fn gaussian(g: &mut SplitMix64) -> f64 {
    let u1 = ((g.next_u64() >> 11) as f64 + 0.5) / (1u64 << 53) as f64;
    let u2 = (g.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
    (-2.0 * u1.ln()).sqrt() * (2.0 * std::f64::consts::PI * u2).cos()
}

/// Smooth sky gradient and soft-edged shapes, a few of them textured, plus
/// mild Gaussian sensor grain (sigma 1). Kept inside 16..=240 so no channel
/// saturates.
pub fn synthetic_photo(size: usize, seed: u64) -> RasterImage {
    let mut g = SplitMix64::new(seed);
    let mut unit = || (g.next_u64() >> 11) as f64 / (1u64 << 53) as f64;
    let s = size as f64;

    struct Blob {
        cx: f64,
        cy: f64,
        r: f64,
        color: [f64; 3],
        square: bool,
        textured: bool,
    }
    let blobs: Vec<Blob> = (0..9)
        .map(|i| Blob {
            cx: unit() * s,
            cy: unit() * s,
            r: (0.06 + 0.14 * unit()) * s,
            color: [unit() * 200.0 + 25.0, unit() * 200.0 + 25.0, unit() * 200.0 + 25.0],
            square: i % 3 == 0,
            textured: i % 4 == 1,
        })
        .collect();
    let top = [unit() * 80.0 + 120.0, unit() * 80.0 + 120.0, unit() * 60.0 + 170.0];
    let bottom = [unit() * 80.0 + 40.0, unit() * 80.0 + 60.0, unit() * 60.0 + 30.0];
    let phase = [unit() * 6.3, unit() * 6.3];

    let mut noise = SplitMix64::new(seed ^ 0xABCD);
    let mut channels: Vec<Vec<i32>> = (0..3).map(|_| Vec::with_capacity(size * size)).collect();
    for y in 0..size {
        for x in 0..size {
            let (fx, fy) = (x as f64, y as f64);
            let t = fy / s;
            let mut px = [0.0; 3];
            for c in 0..3 {
                px[c] = top[c] * (1.0 - t) + bottom[c] * t;
            }
            for b in &blobs {
                let d = if b.square {
                    (fx - b.cx).abs().max((fy - b.cy).abs())
                } else {
                    ((fx - b.cx).powi(2) + (fy - b.cy).powi(2)).sqrt()
                };
                let alpha = 1.0 / (1.0 + ((d - b.r) / 1.5).exp());
                let texture = if b.textured {
                    8.0 * (fx * 0.37 + phase[0]).sin() * (fy * 0.23 + phase[1]).cos()
                } else {
                    0.0
                };
                for (v, color) in px.iter_mut().zip(b.color) {
                    *v = *v * (1.0 - alpha) + (color + texture) * alpha;
                }
            }
            let grain = gaussian(&mut noise);
            for c in 0..3 {
                channels[c].push((px[c] + grain).round().clamp(16.0, 240.0) as i32);
            }
        }
    }
    RasterImage::new(
        channels
            .into_iter()
            .map(|s| Plane::new(size, size, s).unwrap())
            .collect(),
    )
    .unwrap()
}

/// Adds rounded Gaussian noise, clamped to 8 bits.
pub fn add_noise(image: &RasterImage, sigma: f64, seed: u64) -> RasterImage {
    let mut g = SplitMix64::new(seed);
    let planes = image
        .planes()
        .iter()
        .map(|p| {
            Plane::from_fn(p.width(), p.height(), |x, y| {
                (p.get(x, y) as f64 + sigma * gaussian(&mut g))
                    .round()
                    .clamp(0.0, 255.0) as i32
            })
        })
        .collect();
    RasterImage::new(planes).unwrap()
}

pub fn time<T>(f: impl FnOnce() -> T) -> (T, f64) {
    let start = std::time::Instant::now();
    let out = f();
    (out, start.elapsed().as_secs_f64())
}

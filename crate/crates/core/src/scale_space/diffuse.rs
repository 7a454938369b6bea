use std::collections::VecDeque;

use super::blur::blur_f64;
use crate::error::{Error, Result};
use crate::raster::Plane;

const MIN_DENOMINATOR: f64 = 1e-6;

/// Normalized convolution of sparse samples: `blur(values * mask) / blur(mask)`.
///
/// Where the blurred mask is negligible the nearest sampled value is used
/// (8-connected breadth-first distance, ties resolved in raster order).
pub fn diffuse_sparse(values: &Plane, mask: &Plane, sigma: f64) -> Result<Plane> {
    values.check_shape(mask)?;
    let (w, h) = (values.width(), values.height());
    let m: Vec<f64> = mask.samples().iter().map(|&v| f64::from(u8::from(v != 0))).collect();
    if m.iter().all(|&v| v == 0.0) {
        return Err(Error::param("sample mask is empty"));
    }
    let vm: Vec<f64> = values.samples().iter().zip(&m).map(|(&v, &k)| v as f64 * k).collect();
    let num = blur_f64(&vm, w, h, sigma)?;
    let den = blur_f64(&m, w, h, sigma)?;

    let mut nearest: Option<Vec<i32>> = None;
    let mut out = Vec::with_capacity(w * h);
    for i in 0..w * h {
        if den[i] >= MIN_DENOMINATOR {
            out.push((num[i] / den[i]).round() as i32);
        } else {
            let near = nearest.get_or_insert_with(|| nearest_sample(values, mask));
            out.push(near[i]);
        }
    }
    Ok(Plane::new(w, h, out).expect("shape preserved"))
}

fn nearest_sample(values: &Plane, mask: &Plane) -> Vec<i32> {
    let (w, h) = (values.width(), values.height());
    let mut out = vec![0; w * h];
    let mut seen = vec![false; w * h];
    let mut queue = VecDeque::new();
    for (i, &m) in mask.samples().iter().enumerate() {
        if m != 0 {
            seen[i] = true;
            out[i] = values.samples()[i];
            queue.push_back(i);
        }
    }
    while let Some(i) = queue.pop_front() {
        let (x, y) = ((i % w) as isize, (i / w) as isize);
        for dy in -1..=1 {
            for dx in -1..=1 {
                let (nx, ny) = (x + dx, y + dy);
                if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                    continue;
                }
                let j = ny as usize * w + nx as usize;
                if !seen[j] {
                    seen[j] = true;
                    out[j] = out[i];
                    queue.push_back(j);
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scale_space::gaussian_blur;

    #[test]
    fn full_mask_matches_blur() {
        let v = Plane::from_fn(24, 17, |x, y| ((x * 13 + y * 29) % 256) as i32);
        let mask = Plane::filled(24, 17, 1);
        let d = diffuse_sparse(&v, &mask, 2.0).unwrap();
        let b = gaussian_blur(&v, 2.0).unwrap();
        for (a, b) in d.samples().iter().zip(b.samples()) {
            assert!((a - b).abs() <= 1);
        }
    }

    #[test]
    fn single_sample_fills_support() {
        let mut v = Plane::filled(15, 15, 0);
        v.set(7, 7, 200);
        let mut mask = Plane::filled(15, 15, 0);
        mask.set(7, 7, 1);
        let d = diffuse_sparse(&v, &mask, 20.0).unwrap();
        assert!(d.samples().iter().all(|&s| s == 200));
    }

    #[test]
    fn far_pixels_fall_back_to_nearest() {
        let mut v = Plane::filled(60, 1, 0);
        v.set(0, 0, 42);
        let mut mask = Plane::filled(60, 1, 0);
        mask.set(0, 0, 1);
        let d = diffuse_sparse(&v, &mask, 1.0).unwrap();
        assert!(d.samples().iter().all(|&s| s == 42));
    }

    #[test]
    fn empty_mask_is_an_error() {
        let v = Plane::filled(3, 3, 1);
        assert!(matches!(
            diffuse_sparse(&v, &Plane::filled(3, 3, 0), 1.0),
            Err(Error::Parameter(_))
        ));
    }
}

use super::Plane;

/// Averages `factor x factor` blocks; edge blocks average only the pixels they cover.
pub fn box_downsample(p: &Plane, factor: usize) -> Plane {
    let (w, h) = (p.width(), p.height());
    let src: Vec<f64> = p.samples().iter().map(|&v| v as f64).collect();
    let (out, nw, nh) = box_downsample_f64(&src, w, h, factor);
    Plane::new(nw, nh, round_all(&out)).expect("downsampled dimensions are positive")
}

/// Bilinear resampling to an arbitrary size with pixel-centre alignment.
pub fn resize_bilinear(p: &Plane, new_width: usize, new_height: usize) -> Plane {
    let src: Vec<f64> = p.samples().iter().map(|&v| v as f64).collect();
    let out = resize_bilinear_f64(&src, p.width(), p.height(), new_width, new_height);
    Plane::new(new_width, new_height, round_all(&out)).expect("target dimensions are positive")
}

pub fn upscale_bilinear(p: &Plane, scale: usize) -> Plane {
    resize_bilinear(p, p.width() * scale, p.height() * scale)
}

fn round_all(v: &[f64]) -> Vec<i32> {
    v.iter().map(|x| x.round() as i32).collect()
}

pub(crate) fn box_downsample_f64(src: &[f64], w: usize, h: usize, factor: usize) -> (Vec<f64>, usize, usize) {
    let factor = factor.max(1);
    let nw = w.div_ceil(factor);
    let nh = h.div_ceil(factor);
    let mut out = vec![0.0; nw * nh];
    for by in 0..nh {
        let y0 = by * factor;
        let y1 = (y0 + factor).min(h);
        for bx in 0..nw {
            let x0 = bx * factor;
            let x1 = (x0 + factor).min(w);
            let mut sum = 0.0;
            for y in y0..y1 {
                sum += src[y * w + x0..y * w + x1].iter().sum::<f64>();
            }
            out[by * nw + bx] = sum / ((y1 - y0) * (x1 - x0)) as f64;
        }
    }
    (out, nw, nh)
}

pub(crate) fn resize_bilinear_f64(src: &[f64], w: usize, h: usize, nw: usize, nh: usize) -> Vec<f64> {
    let xs = axis_taps(w, nw);
    let ys = axis_taps(h, nh);
    let mut out = Vec::with_capacity(nw * nh);
    for &(y0, y1, fy) in &ys {
        let r0 = &src[y0 * w..(y0 + 1) * w];
        let r1 = &src[y1 * w..(y1 + 1) * w];
        for &(x0, x1, fx) in &xs {
            let top = r0[x0] + (r0[x1] - r0[x0]) * fx;
            let bottom = r1[x0] + (r1[x1] - r1[x0]) * fx;
            out.push(top + (bottom - top) * fy);
        }
    }
    out
}

fn axis_taps(len: usize, new_len: usize) -> Vec<(usize, usize, f64)> {
    let ratio = len as f64 / new_len as f64;
    (0..new_len)
        .map(|i| {
            let pos = ((i as f64 + 0.5) * ratio - 0.5).clamp(0.0, (len - 1) as f64);
            let i0 = pos.floor() as usize;
            let i1 = (i0 + 1).min(len - 1);
            (i0, i1, pos - i0 as f64)
        })
        .collect()
}

use crate::raster::Plane;

const GAMMA: u64 = 0x9E37_79B9_7F4A_7C15;

#[inline]
fn mix(mut z: u64) -> u64 {
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// The splitmix64 generator.
#[derive(Debug, Clone)]
pub struct SplitMix64 {
    state: u64,
}

impl SplitMix64 {
    pub fn new(seed: u64) -> Self {
        SplitMix64 { state: seed }
    }

    pub fn next_u64(&mut self) -> u64 {
        self.state = self.state.wrapping_add(GAMMA);
        mix(self.state)
    }

    /// The `k`-th output (0-based) of a fresh generator seeded with `seed`,
    /// without stepping through the first `k` outputs.
    #[inline]
    pub fn nth(seed: u64, k: u64) -> u64 {
        mix(seed.wrapping_add(k.wrapping_add(1).wrapping_mul(GAMMA)))
    }
}

/// First splitmix64 output for `seed ^ layer_index`.
pub fn layer_seed(seed: u64, layer_index: u64) -> u64 {
    SplitMix64::new(seed ^ layer_index).next_u64()
}

#[inline]
fn offset(draw: u64, radius: u64) -> i64 {
    (draw % (2 * radius + 1)) as i64 - radius as i64
}

/// Displaced sampling: every pixel reads a random neighbour within `radius`.
/// Pixel `p` (raster order) uses draws `2p` and `2p + 1` for dx and dy.
pub fn spread(p: &Plane, radius: u32, seed: u64) -> Plane {
    spread_planes(std::slice::from_ref(p), radius, seed).remove(0)
}

/// Spreads several same-shape planes with one shared displacement field.
pub fn spread_planes(planes: &[Plane], radius: u32, seed: u64) -> Vec<Plane> {
    if radius == 0 {
        return planes.to_vec();
    }
    let (w, h) = (planes[0].width(), planes[0].height());
    let r = radius as u64;
    let mut out: Vec<Vec<i32>> = vec![Vec::with_capacity(w * h); planes.len()];
    for y in 0..h {
        for x in 0..w {
            let idx = (y * w + x) as u64;
            let dx = offset(SplitMix64::nth(seed, 2 * idx), r);
            let dy = offset(SplitMix64::nth(seed, 2 * idx + 1), r);
            let sx = (x as i64 + dx).clamp(0, w as i64 - 1) as usize;
            let sy = (y as i64 + dy).clamp(0, h as i64 - 1) as usize;
            for (dst, src) in out.iter_mut().zip(planes) {
                dst.push(src.get(sx, sy));
            }
        }
    }
    out.into_iter()
        .map(|s| Plane::new(w, h, s).expect("shape preserved"))
        .collect()
}

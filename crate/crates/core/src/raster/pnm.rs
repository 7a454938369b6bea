//! Binary PGM (`P5`) and PPM (`P6`) with maxval 255.

use super::{clamp8, Plane, RasterImage};
use crate::error::{Error, Result};

pub fn load_pnm(bytes: &[u8]) -> Result<RasterImage> {
    let mut cur = Cursor { bytes, pos: 0 };
    let channels = match bytes.get(..2) {
        Some(b"P5") => 1,
        Some(b"P6") => 3,
        _ => return Err(parse_err(0, "expected magic P5 or P6")),
    };
    cur.pos = 2;
    let width = cur.header_number("width")?;
    let height = cur.header_number("height")?;
    let maxval = cur.header_number("maxval")?;
    if width == 0 || height == 0 {
        return Err(parse_err(cur.pos, "zero image dimension"));
    }
    if maxval != 255 {
        return Err(Error::UnsupportedDepth(maxval as u32));
    }
    match bytes.get(cur.pos) {
        Some(c) if c.is_ascii_whitespace() => cur.pos += 1,
        _ => return Err(parse_err(cur.pos, "expected single whitespace after maxval")),
    }

    let count = width
        .checked_mul(height)
        .and_then(|n| n.checked_mul(channels))
        .ok_or_else(|| parse_err(cur.pos, "image dimensions overflow"))?;
    let data = bytes
        .get(cur.pos..cur.pos + count)
        .ok_or_else(|| parse_err(bytes.len(), format!("expected {count} sample bytes")))?;

    let planes = (0..channels)
        .map(|c| {
            let samples = data.iter().skip(c).step_by(channels).map(|&b| b as i32).collect();
            Plane::new(width, height, samples)
        })
        .collect::<Result<Vec<_>>>()?;
    RasterImage::new(planes)
}

/// Writes `P5` for grey and `P6` for RGB images, clamping samples to 8 bits.
pub fn save_pnm(image: &RasterImage) -> Vec<u8> {
    let magic = if image.channels() == 1 { "P5" } else { "P6" };
    let mut out = format!("{magic}\n{} {}\n255\n", image.width(), image.height()).into_bytes();
    out.reserve(image.sample_count());
    let planes = image.planes();
    for i in 0..image.width() * image.height() {
        for p in planes {
            out.push(clamp8(p.samples()[i]) as u8);
        }
    }
    out
}

fn parse_err(offset: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        offset,
        message: message.into(),
    }
}

struct Cursor<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl Cursor<'_> {
    fn skip_whitespace_and_comments(&mut self) {
        while let Some(&c) = self.bytes.get(self.pos) {
            if c.is_ascii_whitespace() {
                self.pos += 1;
            } else if c == b'#' {
                while let Some(&c) = self.bytes.get(self.pos) {
                    self.pos += 1;
                    if c == b'\n' {
                        break;
                    }
                }
            } else {
                break;
            }
        }
    }

    fn header_number(&mut self, what: &str) -> Result<usize> {
        let before = self.pos;
        self.skip_whitespace_and_comments();
        if self.pos == before {
            return Err(parse_err(self.pos, format!("expected whitespace before {what}")));
        }
        let start = self.pos;
        while self.bytes.get(self.pos).is_some_and(u8::is_ascii_digit) {
            self.pos += 1;
        }
        if start == self.pos {
            return Err(parse_err(start, format!("expected decimal {what}")));
        }
        std::str::from_utf8(&self.bytes[start..self.pos])
            .ok()
            .and_then(|s| s.parse().ok())
            .ok_or_else(|| parse_err(start, format!("{what} out of range")))
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn loads_p5() {
        let img = load_pnm(b"P5\n2 1\n255\n\x00\xff").unwrap();
        assert_eq!(img.channels(), 1);
        assert_eq!(img.plane(0).samples(), &[0, 255]);
    }

    #[test]
    fn loads_p6() {
        let img = load_pnm(b"P6 1 1 255\n\x0a\x14\x1e").unwrap();
        assert_eq!(img.channels(), 3);
        let s: Vec<i32> = img.planes().iter().map(|p| p.samples()[0]).collect();
        assert_eq!(s, [10, 20, 30]);
    }

    #[test]
    fn header_comments_are_skipped() {
        let img = load_pnm(b"P5\n# made by hand\n1 1\n255\n\x07").unwrap();
        assert_eq!(img.plane(0).samples(), &[7]);
    }

    #[test]
    fn rejects_bad_magic() {
        assert!(matches!(
            load_pnm(b"P7\n1 1\n255\n\x00"),
            Err(Error::Parse { offset: 0, .. })
        ));
    }

    #[test]
    fn rejects_other_depths() {
        assert!(matches!(
            load_pnm(b"P5\n1 1\n65535\n\x00\x00"),
            Err(Error::UnsupportedDepth(65535))
        ));
    }

    #[test]
    fn rejects_truncated_data() {
        let err = load_pnm(b"P5\n2 2\n255\n\x00").unwrap_err();
        assert!(matches!(err, Error::Parse { offset: 12, .. }), "{err}");
    }

    #[test]
    fn rejects_missing_dimension() {
        assert!(matches!(
            load_pnm(b"P5\nx 1\n255\n"),
            Err(Error::Parse { offset: 3, .. })
        ));
    }

    #[test]
    fn save_grey_exact_bytes() {
        let img = RasterImage::grey(Plane::filled(1, 1, 128));
        assert_eq!(save_pnm(&img), b"P5\n1 1\n255\n\x80");
    }

    #[test]
    fn save_rgb_interleaves() {
        let img = RasterImage::rgb(Plane::filled(1, 1, 1), Plane::filled(1, 1, 2), Plane::filled(1, 1, 300)).unwrap();
        assert_eq!(save_pnm(&img), b"P6\n1 1\n255\n\x01\x02\xff");
    }

    proptest! {
        #![proptest_config(ProptestConfig::with_cases(16))]
        #[test]
        fn rgb_round_trip(seed in any::<u64>()) {
            let mut s = seed;
            let mut next = || {
                s = s.wrapping_mul(6364136223846793005).wrapping_add(1442695040888963407);
                (s >> 56) as i32
            };
            let planes: Vec<Plane> = (0..3).map(|_| Plane::from_fn(64, 64, |_, _| next())).collect();
            let img = RasterImage::new(planes).unwrap();
            prop_assert_eq!(load_pnm(&save_pnm(&img)).unwrap(), img);
        }
    }
}

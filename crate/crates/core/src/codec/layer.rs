//! Self-describing payload codecs for layers and base images.
//!
//! Every payload starts with an 18-byte header:
//!
//! | offset | type | field                                        |
//! |--------|------|----------------------------------------------|
//! | 0      | u8   | codec id (0 raw, 1 deflate, 2 downq)         |
//! | 1      | u8   | bytes per stored sample (1 or 2)             |
//! | 2      | u8   | quantizer bits (downq only, else 0)          |
//! | 3      | u8   | plane count                                  |
//! | 4      | u16  | downsample factor (downq only, else 1)       |
//! | 6      | u32  | full-resolution width                        |
//! | 10     | u32  | full-resolution height                       |
//! | 14     | u32  | CRC-32 of the stored sample stream           |
//!
//! followed by the codec data. All integers are little-endian. Stored samples
//! are planes back to back, row-major; two-byte samples are `i16`.

use std::io::{Read, Write};

use flate2::read::DeflateDecoder;
use flate2::write::DeflateEncoder;
use flate2::Compression;

use crate::error::{Error, RecordId, Result};
use crate::raster::{clamp8, resample::resize_bilinear_f64, Plane};

pub const PAYLOAD_HEADER_LEN: usize = 18;

pub const DEFAULT_QUANT_BITS: u8 = 6;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LayerCodec {
    /// Verbatim samples.
    Raw,
    /// Left-predicted residuals compressed with DEFLATE.
    Deflate,
    /// Box-downsample, uniform quantization around 128, then `Deflate`.
    DownQ { downsample: u16, quant_bits: u8 },
}

impl LayerCodec {
    pub fn id(self) -> u8 {
        match self {
            LayerCodec::Raw => 0,
            LayerCodec::Deflate => 1,
            LayerCodec::DownQ { .. } => 2,
        }
    }

    /// downq with the default parameters for a layer blurred at `sigma`.
    pub fn downq_for_sigma(sigma: f64) -> Self {
        LayerCodec::DownQ {
            downsample: default_downsample(sigma),
            quant_bits: DEFAULT_QUANT_BITS,
        }
    }

    pub fn quant_bits(self) -> u8 {
        match self {
            LayerCodec::DownQ { quant_bits, .. } => quant_bits,
            _ => 0,
        }
    }

    pub fn downsample(self) -> u16 {
        match self {
            LayerCodec::DownQ { downsample, .. } => downsample,
            _ => 1,
        }
    }

    pub fn from_parts(id: u8, quant_bits: u8, downsample: u16) -> Result<Self> {
        let codec = match id {
            0 => LayerCodec::Raw,
            1 => LayerCodec::Deflate,
            2 => LayerCodec::DownQ { downsample, quant_bits },
            other => return Err(Error::param(format!("unknown codec id {other}"))),
        };
        codec.validate()?;
        Ok(codec)
    }

    pub fn validate(self) -> Result<()> {
        if let LayerCodec::DownQ { downsample, quant_bits } = self {
            if !(1..=8).contains(&quant_bits) {
                return Err(Error::param(format!("quant_bits must be 1..=8, got {quant_bits}")));
            }
            if !(1..=32).contains(&downsample) {
                return Err(Error::param(format!("downsample must be 1..=32, got {downsample}")));
            }
        }
        Ok(())
    }
}

/// `clamp(floor(sigma / 2), 1, 32)`.
pub fn default_downsample(sigma: f64) -> u16 {
    ((sigma / 2.0).floor() as i64).clamp(1, 32) as u16
}

pub fn layer_encode(p: &Plane, codec: LayerCodec) -> Result<Vec<u8>> {
    encode_planes(std::slice::from_ref(p), codec)
}

pub fn layer_decode(payload: &[u8]) -> Result<Plane> {
    let mut planes = decode_planes(payload)?;
    if planes.len() != 1 {
        return Err(decode_err(format!("expected 1 plane, payload holds {}", planes.len())));
    }
    Ok(planes.remove(0))
}

/// Encodes same-shape planes into one payload.
pub fn encode_planes(planes: &[Plane], codec: LayerCodec) -> Result<Vec<u8>> {
    codec.validate()?;
    let first = planes.first().ok_or_else(|| Error::param("no planes to encode"))?;
    if planes.len() > 255 {
        return Err(Error::param("too many planes in one payload"));
    }
    for p in planes {
        first.check_shape(p)?;
    }
    let (w, h) = (first.width(), first.height());
    if w > u32::MAX as usize || h > u32::MAX as usize {
        return Err(Error::param("plane too large for payload header"));
    }

    let (sample_bytes, stream) = match codec {
        LayerCodec::Raw | LayerCodec::Deflate => {
            let wide = planes.iter().any(|p| !p.is_8bit());
            if wide {
                if let Some(p) = planes.iter().find(|p| {
                    let (lo, hi) = p.min_max();
                    lo < i16::MIN as i32 || hi > i16::MAX as i32
                }) {
                    let (lo, hi) = p.min_max();
                    return Err(Error::param(format!("samples {lo}..{hi} exceed 16 bits")));
                }
            }
            let samples: Vec<i32> = planes.iter().flat_map(|p| p.samples().iter().copied()).collect();
            (if wide { 2 } else { 1 }, samples)
        }
        LayerCodec::DownQ { downsample, quant_bits } => {
            let q = Quantizer::new(quant_bits);
            let mut samples = Vec::new();
            for p in planes {
                let src: Vec<f64> = p.samples().iter().map(|&v| clamp8(v) as f64).collect();
                let (small, _, _) = crate::raster::resample::box_downsample_f64(&src, w, h, downsample as usize);
                samples.extend(small.iter().map(|&v| q.index(v)));
            }
            (1, samples)
        }
    };

    let raw = stream_bytes(&stream, sample_bytes);
    let mut out = Vec::with_capacity(PAYLOAD_HEADER_LEN + raw.len());
    out.push(codec.id());
    out.push(sample_bytes as u8);
    out.push(codec.quant_bits());
    out.push(planes.len() as u8);
    out.extend_from_slice(&codec.downsample().to_le_bytes());
    out.extend_from_slice(&(w as u32).to_le_bytes());
    out.extend_from_slice(&(h as u32).to_le_bytes());
    out.extend_from_slice(&crc32fast::hash(&raw).to_le_bytes());

    match codec {
        LayerCodec::Raw => out.extend_from_slice(&raw),
        LayerCodec::Deflate | LayerCodec::DownQ { .. } => {
            let (sw, _) = stored_dims(w, h, codec.downsample());
            let residuals = predict(&stream, sw, sample_bytes);
            let mut enc = DeflateEncoder::new(out, Compression::best());
            enc.write_all(&residuals)?;
            out = enc.finish()?;
        }
    }
    Ok(out)
}

/// Reads the codec descriptor from a payload header.
pub fn payload_codec(payload: &[u8]) -> Result<LayerCodec> {
    let header = Header::parse(payload)?;
    Ok(header.codec)
}

pub fn decode_planes(payload: &[u8]) -> Result<Vec<Plane>> {
    let header = Header::parse(payload)?;
    let (w, h) = (header.width, header.height);
    let (sw, sh) = stored_dims(w, h, header.codec.downsample());
    let count = sw
        .checked_mul(sh)
        .and_then(|n| n.checked_mul(header.planes))
        .ok_or_else(|| decode_err("payload dimensions overflow"))?;
    let byte_len = count * header.sample_bytes;
    let body = &payload[PAYLOAD_HEADER_LEN..];

    let stream = match header.codec {
        LayerCodec::Raw => {
            if body.len() != byte_len {
                return Err(decode_err(format!(
                    "raw payload holds {} bytes, expected {byte_len}",
                    body.len()
                )));
            }
            read_stream(body, header.sample_bytes)
        }
        LayerCodec::Deflate | LayerCodec::DownQ { .. } => {
            let mut residuals = Vec::with_capacity(byte_len);
            DeflateDecoder::new(body)
                .take(byte_len as u64 + 1)
                .read_to_end(&mut residuals)
                .map_err(|e| decode_err(format!("deflate stream: {e}")))?;
            if residuals.len() != byte_len {
                return Err(decode_err(format!(
                    "deflate stream holds {} bytes, expected {byte_len}",
                    residuals.len()
                )));
            }
            unpredict(&residuals, sw, header.sample_bytes)
        }
    };
    if crc32fast::hash(&stream_bytes(&stream, header.sample_bytes)) != header.crc {
        return Err(decode_err("sample checksum mismatch"));
    }

    let planes = stream
        .chunks_exact(sw * sh)
        .map(|chunk| match header.codec {
            LayerCodec::DownQ { quant_bits, .. } => {
                let q = Quantizer::new(quant_bits);
                let small: Vec<f64> = chunk.iter().map(|&i| q.value(i) as f64).collect();
                let full = resize_bilinear_f64(&small, sw, sh, w, h);
                Plane::new(w, h, full.iter().map(|v| clamp8(v.round() as i32)).collect())
            }
            _ => Plane::new(w, h, chunk.to_vec()),
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(planes)
}

fn decode_err(message: impl Into<String>) -> Error {
    Error::Decode {
        record: RecordId::Payload,
        message: message.into(),
    }
}

struct Header {
    codec: LayerCodec,
    sample_bytes: usize,
    planes: usize,
    width: usize,
    height: usize,
    crc: u32,
}

impl Header {
    fn parse(p: &[u8]) -> Result<Header> {
        if p.len() < PAYLOAD_HEADER_LEN {
            return Err(decode_err(format!(
                "payload of {} bytes is shorter than its header",
                p.len()
            )));
        }
        let u16_at = |o: usize| u16::from_le_bytes([p[o], p[o + 1]]);
        let u32_at = |o: usize| u32::from_le_bytes([p[o], p[o + 1], p[o + 2], p[o + 3]]);
        let codec = LayerCodec::from_parts(p[0], p[2], u16_at(4)).map_err(|e| decode_err(e.to_string()))?;
        let sample_bytes = p[1] as usize;
        let valid_width = match codec {
            LayerCodec::DownQ { .. } => sample_bytes == 1,
            _ => sample_bytes == 1 || sample_bytes == 2,
        };
        if !valid_width {
            return Err(decode_err(format!("invalid sample width {sample_bytes}")));
        }
        let header = Header {
            codec,
            sample_bytes,
            planes: p[3] as usize,
            width: u32_at(6) as usize,
            height: u32_at(10) as usize,
            crc: u32_at(14),
        };
        if header.planes == 0 || header.width == 0 || header.height == 0 {
            return Err(decode_err("empty payload dimensions"));
        }
        Ok(header)
    }
}

fn stored_dims(w: usize, h: usize, downsample: u16) -> (usize, usize) {
    let d = downsample.max(1) as usize;
    (w.div_ceil(d), h.div_ceil(d))
}

/// Uniform quantizer centred at 128 with `2^bits` levels.
struct Quantizer {
    step: i32,
    half: i32,
}

impl Quantizer {
    fn new(bits: u8) -> Self {
        Quantizer {
            step: 1 << (8 - bits),
            half: 1 << (bits - 1),
        }
    }

    /// Stored symbol in `0..2^bits`.
    fn index(&self, v: f64) -> i32 {
        let i = ((v - 128.0) / self.step as f64).round() as i32;
        i.clamp(-self.half, self.half - 1) + self.half
    }

    fn value(&self, symbol: i32) -> i32 {
        clamp8(128 + (symbol - self.half) * self.step)
    }
}

fn stream_bytes(samples: &[i32], sample_bytes: usize) -> Vec<u8> {
    if sample_bytes == 1 {
        samples.iter().map(|&v| v as u8).collect()
    } else {
        samples.iter().flat_map(|&v| (v as i16).to_le_bytes()).collect()
    }
}

fn read_stream(bytes: &[u8], sample_bytes: usize) -> Vec<i32> {
    if sample_bytes == 1 {
        bytes.iter().map(|&b| b as i32).collect()
    } else {
        bytes
            .chunks_exact(2)
            .map(|c| i16::from_le_bytes([c[0], c[1]]) as i32)
            .collect()
    }
}

/// Residual against the left neighbour; the first sample of a row is
/// predicted from the first sample of the row above (0 for the first row).
fn predict(samples: &[i32], width: usize, sample_bytes: usize) -> Vec<u8> {
    let mut out = Vec::with_capacity(samples.len() * sample_bytes);
    for (i, &v) in samples.iter().enumerate() {
        let pred = if i % width != 0 {
            samples[i - 1]
        } else if i >= width {
            samples[i - width]
        } else {
            0
        };
        let r = v.wrapping_sub(pred);
        if sample_bytes == 1 {
            out.push(r as u8);
        } else {
            out.extend_from_slice(&(r as u16).to_le_bytes());
        }
    }
    out
}

fn unpredict(residuals: &[u8], width: usize, sample_bytes: usize) -> Vec<i32> {
    let n = residuals.len() / sample_bytes;
    let mut out: Vec<i32> = Vec::with_capacity(n);
    for i in 0..n {
        let pred = if i % width != 0 {
            out[i - 1]
        } else if i >= width {
            out[i - width]
        } else {
            0
        };
        let v = if sample_bytes == 1 {
            (pred as u8).wrapping_add(residuals[i]) as i32
        } else {
            let r = u16::from_le_bytes([residuals[2 * i], residuals[2 * i + 1]]);
            (pred as u16).wrapping_add(r) as i16 as i32
        };
        out.push(v);
    }
    out
}

//! The `GBS1` container. All integers little-endian.
//!
//! ```text
//! header   "GBS1" u16 version u8 channels u8 channel_mode u8 residual_mode
//!          u32 width u32 height u64 seed u16 layer_count u8 domain
//! layer    f32 sigma u16 spread_radius u8 codec_id u8 quant_bits u16 downsample
//!          { u32 payload_len, payload } x P   u32 crc32
//! base     u8 codec_id u8 greyscale_flag { u32 len, payload } x P'   u32 crc32
//! trailer  (signals only) f64 scale f64 offset u32 sample_rate u32 crc32
//! ```
//!
//! `P` is 1 in joint mode and `channels` in per-channel mode; `P'` is 1 for a
//! greyscale base. Each CRC-32 covers its record from the first field up to
//! the last payload byte. Layers are written coarsest first, so a streaming
//! reader can render a top-down preview after every layer record.

use super::layer::{payload_codec, LayerCodec};
use super::stack::{BaseRecord, BlurLayer, BlurStack, ChannelMode, Domain, Payloads};
use crate::error::{Error, RecordId, Result};
use crate::raster::ResidualMode;

pub const MAGIC: [u8; 4] = *b"GBS1";
pub const VERSION: u16 = 1;
pub const HEADER_LEN: usize = 28;

pub fn serialize(stack: &BlurStack) -> Vec<u8> {
    let mut out =
        Vec::with_capacity(HEADER_LEN + stack.layers.iter().map(|l| l.payloads.total_len() + 20).sum::<usize>());
    out.extend_from_slice(&MAGIC);
    out.extend_from_slice(&VERSION.to_le_bytes());
    out.push(stack.channels as u8);
    out.push(stack.channel_mode.code());
    out.push(stack.residual_mode.code());
    out.extend_from_slice(&(stack.width as u32).to_le_bytes());
    out.extend_from_slice(&(stack.height as u32).to_le_bytes());
    out.extend_from_slice(&stack.seed.to_le_bytes());
    out.extend_from_slice(&(stack.layers.len() as u16).to_le_bytes());
    out.push(stack.domain.tag());
    for layer in &stack.layers {
        out.extend_from_slice(&layer_record(layer));
    }
    out.extend_from_slice(&base_record(&stack.base));
    if let Domain::Signal {
        sample_rate,
        scale,
        offset,
    } = stack.domain
    {
        let start = out.len();
        out.extend_from_slice(&scale.to_le_bytes());
        out.extend_from_slice(&offset.to_le_bytes());
        out.extend_from_slice(&sample_rate.to_le_bytes());
        let crc = crc32fast::hash(&out[start..]);
        out.extend_from_slice(&crc.to_le_bytes());
    }
    out
}

/// Serialized bytes of one layer record, CRC included.
pub fn layer_record(layer: &BlurLayer) -> Vec<u8> {
    let mut rec = Vec::with_capacity(layer.payloads.total_len() + 16);
    rec.extend_from_slice(&layer.sigma.to_le_bytes());
    rec.extend_from_slice(&layer.spread_radius.to_le_bytes());
    rec.push(layer.codec.id());
    rec.push(layer.codec.quant_bits());
    rec.extend_from_slice(&layer.codec.downsample().to_le_bytes());
    push_payloads(&mut rec, &layer.payloads);
    let crc = crc32fast::hash(&rec);
    rec.extend_from_slice(&crc.to_le_bytes());
    rec
}

/// Serialized bytes of the base record, CRC included.
pub fn base_record(base: &BaseRecord) -> Vec<u8> {
    let mut rec = Vec::with_capacity(base.payloads.total_len() + 12);
    rec.push(base.codec.id());
    rec.push(u8::from(base.greyscale));
    push_payloads(&mut rec, &base.payloads);
    let crc = crc32fast::hash(&rec);
    rec.extend_from_slice(&crc.to_le_bytes());
    rec
}

fn push_payloads(rec: &mut Vec<u8>, payloads: &Payloads) {
    for p in payloads.bytes() {
        rec.extend_from_slice(&(p.len() as u32).to_le_bytes());
        rec.extend_from_slice(p);
    }
}

pub fn deserialize(bytes: &[u8]) -> Result<BlurStack> {
    let mut r = Reader { bytes, pos: 0 };
    if bytes.len() < 4 || bytes[..4] != MAGIC {
        return Err(Error::BadMagic);
    }
    r.pos = 4;
    let version = r.u16("version")?;
    if version != VERSION {
        return Err(Error::Version {
            found: version,
            expected: VERSION,
        });
    }
    let channels_at = r.pos;
    let channels = r.u8("channels")? as usize;
    if !matches!(channels, 1 | 3) {
        return Err(parse(channels_at, format!("{channels} channels")));
    }
    let mode_at = r.pos;
    let channel_mode =
        ChannelMode::from_code(r.u8("channel_mode")?).ok_or_else(|| parse(mode_at, "unknown channel mode"))?;
    let residual_at = r.pos;
    let residual_mode =
        ResidualMode::from_code(r.u8("residual_mode")?).ok_or_else(|| parse(residual_at, "unknown residual mode"))?;
    let dims_at = r.pos;
    let width = r.u32("width")? as usize;
    let height = r.u32("height")? as usize;
    if width == 0 || height == 0 {
        return Err(parse(dims_at, "zero stack dimension"));
    }
    let seed = r.u64("seed")?;
    let count_at = r.pos;
    let layer_count = r.u16("layer_count")? as usize;
    if layer_count == 0 {
        return Err(parse(count_at, "stack without layers"));
    }
    let domain_at = r.pos;
    let domain_tag = r.u8("domain")?;
    if domain_tag > 1 {
        return Err(parse(domain_at, format!("unknown domain tag {domain_tag}")));
    }
    let per_record = match channel_mode {
        ChannelMode::Joint => 1,
        ChannelMode::PerChannel => channels,
    };

    let mut layers = Vec::with_capacity(layer_count);
    for i in 1..=layer_count {
        let record = RecordId::Layer(i);
        let start = r.pos;
        let sigma = f32::from_le_bytes(r.take(4, "layer sigma")?.try_into().unwrap());
        let spread_radius = r.u16("spread radius")?;
        let codec_at = r.pos;
        let (id, qbits) = (r.u8("codec id")?, r.u8("quant bits")?);
        let downsample = r.u16("downsample")?;
        let codec = LayerCodec::from_parts(id, qbits, downsample).map_err(|e| parse(codec_at, e.to_string()))?;
        let payloads = r.payloads(per_record, record)?;
        r.check_crc(start, record)?;
        for p in &payloads {
            check_payload_codec(p, codec, record)?;
        }
        layers.push(BlurLayer {
            sigma,
            spread_radius,
            codec,
            payloads: Payloads::new(payloads),
        });
    }

    let start = r.pos;
    let codec_id_at = r.pos;
    let codec_id = r.u8("base codec id")?;
    let flag_at = r.pos;
    let greyscale = match r.u8("greyscale flag")? {
        0 => false,
        1 => true,
        other => return Err(parse(flag_at, format!("greyscale flag {other}"))),
    };
    let count = if greyscale { 1 } else { per_record };
    let payloads = r.payloads(count, RecordId::Base)?;
    r.check_crc(start, RecordId::Base)?;
    let first_codec = payloads
        .first()
        .map(|p| payload_codec(p).map_err(|e| e.in_record(RecordId::Base)))
        .transpose()?
        .ok_or_else(|| parse(codec_id_at, "base without payloads"))?;
    if first_codec.id() != codec_id {
        return Err(parse(codec_id_at, "base codec id disagrees with its payload"));
    }
    for p in &payloads {
        check_payload_codec(p, first_codec, RecordId::Base)?;
    }
    let base = BaseRecord {
        codec: first_codec,
        greyscale,
        payloads: Payloads::new(payloads),
    };

    let domain = if domain_tag == 1 {
        let start = r.pos;
        let scale = f64::from_le_bytes(r.take(8, "signal scale")?.try_into().unwrap());
        let offset = f64::from_le_bytes(r.take(8, "signal offset")?.try_into().unwrap());
        let sample_rate = r.u32("sample rate")?;
        r.check_crc(start, RecordId::Trailer)?;
        Domain::Signal {
            sample_rate,
            scale,
            offset,
        }
    } else {
        Domain::Image
    };
    if r.pos != bytes.len() {
        return Err(parse(r.pos, format!("{} trailing bytes", bytes.len() - r.pos)));
    }

    let stack = BlurStack {
        width,
        height,
        channels,
        channel_mode,
        residual_mode,
        seed,
        domain,
        layers,
        base,
    };
    stack.validate()?;
    Ok(stack)
}

fn check_payload_codec(payload: &[u8], codec: LayerCodec, record: RecordId) -> Result<()> {
    let found = payload_codec(payload).map_err(|e| e.in_record(record))?;
    if found != codec {
        return Err(Error::Decode {
            record,
            message: format!("payload codec {found:?} disagrees with record codec {codec:?}"),
        });
    }
    Ok(())
}

fn parse(offset: usize, message: impl Into<String>) -> Error {
    Error::Parse {
        offset,
        message: message.into(),
    }
}

struct Reader<'a> {
    bytes: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8]> {
        let available = self.bytes.len() - self.pos;
        if available < n {
            return Err(Error::Truncated {
                offset: self.pos,
                needed: n - available,
                what: what.to_string(),
            });
        }
        let s = &self.bytes[self.pos..self.pos + n];
        self.pos += n;
        Ok(s)
    }

    fn u8(&mut self, what: &str) -> Result<u8> {
        Ok(self.take(1, what)?[0])
    }

    fn u16(&mut self, what: &str) -> Result<u16> {
        Ok(u16::from_le_bytes(self.take(2, what)?.try_into().unwrap()))
    }

    fn u32(&mut self, what: &str) -> Result<u32> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn u64(&mut self, what: &str) -> Result<u64> {
        Ok(u64::from_le_bytes(self.take(8, what)?.try_into().unwrap()))
    }

    fn payloads(&mut self, count: usize, record: RecordId) -> Result<Vec<Vec<u8>>> {
        (0..count)
            .map(|_| {
                let len = self.u32(&format!("{record} payload length"))? as usize;
                Ok(self.take(len, &format!("{record} payload"))?.to_vec())
            })
            .collect()
    }

    fn check_crc(&mut self, start: usize, record: RecordId) -> Result<()> {
        let computed = crc32fast::hash(&self.bytes[start..self.pos]);
        let at = self.pos;
        if self.u32(&format!("{record} crc"))? != computed {
            return Err(Error::Crc { record, offset: at });
        }
        Ok(())
    }
}

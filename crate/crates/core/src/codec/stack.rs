use std::sync::OnceLock;

use super::layer::{decode_planes, LayerCodec};
use crate::error::{Error, RecordId, Result};
use crate::raster::{Plane, ResidualMode};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum ChannelMode {
    /// All channels share each blur record and its spread displacement.
    #[default]
    Joint,
    /// Each channel runs its own decomposition; records hold one payload per channel.
    PerChannel,
}

impl ChannelMode {
    pub fn code(self) -> u8 {
        match self {
            ChannelMode::Joint => 0,
            ChannelMode::PerChannel => 1,
        }
    }

    pub fn from_code(code: u8) -> Option<Self> {
        match code {
            0 => Some(ChannelMode::Joint),
            1 => Some(ChannelMode::PerChannel),
            _ => None,
        }
    }
}

/// What the stack decomposes, with the sample mapping for signals.
#[derive(Debug, Clone, Copy, PartialEq, Default)]
pub enum Domain {
    #[default]
    Image,
    /// A 1-D series stored as a `length x 1` plane. Original values are
    /// recovered as `sample / scale + offset`.
    Signal { sample_rate: u32, scale: f64, offset: f64 },
}

impl Domain {
    pub fn tag(self) -> u8 {
        match self {
            Domain::Image => 0,
            Domain::Signal { .. } => 1,
        }
    }
}

/// Payload bytes plus a lazily decoded copy of their planes.
#[derive(Debug, Default)]
pub struct Payloads {
    bytes: Vec<Vec<u8>>,
    decoded: OnceLock<Vec<Plane>>,
}

impl Payloads {
    pub fn new(bytes: Vec<Vec<u8>>) -> Self {
        Payloads {
            bytes,
            decoded: OnceLock::new(),
        }
    }

    pub(crate) fn with_decoded(bytes: Vec<Vec<u8>>, planes: Vec<Plane>) -> Self {
        let decoded = OnceLock::new();
        let _ = decoded.set(planes);
        Payloads { bytes, decoded }
    }

    pub fn bytes(&self) -> &[Vec<u8>] {
        &self.bytes
    }

    pub fn total_len(&self) -> usize {
        self.bytes.iter().map(Vec::len).sum()
    }

    /// All planes of all payloads, in channel order.
    pub fn decoded(&self, record: RecordId) -> Result<&[Plane]> {
        if let Some(p) = self.decoded.get() {
            return Ok(p);
        }
        let mut planes = Vec::new();
        for payload in &self.bytes {
            planes.extend(decode_planes(payload).map_err(|e| e.in_record(record))?);
        }
        let _ = self.decoded.set(planes);
        Ok(self.decoded.get().expect("just set"))
    }
}

impl Clone for Payloads {
    fn clone(&self) -> Self {
        let decoded = OnceLock::new();
        if let Some(p) = self.decoded.get() {
            let _ = decoded.set(p.clone());
        }
        Payloads {
            bytes: self.bytes.clone(),
            decoded,
        }
    }
}

impl PartialEq for Payloads {
    fn eq(&self, other: &Self) -> bool {
        self.bytes == other.bytes
    }
}

/// One stored compressed blur.
#[derive(Debug, Clone, PartialEq)]
pub struct BlurLayer {
    pub sigma: f32,
    pub spread_radius: u16,
    pub codec: LayerCodec,
    pub payloads: Payloads,
}

/// The final residual image.
#[derive(Debug, Clone, PartialEq)]
pub struct BaseRecord {
    pub codec: LayerCodec,
    /// One grey plane applied to every channel.
    pub greyscale: bool,
    pub payloads: Payloads,
}

/// A decomposition: ordered blur layers (coarsest first) plus a base image.
#[derive(Debug, Clone, PartialEq)]
pub struct BlurStack {
    pub width: usize,
    pub height: usize,
    pub channels: usize,
    pub channel_mode: ChannelMode,
    pub residual_mode: ResidualMode,
    pub seed: u64,
    pub domain: Domain,
    pub layers: Vec<BlurLayer>,
    pub base: BaseRecord,
}

impl BlurStack {
    pub fn layer_count(&self) -> usize {
        self.layers.len()
    }

    pub fn sigmas(&self) -> Vec<f64> {
        self.layers.iter().map(|l| l.sigma as f64).collect()
    }

    /// Decoded planes of layer `index` (1-based), one per channel.
    pub fn layer_planes(&self, index: usize) -> Result<&[Plane]> {
        let layer = index
            .checked_sub(1)
            .and_then(|i| self.layers.get(i))
            .ok_or_else(|| Error::param(format!("layer {index} out of range 1..={}", self.layers.len())))?;
        layer.payloads.decoded(RecordId::Layer(index))
    }

    /// Decoded base planes, expanded to one per channel.
    pub fn base_planes(&self) -> Result<Vec<Plane>> {
        let planes = self.base.payloads.decoded(RecordId::Base)?;
        Ok(if self.base.greyscale {
            vec![planes[0].clone(); self.channels]
        } else {
            planes.to_vec()
        })
    }

    /// Payload count per record implied by the channel mode.
    pub fn payloads_per_record(&self) -> usize {
        match self.channel_mode {
            ChannelMode::Joint => 1,
            ChannelMode::PerChannel => self.channels,
        }
    }

    /// Structural checks plus a full decode of every record.
    pub fn validate(&self) -> Result<()> {
        if !matches!(self.channels, 1 | 3) {
            return Err(Error::param(format!("{} channels", self.channels)));
        }
        if self.width == 0 || self.height == 0 {
            return Err(Error::param("empty stack dimensions"));
        }
        if self.layers.is_empty() {
            return Err(Error::param("stack has no layers"));
        }
        if self.layers.windows(2).any(|w| w[0].sigma <= w[1].sigma) {
            return Err(Error::param("layer sigmas must be strictly decreasing"));
        }
        let per_record = self.payloads_per_record();
        for (i, layer) in self.layers.iter().enumerate() {
            let record = RecordId::Layer(i + 1);
            if layer.payloads.bytes().len() != per_record {
                return Err(Error::Decode {
                    record,
                    message: format!("{} payloads, expected {per_record}", layer.payloads.bytes().len()),
                });
            }
            self.check_planes(layer.payloads.decoded(record)?, self.channels, record)?;
        }
        let base_channels = if self.base.greyscale { 1 } else { self.channels };
        let base_payloads = if self.base.greyscale { 1 } else { per_record };
        if self.base.payloads.bytes().len() != base_payloads {
            return Err(Error::Decode {
                record: RecordId::Base,
                message: format!(
                    "{} payloads, expected {base_payloads}",
                    self.base.payloads.bytes().len()
                ),
            });
        }
        self.check_planes(
            self.base.payloads.decoded(RecordId::Base)?,
            base_channels,
            RecordId::Base,
        )
    }

    fn check_planes(&self, planes: &[Plane], expected: usize, record: RecordId) -> Result<()> {
        if planes.len() != expected {
            return Err(Error::Decode {
                record,
                message: format!("{} planes, expected {expected}", planes.len()),
            });
        }
        if let Some(p) = planes
            .iter()
            .find(|p| p.width() != self.width || p.height() != self.height)
        {
            return Err(Error::Decode {
                record,
                message: format!(
                    "{}x{} plane in a {}x{} stack",
                    p.width(),
                    p.height(),
                    self.width,
                    self.height
                ),
            });
        }
        Ok(())
    }
}

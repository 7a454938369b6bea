//! Blur-stack encoding, reconstruction, layer codecs and the `GBS1` container.
//!
//! Encoding repeatedly blurs the working image, stores the blur through a
//! layer codec and grain-extracts the decoded blur from the working image.
//! What remains after the last layer is the base. Reconstruction grain-merges
//! the base with every decoded layer; in wide mode it reproduces the input
//! exactly whenever the base codec is lossless, whatever the layer codecs.

mod container;
mod encode;
mod layer;
mod reconstruct;
mod stack;

pub use container::{base_record, deserialize, layer_record, serialize, HEADER_LEN, MAGIC, VERSION};
pub(crate) use encode::encode_domain;
pub use encode::{encode, encode_with_schedule, CodecChoice, EncoderConfig, ScheduleSpec, SpreadChoice};
pub use layer::{
    decode_planes, default_downsample, encode_planes, layer_decode, layer_encode, payload_codec, LayerCodec,
    DEFAULT_QUANT_BITS, PAYLOAD_HEADER_LEN,
};
pub(crate) use reconstruct::merge;
pub use reconstruct::{decode, decoded_layers, enlarge, partial_reconstruct, Order};
pub use stack::{BaseRecord, BlurLayer, BlurStack, ChannelMode, Domain, Payloads};

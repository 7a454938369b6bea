//! C ABI for the blurstack codec.
//!
//! Images and stacks are opaque handles owned by the caller and released with
//! the matching `*_free` function. Every fallible call returns a [`BsStatus`];
//! on failure [`bs_last_error`] describes what went wrong on the calling
//! thread. Byte buffers handed out by the library are released with
//! [`bs_buffer_free`]. Image samples cross the boundary interleaved, 8 bits
//! per channel, row-major (the PNM layout).

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use blurstack::codec::{self, ChannelMode, CodecChoice, EncoderConfig, Order, ScheduleSpec, SpreadChoice};
use blurstack::raster::{self, Plane, RasterImage, ResidualMode};
use blurstack::{BlurStack, Error};

/// Result of every fallible call.
#[repr(C)]
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BsStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    Shape = 3,
    Parse = 4,
    Format = 5,
    Checksum = 6,
    Decode = 7,
    Io = 8,
    Panic = 9,
}

/// Opaque image handle.
pub struct BsImage(RasterImage);

/// Opaque blur stack handle.
pub struct BsStack(BlurStack);

/// Library-allocated bytes.
#[repr(C)]
pub struct BsBuffer {
    pub data: *mut u8,
    pub len: usize,
}

pub const BS_SCHEDULE_HALVING: u32 = 0;
pub const BS_SCHEDULE_PAPER: u32 = 1;

pub const BS_CODEC_RAW: u32 = 0;
pub const BS_CODEC_DEFLATE: u32 = 1;
pub const BS_CODEC_DOWNQ: u32 = 2;

pub const BS_RESIDUAL_WIDE16: u32 = 0;
pub const BS_RESIDUAL_CLAMP8: u32 = 1;

pub const BS_ORDER_BOTTOM_UP: u32 = 0;
pub const BS_ORDER_TOP_DOWN: u32 = 1;

/// Encoder settings. Start from [`bs_encoder_config_default`].
#[repr(C)]
#[derive(Debug, Clone, Copy)]
pub struct BsEncoderConfig {
    /// `BS_SCHEDULE_*`.
    pub schedule: u32,
    /// First sigma of a halving schedule; `<= 0` means half the largest side.
    pub sigma0: f64,
    pub factor: f64,
    pub sigma_min: f64,
    /// Uniform spread radius; ignored when `spread_preset` is set.
    pub spread_radius: u16,
    /// Non-zero selects the reference spread radii.
    pub spread_preset: u8,
    pub seed: u64,
    /// `BS_CODEC_*`.
    pub layer_codec: u32,
    /// `BS_CODEC_*`.
    pub base_codec: u32,
    pub quant_bits: u8,
    /// Downq factor for layers; 0 picks it from each layer's sigma.
    pub downsample: u16,
    /// `BS_RESIDUAL_*`.
    pub residual_mode: u32,
    /// Non-zero runs the decomposition per channel.
    pub per_channel: u8,
    /// Maximum absolute error; negative disables tunable loss.
    pub loss_tolerance: f64,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let msg = CString::new(msg.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(msg));
}

fn status_of(e: &Error) -> BsStatus {
    match e {
        Error::Shape(_) => BsStatus::Shape,
        Error::Parameter(_) | Error::Index(_) | Error::Conflict(_) => BsStatus::InvalidArgument,
        Error::Parse { .. } => BsStatus::Parse,
        Error::UnsupportedDepth(_) | Error::BadMagic | Error::Version { .. } | Error::Truncated { .. } => {
            BsStatus::Format
        }
        Error::Crc { .. } => BsStatus::Checksum,
        Error::Decode { .. } => BsStatus::Decode,
        Error::Io(_) => BsStatus::Io,
    }
}

struct Fail(BsStatus, String);

impl From<Error> for Fail {
    fn from(e: Error) -> Self {
        Fail(status_of(&e), e.to_string())
    }
}

fn null(what: &str) -> Fail {
    Fail(BsStatus::NullPointer, format!("{what} is null"))
}

fn invalid(msg: impl Into<String>) -> Fail {
    Fail(BsStatus::InvalidArgument, msg.into())
}

fn guard(f: impl FnOnce() -> Result<(), Fail>) -> BsStatus {
    LAST_ERROR.with(|e| *e.borrow_mut() = None);
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => BsStatus::Ok,
        Ok(Err(Fail(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            BsStatus::Panic
        }
    }
}

unsafe fn bytes<'a>(data: *const u8, len: usize) -> Result<&'a [u8], Fail> {
    if len == 0 {
        return Ok(&[]);
    }
    if data.is_null() {
        return Err(null("data"));
    }
    Ok(std::slice::from_raw_parts(data, len))
}

unsafe fn out_ptr<'a, T>(out: *mut T) -> Result<&'a mut T, Fail> {
    out.as_mut().ok_or_else(|| null("output pointer"))
}

unsafe fn image_ref<'a>(img: *const BsImage) -> Result<&'a RasterImage, Fail> {
    img.as_ref().map(|i| &i.0).ok_or_else(|| null("image"))
}

unsafe fn stack_ref<'a>(stack: *const BsStack) -> Result<&'a BlurStack, Fail> {
    stack.as_ref().map(|s| &s.0).ok_or_else(|| null("stack"))
}

fn into_buffer(v: Vec<u8>) -> BsBuffer {
    let mut v = v.into_boxed_slice();
    let buf = BsBuffer {
        data: v.as_mut_ptr(),
        len: v.len(),
    };
    std::mem::forget(v);
    buf
}

/// Message for the most recent failure on this thread, or null. Valid until
/// the next call into the library from the same thread.
#[no_mangle]
pub extern "C" fn bs_last_error() -> *const c_char {
    LAST_ERROR.with(|e| e.borrow().as_ref().map_or(ptr::null(), |s| s.as_ptr()))
}

/// Releases a buffer returned by the library. Safe to call on an empty buffer.
///
/// # Safety
/// `buf` must be null or point to a buffer filled by this library.
#[no_mangle]
pub unsafe extern "C" fn bs_buffer_free(buf: *mut BsBuffer) {
    if let Some(b) = buf.as_mut() {
        if !b.data.is_null() {
            drop(Box::from_raw(ptr::slice_from_raw_parts_mut(b.data, b.len)));
        }
        b.data = ptr::null_mut();
        b.len = 0;
    }
}

/// Creates an image from interleaved 8-bit samples (`channels` 1 or 3).
///
/// # Safety
/// `samples` must point to `width * height * channels` readable bytes and
/// `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bs_image_new(
    width: usize,
    height: usize,
    channels: usize,
    samples: *const u8,
    out: *mut *mut BsImage,
) -> BsStatus {
    guard(|| {
        let out = out_ptr(out)?;
        if channels != 1 && channels != 3 {
            return Err(invalid(format!("channels must be 1 or 3, got {channels}")));
        }
        let n = width
            .checked_mul(height)
            .and_then(|p| p.checked_mul(channels))
            .ok_or_else(|| invalid("image too large"))?;
        let data = bytes(samples, n)?;
        let planes = (0..channels)
            .map(|c| {
                Plane::new(
                    width,
                    height,
                    data.iter().skip(c).step_by(channels).map(|&b| b as i32).collect(),
                )
            })
            .collect::<Result<Vec<_>, _>>()?;
        *out = Box::into_raw(Box::new(BsImage(RasterImage::new(planes)?)));
        Ok(())
    })
}

/// Parses a binary PGM (P5) or PPM (P6) file image.
///
/// # Safety
/// `data` must point to `len` readable bytes and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bs_image_load_pnm(data: *const u8, len: usize, out: *mut *mut BsImage) -> BsStatus {
    guard(|| {
        let out = out_ptr(out)?;
        let img = raster::load_pnm(bytes(data, len)?)?;
        *out = Box::into_raw(Box::new(BsImage(img)));
        Ok(())
    })
}

/// Serializes an image as PGM or PPM.
///
/// # Safety
/// `img` must be a live image handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn bs_image_save_pnm(img: *const BsImage, out: *mut BsBuffer) -> BsStatus {
    guard(|| {
        let img = image_ref(img)?;
        *out_ptr(out)? = into_buffer(raster::save_pnm(img));
        Ok(())
    })
}

/// # Safety
/// `img` must be null or a live image handle.
#[no_mangle]
pub unsafe extern "C" fn bs_image_width(img: *const BsImage) -> usize {
    img.as_ref().map_or(0, |i| i.0.width())
}

/// # Safety
/// `img` must be null or a live image handle.
#[no_mangle]
pub unsafe extern "C" fn bs_image_height(img: *const BsImage) -> usize {
    img.as_ref().map_or(0, |i| i.0.height())
}

/// # Safety
/// `img` must be null or a live image handle.
#[no_mangle]
pub unsafe extern "C" fn bs_image_channels(img: *const BsImage) -> usize {
    img.as_ref().map_or(0, |i| i.0.channels())
}

/// Copies interleaved samples into `dst`, which must hold exactly
/// `width * height * channels` bytes.
///
/// # Safety
/// `img` must be a live image handle and `dst` must point to `len` writable bytes.
#[no_mangle]
pub unsafe extern "C" fn bs_image_copy_samples(img: *const BsImage, dst: *mut u8, len: usize) -> BsStatus {
    guard(|| {
        let img = image_ref(img)?;
        let channels = img.channels();
        if len != img.sample_count() {
            return Err(invalid(format!(
                "buffer holds {len} bytes, image has {}",
                img.sample_count()
            )));
        }
        if dst.is_null() {
            return Err(null("dst"));
        }
        let dst = std::slice::from_raw_parts_mut(dst, len);
        for (c, p) in img.planes().iter().enumerate() {
            for (i, &v) in p.samples().iter().enumerate() {
                dst[i * channels + c] = raster::clamp8(v) as u8;
            }
        }
        Ok(())
    })
}

/// # Safety
/// `img` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn bs_image_free(img: *mut BsImage) {
    if !img.is_null() {
        drop(Box::from_raw(img));
    }
}

/// Fills `cfg` with the library defaults: halving schedule from half the
/// largest side down to 1, no spread, lossless deflate codecs, wide residuals.
///
/// # Safety
/// `cfg` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bs_encoder_config_default(cfg: *mut BsEncoderConfig) -> BsStatus {
    guard(|| {
        *out_ptr(cfg)? = BsEncoderConfig {
            schedule: BS_SCHEDULE_HALVING,
            sigma0: 0.0,
            factor: 2.0,
            sigma_min: 1.0,
            spread_radius: 0,
            spread_preset: 0,
            seed: 0,
            layer_codec: BS_CODEC_DEFLATE,
            base_codec: BS_CODEC_DEFLATE,
            quant_bits: codec::DEFAULT_QUANT_BITS,
            downsample: 0,
            residual_mode: BS_RESIDUAL_WIDE16,
            per_channel: 0,
            loss_tolerance: -1.0,
        };
        Ok(())
    })
}

fn codec_choice(id: u32, quant_bits: u8, downsample: u16) -> Result<CodecChoice, Fail> {
    match id {
        BS_CODEC_RAW => Ok(CodecChoice::Raw),
        BS_CODEC_DEFLATE => Ok(CodecChoice::Deflate),
        BS_CODEC_DOWNQ => Ok(CodecChoice::DownQ {
            quant_bits,
            downsample: (downsample != 0).then_some(downsample),
        }),
        other => Err(invalid(format!("unknown codec {other}"))),
    }
}

fn to_config(c: &BsEncoderConfig) -> Result<EncoderConfig, Fail> {
    let schedule = match c.schedule {
        BS_SCHEDULE_HALVING => ScheduleSpec::Halving {
            sigma0: (c.sigma0 > 0.0).then_some(c.sigma0),
            factor: c.factor,
            sigma_min: c.sigma_min,
        },
        BS_SCHEDULE_PAPER => ScheduleSpec::paper(),
        other => return Err(invalid(format!("unknown schedule {other}"))),
    };
    let spread = if c.spread_preset != 0 {
        SpreadChoice::PaperPreset
    } else if c.spread_radius > 0 {
        SpreadChoice::Uniform(c.spread_radius)
    } else {
        SpreadChoice::Disabled
    };
    Ok(EncoderConfig {
        schedule,
        spread,
        seed: c.seed,
        layer_codec: codec_choice(c.layer_codec, c.quant_bits, c.downsample)?,
        base_codec: codec_choice(c.base_codec, c.quant_bits, 0)?,
        residual_mode: match c.residual_mode {
            BS_RESIDUAL_WIDE16 => ResidualMode::Wide16,
            BS_RESIDUAL_CLAMP8 => ResidualMode::Clamp8,
            other => return Err(invalid(format!("unknown residual mode {other}"))),
        },
        channel_mode: if c.per_channel != 0 {
            ChannelMode::PerChannel
        } else {
            ChannelMode::Joint
        },
        loss_tolerance: (c.loss_tolerance >= 0.0).then_some(c.loss_tolerance),
    })
}

/// Decomposes an image into a blur stack. A null `cfg` uses the defaults.
///
/// # Safety
/// `img` must be a live image handle, `cfg` null or readable, `out` writable.
#[no_mangle]
pub unsafe extern "C" fn bs_encode(
    img: *const BsImage,
    cfg: *const BsEncoderConfig,
    out: *mut *mut BsStack,
) -> BsStatus {
    guard(|| {
        let img = image_ref(img)?;
        let out = out_ptr(out)?;
        let cfg = match cfg.as_ref() {
            Some(c) => to_config(c)?,
            None => EncoderConfig::default(),
        };
        *out = Box::into_raw(Box::new(BsStack(codec::encode(img, &cfg)?)));
        Ok(())
    })
}

/// Full reconstruction.
///
/// # Safety
/// `stack` must be a live stack handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn bs_decode(stack: *const BsStack, out: *mut *mut BsImage) -> BsStatus {
    guard(|| {
        let stack = stack_ref(stack)?;
        let out = out_ptr(out)?;
        *out = Box::into_raw(Box::new(BsImage(codec::decode(stack)?)));
        Ok(())
    })
}

/// Reconstruction from `k` layers in `BS_ORDER_*` order.
///
/// # Safety
/// `stack` must be a live stack handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn bs_partial_reconstruct(
    stack: *const BsStack,
    k: usize,
    order: u32,
    out: *mut *mut BsImage,
) -> BsStatus {
    guard(|| {
        let stack = stack_ref(stack)?;
        let out = out_ptr(out)?;
        let order = match order {
            BS_ORDER_BOTTOM_UP => Order::BottomUp,
            BS_ORDER_TOP_DOWN => Order::TopDown,
            other => return Err(invalid(format!("unknown order {other}"))),
        };
        *out = Box::into_raw(Box::new(BsImage(codec::partial_reconstruct(stack, k, order)?)));
        Ok(())
    })
}

/// Number of blur layers (the base excluded); 0 for a null handle.
///
/// # Safety
/// `stack` must be null or a live stack handle.
#[no_mangle]
pub unsafe extern "C" fn bs_stack_layer_count(stack: *const BsStack) -> usize {
    stack.as_ref().map_or(0, |s| s.0.layer_count())
}

/// Sigma of layer `index` (1-based).
///
/// # Safety
/// `stack` must be a live stack handle and `sigma` writable.
#[no_mangle]
pub unsafe extern "C" fn bs_stack_sigma(stack: *const BsStack, index: usize, sigma: *mut f32) -> BsStatus {
    guard(|| {
        let stack = stack_ref(stack)?;
        let sigma = out_ptr(sigma)?;
        let layer = index
            .checked_sub(1)
            .and_then(|i| stack.layers.get(i))
            .ok_or_else(|| invalid(format!("layer {index} out of range 1..={}", stack.layer_count())))?;
        *sigma = layer.sigma;
        Ok(())
    })
}

/// Writes the `GBS1` container bytes.
///
/// # Safety
/// `stack` must be a live stack handle and `out` writable.
#[no_mangle]
pub unsafe extern "C" fn bs_stack_serialize(stack: *const BsStack, out: *mut BsBuffer) -> BsStatus {
    guard(|| {
        let stack = stack_ref(stack)?;
        *out_ptr(out)? = into_buffer(codec::serialize(stack));
        Ok(())
    })
}

/// Parses and validates a `GBS1` container.
///
/// # Safety
/// `data` must point to `len` readable bytes and `out` must be writable.
#[no_mangle]
pub unsafe extern "C" fn bs_stack_deserialize(data: *const u8, len: usize, out: *mut *mut BsStack) -> BsStatus {
    guard(|| {
        let out = out_ptr(out)?;
        let stack = codec::deserialize(bytes(data, len)?)?;
        *out = Box::into_raw(Box::new(BsStack(stack)));
        Ok(())
    })
}

/// # Safety
/// `stack` must be null or a handle not yet freed.
#[no_mangle]
pub unsafe extern "C" fn bs_stack_free(stack: *mut BsStack) {
    if !stack.is_null() {
        drop(Box::from_raw(stack));
    }
}

#ifndef BLURSTACK_H
#define BLURSTACK_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

#define BS_SCHEDULE_HALVING 0

#define BS_SCHEDULE_PAPER 1

#define BS_CODEC_RAW 0

#define BS_CODEC_DEFLATE 1

#define BS_CODEC_DOWNQ 2

#define BS_RESIDUAL_WIDE16 0

#define BS_RESIDUAL_CLAMP8 1

#define BS_ORDER_BOTTOM_UP 0

#define BS_ORDER_TOP_DOWN 1

// Result of every fallible call.
typedef enum BsStatus {
  BS_STATUS_OK = 0,
  BS_STATUS_NULL_POINTER = 1,
  BS_STATUS_INVALID_ARGUMENT = 2,
  BS_STATUS_SHAPE = 3,
  BS_STATUS_PARSE = 4,
  BS_STATUS_FORMAT = 5,
  BS_STATUS_CHECKSUM = 6,
  BS_STATUS_DECODE = 7,
  BS_STATUS_IO = 8,
  BS_STATUS_PANIC = 9,
} BsStatus;

// Opaque image handle.
typedef struct BsImage BsImage;

// Opaque blur stack handle.
typedef struct BsStack BsStack;

// Library-allocated bytes.
typedef struct BsBuffer {
  uint8_t *data;
  size_t len;
} BsBuffer;

// Encoder settings. Start from [`bs_encoder_config_default`].
typedef struct BsEncoderConfig {
  // `BS_SCHEDULE_*`.
  uint32_t schedule;
  // First sigma of a halving schedule; `<= 0` means half the largest side.
  double sigma0;
  double factor;
  double sigma_min;
  // Uniform spread radius; ignored when `spread_preset` is set.
  uint16_t spread_radius;
  // Non-zero selects the reference spread radii.
  uint8_t spread_preset;
  uint64_t seed;
  // `BS_CODEC_*`.
  uint32_t layer_codec;
  // `BS_CODEC_*`.
  uint32_t base_codec;
  uint8_t quant_bits;
  // Downq factor for layers; 0 picks it from each layer's sigma.
  uint16_t downsample;
  // `BS_RESIDUAL_*`.
  uint32_t residual_mode;
  // Non-zero runs the decomposition per channel.
  uint8_t per_channel;
  // Maximum absolute error; negative disables tunable loss.
  double loss_tolerance;
} BsEncoderConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the most recent failure on this thread, or null. Valid until
// the next call into the library from the same thread.
const char *bs_last_error(void);

// Releases a buffer returned by the library. Safe to call on an empty buffer.
//
// # Safety
// `buf` must be null or point to a buffer filled by this library.
void bs_buffer_free(struct BsBuffer *buf);

// Creates an image from interleaved 8-bit samples (`channels` 1 or 3).
//
// # Safety
// `samples` must point to `width * height * channels` readable bytes and
// `out` must be writable.
enum BsStatus bs_image_new(size_t width,
                           size_t height,
                           size_t channels,
                           const uint8_t *samples,
                           struct BsImage **out);

// Parses a binary PGM (P5) or PPM (P6) file image.
//
// # Safety
// `data` must point to `len` readable bytes and `out` must be writable.
enum BsStatus bs_image_load_pnm(const uint8_t *data, size_t len, struct BsImage **out);

// Serializes an image as PGM or PPM.
//
// # Safety
// `img` must be a live image handle and `out` writable.
enum BsStatus bs_image_save_pnm(const struct BsImage *img, struct BsBuffer *out);

// # Safety
// `img` must be null or a live image handle.
size_t bs_image_width(const struct BsImage *img);

// # Safety
// `img` must be null or a live image handle.
size_t bs_image_height(const struct BsImage *img);

// # Safety
// `img` must be null or a live image handle.
size_t bs_image_channels(const struct BsImage *img);

// Copies interleaved samples into `dst`, which must hold exactly
// `width * height * channels` bytes.
//
// # Safety
// `img` must be a live image handle and `dst` must point to `len` writable bytes.
enum BsStatus bs_image_copy_samples(const struct BsImage *img, uint8_t *dst, size_t len);

// # Safety
// `img` must be null or a handle not yet freed.
void bs_image_free(struct BsImage *img);

// Fills `cfg` with the library defaults: halving schedule from half the
// largest side down to 1, no spread, lossless deflate codecs, wide residuals.
//
// # Safety
// `cfg` must be writable.
enum BsStatus bs_encoder_config_default(struct BsEncoderConfig *cfg);

// Decomposes an image into a blur stack. A null `cfg` uses the defaults.
//
// # Safety
// `img` must be a live image handle, `cfg` null or readable, `out` writable.
enum BsStatus bs_encode(const struct BsImage *img,
                        const struct BsEncoderConfig *cfg,
                        struct BsStack **out);

// Full reconstruction.
//
// # Safety
// `stack` must be a live stack handle and `out` writable.
enum BsStatus bs_decode(const struct BsStack *stack, struct BsImage **out);

// Reconstruction from `k` layers in `BS_ORDER_*` order.
//
// # Safety
// `stack` must be a live stack handle and `out` writable.
enum BsStatus bs_partial_reconstruct(const struct BsStack *stack,
                                     size_t k,
                                     uint32_t order,
                                     struct BsImage **out);

// Number of blur layers (the base excluded); 0 for a null handle.
//
// # Safety
// `stack` must be null or a live stack handle.
size_t bs_stack_layer_count(const struct BsStack *stack);

// Sigma of layer `index` (1-based).
//
// # Safety
// `stack` must be a live stack handle and `sigma` writable.
enum BsStatus bs_stack_sigma(const struct BsStack *stack, size_t index, float *sigma);

// Writes the `GBS1` container bytes.
//
// # Safety
// `stack` must be a live stack handle and `out` writable.
enum BsStatus bs_stack_serialize(const struct BsStack *stack, struct BsBuffer *out);

// Parses and validates a `GBS1` container.
//
// # Safety
// `data` must point to `len` readable bytes and `out` must be writable.
enum BsStatus bs_stack_deserialize(const uint8_t *data, size_t len, struct BsStack **out);

// # Safety
// `stack` must be null or a handle not yet freed.
void bs_stack_free(struct BsStack *stack);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BLURSTACK_H */

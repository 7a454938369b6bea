//! Multi-scale Gaussian blur decomposition codec.
//!
//! An image (or a 1-D signal) is split into a stack of progressively finer
//! Gaussian blurs plus a near mid-grey base. Each blur is stored through a
//! small lossy or lossless codec and subtracted from the working image in its
//! *decoded* form, so merging everything back reproduces the input exactly
//! whenever the base is stored losslessly. The stack also supports partial
//! (progressive) reconstruction, enlargement, noise analysis and
//! coarse-to-fine similarity search.

pub mod analysis;
pub mod cli;
pub mod codec;
pub mod error;
pub mod raster;
pub mod scale_space;
pub mod search;
pub mod signal;

pub use codec::{decode, encode, BlurStack, EncoderConfig};
pub use error::{Error, Result};
pub use raster::{Plane, RasterImage};

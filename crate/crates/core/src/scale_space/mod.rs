//! Gaussian blurring, blur schedules, spread noise and sparse-sample diffusion.
//!
//! All blurs use a kernel truncated at `ceil(3 sigma)` and replicate edge
//! pixels. Sigmas above [`CASCADE_SIGMA`] are approximated by blurring a
//! box-downsampled copy at half the sigma and upsampling bilinearly.

mod blur;
mod diffuse;
mod schedule;
mod spread;

pub use blur::{blur1d, blur1d_f64, blur_f64, gaussian_blur, gaussian_kernel, CASCADE_SIGMA};
pub use diffuse::diffuse_sparse;
pub use schedule::{build_schedule, paper_spread, schedule_from, BlurSchedule, PAPER_SIGMAS, PAPER_SPREAD};
pub use spread::{layer_seed, spread, spread_planes, SplitMix64};

/// Per-layer spread radii and the generator seed.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SpreadSpec {
    pub radii: Vec<u16>,
    pub seed: u64,
}

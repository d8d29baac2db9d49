//! Real volumes, spatio-temporal spectra and 3D convolution.
//!
//! Every volume is stored frame-major: index `(t, h, w)` maps to
//! `(t * height + h) * width + w`. Multi-channel data adds the channel as the
//! outermost axis. Spatial axes model the lens (2D transform) and the temporal
//! axis models the photon-echo transform.

mod conv;
mod fft3;
mod volume;

pub use conv::{direct_conv3d, fft_conv3d, KernelSpectrum, SpectralConv, VideoSpectrum};
pub use fft3::{fast_len, forward_st_fft, inverse_st_fft, inverse_st_fft_at, Spectrum3D};
pub use volume::{FeatureVolume, Kernel3, KernelShape, Shape3, VideoVolume, Volume3};

/// Imaginary residual tolerated by the inverse transform, relative to the
/// largest modulus on the grid.
pub const IMAG_RESIDUAL_TOL: f64 = 1e-9;

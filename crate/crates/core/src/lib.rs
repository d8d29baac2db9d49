//! Simulation of an opto-atomic spatio-temporal holographic correlator used as
//! the 3D convolution layer of a hybrid video classifier.
//!
//! The crate is organised bottom-up:
//!
//! - [`spectral`]: real volumes, 3D spectra, exact and FFT convolution.
//! - [`optics`]: recording pulse, pseudo-negative kernels, gratings, echo
//!   readout and the parallel channel layout on the modulator.
//! - [`cnn`]: the single conv layer + fully-connected classifier, training,
//!   evaluation and the kernel bank file format.
//! - [`data`]: PGM frames, manifests, subject split and the synthetic
//!   motion-direction dataset.
//! - [`timing`]: loading time, throughput and database segmentation.

pub mod cnn;
pub mod data;
mod error;
pub mod optics;
pub mod spectral;
pub mod timing;

pub use error::{Error, Result};

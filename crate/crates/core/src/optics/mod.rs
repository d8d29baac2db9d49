//! Optical model of the correlator.
//!
//! A short recording pulse and the (flipped, pseudo-negative) kernels are
//! written into the atomic medium as a spectral grating
//! `conj(P~) * K~ * decay`. Diffracting a video spectrum off the grating and
//! transforming back (lens in space, photon echo in time) yields the
//! convolution. The echo is an ideal spectral product; the only non-ideal
//! effects modelled are pulse flatness, modulator quantization and a scalar
//! coherence decay.

mod encoding;
mod grating;
mod layer;
mod layout;
mod params;
mod pulse;

pub use encoding::{decompose_kernel, quantize_slm, SignedKernelPair};
pub use grating::{
    diffract_and_readout, echo_time, record_grating, EchoTiming, GratingField,
    DECAY_WARNING_LIFETIMES,
};
pub use layer::{optical_conv_layer, OpticalConvLayer, OpticalOutput};
pub use layout::{plan_slm_layout, Polarity, SlmFrameLayout, Tile};
pub use params::{check_bandwidth, BandwidthCheck, OpticalParams, OpticsWarning, PulseMode};
pub use pulse::{make_recording_pulse, RecordingPulse};

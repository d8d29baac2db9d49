use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::{OpticalParams, OpticsWarning};
use crate::spectral::{
    forward_st_fft, inverse_st_fft_at, KernelShape, Shape3, Spectrum3D, VideoVolume, Volume3,
};
use crate::{Error, Result};

/// Storage intervals longer than this many lifetimes raise a warning.
pub const DECAY_WARNING_LIFETIMES: f64 = 5.0;

/// Arrival times at the medium: recording pulse, second signal (kernels, or
/// the query in event recognition) and third signal (video, or reference).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EchoTiming {
    pub t_pulse: f64,
    pub t_second: f64,
    pub t_third: f64,
}

impl EchoTiming {
    pub const fn new(t_pulse: f64, t_second: f64, t_third: f64) -> Self {
        Self {
            t_pulse,
            t_second,
            t_third,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.t_pulse < self.t_second && self.t_second < self.t_third {
            Ok(())
        } else {
            Err(Error::Timing(format!(
                "need t_pulse < t_second < t_third, got {} / {} / {}",
                self.t_pulse, self.t_second, self.t_third
            )))
        }
    }
}

/// Echo emission time `t_second + t_third - t_pulse`.
pub fn echo_time(timing: &EchoTiming) -> Result<f64> {
    timing.validate()?;
    Ok(timing.t_second + timing.t_third - timing.t_pulse)
}

/// Spectral grating stored in the medium, one spectrum per input channel.
#[derive(Debug, Clone)]
pub struct GratingField {
    pub channels: Vec<Spectrum3D>,
    pub decay: f64,
    pub warning: Option<OpticsWarning>,
}

impl GratingField {
    pub fn grid(&self) -> Shape3 {
        self.channels[0].shape()
    }
}

/// `G = conj(P~) * K~ * exp(-(t_third - t_second) / T_coh)` for each channel.
pub fn record_grating(
    pulse: &Spectrum3D,
    kernel_spectra: &[Spectrum3D],
    timing: &EchoTiming,
    params: &OpticalParams,
) -> Result<GratingField> {
    timing.validate()?;
    if kernel_spectra.is_empty() {
        return Err(Error::Dimension("grating needs at least one channel".into()));
    }
    let interval = timing.t_third - timing.t_second;
    let lifetime = params.coherence_lifetime;
    let decay = (-interval / lifetime).exp();
    let reference = pulse.conj();
    let channels = kernel_spectra
        .iter()
        .map(|k| reference.hadamard(k).map(|g| g.scaled(decay)))
        .collect::<Result<Vec<_>>>()?;
    let warning = (interval > DECAY_WARNING_LIFETIMES * lifetime)
        .then_some(OpticsWarning::GratingDecayed { interval, lifetime });
    Ok(GratingField {
        channels,
        decay,
        warning,
    })
}

/// Reads out the echo for already transformed video channels.
pub(crate) fn readout_spectra(
    video: &[Spectrum3D],
    video_shape: Shape3,
    grating: &GratingField,
    kernel: KernelShape,
) -> Result<Volume3> {
    if video.len() != grating.channels.len() {
        return Err(Error::Dimension(format!(
            "video has {} channels, grating {}",
            video.len(),
            grating.channels.len()
        )));
    }
    let valid = video_shape.valid_output(kernel.spatial())?;
    let grid = grating.grid();
    let mut echo = Spectrum3D::constant(grid, Complex64::default());
    for (v, g) in video.iter().zip(&grating.channels) {
        if v.shape() != grid {
            return Err(Error::Dimension(format!(
                "video spectrum grid {:?} differs from grating grid {grid:?}",
                v.shape()
            )));
        }
        for ((e, a), b) in echo
            .as_mut_slice()
            .iter_mut()
            .zip(v.as_slice())
            .zip(g.as_slice())
        {
            *e += a * b;
        }
    }
    let offset = Shape3::new(kernel.k_h - 1, kernel.k_w - 1, kernel.k_t - 1);
    inverse_st_fft_at(&echo, offset, valid)
}

/// Diffracts `video` off `grating` and returns the valid region of the echo.
pub fn diffract_and_readout(
    video: &VideoVolume,
    grating: &GratingField,
    kernel: KernelShape,
) -> Result<Volume3> {
    let grid = grating.grid();
    let lin = video.shape().linear_grid(kernel.spatial());
    if !lin.fits_in(grid) {
        return Err(Error::Dimension(format!(
            "grating grid {grid:?} smaller than video + kernel - 1 = {lin:?}"
        )));
    }
    let spectra = (0..video.channels())
        .map(|c| forward_st_fft(&video.channel_volume(c), grid))
        .collect::<Result<Vec<_>>>()?;
    readout_spectra(&spectra, video.shape(), grating, kernel)
}

use std::f64::consts::PI;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::EchoTiming;
use crate::{Error, Result};

/// Broadening of roughly 100 MHz, i.e. `2 pi * 1e8` rad/s.
pub const DEFAULT_IHB_BANDWIDTH: f64 = 2.0 * PI * 1.0e8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum PulseMode {
    /// Perfect plane wave with a flat temporal spectrum.
    Ideal,
    /// Filled circle on the modulator lasting one temporal sample.
    Physical,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OpticalParams {
    pub mode: PulseMode,
    /// Radius of the recording circle in modulator pixels.
    pub pulse_radius: f64,
    /// Inhomogeneous broadening, rad/s.
    pub ihb_bandwidth: f64,
    /// Grating coherence lifetime, seconds. `f64::INFINITY` disables decay.
    pub coherence_lifetime: f64,
    /// Modulator quantization levels; `None` leaves kernels unquantized.
    pub slm_levels: Option<u32>,
    pub flatness_min: f64,
    pub guard_px: usize,
    pub timing: EchoTiming,
}

impl Default for OpticalParams {
    /// Ideal pulse, 8-bit kernel quantization, no decay.
    fn default() -> Self {
        Self {
            slm_levels: Some(256),
            ..Self::ideal()
        }
    }
}

impl OpticalParams {
    /// Ideal pulse, no quantization and no decay: the optical layer is then
    /// numerically the digital convolution.
    pub fn ideal() -> Self {
        Self {
            mode: PulseMode::Ideal,
            pulse_radius: 1.0,
            ihb_bandwidth: DEFAULT_IHB_BANDWIDTH,
            coherence_lifetime: f64::INFINITY,
            slm_levels: None,
            flatness_min: 0.9,
            guard_px: 4,
            timing: EchoTiming::new(0.0, 1.0e-6, 2.0e-6),
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.pulse_radius >= 1.0) || !self.pulse_radius.is_finite() {
            return Err(Error::Parameter(format!(
                "pulse_radius must be >= 1, got {}",
                self.pulse_radius
            )));
        }
        if !(self.ihb_bandwidth > 0.0) || !self.ihb_bandwidth.is_finite() {
            return Err(Error::Parameter(format!(
                "ihb_bandwidth must be > 0, got {}",
                self.ihb_bandwidth
            )));
        }
        if !(self.coherence_lifetime > 0.0) {
            return Err(Error::Parameter(format!(
                "coherence_lifetime must be > 0, got {}",
                self.coherence_lifetime
            )));
        }
        if let Some(l) = self.slm_levels {
            if l < 2 {
                return Err(Error::Parameter(format!("slm_levels must be >= 2, got {l}")));
            }
        }
        if !(self.flatness_min > 0.0 && self.flatness_min <= 1.0) {
            return Err(Error::Parameter(format!(
                "flatness_min must lie in (0, 1], got {}",
                self.flatness_min
            )));
        }
        self.timing.validate()
    }

    /// Scalar grating decay over the storage-to-readout interval.
    pub fn decay_factor(&self) -> f64 {
        (-(self.timing.t_third - self.timing.t_second) / self.coherence_lifetime).exp()
    }
}

/// Non-fatal conditions reported alongside optical results.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum OpticsWarning {
    PulseFlatness { ratio: f64, min: f64 },
    GratingDecayed { interval: f64, lifetime: f64 },
    Bandwidth { required: f64, available: f64 },
}

impl fmt::Display for OpticsWarning {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::PulseFlatness { ratio, min } => write!(
                f,
                "recording pulse spectrum flatness {ratio:.4} below required {min}"
            ),
            Self::GratingDecayed { interval, lifetime } => write!(
                f,
                "storage interval {interval:e} s exceeds 5 coherence lifetimes ({lifetime:e} s)"
            ),
            Self::Bandwidth {
                required,
                available,
            } => write!(
                f,
                "temporal bandwidth {required:e} rad/s exceeds broadening {available:e} rad/s"
            ),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum BandwidthCheck {
    Pass,
    Warning(OpticsWarning),
}

/// Passes when the temporal sampling bandwidth `2 pi / frame_interval` fits
/// inside the broadening (with a 1e-12 relative slack for rounding).
pub fn check_bandwidth(frame_interval: f64, params: &OpticalParams) -> Result<BandwidthCheck> {
    if !(frame_interval > 0.0) {
        return Err(Error::Parameter(format!(
            "frame_interval must be > 0, got {frame_interval}"
        )));
    }
    let required = 2.0 * PI / frame_interval;
    let available = params.ihb_bandwidth;
    if required <= available * (1.0 + 1e-12) {
        Ok(BandwidthCheck::Pass)
    } else {
        Ok(BandwidthCheck::Warning(OpticsWarning::Bandwidth {
            required,
            available,
        }))
    }
}

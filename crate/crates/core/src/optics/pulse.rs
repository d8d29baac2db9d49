use rustfft::num_complex::Complex64;

use super::{OpticalParams, OpticsWarning, PulseMode};
use crate::spectral::{forward_st_fft, Shape3, Spectrum3D, Volume3};
use crate::{Error, Result};

/// Recording pulse as shown on the modulator and as seen by the medium.
#[derive(Debug, Clone)]
pub struct RecordingPulse {
    /// Modulator field, optical axis at the frame centre, pulse in frame 0.
    pub field: Volume3,
    pub spectrum: Spectrum3D,
    /// `min |P~| / max |P~|` over the whole grid.
    pub flatness: f64,
    pub warning: Option<OpticsWarning>,
}

/// Builds the recording pulse on `grid`.
///
/// The physical pulse covers the pixels whose centres lie strictly inside
/// `pulse_radius` of the optical axis, normalised to unit total intensity so
/// its DC component is 1. The spectrum is taken about the optical axis, so a
/// symmetric circle has a real spectrum and introduces no output shift.
pub fn make_recording_pulse(params: &OpticalParams, grid: Shape3) -> Result<RecordingPulse> {
    if grid.is_empty() {
        return Err(Error::Dimension(format!("empty pulse grid {grid:?}")));
    }
    let (ch, cw) = (grid.h / 2, grid.w / 2);
    match params.mode {
        PulseMode::Ideal => {
            let mut field = Volume3::zeros(grid);
            field.set(ch, cw, 0, 1.0);
            Ok(RecordingPulse {
                field,
                spectrum: Spectrum3D::constant(grid, Complex64::new(1.0, 0.0)),
                flatness: 1.0,
                warning: None,
            })
        }
        PulseMode::Physical => {
            let r = params.pulse_radius;
            if r > grid.h.max(grid.w) as f64 {
                return Err(Error::Dimension(format!(
                    "pulse radius {r} does not fit grid {grid:?}"
                )));
            }
            let inside = |h: usize, w: usize| {
                let dh = h as f64 - ch as f64;
                let dw = w as f64 - cw as f64;
                dh * dh + dw * dw < r * r
            };
            let count = (0..grid.h)
                .flat_map(|h| (0..grid.w).map(move |w| (h, w)))
                .filter(|&(h, w)| inside(h, w))
                .count();
            let amp = 1.0 / count as f64;
            let field = Volume3::from_fn(grid, |h, w, t| {
                if t == 0 && inside(h, w) {
                    amp
                } else {
                    0.0
                }
            });
            // move the optical axis to index 0 before transforming
            let centred = Volume3::from_fn(grid, |h, w, t| {
                field.get((h + ch) % grid.h, (w + cw) % grid.w, t)
            });
            let spectrum = forward_st_fft(&centred, grid)?;
            let (lo, hi) = spectrum
                .as_slice()
                .iter()
                .map(|z| z.norm())
                .fold((f64::INFINITY, 0.0f64), |(lo, hi), m| (lo.min(m), hi.max(m)));
            let flatness = if hi > 0.0 { lo / hi } else { 0.0 };
            let warning = (flatness < params.flatness_min).then_some(OpticsWarning::PulseFlatness {
                ratio: flatness,
                min: params.flatness_min,
            });
            Ok(RecordingPulse {
                field,
                spectrum,
                flatness,
                warning,
            })
        }
    }
}

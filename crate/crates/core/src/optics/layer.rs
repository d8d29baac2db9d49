use rayon::prelude::*;

use super::grating::readout_spectra;
use super::{
    decompose_kernel, make_recording_pulse, quantize_slm, record_grating, GratingField,
    OpticalParams, OpticsWarning, SlmFrameLayout,
};
use crate::cnn::KernelSet;
use crate::spectral::{
    forward_st_fft, FeatureVolume, Kernel3, KernelShape, Shape3, Spectrum3D, VideoVolume, Volume3,
};
use crate::{Error, Result};

/// Result of one optical convolution layer pass.
#[derive(Debug, Clone)]
pub struct OpticalOutput {
    pub features: FeatureVolume,
    pub warnings: Vec<OpticsWarning>,
}

/// Kernel bank programmed into the medium as positive/negative gratings.
/// Gratings are immutable once recorded and shared by every readout.
pub struct OpticalConvLayer {
    video_shape: Shape3,
    kernel_shape: KernelShape,
    grid: Shape3,
    gratings: Vec<(GratingField, GratingField)>,
    biases: Vec<f64>,
    warnings: Vec<OpticsWarning>,
}

fn ensure_nonnegative(what: &str, values: &[f64]) -> Result<()> {
    match values.iter().find(|v| !(**v >= 0.0)) {
        Some(v) => Err(Error::Encoding(format!(
            "{what} carries signed value {v} at encode time"
        ))),
        None => Ok(()),
    }
}

fn check_layout(layout: &SlmFrameLayout, kernels: &KernelSet, valid: Shape3) -> Result<()> {
    let ks = kernels.shape();
    if layout.tiles.len() != 2 * kernels.count() {
        return Err(Error::Layout(format!(
            "layout has {} tiles, {} kernels need {}",
            layout.tiles.len(),
            kernels.count(),
            2 * kernels.count()
        )));
    }
    if layout.tiles.iter().any(|t| t.extents != (ks.k_h, ks.k_w)) {
        return Err(Error::Layout(format!(
            "layout tiles do not match kernel extents {}x{}",
            ks.k_h, ks.k_w
        )));
    }
    if layout.map_extents != (valid.h, valid.w) {
        return Err(Error::Layout(format!(
            "layout map extents {:?} differ from output maps {}x{}",
            layout.map_extents, valid.h, valid.w
        )));
    }
    layout.validate()
}

impl OpticalConvLayer {
    /// Flips, splits, optionally quantizes and records every kernel.
    pub fn program(
        kernels: &KernelSet,
        params: &OpticalParams,
        layout: &SlmFrameLayout,
        video_shape: Shape3,
    ) -> Result<Self> {
        params.validate()?;
        let kernel_shape = kernels.shape();
        let valid = video_shape.valid_output(kernel_shape.spatial())?;
        check_layout(layout, kernels, valid)?;
        let grid = video_shape.linear_grid(kernel_shape.spatial());
        let pulse = make_recording_pulse(params, grid)?;
        ensure_nonnegative("recording pulse", pulse.field.as_slice())?;

        let mut warnings: Vec<OpticsWarning> = pulse.warning.iter().cloned().collect();
        let encode = |half: &Kernel3| -> Result<GratingField> {
            let half = match params.slm_levels {
                Some(levels) => Kernel3::new(half.shape(), quantize_slm(half.as_slice(), levels)?)?,
                None => half.clone(),
            };
            ensure_nonnegative("kernel half", half.as_slice())?;
            let spectra = (0..kernel_shape.c_in)
                .map(|c| forward_st_fft(&half.channel_volume(c), grid))
                .collect::<Result<Vec<_>>>()?;
            record_grating(&pulse.spectrum, &spectra, &params.timing, params)
        };
        let gratings = (0..kernels.count())
            .into_par_iter()
            .map(|k| {
                let pair = decompose_kernel(&kernels.kernel(k).flipped());
                Ok((encode(&pair.positive)?, encode(&pair.negative)?))
            })
            .collect::<Result<Vec<_>>>()?;
        if let Some(w) = gratings.first().and_then(|g| g.0.warning.clone()) {
            warnings.push(w);
        }
        Ok(Self {
            video_shape,
            kernel_shape,
            grid,
            gratings,
            biases: kernels.biases().to_vec(),
            warnings,
        })
    }

    pub fn warnings(&self) -> &[OpticsWarning] {
        &self.warnings
    }

    pub fn grid(&self) -> Shape3 {
        self.grid
    }

    fn video_spectra(&self, video: &VideoVolume) -> Result<Vec<Spectrum3D>> {
        if video.shape() != self.video_shape || video.channels() != self.kernel_shape.c_in {
            return Err(Error::Dimension(format!(
                "video {:?}x{} does not match programmed {:?}x{}",
                video.shape(),
                video.channels(),
                self.video_shape,
                self.kernel_shape.c_in
            )));
        }
        ensure_nonnegative("video", video.as_slice())?;
        (0..video.channels())
            .map(|c| forward_st_fft(&video.channel_volume(c), self.grid))
            .collect()
    }

    /// Per-kernel positive-channel and negative-channel readouts.
    pub fn channel_outputs(&self, video: &VideoVolume) -> Result<Vec<(Volume3, Volume3)>> {
        let spectra = self.video_spectra(video)?;
        self.gratings
            .par_iter()
            .map(|(pos, neg)| {
                Ok((
                    readout_spectra(&spectra, self.video_shape, pos, self.kernel_shape)?,
                    readout_spectra(&spectra, self.video_shape, neg, self.kernel_shape)?,
                ))
            })
            .collect()
    }

    /// Positive minus negative channel, before bias and activation.
    pub fn responses(&self, video: &VideoVolume) -> Result<Vec<Volume3>> {
        Ok(self
            .channel_outputs(video)?
            .into_iter()
            .map(|(mut pos, neg)| {
                for (p, n) in pos.as_mut_slice().iter_mut().zip(neg.as_slice()) {
                    *p -= n;
                }
                pos
            })
            .collect())
    }

    /// `ReLU(response + bias)` for every kernel.
    pub fn forward(&self, video: &VideoVolume) -> Result<FeatureVolume> {
        let maps = self
            .responses(video)?
            .into_iter()
            .zip(&self.biases)
            .map(|(mut m, &b)| {
                m.as_mut_slice()
                    .iter_mut()
                    .for_each(|v| *v = (*v + b).max(0.0));
                m
            })
            .collect();
        FeatureVolume::from_maps(maps)
    }
}

/// One-shot optical convolution layer: program the kernels, then diffract
/// `video`.
pub fn optical_conv_layer(
    video: &VideoVolume,
    kernels: &KernelSet,
    params: &OpticalParams,
    layout: &SlmFrameLayout,
) -> Result<OpticalOutput> {
    let layer = OpticalConvLayer::program(kernels, params, layout, video.shape())?;
    let features = layer.forward(video)?;
    Ok(OpticalOutput {
        features,
        warnings: layer.warnings,
    })
}

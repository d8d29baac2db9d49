use rand::Rng;
use rayon::prelude::*;

use crate::optics::{OpticalConvLayer, OpticalParams, SlmFrameLayout};
use crate::spectral::{
    FeatureVolume, Kernel3, KernelShape, KernelSpectrum, Shape3, SpectralConv, VideoVolume,
    Volume3,
};
use crate::{Error, Result};

/// Number of learnable weights, `c_out * c_in * k_h * k_w * k_t`
/// (biases excluded).
pub fn param_count(shape: KernelShape, c_out: usize) -> usize {
    c_out * shape.c_in * shape.k_h * shape.k_w * shape.k_t
}

/// `K` signed kernels sharing one shape, plus one bias per kernel.
/// Weights are stored `(k, c, t, h, w)`.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelSet {
    shape: KernelShape,
    weights: Vec<f64>,
    biases: Vec<f64>,
}

impl KernelSet {
    pub fn new(shape: KernelShape, weights: Vec<f64>, biases: Vec<f64>) -> Result<Self> {
        if biases.is_empty() {
            return Err(Error::Dimension("kernel set needs at least one kernel".into()));
        }
        if shape.is_empty() {
            return Err(Error::Dimension(format!("empty kernel shape {shape:?}")));
        }
        if weights.len() != biases.len() * shape.len() {
            return Err(Error::Dimension(format!(
                "{} kernels of {shape:?} need {} weights, got {}",
                biases.len(),
                biases.len() * shape.len(),
                weights.len()
            )));
        }
        if weights.iter().chain(&biases).any(|v| !v.is_finite()) {
            return Err(Error::Parameter("kernel weights must be finite".into()));
        }
        Ok(Self {
            shape,
            weights,
            biases,
        })
    }

    /// Uniform `+-sqrt(6 / fan_in)` weights, zero biases.
    pub fn init(count: usize, shape: KernelShape, rng: &mut impl Rng) -> Result<Self> {
        let bound = (6.0 / shape.len() as f64).sqrt();
        let weights = (0..count * shape.len())
            .map(|_| rng.gen_range(-bound..bound))
            .collect();
        Self::new(shape, weights, vec![0.0; count])
    }

    pub fn count(&self) -> usize {
        self.biases.len()
    }

    pub fn shape(&self) -> KernelShape {
        self.shape
    }

    pub fn kernel(&self, k: usize) -> Kernel3 {
        let n = self.shape.len();
        Kernel3::new(self.shape, self.weights[k * n..(k + 1) * n].to_vec())
            .expect("slice length matches shape")
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn biases(&self) -> &[f64] {
        &self.biases
    }

    pub(crate) fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.weights
    }

    pub(crate) fn biases_mut(&mut self) -> &mut [f64] {
        &mut self.biases
    }

    /// Flattened feature length for a given video shape.
    pub fn feature_len(&self, video: Shape3) -> Result<usize> {
        Ok(self.count() * video.valid_output(self.shape.spatial())?.len())
    }
}

/// Fully-connected output layer, weights `num_classes x feature_len`
/// row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ClassifierHead {
    num_classes: usize,
    feature_len: usize,
    weights: Vec<f64>,
    bias: Vec<f64>,
}

impl ClassifierHead {
    pub fn new(feature_len: usize, weights: Vec<f64>, bias: Vec<f64>) -> Result<Self> {
        let num_classes = bias.len();
        if num_classes == 0 || feature_len == 0 {
            return Err(Error::Dimension("classifier head cannot be empty".into()));
        }
        if weights.len() != num_classes * feature_len {
            return Err(Error::Dimension(format!(
                "head {num_classes}x{feature_len} needs {} weights, got {}",
                num_classes * feature_len,
                weights.len()
            )));
        }
        if weights.iter().chain(&bias).any(|v| !v.is_finite()) {
            return Err(Error::Parameter("head weights must be finite".into()));
        }
        Ok(Self {
            num_classes,
            feature_len,
            weights,
            bias,
        })
    }

    /// Uniform `+-sqrt(6 / feature_len)` weights, zero bias.
    pub fn init(num_classes: usize, feature_len: usize, rng: &mut impl Rng) -> Result<Self> {
        let bound = (6.0 / feature_len as f64).sqrt();
        let weights = (0..num_classes * feature_len)
            .map(|_| rng.gen_range(-bound..bound))
            .collect();
        Self::new(feature_len, weights, vec![0.0; num_classes])
    }

    pub fn num_classes(&self) -> usize {
        self.num_classes
    }

    pub fn feature_len(&self) -> usize {
        self.feature_len
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn bias(&self) -> &[f64] {
        &self.bias
    }

    pub(crate) fn weights_mut(&mut self) -> &mut [f64] {
        &mut self.weights
    }

    pub(crate) fn bias_mut(&mut self) -> &mut [f64] {
        &mut self.bias
    }

    pub fn logits(&self, features: &[f64]) -> Result<Vec<f64>> {
        if features.len() != self.feature_len {
            return Err(Error::Dimension(format!(
                "head expects {} features, got {}",
                self.feature_len,
                features.len()
            )));
        }
        Ok(self
            .weights
            .chunks_exact(self.feature_len)
            .zip(&self.bias)
            .map(|(row, b)| row.iter().zip(features).map(|(w, f)| w * f).sum::<f64>() + b)
            .collect())
    }
}

/// Trained parameters of the whole network.
#[derive(Debug, Clone, PartialEq)]
pub struct Model {
    pub kernels: KernelSet,
    pub head: ClassifierHead,
}

/// Digital convolution layer with the kernel spectra computed once.
pub struct DigitalConvLayer {
    engine: SpectralConv,
    spectra: Vec<KernelSpectrum>,
    biases: Vec<f64>,
}

impl DigitalConvLayer {
    pub fn new(kernels: &KernelSet, video_shape: Shape3) -> Result<Self> {
        let engine = SpectralConv::new(video_shape, kernels.shape())?;
        let spectra = (0..kernels.count())
            .into_par_iter()
            .map(|k| engine.kernel_spectrum(&kernels.kernel(k)))
            .collect::<Result<Vec<_>>>()?;
        Ok(Self {
            engine,
            spectra,
            biases: kernels.biases().to_vec(),
        })
    }

    pub fn engine(&self) -> &SpectralConv {
        &self.engine
    }

    /// Pre-bias, pre-activation convolution outputs.
    pub fn responses(&self, video: &VideoVolume) -> Result<Vec<Volume3>> {
        let vs = self.engine.video_spectrum(video)?;
        Ok(self
            .spectra
            .par_iter()
            .map(|ks| self.engine.convolve(&vs, ks))
            .collect())
    }

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

/// `ReLU(conv3d(X, W_k) + b_k)` for every kernel.
pub fn conv_layer_digital(video: &VideoVolume, kernels: &KernelSet) -> Result<FeatureVolume> {
    DigitalConvLayer::new(kernels, video.shape())?.forward(video)
}

fn check_head(kernels: &KernelSet, head: &ClassifierHead, video: Shape3) -> Result<()> {
    let len = kernels.feature_len(video)?;
    if len != head.feature_len() {
        return Err(Error::Dimension(format!(
            "conv layer yields {len} features, head expects {}",
            head.feature_len()
        )));
    }
    Ok(())
}

/// Digital forward pass to logits; features are flattened `(k, t, h, w)`.
pub fn forward_digital(
    kernels: &KernelSet,
    head: &ClassifierHead,
    video: &VideoVolume,
) -> Result<Vec<f64>> {
    check_head(kernels, head, video.shape())?;
    head.logits(conv_layer_digital(video, kernels)?.as_slice())
}

/// Forward pass with the convolution replaced by the optical layer.
pub fn forward_hybrid(
    kernels: &KernelSet,
    head: &ClassifierHead,
    video: &VideoVolume,
    params: &OpticalParams,
    layout: &SlmFrameLayout,
) -> Result<Vec<f64>> {
    check_head(kernels, head, video.shape())?;
    let layer = OpticalConvLayer::program(kernels, params, layout, video.shape())?;
    head.logits(layer.forward(video)?.as_slice())
}

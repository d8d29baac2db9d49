use serde::{Deserialize, Serialize};

use crate::{Error, Result};

/// Extents of a 3D grid: height, width, frames.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Shape3 {
    pub h: usize,
    pub w: usize,
    pub t: usize,
}

impl Shape3 {
    pub const fn new(h: usize, w: usize, t: usize) -> Self {
        Self { h, w, t }
    }

    pub fn len(&self) -> usize {
        self.h * self.w * self.t
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn frame_len(&self) -> usize {
        self.h * self.w
    }

    #[inline]
    pub fn index(&self, h: usize, w: usize, t: usize) -> usize {
        (t * self.h + h) * self.w + w
    }

    /// Componentwise `self <= other`.
    pub fn fits_in(&self, other: Shape3) -> bool {
        self.h <= other.h && self.w <= other.w && self.t <= other.t
    }

    /// Grid on which a linear (non-circular) convolution of `self` with
    /// `kernel` fits: `input + kernel - 1` per axis.
    pub fn linear_grid(&self, kernel: Shape3) -> Shape3 {
        Shape3::new(
            self.h + kernel.h - 1,
            self.w + kernel.w - 1,
            self.t + kernel.t - 1,
        )
    }

    /// Valid-convolution output extents, or a dimension error when the
    /// kernel does not fit.
    pub fn valid_output(&self, kernel: Shape3) -> Result<Shape3> {
        if kernel.h == 0 || kernel.w == 0 || kernel.t == 0 {
            return Err(Error::Dimension(format!("empty kernel {kernel:?}")));
        }
        if !kernel.fits_in(*self) {
            return Err(Error::Dimension(format!(
                "kernel {kernel:?} larger than volume {self:?}"
            )));
        }
        Ok(Shape3::new(
            self.h - kernel.h + 1,
            self.w - kernel.w + 1,
            self.t - kernel.t + 1,
        ))
    }

    fn ensure_positive(&self, what: &str) -> Result<()> {
        if self.h == 0 || self.w == 0 || self.t == 0 {
            return Err(Error::Dimension(format!("{what} has zero extent: {self:?}")));
        }
        Ok(())
    }
}

/// Single-channel real grid.
#[derive(Debug, Clone, PartialEq)]
pub struct Volume3 {
    shape: Shape3,
    data: Vec<f64>,
}

impl Volume3 {
    pub fn zeros(shape: Shape3) -> Self {
        Self {
            shape,
            data: vec![0.0; shape.len()],
        }
    }

    pub fn from_vec(shape: Shape3, data: Vec<f64>) -> Result<Self> {
        if data.len() != shape.len() {
            return Err(Error::Dimension(format!(
                "expected {} values for {shape:?}, got {}",
                shape.len(),
                data.len()
            )));
        }
        Ok(Self { shape, data })
    }

    pub fn from_fn(shape: Shape3, mut f: impl FnMut(usize, usize, usize) -> f64) -> Self {
        let mut data = Vec::with_capacity(shape.len());
        for t in 0..shape.t {
            for h in 0..shape.h {
                for w in 0..shape.w {
                    data.push(f(h, w, t));
                }
            }
        }
        Self { shape, data }
    }

    pub fn shape(&self) -> Shape3 {
        self.shape
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [f64] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<f64> {
        self.data
    }

    #[inline]
    pub fn get(&self, h: usize, w: usize, t: usize) -> f64 {
        self.data[self.shape.index(h, w, t)]
    }

    #[inline]
    pub fn set(&mut self, h: usize, w: usize, t: usize, v: f64) {
        let i = self.shape.index(h, w, t);
        self.data[i] = v;
    }

    pub fn max_abs(&self) -> f64 {
        self.data.iter().fold(0.0, |m, v| m.max(v.abs()))
    }

    /// Reverses every axis.
    pub fn flipped(&self) -> Self {
        let s = self.shape;
        Self::from_fn(s, |h, w, t| self.get(s.h - 1 - h, s.w - 1 - w, s.t - 1 - t))
    }

    pub fn scale(&mut self, factor: f64) {
        self.data.iter_mut().for_each(|v| *v *= factor);
    }
}

/// Non-negative intensity video, values in `[0, 1]`, layout `(c, t, h, w)`.
#[derive(Debug, Clone, PartialEq)]
pub struct VideoVolume {
    shape: Shape3,
    channels: usize,
    data: Vec<f64>,
}

impl VideoVolume {
    pub fn new(shape: Shape3, channels: usize, data: Vec<f64>) -> Result<Self> {
        shape.ensure_positive("video")?;
        if channels == 0 {
            return Err(Error::Dimension("video needs at least one channel".into()));
        }
        if data.len() != shape.len() * channels {
            return Err(Error::Dimension(format!(
                "expected {} values for {channels} x {shape:?}, got {}",
                shape.len() * channels,
                data.len()
            )));
        }
        if let Some(v) = data.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::Encoding(format!(
                "video intensity {v} outside [0, 1]"
            )));
        }
        Ok(Self {
            shape,
            channels,
            data,
        })
    }

    pub fn single(volume: Volume3) -> Result<Self> {
        let shape = volume.shape();
        Self::new(shape, 1, volume.into_vec())
    }

    pub fn zeros(shape: Shape3, channels: usize) -> Self {
        Self {
            shape,
            channels,
            data: vec![0.0; shape.len() * channels],
        }
    }

    pub fn shape(&self) -> Shape3 {
        self.shape
    }

    pub fn channels(&self) -> usize {
        self.channels
    }

    pub fn channel(&self, c: usize) -> &[f64] {
        let n = self.shape.len();
        &self.data[c * n..(c + 1) * n]
    }

    pub fn channel_volume(&self, c: usize) -> Volume3 {
        Volume3 {
            shape: self.shape,
            data: self.channel(c).to_vec(),
        }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

/// Kernel extents including the number of input channels.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct KernelShape {
    pub k_h: usize,
    pub k_w: usize,
    pub k_t: usize,
    pub c_in: usize,
}

impl KernelShape {
    pub const fn new(k_h: usize, k_w: usize, k_t: usize, c_in: usize) -> Self {
        Self { k_h, k_w, k_t, c_in }
    }

    pub fn spatial(&self) -> Shape3 {
        Shape3::new(self.k_h, self.k_w, self.k_t)
    }

    /// Weights per kernel (all channels).
    pub fn len(&self) -> usize {
        self.k_h * self.k_w * self.k_t * self.c_in
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

/// One signed kernel, layout `(c, t, h, w)`.
#[derive(Debug, Clone, PartialEq)]
pub struct Kernel3 {
    shape: KernelShape,
    data: Vec<f64>,
}

impl Kernel3 {
    pub fn new(shape: KernelShape, data: Vec<f64>) -> Result<Self> {
        if shape.is_empty() {
            return Err(Error::Dimension(format!("empty kernel shape {shape:?}")));
        }
        if data.len() != shape.len() {
            return Err(Error::Dimension(format!(
                "expected {} kernel weights for {shape:?}, got {}",
                shape.len(),
                data.len()
            )));
        }
        Ok(Self { shape, data })
    }

    pub fn single(volume: Volume3) -> Result<Self> {
        let s = volume.shape();
        Self::new(KernelShape::new(s.h, s.w, s.t, 1), volume.into_vec())
    }

    pub fn shape(&self) -> KernelShape {
        self.shape
    }

    pub fn channel(&self, c: usize) -> &[f64] {
        let n = self.shape.spatial().len();
        &self.data[c * n..(c + 1) * n]
    }

    pub fn channel_volume(&self, c: usize) -> Volume3 {
        Volume3 {
            shape: self.shape.spatial(),
            data: self.channel(c).to_vec(),
        }
    }

    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> Self {
        Self {
            shape: self.shape,
            data: self.data.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Reverses all three spatio-temporal axes of every channel.
    pub fn flipped(&self) -> Self {
        let mut data = Vec::with_capacity(self.data.len());
        for c in 0..self.shape.c_in {
            data.extend(self.channel_volume(c).flipped().into_vec());
        }
        Self {
            shape: self.shape,
            data,
        }
    }
}

/// Stack of per-kernel valid feature maps, layout `(k, t, h, w)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVolume {
    shape: Shape3,
    out_channels: usize,
    data: Vec<f64>,
}

impl FeatureVolume {
    pub fn from_maps(maps: Vec<Volume3>) -> Result<Self> {
        let shape = maps
            .first()
            .map(|m| m.shape())
            .ok_or_else(|| Error::Dimension("no feature maps".into()))?;
        if maps.iter().any(|m| m.shape() != shape) {
            return Err(Error::Dimension("feature maps differ in shape".into()));
        }
        let out_channels = maps.len();
        let mut data = Vec::with_capacity(out_channels * shape.len());
        for m in maps {
            data.extend(m.into_vec());
        }
        Ok(Self {
            shape,
            out_channels,
            data,
        })
    }

    pub fn shape(&self) -> Shape3 {
        self.shape
    }

    pub fn out_channels(&self) -> usize {
        self.out_channels
    }

    pub fn map(&self, k: usize) -> &[f64] {
        let n = self.shape.len();
        &self.data[k * n..(k + 1) * n]
    }

    /// Flattened `(k, t, h, w)` features.
    pub fn as_slice(&self) -> &[f64] {
        &self.data
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn valid_output_arithmetic() {
        let v = Shape3::new(60, 80, 16);
        let k = Shape3::new(30, 40, 8);
        assert_eq!(v.valid_output(k).unwrap(), Shape3::new(31, 41, 9));
        assert!(k.valid_output(v).is_err());
    }

    #[test]
    fn video_rejects_out_of_range() {
        let s = Shape3::new(1, 1, 2);
        assert!(VideoVolume::new(s, 1, vec![0.5, 1.5]).is_err());
        assert!(VideoVolume::new(s, 1, vec![-0.1, 0.5]).is_err());
        assert!(VideoVolume::new(Shape3::new(0, 1, 1), 1, vec![]).is_err());
    }

    #[test]
    fn flip_reverses_each_axis() {
        let v = Volume3::from_fn(Shape3::new(2, 3, 2), |h, w, t| (h * 100 + w * 10 + t) as f64);
        let f = v.flipped();
        assert_eq!(f.get(0, 0, 0), v.get(1, 2, 1));
        assert_eq!(f.flipped(), v);
    }
}

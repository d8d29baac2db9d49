use crate::spectral::Kernel3;
use crate::{Error, Result};

/// Disjoint non-negative halves of a signed kernel: `K = K+ - K-`.
#[derive(Debug, Clone, PartialEq)]
pub struct SignedKernelPair {
    pub positive: Kernel3,
    pub negative: Kernel3,
}

impl SignedKernelPair {
    pub fn reconstruct(&self) -> Kernel3 {
        let data = self
            .positive
            .as_slice()
            .iter()
            .zip(self.negative.as_slice())
            .map(|(p, n)| p - n)
            .collect();
        Kernel3::new(self.positive.shape(), data).expect("halves share a shape")
    }
}

pub fn decompose_kernel(kernel: &Kernel3) -> SignedKernelPair {
    SignedKernelPair {
        positive: kernel.map(|v| if v > 0.0 { v } else { 0.0 }),
        negative: kernel.map(|v| if v < 0.0 { -v } else { 0.0 }),
    }
}

/// Uniform quantization onto `levels` evenly spaced values over
/// `[0, max(field)]`. Signed data must be decomposed first.
pub fn quantize_slm(field: &[f64], levels: u32) -> Result<Vec<f64>> {
    if levels < 2 {
        return Err(Error::Parameter(format!("levels must be >= 2, got {levels}")));
    }
    if let Some(v) = field.iter().find(|v| !(**v >= 0.0)) {
        return Err(Error::Encoding(format!(
            "modulator field value {v} is negative or not a number"
        )));
    }
    let max = field.iter().fold(0.0f64, |m, &v| m.max(v));
    if max == 0.0 {
        return Ok(field.to_vec());
    }
    let step = max / (levels - 1) as f64;
    Ok(field.iter().map(|&v| (v / step).round() * step).collect())
}

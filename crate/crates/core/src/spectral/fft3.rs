use std::sync::Arc;

use realfft::{ComplexToReal, RealFftPlanner, RealToComplex};
use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

use super::{Shape3, Volume3, IMAG_RESIDUAL_TOL};
use crate::{Error, Result};

/// Complex spatio-temporal spectrum, bin 0 = DC on every axis, stored with the
/// same `(t, h, w)` layout as [`Volume3`].
#[derive(Debug, Clone, PartialEq)]
pub struct Spectrum3D {
    shape: Shape3,
    data: Vec<Complex64>,
}

impl Spectrum3D {
    pub fn constant(shape: Shape3, value: Complex64) -> Self {
        Self {
            shape,
            data: vec![value; shape.len()],
        }
    }

    pub fn from_vec(shape: Shape3, data: Vec<Complex64>) -> Result<Self> {
        if data.len() != shape.len() {
            return Err(Error::Dimension(format!(
                "expected {} bins for {shape:?}, got {}",
                shape.len(),
                data.len()
            )));
        }
        Ok(Self { shape, data })
    }

    pub fn shape(&self) -> Shape3 {
        self.shape
    }

    pub fn as_slice(&self) -> &[Complex64] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [Complex64] {
        &mut self.data
    }

    #[inline]
    pub fn get(&self, h: usize, w: usize, t: usize) -> Complex64 {
        self.data[self.shape.index(h, w, t)]
    }

    /// Elementwise product, erroring on mismatched grids.
    pub fn hadamard(&self, other: &Spectrum3D) -> Result<Spectrum3D> {
        if self.shape != other.shape {
            return Err(Error::Dimension(format!(
                "spectrum grids differ: {:?} vs {:?}",
                self.shape, other.shape
            )));
        }
        Ok(Spectrum3D {
            shape: self.shape,
            data: self
                .data
                .iter()
                .zip(&other.data)
                .map(|(a, b)| a * b)
                .collect(),
        })
    }

    pub fn conj(&self) -> Spectrum3D {
        Spectrum3D {
            shape: self.shape,
            data: self.data.iter().map(|z| z.conj()).collect(),
        }
    }

    pub fn scaled(&self, factor: f64) -> Spectrum3D {
        Spectrum3D {
            shape: self.shape,
            data: self.data.iter().map(|z| z * factor).collect(),
        }
    }

    pub fn energy(&self) -> f64 {
        self.data.iter().map(|z| z.norm_sqr()).sum()
    }
}

/// Smallest even 5-smooth length `>= n` (or `n` itself for `n <= 2`).
pub fn fast_len(n: usize) -> usize {
    if n <= 2 {
        return n.max(1);
    }
    let mut m = n + (n & 1);
    loop {
        let mut r = m;
        for p in [2, 3, 5] {
            while r % p == 0 {
                r /= p;
            }
        }
        if r == 1 {
            return m;
        }
        m += 2;
    }
}

/// Runs `fft` over every line of `len` elements spaced `stride` apart,
/// starting at each of `bases[..] + col` for `col in 0..cols`.
fn strided_pass(
    data: &mut [Complex64],
    fft: &Arc<dyn Fft<f64>>,
    len: usize,
    stride: usize,
    cols: usize,
    bases: impl Iterator<Item = usize>,
) {
    if len == 1 {
        return;
    }
    const BATCH: usize = 64;
    let mut buf = vec![Complex64::default(); len * BATCH.min(cols)];
    let mut scratch = vec![Complex64::default(); fft.get_inplace_scratch_len()];
    for base in bases {
        let mut col = 0;
        while col < cols {
            let nb = BATCH.min(cols - col);
            for b in 0..nb {
                let start = base + col + b;
                for i in 0..len {
                    buf[b * len + i] = data[start + i * stride];
                }
            }
            fft.process_with_scratch(&mut buf[..nb * len], &mut scratch);
            for b in 0..nb {
                let start = base + col + b;
                for i in 0..len {
                    data[start + i * stride] = buf[b * len + i];
                }
            }
            col += nb;
        }
    }
}

/// Planned full complex 3D transform.
struct ComplexPlan3 {
    shape: Shape3,
    w: Arc<dyn Fft<f64>>,
    h: Arc<dyn Fft<f64>>,
    t: Arc<dyn Fft<f64>>,
}

impl ComplexPlan3 {
    fn new(shape: Shape3, inverse: bool) -> Self {
        let mut planner = FftPlanner::new();
        let plan = |p: &mut FftPlanner<f64>, n| {
            if inverse {
                p.plan_fft_inverse(n)
            } else {
                p.plan_fft_forward(n)
            }
        };
        Self {
            shape,
            w: plan(&mut planner, shape.w),
            h: plan(&mut planner, shape.h),
            t: plan(&mut planner, shape.t),
        }
    }

    fn process(&self, data: &mut [Complex64]) {
        let s = self.shape;
        if s.w > 1 {
            let mut scratch = vec![Complex64::default(); self.w.get_inplace_scratch_len()];
            self.w.process_with_scratch(data, &mut scratch);
        }
        strided_pass(data, &self.h, s.h, s.w, s.w, (0..s.t).map(|t| t * s.h * s.w));
        strided_pass(data, &self.t, s.t, s.h * s.w, s.h * s.w, std::iter::once(0));
    }
}

fn pad_real(volume: &[f64], from: Shape3, to: Shape3) -> Vec<f64> {
    let mut out = vec![0.0; to.len()];
    for t in 0..from.t {
        for h in 0..from.h {
            let src = from.index(h, 0, t);
            let dst = to.index(h, 0, t);
            out[dst..dst + from.w].copy_from_slice(&volume[src..src + from.w]);
        }
    }
    out
}

/// Zero-pads `volume` to `padded` and applies the 2D spatial and 1D temporal
/// discrete Fourier transforms (unnormalised forward convention).
pub fn forward_st_fft(volume: &Volume3, padded: Shape3) -> Result<Spectrum3D> {
    let shape = volume.shape();
    if !shape.fits_in(padded) {
        return Err(Error::Dimension(format!(
            "padded shape {padded:?} smaller than volume {shape:?}"
        )));
    }
    let mut data: Vec<Complex64> = pad_real(volume.as_slice(), shape, padded)
        .into_iter()
        .map(|v| Complex64::new(v, 0.0))
        .collect();
    ComplexPlan3::new(padded, false).process(&mut data);
    Ok(Spectrum3D {
        shape: padded,
        data,
    })
}

/// Inverse transform cropped to `crop` starting at the grid origin.
pub fn inverse_st_fft(spectrum: &Spectrum3D, crop: Shape3) -> Result<Volume3> {
    inverse_st_fft_at(spectrum, Shape3::new(0, 0, 0), crop)
}

/// Inverse transform on all three axes, cropping `crop` extents starting at
/// `offset`. Imaginary residuals above [`IMAG_RESIDUAL_TOL`] times the grid's
/// largest modulus mean the spectrum was not Hermitian.
pub fn inverse_st_fft_at(spectrum: &Spectrum3D, offset: Shape3, crop: Shape3) -> Result<Volume3> {
    let grid = spectrum.shape();
    let end = Shape3::new(offset.h + crop.h, offset.w + crop.w, offset.t + crop.t);
    if !end.fits_in(grid) {
        return Err(Error::Dimension(format!(
            "crop {crop:?} at {offset:?} exceeds grid {grid:?}"
        )));
    }
    let mut data = spectrum.as_slice().to_vec();
    ComplexPlan3::new(grid, true).process(&mut data);
    let norm = 1.0 / grid.len() as f64;
    let max_mod = data.iter().fold(0.0f64, |m, z| m.max(z.norm())) * norm;
    let residual = data.iter().fold(0.0f64, |m, z| m.max(z.im.abs())) * norm;
    let limit = IMAG_RESIDUAL_TOL * max_mod;
    if residual > limit {
        return Err(Error::NumericalConsistency { residual, limit });
    }
    Ok(Volume3::from_fn(crop, |h, w, t| {
        data[grid.index(h + offset.h, w + offset.w, t + offset.t)].re * norm
    }))
}

/// Real-input 3D transform on a fixed grid, keeping `w / 2 + 1` bins along
/// the width axis. Used on hot paths where the full Hermitian grid would be
/// redundant.
pub(crate) struct RealPlan3 {
    grid: Shape3,
    half_w: usize,
    r2c: Arc<dyn RealToComplex<f64>>,
    c2r: Arc<dyn ComplexToReal<f64>>,
    fwd_h: Arc<dyn Fft<f64>>,
    fwd_t: Arc<dyn Fft<f64>>,
    inv_h: Arc<dyn Fft<f64>>,
    inv_t: Arc<dyn Fft<f64>>,
}

impl RealPlan3 {
    pub(crate) fn new(grid: Shape3) -> Self {
        let mut real = RealFftPlanner::<f64>::new();
        let mut cplx = FftPlanner::<f64>::new();
        Self {
            grid,
            half_w: grid.w / 2 + 1,
            r2c: real.plan_fft_forward(grid.w),
            c2r: real.plan_fft_inverse(grid.w),
            fwd_h: cplx.plan_fft_forward(grid.h),
            fwd_t: cplx.plan_fft_forward(grid.t),
            inv_h: cplx.plan_fft_inverse(grid.h),
            inv_t: cplx.plan_fft_inverse(grid.t),
        }
    }

    pub(crate) fn grid(&self) -> Shape3 {
        self.grid
    }

    /// Number of stored bins.
    pub(crate) fn half_len(&self) -> usize {
        self.grid.h * self.grid.t * self.half_w
    }

    fn half_passes(&self, data: &mut [Complex64], inverse: bool) {
        let g = self.grid;
        let (fh, ft) = if inverse {
            (&self.inv_h, &self.inv_t)
        } else {
            (&self.fwd_h, &self.fwd_t)
        };
        let hw = self.half_w;
        if inverse {
            strided_pass(data, ft, g.t, g.h * hw, g.h * hw, std::iter::once(0));
            strided_pass(data, fh, g.h, hw, hw, (0..g.t).map(|t| t * g.h * hw));
        } else {
            strided_pass(data, fh, g.h, hw, hw, (0..g.t).map(|t| t * g.h * hw));
            strided_pass(data, ft, g.t, g.h * hw, g.h * hw, std::iter::once(0));
        }
    }

    /// Forward transform of `values` (extents `from`, zero-padded to the grid).
    pub(crate) fn forward(&self, values: &[f64], from: Shape3) -> Vec<Complex64> {
        let g = self.grid;
        debug_assert!(from.fits_in(g));
        let mut padded = pad_real(values, from, g);
        let mut out = vec![Complex64::default(); self.half_len()];
        let mut scratch = self.r2c.make_scratch_vec();
        for (row_in, row_out) in padded
            .chunks_exact_mut(g.w)
            .zip(out.chunks_exact_mut(self.half_w))
        {
            self.r2c
                .process_with_scratch(row_in, row_out, &mut scratch)
                .expect("row lengths fixed by plan");
        }
        self.half_passes(&mut out, false);
        out
    }

    /// Normalised inverse transform, returning the `crop` extents starting at
    /// `offset`.
    pub(crate) fn inverse(&self, mut spectrum: Vec<Complex64>, offset: Shape3, crop: Shape3) -> Volume3 {
        let g = self.grid;
        self.half_passes(&mut spectrum, true);
        let mut scratch = self.c2r.make_scratch_vec();
        let mut row = vec![0.0; g.w];
        let norm = 1.0 / g.len() as f64;
        let mut out = Volume3::zeros(crop);
        let even = g.w % 2 == 0;
        for t in 0..crop.t {
            for h in 0..crop.h {
                let base = ((t + offset.t) * g.h + h + offset.h) * self.half_w;
                let line = &mut spectrum[base..base + self.half_w];
                // DC and Nyquist of a real row carry no imaginary part
                line[0].im = 0.0;
                if even {
                    line[self.half_w - 1].im = 0.0;
                }
                self.c2r
                    .process_with_scratch(line, &mut row, &mut scratch)
                    .expect("row lengths fixed by plan");
                for w in 0..crop.w {
                    out.set(h, w, t, row[w + offset.w] * norm);
                }
            }
        }
        out
    }
}

use rustfft::num_complex::Complex64;

use super::fft3::{fast_len, RealPlan3};
use super::{Kernel3, KernelShape, Shape3, VideoVolume, Volume3};
use crate::{Error, Result};

fn check_channels(video: &VideoVolume, kernel: &Kernel3) -> Result<Shape3> {
    if video.channels() != kernel.shape().c_in {
        return Err(Error::Dimension(format!(
            "video has {} channels, kernel expects {}",
            video.channels(),
            kernel.shape().c_in
        )));
    }
    video.shape().valid_output(kernel.shape().spatial())
}

/// Ground-truth valid cross-correlation,
/// `Y[i,j,t] = sum W[m,n,tau,c] * X[i+m, j+n, t+tau, c]`, by nested loops.
/// No bias, no activation; channels are summed.
pub fn direct_conv3d(video: &VideoVolume, kernel: &Kernel3) -> Result<Volume3> {
    let out_shape = check_channels(video, kernel)?;
    let vs = video.shape();
    let ks = kernel.shape();
    let mut out = Volume3::zeros(out_shape);
    for c in 0..ks.c_in {
        let x = video.channel(c);
        let k = kernel.channel(c);
        for t in 0..out_shape.t {
            for i in 0..out_shape.h {
                for j in 0..out_shape.w {
                    let mut acc = 0.0;
                    for tau in 0..ks.k_t {
                        for m in 0..ks.k_h {
                            let xrow = vs.index(i + m, j, t + tau);
                            let krow = (tau * ks.k_h + m) * ks.k_w;
                            for n in 0..ks.k_w {
                                acc += k[krow + n] * x[xrow + n];
                            }
                        }
                    }
                    let prev = out.get(i, j, t);
                    out.set(i, j, t, prev + acc);
                }
            }
        }
    }
    Ok(out)
}

/// Valid 3D cross-correlation through the convolution theorem. Equals
/// [`direct_conv3d`] to floating-point rounding.
pub fn fft_conv3d(video: &VideoVolume, kernel: &Kernel3) -> Result<Volume3> {
    check_channels(video, kernel)?;
    let engine = SpectralConv::new(video.shape(), kernel.shape())?;
    let vs = engine.video_spectrum(video)?;
    let ks = engine.kernel_spectrum(kernel)?;
    Ok(engine.convolve(&vs, &ks))
}

/// Per-channel half spectra of a video on a [`SpectralConv`] grid.
#[derive(Debug, Clone)]
pub struct VideoSpectrum(pub(crate) Vec<Vec<Complex64>>);

/// Per-channel half spectra of a flipped kernel on a [`SpectralConv`] grid.
#[derive(Debug, Clone)]
pub struct KernelSpectrum(pub(crate) Vec<Vec<Complex64>>);

/// Planned FFT convolution for one (input, kernel) shape pair.
///
/// Kernels are flipped along all three axes before transforming so that the
/// spectral product (a true convolution) reproduces cross-correlation
/// indexing; the valid block then starts at `kernel - 1` on every axis.
pub struct SpectralConv {
    input: Shape3,
    kernel: KernelShape,
    output: Shape3,
    plan: RealPlan3,
}

impl SpectralConv {
    /// Uses the smallest fast transform length covering `input + kernel - 1`.
    pub fn new(input: Shape3, kernel: KernelShape) -> Result<Self> {
        let lin = input.linear_grid(kernel.spatial());
        let grid = Shape3::new(fast_len(lin.h), fast_len(lin.w), fast_len(lin.t));
        Self::with_grid(input, kernel, grid)
    }

    pub fn with_grid(input: Shape3, kernel: KernelShape, grid: Shape3) -> Result<Self> {
        let output = input.valid_output(kernel.spatial())?;
        if kernel.c_in == 0 {
            return Err(Error::Dimension("kernel has no input channels".into()));
        }
        let lin = input.linear_grid(kernel.spatial());
        if !lin.fits_in(grid) {
            return Err(Error::Dimension(format!(
                "grid {grid:?} smaller than linear-convolution grid {lin:?}"
            )));
        }
        Ok(Self {
            input,
            kernel,
            output,
            plan: RealPlan3::new(grid),
        })
    }

    pub fn grid(&self) -> Shape3 {
        self.plan.grid()
    }

    pub fn output_shape(&self) -> Shape3 {
        self.output
    }

    pub fn kernel_shape(&self) -> KernelShape {
        self.kernel
    }

    pub fn video_spectrum(&self, video: &VideoVolume) -> Result<VideoSpectrum> {
        if video.shape() != self.input || video.channels() != self.kernel.c_in {
            return Err(Error::Dimension(format!(
                "video {:?}x{} does not match engine input {:?}x{}",
                video.shape(),
                video.channels(),
                self.input,
                self.kernel.c_in
            )));
        }
        Ok(VideoSpectrum(
            (0..video.channels())
                .map(|c| self.plan.forward(video.channel(c), self.input))
                .collect(),
        ))
    }

    pub fn kernel_spectrum(&self, kernel: &Kernel3) -> Result<KernelSpectrum> {
        if kernel.shape() != self.kernel {
            return Err(Error::Dimension(format!(
                "kernel {:?} does not match engine kernel {:?}",
                kernel.shape(),
                self.kernel
            )));
        }
        let flipped = kernel.flipped();
        Ok(KernelSpectrum(
            (0..self.kernel.c_in)
                .map(|c| self.plan.forward(flipped.channel(c), self.kernel.spatial()))
                .collect(),
        ))
    }

    /// Valid output of `video (*) kernel`, summed over channels.
    pub fn convolve(&self, video: &VideoSpectrum, kernel: &KernelSpectrum) -> Volume3 {
        let mut acc = vec![Complex64::default(); self.plan.half_len()];
        for (v, k) in video.0.iter().zip(&kernel.0) {
            for ((a, x), w) in acc.iter_mut().zip(v).zip(k) {
                *a += x * w;
            }
        }
        let ks = self.kernel;
        let offset = Shape3::new(ks.k_h - 1, ks.k_w - 1, ks.k_t - 1);
        self.plan.inverse(acc, offset, self.output)
    }

    /// Accumulates the spectral form of `corr(X, G)` for each channel, where
    /// `G` is an output-shaped gradient. `dW[m] = sum_i G[i] X[i + m]` never
    /// wraps because `i + m < input <= grid`, so `X~ * conj(G~)` is exact.
    pub(crate) fn accumulate_correlation(
        &self,
        video: &VideoSpectrum,
        grad: &Volume3,
        acc: &mut [Vec<Complex64>],
    ) {
        debug_assert_eq!(grad.shape(), self.output);
        let g = self.plan.forward(grad.as_slice(), self.output);
        for (a, v) in acc.iter_mut().zip(&video.0) {
            for ((a, x), gz) in a.iter_mut().zip(v).zip(&g) {
                *a += x * gz.conj();
            }
        }
    }

    pub(crate) fn empty_accumulator(&self) -> Vec<Vec<Complex64>> {
        vec![vec![Complex64::default(); self.plan.half_len()]; self.kernel.c_in]
    }

    /// Turns an accumulator from [`Self::accumulate_correlation`] into
    /// kernel-shaped weights, layout `(c, t, h, w)`.
    pub(crate) fn finish_correlation(&self, acc: Vec<Vec<Complex64>>) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.kernel.len());
        for a in acc {
            out.extend(
                self.plan
                    .inverse(a, Shape3::new(0, 0, 0), self.kernel.spatial())
                    .into_vec(),
            );
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    use super::*;

    fn video(shape: Shape3, rng: &mut ChaCha8Rng) -> VideoVolume {
        VideoVolume::single(Volume3::from_fn(shape, |_, _, _| rng.gen_range(0.0..1.0))).unwrap()
    }

    fn kernel(shape: Shape3, rng: &mut ChaCha8Rng) -> Kernel3 {
        Kernel3::single(Volume3::from_fn(shape, |_, _, _| rng.gen_range(-1.0..1.0))).unwrap()
    }

    /// Second, independently indexed loop implementation: walks the kernel
    /// outermost and scatters into the output.
    fn scatter_conv(video: &VideoVolume, kernel: &Kernel3) -> Volume3 {
        let vs = video.shape();
        let k = kernel.channel_volume(0);
        let ks = k.shape();
        let os = vs.valid_output(ks).unwrap();
        let x = video.channel_volume(0);
        let mut out = Volume3::zeros(os);
        for tau in 0..ks.t {
            for m in 0..ks.h {
                for n in 0..ks.w {
                    let wv = k.get(m, n, tau);
                    for t in 0..os.t {
                        for i in 0..os.h {
                            for j in 0..os.w {
                                let v = out.get(i, j, t) + wv * x.get(i + m, j + n, t + tau);
                                out.set(i, j, t, v);
                            }
                        }
                    }
                }
            }
        }
        out
    }

    #[test]
    fn delta_kernel_crops_input() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let v = video(Shape3::new(5, 6, 4), &mut rng);
        let mut k = Volume3::zeros(Shape3::new(2, 3, 2));
        k.set(0, 0, 0, 1.0);
        let k = Kernel3::single(k).unwrap();
        let x = v.channel_volume(0);
        for out in [direct_conv3d(&v, &k).unwrap(), fft_conv3d(&v, &k).unwrap()] {
            assert_eq!(out.shape(), Shape3::new(4, 4, 3));
            for t in 0..3 {
                for h in 0..4 {
                    for w in 0..4 {
                        assert!((out.get(h, w, t) - x.get(h, w, t)).abs() < 1e-12);
                    }
                }
            }
        }
    }

    #[test]
    fn ones_kernel_counts() {
        let v = VideoVolume::new(Shape3::new(3, 3, 3), 1, vec![1.0; 27]).unwrap();
        let k = Kernel3::single(Volume3::from_fn(Shape3::new(2, 2, 2), |_, _, _| 1.0)).unwrap();
        let out = direct_conv3d(&v, &k).unwrap();
        assert_eq!(out.shape(), Shape3::new(2, 2, 2));
        assert!(out.as_slice().iter().all(|&x| x == 8.0));
    }

    #[test]
    fn direct_matches_scatter_implementation() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        let v = video(Shape3::new(8, 8, 6), &mut rng);
        let k = kernel(Shape3::new(3, 3, 2), &mut rng);
        let a = direct_conv3d(&v, &k).unwrap();
        let b = scatter_conv(&v, &k);
        for (x, y) in a.as_slice().iter().zip(b.as_slice()) {
            assert!((x - y).abs() <= 1e-13 * y.abs().max(1.0));
        }
    }

    #[test]
    fn kernel_larger_than_volume_is_rejected() {
        let v = VideoVolume::zeros(Shape3::new(2, 2, 2), 1);
        let k = Kernel3::single(Volume3::zeros(Shape3::new(3, 1, 1))).unwrap();
        assert!(matches!(direct_conv3d(&v, &k), Err(Error::Dimension(_))));
        assert!(matches!(fft_conv3d(&v, &k), Err(Error::Dimension(_))));
    }

    #[test]
    fn multi_channel_sums_channels() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        let s = Shape3::new(5, 4, 3);
        let data: Vec<f64> = (0..2 * s.len()).map(|_| rng.gen_range(0.0..1.0)).collect();
        let v = VideoVolume::new(s, 2, data).unwrap();
        let kd: Vec<f64> = (0..2 * 8).map(|_| rng.gen_range(-1.0..1.0)).collect();
        let k = Kernel3::new(KernelShape::new(2, 2, 2, 2), kd).unwrap();
        let a = direct_conv3d(&v, &k).unwrap();
        let b = fft_conv3d(&v, &k).unwrap();
        let mut sum = Volume3::zeros(a.shape());
        for c in 0..2 {
            let vc = VideoVolume::single(v.channel_volume(c)).unwrap();
            let kc = Kernel3::single(k.channel_volume(c)).unwrap();
            let part = direct_conv3d(&vc, &kc).unwrap();
            for (s, p) in sum.as_mut_slice().iter_mut().zip(part.as_slice()) {
                *s += p;
            }
        }
        for ((x, y), z) in a.as_slice().iter().zip(b.as_slice()).zip(sum.as_slice()) {
            assert!((x - y).abs() < 1e-12 && (x - z).abs() < 1e-12);
        }
    }

    #[test]
    fn correlation_gradient_matches_loops() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let v = video(Shape3::new(6, 5, 4), &mut rng);
        let ks = KernelShape::new(3, 2, 2, 1);
        let engine = SpectralConv::new(v.shape(), ks).unwrap();
        let os = engine.output_shape();
        let g = Volume3::from_fn(os, |_, _, _| rng.gen_range(-1.0..1.0));
        let mut acc = engine.empty_accumulator();
        engine.accumulate_correlation(&engine.video_spectrum(&v).unwrap(), &g, &mut acc);
        let dw = engine.finish_correlation(acc);
        let x = v.channel_volume(0);
        for tau in 0..2 {
            for m in 0..3 {
                for n in 0..2 {
                    let mut want = 0.0;
                    for t in 0..os.t {
                        for i in 0..os.h {
                            for j in 0..os.w {
                                want += g.get(i, j, t) * x.get(i + m, j + n, t + tau);
                            }
                        }
                    }
                    let got = dw[(tau * 3 + m) * 2 + n];
                    assert!((got - want).abs() < 1e-12, "{got} vs {want}");
                }
            }
        }
    }

    #[test]
    fn full_scale_output_extents() {
        let engine =
            SpectralConv::new(Shape3::new(60, 80, 16), KernelShape::new(30, 40, 8, 1)).unwrap();
        assert_eq!(engine.output_shape(), Shape3::new(31, 41, 9));
    }
}

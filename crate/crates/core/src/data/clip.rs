use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{read_pgm, DatasetManifest, ManifestEntry};
use crate::cnn::Sample;
use crate::spectral::{Shape3, VideoVolume};
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClipSpec {
    pub num_frames: usize,
    pub height: usize,
    pub width: usize,
}

impl Default for ClipSpec {
    fn default() -> Self {
        Self {
            num_frames: 16,
            height: 60,
            width: 80,
        }
    }
}

impl ClipSpec {
    pub fn shape(&self) -> Shape3 {
        Shape3::new(self.height, self.width, self.num_frames)
    }

    pub fn validate(&self) -> Result<()> {
        if self.num_frames == 0 || self.height == 0 || self.width == 0 {
            return Err(Error::Parameter(format!("clip extents must be positive: {self:?}")));
        }
        Ok(())
    }
}

/// `round(i (n - 1) / (f - 1))` for `i in 0..f`, in exact integer arithmetic
/// (halves round up).
pub fn sample_indices(n: usize, f: usize) -> Result<Vec<usize>> {
    if f == 0 || n < f {
        return Err(Error::Parameter(format!("cannot sample {f} frames from {n}")));
    }
    if f == 1 {
        return Ok(vec![0]);
    }
    let den = f - 1;
    Ok((0..f)
        .map(|i| (2 * i * (n - 1) + den) / (2 * den))
        .collect())
}

/// Bilinear resize with half-pixel centres and edge clamping. Interpolation
/// is written as nested lerps so flat regions are reproduced exactly.
pub fn resize_bilinear(src: &[f64], from: (usize, usize), to: (usize, usize)) -> Vec<f64> {
    let (sh, sw) = from;
    let (dh, dw) = to;
    debug_assert_eq!(src.len(), sh * sw);
    let axis = |d: usize, s: usize, n: usize| -> (usize, usize, f64) {
        let x = ((d as f64 + 0.5) * s as f64 / n as f64 - 0.5).max(0.0);
        let i0 = (x.floor() as usize).min(s - 1);
        let i1 = (i0 + 1).min(s - 1);
        (i0, i1, x - i0 as f64)
    };
    let cols: Vec<_> = (0..dw).map(|x| axis(x, sw, dw)).collect();
    let mut out = Vec::with_capacity(dh * dw);
    for y in 0..dh {
        let (r0, r1, fy) = axis(y, sh, dh);
        for &(c0, c1, fx) in &cols {
            let top = src[r0 * sw + c0] + fx * (src[r0 * sw + c1] - src[r0 * sw + c0]);
            let bot = src[r1 * sw + c0] + fx * (src[r1 * sw + c1] - src[r1 * sw + c0]);
            out.push(top + fy * (bot - top));
        }
    }
    out
}

/// Samples `spec.num_frames` frames uniformly, averages colour channels,
/// resizes to the clip extents and scales to `[0, 1]`.
pub fn load_clip(entry: &ManifestEntry, spec: &ClipSpec) -> Result<VideoVolume> {
    spec.validate()?;
    let n = entry.frames.len();
    if n < spec.num_frames {
        return Err(Error::Ingestion {
            path: entry.pattern.clone().into(),
            msg: format!(
                "clip {} has {n} frames, need {}",
                entry.id, spec.num_frames
            ),
        });
    }
    let mut data = Vec::with_capacity(spec.shape().len());
    for i in sample_indices(n, spec.num_frames)? {
        let frame = read_pgm(&entry.frames[i])?;
        let px = if (frame.height, frame.width) == (spec.height, spec.width) {
            frame.pixels
        } else {
            resize_bilinear(
                &frame.pixels,
                (frame.height, frame.width),
                (spec.height, spec.width),
            )
        };
        data.extend(px.into_iter().map(|v| v.clamp(0.0, 1.0)));
    }
    VideoVolume::new(spec.shape(), 1, data)
}

/// Loads every clip of `manifest` with its label.
pub fn load_samples(manifest: &DatasetManifest, spec: &ClipSpec) -> Result<Vec<Sample>> {
    manifest
        .entries
        .par_iter()
        .map(|e| {
            Ok(Sample {
                video: load_clip(e, spec)?,
                label: e.label,
            })
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use std::path::Path;

    use super::*;
    use crate::data::write_pgm;

    #[test]
    fn thirty_one_to_sixteen() {
        let idx = sample_indices(31, 16).unwrap();
        assert_eq!(idx, (0..16).map(|i| 2 * i).collect::<Vec<_>>());
    }

    #[test]
    fn indices_monotone_with_endpoints() {
        for n in 1..60 {
            for f in 1..=n.min(20) {
                let idx = sample_indices(n, f).unwrap();
                assert_eq!(idx.len(), f);
                assert_eq!(idx[0], 0);
                if f > 1 {
                    assert_eq!(*idx.last().unwrap(), n - 1);
                }
                assert!(idx.windows(2).all(|w| w[0] <= w[1]));
                // integer form agrees with the floating-point formula
                for (i, &k) in idx.iter().enumerate() {
                    if f > 1 {
                        let x = i as f64 * (n - 1) as f64 / (f - 1) as f64;
                        assert!((k as f64 - x).abs() <= 0.5);
                    }
                }
            }
        }
        assert!(sample_indices(5, 6).is_err());
    }

    #[test]
    fn constant_survives_resize() {
        let src = vec![0.3137; 120 * 160];
        let out = resize_bilinear(&src, (120, 160), (60, 80));
        assert!(out.iter().all(|&v| v == 0.3137));
        let out = resize_bilinear(&src, (120, 160), (77, 211));
        assert!(out.iter().all(|&v| v == 0.3137));
    }

    #[test]
    fn identity_resize() {
        let src: Vec<f64> = (0..12).map(|i| i as f64).collect();
        assert_eq!(resize_bilinear(&src, (3, 4), (3, 4)), src);
    }

    #[test]
    fn linear_ramp_downsample() {
        // 2x downsample of a ramp averages neighbouring columns
        let src: Vec<f64> = (0..8).map(|i| i as f64).collect();
        let out = resize_bilinear(&src, (1, 8), (1, 4));
        assert_eq!(out, vec![0.5, 2.5, 4.5, 6.5]);
    }

    fn write_clip(dir: &Path, frames: usize, h: usize, w: usize, value: impl Fn(usize, usize) -> u8) -> ManifestEntry {
        let mut paths = Vec::new();
        for f in 0..frames {
            let px: Vec<u8> = (0..h * w).map(|p| value(f, p)).collect();
            let p = dir.join(format!("frame_{f:03}.pgm"));
            write_pgm(&p, w, h, &px).unwrap();
            paths.push(p);
        }
        ManifestEntry {
            id: "clip".into(),
            subject: 1,
            class: "up".into(),
            label: 0,
            pattern: "frame_*.pgm".into(),
            frames: paths,
        }
    }

    #[test]
    fn native_size_clip_is_source_over_255() {
        let dir = tempfile::tempdir().unwrap();
        let e = write_clip(dir.path(), 16, 60, 80, |f, p| ((f * 7 + p * 13) % 256) as u8);
        let v = load_clip(&e, &ClipSpec::default()).unwrap();
        for f in 0..16 {
            for p in 0..4800 {
                assert_eq!(v.as_slice()[f * 4800 + p], ((f * 7 + p * 13) % 256) as f64 / 255.0);
            }
        }
    }

    #[test]
    fn constant_gray_source() {
        let dir = tempfile::tempdir().unwrap();
        let e = write_clip(dir.path(), 20, 90, 120, |_, _| 77);
        let v = load_clip(&e, &ClipSpec::default()).unwrap();
        assert!(v.as_slice().iter().all(|&x| x == 77.0 / 255.0));
    }

    #[test]
    fn too_few_frames() {
        let dir = tempfile::tempdir().unwrap();
        let e = write_clip(dir.path(), 5, 4, 4, |_, _| 0);
        assert!(matches!(
            load_clip(&e, &ClipSpec::default()),
            Err(Error::Ingestion { .. })
        ));
    }

    #[test]
    fn undecodable_frame_names_file() {
        let dir = tempfile::tempdir().unwrap();
        let mut e = write_clip(dir.path(), 16, 4, 4, |_, _| 0);
        std::fs::write(&e.frames[5], b"garbage").unwrap();
        e.frames[5] = e.frames[5].clone();
        let spec = ClipSpec {
            num_frames: 16,
            height: 4,
            width: 4,
        };
        let err = load_clip(&e, &spec).unwrap_err().to_string();
        assert!(err.contains("frame_005.pgm"), "{err}");
    }
}

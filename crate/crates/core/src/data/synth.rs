//! Seeded synthetic motion-direction clips.
//!
//! Every frame shows a grid of thin bright bars, one horizontal and one
//! vertical set, over a noisy dark background. For `up`/`down` the
//! horizontal set moves and the vertical one is static; for `left`/`right`
//! it is the other way round. A single frame therefore carries no class
//! information, only the motion does.

use std::fs;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::{ClipSpec, DatasetManifest, ManifestEntry, MOTION_CLASSES, NUM_SUBJECTS};
use crate::cnn::Sample;
use crate::spectral::VideoVolume;
use crate::Result;

#[derive(Debug, Clone)]
pub struct SynthDataset {
    pub manifest: DatasetManifest,
    pub samples: Vec<Sample>,
    /// Raw 8-bit frames per clip, row-major.
    pub frames: Vec<Vec<Vec<u8>>>,
    pub spec: ClipSpec,
}

const BAR_LEVEL: (f64, f64) = (200.0, 250.0);
const BACKGROUND: (f64, f64) = (1.0, 4.0);
const NOISE: f64 = 2.0;
const PERIOD: f64 = 24.0;
const THICKNESS: (f64, f64) = (1.0, 2.0);
const SPEED: (f64, f64) = (1.5, 3.0);

/// Evenly spaced parallel bars of one orientation.
struct Bars {
    phase: f64,
    thickness: f64,
    level: f64,
}

impl Bars {
    fn random(rng: &mut ChaCha8Rng) -> Self {
        Self {
            phase: rng.gen_range(0.0..PERIOD),
            thickness: rng.gen_range(THICKNESS.0..THICKNESS.1),
            level: rng.gen_range(BAR_LEVEL.0..BAR_LEVEL.1),
        }
    }

    fn covers(&self, i: usize) -> bool {
        (i as f64 - self.phase).rem_euclid(PERIOD) < self.thickness
    }
}

fn render(rng: &mut ChaCha8Rng, class: usize, spec: &ClipSpec) -> Vec<Vec<u8>> {
    let (h, w) = (spec.height, spec.width);
    // rows: bars along the width, stepping in y; cols: bars stepping in x
    let mut rows = Bars::random(rng);
    let mut cols = Bars::random(rng);
    let speed = rng.gen_range(SPEED.0..SPEED.1);
    let velocity = match class {
        0 => (-speed, 0.0), // up
        1 => (speed, 0.0),  // down
        2 => (0.0, -speed), // left
        _ => (0.0, speed),  // right
    };
    let background: f64 = rng.gen_range(BACKGROUND.0..BACKGROUND.1);
    let mut frames = Vec::with_capacity(spec.num_frames);
    for _ in 0..spec.num_frames {
        let on_col: Vec<bool> = (0..w).map(|x| cols.covers(x)).collect();
        let mut px = Vec::with_capacity(h * w);
        for y in 0..h {
            let on_row = rows.covers(y);
            for &on_c in &on_col {
                let mut v: f64 = background + rng.gen_range(-NOISE..NOISE);
                if on_row {
                    v = v.max(rows.level);
                }
                if on_c {
                    v = v.max(cols.level);
                }
                px.push(v.round().clamp(0.0, 255.0) as u8);
            }
        }
        frames.push(px);
        rows.phase += velocity.0;
        cols.phase += velocity.1;
    }
    frames
}

/// `per_class` clips of each motion class, interleaved by class so every
/// prefix is balanced. Clip `j` is attributed to subject `j % 25 + 1`.
pub fn synth_dataset(seed: u64, per_class: usize, spec: &ClipSpec) -> Result<SynthDataset> {
    spec.validate()?;
    if per_class == 0 {
        return Err(crate::Error::Parameter("per_class must be at least 1".into()));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut entries = Vec::new();
    let mut samples = Vec::new();
    let mut frames = Vec::new();
    for j in 0..per_class {
        for (label, class) in MOTION_CLASSES.iter().enumerate() {
            let clip = render(&mut rng, label, spec);
            let data = clip.iter().flatten().map(|&b| b as f64 / 255.0).collect();
            samples.push(Sample {
                video: VideoVolume::new(spec.shape(), 1, data)?,
                label,
            });
            let id = format!("{class}_{j:03}");
            entries.push(ManifestEntry {
                pattern: format!("frames/{id}/frame_*.pgm"),
                id,
                subject: (j as u32) % NUM_SUBJECTS + 1,
                class: class.to_string(),
                label,
                frames: Vec::new(),
            });
            frames.push(clip);
        }
    }
    Ok(SynthDataset {
        manifest: DatasetManifest {
            classes: MOTION_CLASSES.iter().map(|s| s.to_string()).collect(),
            entries,
        },
        samples,
        frames,
        spec: *spec,
    })
}

/// Writes frames and `manifest.tsv` under `out_dir`; returns the manifest
/// path.
pub fn write_dataset(data: &SynthDataset, out_dir: &Path) -> Result<std::path::PathBuf> {
    for (entry, clip) in data.manifest.entries.iter().zip(&data.frames) {
        let dir = out_dir.join("frames").join(&entry.id);
        fs::create_dir_all(&dir)?;
        for (f, px) in clip.iter().enumerate() {
            super::write_pgm(
                &dir.join(format!("frame_{f:03}.pgm")),
                data.spec.width,
                data.spec.height,
                px,
            )?;
        }
    }
    let path = out_dir.join("manifest.tsv");
    let mut text = String::from("# id\tsubject\tclass\tframe pattern\n");
    text.push_str(&data.manifest.to_text());
    fs::write(&path, text)?;
    Ok(path)
}

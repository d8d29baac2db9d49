//! Dataset ingestion: PGM frame sequences listed in a tab-separated
//! manifest, subject-disjoint splitting, clip sampling/resizing, and a
//! seeded synthetic motion-direction dataset.

mod clip;
mod manifest;
mod pgm;
mod synth;

pub use clip::{load_clip, load_samples, resize_bilinear, sample_indices, ClipSpec};
pub use manifest::{
    split_by_subject, DatasetManifest, ManifestEntry, Split, Splits, KTH_CLASSES, MOTION_CLASSES,
    NUM_SUBJECTS,
};
pub use pgm::{read_pgm, write_pgm, Frame};
pub use synth::{synth_dataset, write_dataset, SynthDataset};

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use crate::{Error, Result};

pub const KTH_CLASSES: [&str; 4] = ["clapping", "waving", "boxing", "running"];
pub const MOTION_CLASSES: [&str; 4] = ["up", "down", "left", "right"];
pub const NUM_SUBJECTS: u32 = 25;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Split {
    Train,
    Validation,
    Test,
}

impl Split {
    /// Subjects 1-12 train, 13-16 validation, 17-25 test.
    pub fn for_subject(subject: u32) -> Result<Self> {
        match subject {
            1..=12 => Ok(Self::Train),
            13..=16 => Ok(Self::Validation),
            17..=25 => Ok(Self::Test),
            _ => Err(Error::Manifest(format!(
                "subject {subject} outside 1..={NUM_SUBJECTS}"
            ))),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ManifestEntry {
    pub id: String,
    pub subject: u32,
    pub class: String,
    pub label: usize,
    /// Frame pattern as written in the manifest.
    pub pattern: String,
    /// Frames matching the pattern, sorted by path.
    pub frames: Vec<PathBuf>,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct DatasetManifest {
    /// Class names; labels index into this list.
    pub classes: Vec<String>,
    pub entries: Vec<ManifestEntry>,
}

/// Known class vocabularies keep their canonical order; anything else is
/// sorted alphabetically.
fn infer_classes(names: &[&str]) -> Vec<String> {
    for set in [&KTH_CLASSES, &MOTION_CLASSES] {
        if names.iter().all(|n| set.contains(n)) {
            return set.iter().map(|s| s.to_string()).collect();
        }
    }
    let mut v: Vec<String> = names.iter().map(|s| s.to_string()).collect();
    v.sort();
    v.dedup();
    v
}

impl DatasetManifest {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn class_names(&self) -> Vec<&str> {
        self.classes.iter().map(String::as_str).collect()
    }

    /// Parses manifest text; frame patterns are resolved relative to `base`.
    pub fn parse(text: &str, base: &Path) -> Result<Self> {
        let mut rows = Vec::new();
        for (n, line) in text.lines().enumerate() {
            let line = line.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let fields: Vec<&str> = line.split('\t').collect();
            if fields.len() != 4 {
                return Err(Error::Manifest(format!(
                    "line {}: expected 4 tab-separated fields, got {}",
                    n + 1,
                    fields.len()
                )));
            }
            let subject: u32 = fields[1].trim().parse().map_err(|_| {
                Error::Manifest(format!("line {}: bad subject {:?}", n + 1, fields[1]))
            })?;
            Split::for_subject(subject)?;
            rows.push((fields[0].to_string(), subject, fields[2].to_string(), fields[3].to_string()));
        }
        let names: Vec<&str> = rows.iter().map(|r| r.2.as_str()).collect();
        let classes = infer_classes(&names);
        let entries = rows
            .into_iter()
            .map(|(id, subject, class, pattern)| {
                let label = classes.iter().position(|c| *c == class).expect("class listed");
                let frames = resolve(base, &pattern)?;
                Ok(ManifestEntry {
                    id,
                    subject,
                    class,
                    label,
                    pattern,
                    frames,
                })
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(Self { classes, entries })
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)?;
        let base = path.parent().unwrap_or_else(|| Path::new("."));
        Self::parse(&text, base)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for e in &self.entries {
            writeln!(out, "{}\t{}\t{}\t{}", e.id, e.subject, e.class, e.pattern)
                .expect("string write");
        }
        out
    }

    fn filtered(&self, split: Split) -> Self {
        Self {
            classes: self.classes.clone(),
            entries: self
                .entries
                .iter()
                .filter(|e| Split::for_subject(e.subject).ok() == Some(split))
                .cloned()
                .collect(),
        }
    }
}

fn resolve(base: &Path, pattern: &str) -> Result<Vec<PathBuf>> {
    let full = base.join(pattern);
    let full = full.to_string_lossy();
    let paths = glob::glob(&full)
        .map_err(|e| Error::Manifest(format!("bad frame pattern {pattern:?}: {e}")))?;
    let mut frames: Vec<PathBuf> = paths.filter_map(|p| p.ok()).collect();
    frames.sort();
    Ok(frames)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Splits {
    pub train: DatasetManifest,
    pub validation: DatasetManifest,
    pub test: DatasetManifest,
}

/// Subject-disjoint partition: 1-12 train, 13-16 validation, 17-25 test.
pub fn split_by_subject(manifest: &DatasetManifest) -> Result<Splits> {
    for e in &manifest.entries {
        Split::for_subject(e.subject)?;
    }
    Ok(Splits {
        train: manifest.filtered(Split::Train),
        validation: manifest.filtered(Split::Validation),
        test: manifest.filtered(Split::Test),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn entry(id: &str, subject: u32, class: &str) -> ManifestEntry {
        ManifestEntry {
            id: id.into(),
            subject,
            class: class.into(),
            label: KTH_CLASSES.iter().position(|c| *c == class).unwrap(),
            pattern: format!("{id}/*.pgm"),
            frames: Vec::new(),
        }
    }

    fn kth_like() -> DatasetManifest {
        let mut entries = Vec::new();
        for class in KTH_CLASSES {
            for subject in 1..=25 {
                for scenario in 1..=4 {
                    entries.push(entry(&format!("person{subject:02}_{class}_d{scenario}"), subject, class));
                }
            }
        }
        DatasetManifest {
            classes: KTH_CLASSES.iter().map(|s| s.to_string()).collect(),
            entries,
        }
    }

    #[test]
    fn full_protocol_sizes() {
        let m = kth_like();
        assert_eq!(m.len(), 400);
        let s = split_by_subject(&m).unwrap();
        assert_eq!(s.train.len(), 192);
        assert_eq!(s.validation.len(), 64);
        assert_eq!(s.test.len(), 144);
    }

    #[test]
    fn empty_manifest_splits_empty() {
        let s = split_by_subject(&DatasetManifest::default()).unwrap();
        assert!(s.train.is_empty() && s.validation.is_empty() && s.test.is_empty());
    }

    #[test]
    fn subject_13_is_validation() {
        let m = DatasetManifest {
            classes: vec![],
            entries: vec![entry("a", 13, "boxing")],
        };
        let s = split_by_subject(&m).unwrap();
        assert_eq!(s.validation.len(), 1);
        assert!(s.train.is_empty() && s.test.is_empty());
    }

    #[test]
    fn out_of_range_subject() {
        let m = DatasetManifest {
            classes: vec![],
            entries: vec![entry("a", 26, "boxing")],
        };
        assert!(matches!(split_by_subject(&m), Err(Error::Manifest(_))));
        assert!(DatasetManifest::parse("a\t0\tboxing\tx/*.pgm\n", Path::new(".")).is_err());
    }

    #[test]
    fn parse_and_format() {
        let dir = tempfile::tempdir().unwrap();
        for i in [2, 0, 1] {
            fs::create_dir_all(dir.path().join("c1")).unwrap();
            fs::write(dir.path().join(format!("c1/f{i}.pgm")), b"").unwrap();
        }
        let text = "# comment\nc1\t3\trunning\tc1/f*.pgm\nc2\t20\tclapping\tc2/*.pgm\n";
        let m = DatasetManifest::parse(text, dir.path()).unwrap();
        assert_eq!(m.classes, KTH_CLASSES.to_vec());
        assert_eq!(m.entries[0].label, 3);
        assert_eq!(m.entries[0].frames.len(), 3);
        assert!(m.entries[0].frames[0].ends_with("f0.pgm"));
        assert!(m.entries[1].frames.is_empty());
        assert_eq!(m.to_text(), text.lines().skip(1).map(|l| format!("{l}\n")).collect::<String>());
        assert!(DatasetManifest::parse("a\t1\tup\n", dir.path()).is_err());
    }

    #[test]
    fn custom_classes_sorted() {
        let m = DatasetManifest::parse("a\t1\tzeta\tx\nb\t2\talpha\ty\n", Path::new(".")).unwrap();
        assert_eq!(m.classes, vec!["alpha", "zeta"]);
        assert_eq!(m.entries[0].label, 1);
    }
}

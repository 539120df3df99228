//! Dataset discovery and the stratified train/test split.

use std::fs;
use std::path::{Path, PathBuf};

use rand::seq::SliceRandom;

use crate::error::{Error, Result};
use crate::rng::{stream, stream_rng};

pub const IMAGE_EXTENSIONS: [&str; 5] = ["png", "jpg", "jpeg", "pgm", "ppm"];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetEntry {
    pub path: PathBuf,
    /// `<class dir>/<file name>`, used as the image id in exports.
    pub id: String,
    pub class: usize,
}

/// Images grouped by class; class indices follow sorted directory names.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DatasetIndex {
    pub class_names: Vec<String>,
    pub entries: Vec<DatasetEntry>,
}

impl DatasetIndex {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn class_counts(&self) -> Vec<usize> {
        let mut counts = vec![0; self.class_names.len()];
        for e in &self.entries {
            counts[e.class] += 1;
        }
        counts
    }
}

fn is_image(path: &Path) -> bool {
    path.is_file()
        && path
            .extension()
            .and_then(|e| e.to_str())
            .is_some_and(|e| IMAGE_EXTENSIONS.contains(&e.to_ascii_lowercase().as_str()))
}

fn sorted_children(dir: &Path) -> Result<Vec<PathBuf>> {
    let io = |source| Error::Io {
        path: dir.to_path_buf(),
        source,
    };
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).map_err(io)? {
        let path = entry.map_err(io)?.path();
        let hidden = path
            .file_name()
            .and_then(|n| n.to_str())
            .is_none_or(|n| n.starts_with('.'));
        if !hidden {
            out.push(path);
        }
    }
    out.sort();
    Ok(out)
}

/// Indexes `root/<class>/<image>`; files without an image extension are skipped.
pub fn ingest_dataset(root: impl AsRef<Path>) -> Result<DatasetIndex> {
    let root = root.as_ref();
    if !root.is_dir() {
        return Err(Error::MissingRoot(root.to_path_buf()));
    }
    let mut class_names = Vec::new();
    let mut entries = Vec::new();
    for dir in sorted_children(root)?.into_iter().filter(|p| p.is_dir()) {
        let class = class_names.len();
        let name = dir
            .file_name()
            .and_then(|n| n.to_str())
            .ok_or_else(|| Error::InvalidParameter(format!("non-UTF-8 class directory {}", dir.display())))?
            .to_string();
        let images: Vec<PathBuf> = sorted_children(&dir)?.into_iter().filter(|p| is_image(p)).collect();
        if images.is_empty() {
            return Err(Error::EmptyClass(dir));
        }
        for path in images {
            let file = path.file_name().and_then(|n| n.to_str()).unwrap_or_default();
            entries.push(DatasetEntry {
                id: format!("{name}/{file}"),
                path,
                class,
            });
        }
        class_names.push(name);
    }
    if class_names.is_empty() {
        return Err(Error::EmptyClass(root.to_path_buf()));
    }
    Ok(DatasetIndex {
        class_names,
        entries,
    })
}

/// Entry indices (ascending) of the two halves of a split.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub test: Vec<usize>,
}

/// Per class: seeded shuffle, then the first `ceil(ratio * n_c)` go to
/// training, capped at `n_c - 1` so every class keeps a test image.
pub fn stratified_split(idx: &DatasetIndex, ratio: f64, seed: u64) -> Result<SplitIndices> {
    if !(ratio > 0.0 && ratio < 1.0) {
        return Err(Error::InvalidParameter(format!("split ratio {ratio} outside (0, 1)")));
    }
    let mut train = Vec::new();
    let mut test = Vec::new();
    for (class, name) in idx.class_names.iter().enumerate() {
        let mut members: Vec<usize> = idx
            .entries
            .iter()
            .enumerate()
            .filter(|(_, e)| e.class == class)
            .map(|(i, _)| i)
            .collect();
        let n = members.len();
        if n < 2 {
            return Err(Error::ClassTooSmall {
                class: name.clone(),
                count: n,
            });
        }
        members.shuffle(&mut stream_rng(seed, stream::SPLIT_CLASS, class as u64));
        let n_train = ((ratio * n as f64).ceil() as usize).clamp(1, n - 1);
        train.extend_from_slice(&members[..n_train]);
        test.extend_from_slice(&members[n_train..]);
    }
    train.sort_unstable();
    test.sort_unstable();
    Ok(SplitIndices { train, test })
}

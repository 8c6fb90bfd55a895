use std::collections::BTreeMap;

use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::manifest::{ClipEntry, ClipManifest, Split};
use crate::error::{Error, Result};
use crate::seed;

pub const DEFAULT_TRAIN_FRACTION: f64 = 0.8;

/// Train/validation assignment for every clip of a manifest.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SplitAssignment {
    pub seed: u64,
    pub train_fraction: f64,
    pub mapping: BTreeMap<String, Split>,
}

impl SplitAssignment {
    pub fn get(&self, clip_id: &str) -> Split {
        self.mapping.get(clip_id).copied().unwrap_or_default()
    }

    /// Copy of `manifest` with every entry's split set from this assignment.
    pub fn apply(&self, manifest: &ClipManifest) -> ClipManifest {
        let entries: Vec<ClipEntry> = manifest
            .entries()
            .iter()
            .map(|e| ClipEntry {
                split: self.get(&e.id),
                ..e.clone()
            })
            .collect();
        ClipManifest::new(entries).expect("re-splitting a valid manifest keeps it valid")
    }

    pub fn count(&self, split: Split) -> usize {
        self.mapping.values().filter(|&&s| s == split).count()
    }
}

/// Shuffle the original clips with a seeded generator and cut at
/// `round(n * train_fraction)`; augmented clips follow their parent.
pub fn random_split(manifest: &ClipManifest, seed: u64, train_fraction: f64) -> Result<SplitAssignment> {
    if !(train_fraction > 0.0 && train_fraction < 1.0) {
        return Err(Error::InvalidFraction(train_fraction));
    }
    let mut originals: Vec<&str> = manifest.originals().map(|e| e.id.as_str()).collect();
    if originals.is_empty() {
        return Err(Error::EmptyManifest);
    }
    let mut rng = seed::rng(seed::derive(seed, "split", 0));
    originals.shuffle(&mut rng);
    let n_train = (originals.len() as f64 * train_fraction).round() as usize;

    let mut mapping = BTreeMap::new();
    for (i, id) in originals.iter().enumerate() {
        let split = if i < n_train { Split::Train } else { Split::Validation };
        mapping.insert((*id).to_owned(), split);
    }
    for e in manifest.entries() {
        if let Some(parent) = e.provenance.parent_id() {
            let split = mapping[parent];
            mapping.insert(e.id.clone(), split);
        }
    }
    Ok(SplitAssignment {
        seed,
        train_fraction,
        mapping,
    })
}

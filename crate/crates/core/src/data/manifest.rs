//! Clip catalog.
//!
//! On disk a manifest is UTF-8 text with one clip per line and six
//! tab-separated fields:
//!
//! ```text
//! id  media_path  label  split  duration_s  provenance
//! ```
//!
//! `label` is `violent` or `nonviolent`, `split` is `train`, `val` or
//! `unassigned`, and `provenance` is either `original` or
//! `augmented:<parent_id>` optionally followed by `;` and the JSON encoding
//! of the [`ClipAugmentation`] that produced the clip. Blank lines and lines
//! starting with `#` are ignored.

use std::collections::{HashMap, HashSet};
use std::fmt;
use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::augment::ClipAugmentation;
use crate::error::{Error, Result};

pub const HEADER_LINE: &str = "# id\tmedia_path\tlabel\tsplit\tduration_s\tprovenance";

/// Binary class label. The discriminant is the class index used by every
/// classifier head.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Label {
    NonViolent = 0,
    Violent = 1,
}

impl Label {
    pub const ALL: [Label; 2] = [Label::NonViolent, Label::Violent];

    pub fn index(self) -> usize {
        self as usize
    }

    pub fn from_index(index: usize) -> Option<Label> {
        match index {
            0 => Some(Label::NonViolent),
            1 => Some(Label::Violent),
            _ => None,
        }
    }

    pub fn as_str(self) -> &'static str {
        match self {
            Label::NonViolent => "nonviolent",
            Label::Violent => "violent",
        }
    }
}

impl fmt::Display for Label {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Label {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "violent" => Ok(Label::Violent),
            "nonviolent" => Ok(Label::NonViolent),
            other => Err(format!("unknown label `{other}`")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    #[serde(rename = "val")]
    Validation,
    #[default]
    Unassigned,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Validation => "val",
            Split::Unassigned => "unassigned",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Split {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "train" => Ok(Split::Train),
            "val" => Ok(Split::Validation),
            "unassigned" => Ok(Split::Unassigned),
            other => Err(format!("unknown split `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum Provenance {
    Original,
    Augmented {
        parent_id: String,
        /// Replayable description of the operators applied, when known.
        spec: Option<Box<ClipAugmentation>>,
    },
}

impl Provenance {
    pub fn parent_id(&self) -> Option<&str> {
        match self {
            Provenance::Original => None,
            Provenance::Augmented { parent_id, .. } => Some(parent_id),
        }
    }

    pub fn is_original(&self) -> bool {
        matches!(self, Provenance::Original)
    }

    fn encode(&self) -> String {
        match self {
            Provenance::Original => "original".to_owned(),
            Provenance::Augmented { parent_id, spec } => match spec {
                None => format!("augmented:{parent_id}"),
                Some(spec) => format!(
                    "augmented:{parent_id};{}",
                    serde_json::to_string(spec).expect("augmentation spec serializes")
                ),
            },
        }
    }

    fn decode(field: &str) -> std::result::Result<Self, String> {
        if field == "original" {
            return Ok(Provenance::Original);
        }
        let rest = field
            .strip_prefix("augmented:")
            .ok_or_else(|| format!("unknown provenance `{field}`"))?;
        let (parent_id, spec) = match rest.split_once(';') {
            None => (rest, None),
            Some((parent, json)) => {
                let spec: ClipAugmentation = serde_json::from_str(json)
                    .map_err(|e| format!("bad augmentation spec: {e}"))?;
                (parent, Some(Box::new(spec)))
            }
        };
        validate_id(parent_id)?;
        Ok(Provenance::Augmented {
            parent_id: parent_id.to_owned(),
            spec,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClipEntry {
    pub id: String,
    pub media_path: PathBuf,
    pub label: Label,
    pub split: Split,
    pub duration_s: f64,
    pub provenance: Provenance,
}

impl ClipEntry {
    pub fn original(id: impl Into<String>, media_path: impl Into<PathBuf>, label: Label, duration_s: f64) -> Self {
        ClipEntry {
            id: id.into(),
            media_path: media_path.into(),
            label,
            split: Split::Unassigned,
            duration_s,
            provenance: Provenance::Original,
        }
    }

    /// Id of the clip whose media this entry is derived from.
    pub fn source_id(&self) -> &str {
        self.provenance.parent_id().unwrap_or(&self.id)
    }

    fn to_line(&self) -> String {
        format!(
            "{}\t{}\t{}\t{}\t{}\t{}",
            self.id,
            self.media_path.display(),
            self.label,
            self.split,
            self.duration_s,
            self.provenance.encode()
        )
    }

    fn from_line(line: &str) -> std::result::Result<Self, String> {
        let fields: Vec<&str> = line.split('\t').collect();
        if fields.len() != 6 {
            return Err(format!("expected 6 tab-separated fields, found {}", fields.len()));
        }
        validate_id(fields[0])?;
        let duration_s: f64 = fields[4]
            .parse()
            .map_err(|_| format!("bad duration `{}`", fields[4]))?;
        if !(duration_s.is_finite() && duration_s > 0.0) {
            return Err(format!("duration must be positive, got {duration_s}"));
        }
        if fields[1].is_empty() {
            return Err("empty media path".to_owned());
        }
        Ok(ClipEntry {
            id: fields[0].to_owned(),
            media_path: PathBuf::from(fields[1]),
            label: fields[2].parse()?,
            split: fields[3].parse()?,
            duration_s,
            provenance: Provenance::decode(fields[5])?,
        })
    }
}

/// Ids end up in file names and in the provenance field, so the characters
/// used as separators there are rejected.
fn validate_id(id: &str) -> std::result::Result<(), String> {
    if id.is_empty() {
        return Err("empty clip id".to_owned());
    }
    if id.len() > usize::from(u16::MAX) {
        return Err("clip id too long".to_owned());
    }
    if id
        .chars()
        .any(|c| c.is_whitespace() || matches!(c, ';' | '/' | '\\' | ':'))
    {
        return Err(format!("clip id `{id}` contains a reserved character"));
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClipManifest {
    entries: Vec<ClipEntry>,
    class_names: [String; 2],
}

impl ClipManifest {
    /// Build a manifest, checking id uniqueness and parent references.
    pub fn new(entries: Vec<ClipEntry>) -> Result<Self> {
        let mut by_id: HashMap<&str, &ClipEntry> = HashMap::with_capacity(entries.len());
        for e in &entries {
            validate_id(&e.id).map_err(|message| Error::Parse { line: 0, message })?;
            if by_id.insert(&e.id, e).is_some() {
                return Err(Error::DuplicateId(e.id.clone()));
            }
        }
        for e in &entries {
            if let Some(parent) = e.provenance.parent_id() {
                match by_id.get(parent) {
                    Some(p) if p.provenance.is_original() => {
                        if p.label != e.label {
                            return Err(Error::LabelMismatch {
                                id: e.id.clone(),
                                parent: parent.to_owned(),
                            });
                        }
                    }
                    _ => {
                        return Err(Error::DanglingParent {
                            id: e.id.clone(),
                            parent: parent.to_owned(),
                        })
                    }
                }
            }
        }
        Ok(ClipManifest {
            entries,
            class_names: Label::ALL.map(|l| l.as_str().to_owned()),
        })
    }

    pub fn entries(&self) -> &[ClipEntry] {
        &self.entries
    }

    pub fn class_names(&self) -> &[String; 2] {
        &self.class_names
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&ClipEntry> {
        self.entries.iter().find(|e| e.id == id)
    }

    pub fn originals(&self) -> impl Iterator<Item = &ClipEntry> {
        self.entries.iter().filter(|e| e.provenance.is_original())
    }

    /// Original clip count per class, indexed by [`Label::index`].
    pub fn class_counts(&self) -> [usize; 2] {
        let mut counts = [0; 2];
        for e in self.originals() {
            counts[e.label.index()] += 1;
        }
        counts
    }

    pub fn is_balanced(&self) -> bool {
        let [a, b] = self.class_counts();
        a == b
    }

    pub fn in_split(&self, split: Split) -> impl Iterator<Item = &ClipEntry> {
        self.entries.iter().filter(move |e| e.split == split)
    }

    pub fn into_entries(self) -> Vec<ClipEntry> {
        self.entries
    }

    pub fn parse(text: &str) -> Result<Self> {
        let mut entries = Vec::new();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.trim_end_matches('\r');
            if line.trim().is_empty() || line.starts_with('#') {
                continue;
            }
            let entry = ClipEntry::from_line(line).map_err(|message| Error::Parse {
                line: i + 1,
                message,
            })?;
            entries.push(entry);
        }
        ClipManifest::new(entries)
    }

    pub fn to_text(&self) -> String {
        let mut out = String::with_capacity(64 * (self.entries.len() + 1));
        out.push_str(HEADER_LINE);
        out.push('\n');
        for e in &self.entries {
            out.push_str(&e.to_line());
            out.push('\n');
        }
        out
    }

    pub fn save(&self, path: impl AsRef<Path>) -> Result<()> {
        let path = path.as_ref();
        fs::write(path, self.to_text()).map_err(|e| Error::file(path, e))
    }

    /// Ids referenced as parents must exist; returns the set of those ids.
    pub fn parent_ids(&self) -> HashSet<&str> {
        self.entries
            .iter()
            .filter_map(|e| e.provenance.parent_id())
            .collect()
    }
}

pub fn load_manifest(path: impl AsRef<Path>) -> Result<ClipManifest> {
    let path = path.as_ref();
    let text = fs::read_to_string(path).map_err(|e| Error::file(path, e))?;
    ClipManifest::parse(&text)
}

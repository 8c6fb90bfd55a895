//! Dataset catalog, train/validation splits and the embedding store.

pub mod embeddings;
pub mod manifest;
pub mod split;

pub use embeddings::{
    read_embeddings, write_embeddings, EmbeddingRecord, EmbeddingStore, Modality,
};
pub use manifest::{load_manifest, ClipEntry, ClipManifest, Label, Provenance, Split};
pub use split::{random_split, SplitAssignment, DEFAULT_TRAIN_FRACTION};

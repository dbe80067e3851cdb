//! Deterministic ingestion and serialization of representation dumps,
//! alignments, labels, phone inventories, and dataset partitions.
//!
//! All readers are pure and reentrant; distinct files may be read in
//! parallel. All float text output uses Rust's shortest round-trip decimal
//! formatting, and parsing accepts decimal points only (comma decimals are
//! rejected as malformed).

mod corpus;
mod lrep;

pub use corpus::{
    map_sampa_to_ipa, read_alignments, read_label_track, read_labels, read_manifest,
    read_sampa_table, split_by_group, write_alignments, write_labels, write_manifest,
    AlignmentEntry, CorpusError, LabelRecord, LabelSpan, PhoneInventory, UtteranceManifest,
};
pub use lrep::{
    read_repr_tensor, write_repr_tensor, LrepError, ReprTensor, DEFAULT_FRAME_HOP_S,
    DEFAULT_FRAME_OFFSET_S, LREP_MAGIC, LREP_VERSION,
};

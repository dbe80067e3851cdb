//! Analysis toolkit for layer-wise speech-encoder representations.
//!
//! The crate answers the question "what does each encoder layer encode?" for
//! self-supervised speech models. It works from representation dumps on disk
//! rather than running any encoder itself:
//!
//! - [`io`] reads and writes the on-disk formats: the `LREP` binary tensor
//!   container, alignment/label/manifest text files, and phone inventories.
//! - [`pool`] turns frame-level activations into phoneme-level vectors
//!   (central-third pooling) and utterance/window-level vectors.
//! - [`cca`] fits regularized CCA between pooled representations and a target
//!   view, and reports cross-validated projection-weighted CCA scores.
//! - [`dsp`] extracts the 25 paralinguistic low-level descriptors in six
//!   groups (energy, MFCC, pitch, formant, spectral, voice quality) from raw
//!   audio and pools them per utterance.
//! - [`probe`] trains weighted-average-layer classification probes with a
//!   small feed-forward head, multi-task cross-entropy, and new-bob learning
//!   rate annealing.
//! - [`ctc`] scores phone recognition output: greedy CTC decoding, phone
//!   error rate, CTC forward loss, and matched-pairs segment significance
//!   tests between two systems.

pub mod cca;
pub mod ctc;
pub mod dsp;
pub mod io;
pub mod pool;
pub mod probe;

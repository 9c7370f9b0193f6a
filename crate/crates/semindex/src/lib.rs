//! `semindex` builds inverted indexes for approximate nearest-neighbor image
//! retrieval where the partitions come from classifier labels instead of
//! clustering.
//!
//! Database items are stored under their top-`alpha` predicted labels;
//! queries reclaim the posting lists of their top-`beta` labels and re-rank
//! the resulting candidate list, either with exact distances or with residual
//! product-quantization codes scored through lookup tables. Label partitions
//! can be merged (via co-occurrence similarity) to shrink the codebook or
//! split (via k-means sub-cells) to enlarge it and prune at query time.
//!
//! The crate ships:
//!
//! * [`dataset`] — feature/label/ground-truth file formats and a seeded
//!   synthetic generator whose labels track geometric neighborhoods,
//! * [`index`] — the label-partitioned inverted index, label merging and
//!   partition splitting,
//! * [`quant`] — k-means, product quantization, ADC tables and residual
//!   scoring,
//! * [`search`] — exhaustive, IVF, flat-ADC, IVF-ADC, semantic and
//!   semantic-ADC strategies under one ranking contract,
//! * [`eval`] — mAP, recall-at-R, candidate recall, scope ratio and report
//!   emission,
//! * [`persist`] — the on-disk index format,
//! * [`cli`] — the `semindex` binary's subcommands.
//!
//! Every type is immutable after construction and safe to share across
//! threads; all randomness flows from explicit seeds, so equal inputs give
//! byte-identical outputs.

pub mod cli;
pub mod dataset;
pub mod error;
pub mod eval;
mod fio;
pub mod index;
pub mod math;
pub mod persist;
pub mod quant;
pub mod search;

pub use error::{Error, Result};

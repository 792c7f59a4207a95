//! Word-aligned cross-lingual sentence embedding at desk scale.
//!
//! The crate covers the whole pipeline: synthetic parallel corpora with gold
//! word alignments ([`corpus`]), alignment dictionaries from gold links, an
//! IBM Model 1 aligner or files ([`alignment`]), a small transformer encoder
//! with hand-written backward pass ([`encoder`]), the sentence- and
//! word-level training objectives ([`objectives`]), an AdamW training loop
//! with dev-set checkpoint selection ([`trainer`]) and evaluation metrics
//! ([`evaluation`]).

pub mod corpus;
pub mod alignment;
pub mod encoder;
pub mod objectives;
pub mod evaluation;
pub mod trainer;

//! Deterministic tooling for turning frame-level instrument annotation streams
//! into spatial-temporal question answering datasets, and for scoring free-text
//! predictions against the generated gold payloads.
//!
//! The pipeline runs in stages, each usable on its own:
//!
//! 1. [`events`]: validate raw annotation records, densify sparse labels onto a
//!    frame grid, cut videos into fixed-length clips, and quantize geometry.
//! 2. [`tracks`]: associate per-frame detections into instrument tracks and
//!    derive continuity, kinematics, and interaction structure from them.
//! 3. [`qa`]: instantiate task templates over the tracked scene, producing
//!    question/answer pairs with machine-readable gold payloads.
//! 4. [`parse`] and [`metrics`]: recover structured fields from free-text
//!    predictions and score them against gold, aggregating into a report.
//! 5. [`synth`]: scripted scenes with closed-form motion, used to cross-check
//!    the whole pipeline against analytically derived answers.
//!
//! Every stage is deterministic: all randomness flows from an explicit seed,
//! maps iterate in key order, and emitted files are byte-stable for a fixed
//! input and seed.

// Validation guards use `!(a < b)` so that NaN fails them.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod events;
pub mod metrics;
pub mod parse;
pub mod qa;
pub mod report;
pub mod store;
pub mod synth;
pub mod tracks;
pub mod vocab;

/// Stable 64-bit hash used to derive per-clip and per-subtask seeds from the
/// master seed. FNV-1a over the little-endian seed bytes and the key string;
/// fixed constants, no platform dependence.
pub fn stable_seed(master_seed: u64, key: &str) -> u64 {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    let mut h = OFFSET;
    for b in master_seed.to_le_bytes().iter().chain(key.as_bytes()) {
        h ^= u64::from(*b);
        h = h.wrapping_mul(PRIME);
    }
    h
}

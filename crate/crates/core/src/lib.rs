//! License identification over git repositories.
//!
//! Candidate "license" files are discovered across a repository's full
//! history, fingerprinted with winnowing, and matched against a corpus of
//! known licenses (SPDX, OSI, or plain-text directories) by set-overlap
//! score. Matches at or above the threshold (default 0.85) become rows of
//! a project-to-license map with commit-month timestamps.
//!
//! With the default `parallel` feature, fingerprinting and matching fan out
//! over rayon; disabling it gives a sequential build with identical output.

pub mod corpus;
pub mod error;
pub mod fingerprint;
pub mod gitscan;
pub mod matcher;
pub mod metrics;
pub mod p2l;
pub mod parallel;
pub mod pipeline;

pub use error::{Error, Result};
pub use fingerprint::{FingerprintSet, WinnowParams};
pub use matcher::{MatchOutcome, MatchResult, DEFAULT_THRESHOLD};

//! Scoring candidate fingerprint sets against the corpus, threshold
//! classification, and score-bucket reporting.
//!
//! The matching score between two signature sets A and B is
//! `c(A ∩ B) / c(A ∪ B)` over distinct signatures. A blob counts as matched
//! when it shares at least one signature with some known license; it is
//! classified Matched only when its best score meets the threshold
//! (inclusive, default 0.85).

use std::collections::HashMap;
use std::fmt::Write as _;

use crate::corpus::Corpus;
use crate::error::{Error, Result};
use crate::fingerprint::FingerprintSet;
use crate::parallel;

pub const DEFAULT_THRESHOLD: f64 = 0.85;

/// Best-match outcome for one candidate set.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchResult {
    pub license_id: String,
    pub score: f64,
    pub shared: usize,
    pub union_count: usize,
    pub blob_signature_count: usize,
}

/// Set-overlap score `c(A ∩ B) / c(A ∪ B)`; 0 when both sets are empty.
pub fn score(a: &FingerprintSet, b: &FingerprintSet) -> f64 {
    let union = a.union_count(b);
    if union == 0 {
        return 0.0;
    }
    a.shared_count(b) as f64 / union as f64
}

/// Inverted index from signature to corpus entry indices. Only entries
/// sharing at least one signature with the candidate can score above zero,
/// so exhaustive scoring over the candidate list is behaviorally identical
/// to scoring the whole corpus.
pub struct CorpusIndex<'a> {
    corpus: &'a Corpus,
    by_signature: HashMap<u64, Vec<u32>>,
}

impl<'a> CorpusIndex<'a> {
    pub fn build(corpus: &'a Corpus) -> Self {
        let mut by_signature: HashMap<u64, Vec<u32>> = HashMap::new();
        for (i, entry) in corpus.entries().iter().enumerate() {
            for sig in entry.fingerprints.iter() {
                by_signature.entry(sig).or_default().push(i as u32);
            }
        }
        CorpusIndex {
            corpus,
            by_signature,
        }
    }

    pub fn corpus(&self) -> &'a Corpus {
        self.corpus
    }

    /// Find the corpus entry with the maximum score. Returns `None` when no
    /// entry shares a signature. Ties broken by larger shared count, then
    /// lexicographically smallest license id.
    pub fn best_match(&self, blob: &FingerprintSet) -> Result<Option<MatchResult>> {
        if self.corpus.is_empty() {
            return Err(Error::EmptyCorpus);
        }
        let mut candidates: Vec<u32> = blob
            .iter()
            .filter_map(|sig| self.by_signature.get(&sig))
            .flatten()
            .copied()
            .collect();
        candidates.sort_unstable();
        candidates.dedup();

        let mut best: Option<MatchResult> = None;
        for idx in candidates {
            let entry = &self.corpus.entries()[idx as usize];
            let shared = blob.shared_count(&entry.fingerprints);
            debug_assert!(shared > 0);
            let union = blob.size() + entry.fingerprints.size() - shared;
            let result = MatchResult {
                license_id: entry.license_id.clone(),
                score: shared as f64 / union as f64,
                shared,
                union_count: union,
                blob_signature_count: blob.size(),
            };
            let better = match &best {
                None => true,
                Some(b) => {
                    (result.score, result.shared, &b.license_id)
                        > (b.score, b.shared, &result.license_id)
                }
            };
            if better {
                best = Some(result);
            }
        }
        Ok(best)
    }
}

/// Exhaustive best-match over every corpus entry. Oracle counterpart of the
/// indexed path; kept for property testing.
pub fn best_match_exhaustive(
    blob: &FingerprintSet,
    corpus: &Corpus,
) -> Result<Option<MatchResult>> {
    if corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    let mut best: Option<MatchResult> = None;
    for entry in corpus.entries() {
        let shared = blob.shared_count(&entry.fingerprints);
        if shared == 0 {
            continue;
        }
        let union = blob.size() + entry.fingerprints.size() - shared;
        let result = MatchResult {
            license_id: entry.license_id.clone(),
            score: shared as f64 / union as f64,
            shared,
            union_count: union,
            blob_signature_count: blob.size(),
        };
        let better = match &best {
            None => true,
            Some(b) => {
                (result.score, result.shared, &b.license_id)
                    > (b.score, b.shared, &result.license_id)
            }
        };
        if better {
            best = Some(result);
        }
    }
    Ok(best)
}

/// Outcome of running one blob through fingerprinting and matching.
#[derive(Debug, Clone, PartialEq)]
pub enum MatchOutcome {
    /// The blob produced no winnowing signatures.
    NoSignatures,
    /// No corpus entry shares a signature with the blob.
    NoMatch,
    /// Best match found (any score > 0).
    Scored(MatchResult),
}

/// Threshold classification of a match outcome.
#[derive(Debug, Clone, PartialEq)]
pub enum Classification {
    Matched { license_id: String, score: f64 },
    BelowThreshold(MatchResult),
    NoMatch,
    NoSignatures,
}

/// Classify an outcome against the threshold. Matched iff score >= threshold
/// (inclusive boundary).
pub fn classify(outcome: &MatchOutcome, threshold: f64) -> Classification {
    assert!(
        threshold > 0.0 && threshold <= 1.0,
        "threshold must be in (0, 1]"
    );
    match outcome {
        MatchOutcome::NoSignatures => Classification::NoSignatures,
        MatchOutcome::NoMatch => Classification::NoMatch,
        MatchOutcome::Scored(m) => {
            if m.score >= threshold {
                Classification::Matched {
                    license_id: m.license_id.clone(),
                    score: m.score,
                }
            } else {
                Classification::BelowThreshold(m.clone())
            }
        }
    }
}

/// Match a batch of blob fingerprint sets against the corpus, in parallel
/// when the `parallel` feature is enabled. Output order follows input order
/// regardless of parallelism.
pub fn match_blobs(index: &CorpusIndex, blobs: &[FingerprintSet]) -> Result<Vec<MatchOutcome>> {
    if index.corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    Ok(parallel::map_slice(blobs, |blob| outcome_for(index, blob)))
}

/// Sequential variant of [`match_blobs`], kept for benchmarking the
/// parallel speedup.
pub fn match_blobs_sequential(
    index: &CorpusIndex,
    blobs: &[FingerprintSet],
) -> Result<Vec<MatchOutcome>> {
    if index.corpus.is_empty() {
        return Err(Error::EmptyCorpus);
    }
    Ok(parallel::map_slice_sequential(blobs, |blob| {
        outcome_for(index, blob)
    }))
}

fn outcome_for(index: &CorpusIndex, blob: &FingerprintSet) -> MatchOutcome {
    if blob.is_empty() {
        return MatchOutcome::NoSignatures;
    }
    match index.best_match(blob).expect("corpus checked non-empty") {
        Some(result) => MatchOutcome::Scored(result),
        None => MatchOutcome::NoMatch,
    }
}

pub const BUCKET_LABELS: [&str; 5] = [
    "S <= 0.2",
    "0.2 < S <= 0.4",
    "0.4 < S <= 0.6",
    "0.6 < S <= 0.8",
    "0.8 < S <= 1",
];

/// Per-bucket counts over score intervals (0,0.2], (0.2,0.4], (0.4,0.6],
/// (0.6,0.8], (0.8,1], with separate unmatched and no-signature tallies and
/// a stratification of matched blobs at 100 signatures.
#[derive(Debug, Clone, Default, PartialEq, Eq)]
pub struct BucketReport {
    pub buckets: [u64; 5],
    pub unmatched: u64,
    pub no_signature: u64,
    /// Matched blobs with <= 100 signatures, bucketed as above.
    pub buckets_le_100: [u64; 5],
    /// Matched blobs with > 100 signatures.
    pub buckets_gt_100: [u64; 5],
}

impl BucketReport {
    pub fn matched_total(&self) -> u64 {
        self.buckets.iter().sum()
    }

    pub fn total(&self) -> u64 {
        self.matched_total() + self.unmatched + self.no_signature
    }

    /// Index of the left-open right-closed interval holding `s` (0 < s <= 1).
    pub fn bucket_index(s: f64) -> usize {
        debug_assert!(s > 0.0 && s <= 1.0);
        if s <= 0.2 {
            0
        } else if s <= 0.4 {
            1
        } else if s <= 0.6 {
            2
        } else if s <= 0.8 {
            3
        } else {
            4
        }
    }

    /// Plain-text rows in the shape of the matching-score table.
    pub fn render_text(&self) -> String {
        let mut out = String::new();
        let total = self.total();
        writeln!(out, "blobs           {total}").unwrap();
        writeln!(out, "no-signature    {}", self.no_signature).unwrap();
        writeln!(out, "unmatched       {}", self.unmatched).unwrap();
        writeln!(out, "matched         {}", self.matched_total()).unwrap();
        for (label, count) in BUCKET_LABELS.iter().zip(self.buckets) {
            writeln!(out, "{label:<15} {count}").unwrap();
        }
        writeln!(out, "matched <=100 signatures: {}", self.buckets_le_100.iter().sum::<u64>())
            .unwrap();
        writeln!(out, "matched  >100 signatures: {}", self.buckets_gt_100.iter().sum::<u64>())
            .unwrap();
        out
    }

    /// Machine-readable key=value lines.
    pub fn render_kv(&self) -> String {
        let keys = ["le_0.2", "0.2_to_0.4", "0.4_to_0.6", "0.6_to_0.8", "0.8_to_1"];
        let mut out = String::new();
        writeln!(out, "total={}", self.total()).unwrap();
        writeln!(out, "no_signature={}", self.no_signature).unwrap();
        writeln!(out, "unmatched={}", self.unmatched).unwrap();
        writeln!(out, "matched={}", self.matched_total()).unwrap();
        for (key, count) in keys.iter().zip(self.buckets) {
            writeln!(out, "bucket.{key}={count}").unwrap();
        }
        for (key, count) in keys.iter().zip(self.buckets_le_100) {
            writeln!(out, "bucket_le_100.{key}={count}").unwrap();
        }
        for (key, count) in keys.iter().zip(self.buckets_gt_100) {
            writeln!(out, "bucket_gt_100.{key}={count}").unwrap();
        }
        out
    }
}

/// Tally match outcomes into a bucket report.
pub fn bucket_report<'a, I>(outcomes: I) -> BucketReport
where
    I: IntoIterator<Item = &'a MatchOutcome>,
{
    let mut report = BucketReport::default();
    for outcome in outcomes {
        match outcome {
            MatchOutcome::NoSignatures => report.no_signature += 1,
            MatchOutcome::NoMatch => report.unmatched += 1,
            MatchOutcome::Scored(m) => {
                let idx = BucketReport::bucket_index(m.score);
                report.buckets[idx] += 1;
                if m.blob_signature_count <= 100 {
                    report.buckets_le_100[idx] += 1;
                } else {
                    report.buckets_gt_100[idx] += 1;
                }
            }
        }
    }
    report
}

//! End-to-end scan pipeline: repositories -> candidate blobs -> matching ->
//! threshold classification -> project-to-license records.

use std::collections::HashMap;
use std::path::PathBuf;

use chrono::{DateTime, Utc};

use crate::corpus::Corpus;
use crate::error::Result;
use crate::fingerprint::{self, FingerprintSet};
use crate::gitscan::{self, BlobRecord, ScanConfig};
use crate::matcher::{self, BucketReport, Classification, CorpusIndex, MatchOutcome};
use crate::p2l::{self, Method, P2LRecord};
use crate::parallel;

#[derive(Debug, Clone)]
pub struct ScanJob {
    pub repo: PathBuf,
    pub project_id: String,
}

#[derive(Debug, Default)]
pub struct ScanSummary {
    pub candidate_blobs: usize,
    pub matched_blobs: usize,
    pub below_threshold: usize,
    pub unmatched: usize,
    pub no_signature: usize,
    pub report: BucketReport,
    pub warnings: Vec<String>,
    /// Repositories that failed outright, with the error text.
    pub failed_repos: Vec<(PathBuf, String)>,
}

pub struct ScanOutput {
    pub records: Vec<P2LRecord>,
    /// Every scanned blob record, for external-detection joins.
    pub blobs: Vec<BlobRecord>,
    pub summary: ScanSummary,
}

/// Run the full pipeline over a set of repositories. Per-repo failures are
/// collected in the summary; remaining repositories are still processed.
/// Matching runs data-parallel over blobs; output is deterministic for
/// fixed inputs and scan time regardless of parallelism degree.
pub fn scan_repos(
    jobs: &[ScanJob],
    corpus: &Corpus,
    cfg: &ScanConfig,
    threshold: f64,
    scan_time: DateTime<Utc>,
) -> Result<ScanOutput> {
    let mut summary = ScanSummary::default();
    let mut blobs: Vec<BlobRecord> = Vec::new();
    let mut contents: Vec<Vec<u8>> = Vec::new();
    for job in jobs {
        let mut warnings = Vec::new();
        match gitscan::scan_repo(&job.repo, &job.project_id, cfg, scan_time, &mut warnings) {
            Ok(records) => {
                for record in records {
                    match gitscan::read_blob(&job.repo, &record.blob_hash) {
                        Ok(data) => {
                            blobs.push(record);
                            contents.push(data);
                        }
                        Err(e) => warnings.push(format!(
                            "{}: blob {} unreadable: {e}",
                            job.repo.display(),
                            record.blob_hash
                        )),
                    }
                }
            }
            Err(e) => summary.failed_repos.push((job.repo.clone(), e.to_string())),
        }
        summary.warnings.extend(warnings);
    }
    summary.candidate_blobs = blobs.len();

    let params = corpus.params();
    let fingerprints: Vec<FingerprintSet> =
        parallel::map_slice(&contents, |data| fingerprint::fingerprint(data, params));

    let index = CorpusIndex::build(corpus);
    let outcomes: Vec<MatchOutcome> = if corpus.is_empty() {
        vec![MatchOutcome::NoMatch; fingerprints.len()]
    } else {
        matcher::match_blobs(&index, &fingerprints)?
    };
    summary.report = matcher::bucket_report(&outcomes);

    let mut matched: Vec<(&BlobRecord, &str)> = Vec::new();
    for (blob, outcome) in blobs.iter().zip(&outcomes) {
        match matcher::classify(outcome, threshold) {
            Classification::Matched { .. } => {
                if let MatchOutcome::Scored(m) = outcome {
                    matched.push((blob, m.license_id.as_str()));
                }
            }
            Classification::BelowThreshold(_) => summary.below_threshold += 1,
            Classification::NoMatch => summary.unmatched += 1,
            Classification::NoSignatures => summary.no_signature += 1,
        }
    }
    summary.matched_blobs = matched.len();
    let records = p2l::build_records(matched, Method::Woc)?;

    Ok(ScanOutput {
        records,
        blobs,
        summary,
    })
}

/// Blob-hash occurrence map over a scan output, for [`p2l::ingest_external`].
pub fn blob_index(blobs: &[BlobRecord]) -> HashMap<&str, Vec<&BlobRecord>> {
    gitscan::blob_index(blobs)
}

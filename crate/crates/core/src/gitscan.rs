//! Git history scanning: find license-path blobs across all refs, attribute
//! commit months, and test presence in the default branch's head tree.
//!
//! Works against local clones (bare or with worktree) by driving the `git`
//! binary; no network access. A blob qualifies as a license candidate when
//! any of its paths contains the filter substring (default "license",
//! case-insensitive). Once a blob qualifies, its appearances under
//! non-matching paths also contribute commit months.

use std::collections::{BTreeMap, BTreeSet, HashMap, HashSet};
use std::path::{Path, PathBuf};
use std::process::Command;

use chrono::{DateTime, TimeZone, Utc};

use crate::error::{Error, Result};

/// One distinct content blob discovered in a repository.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BlobRecord {
    /// Git blob id, hex.
    pub blob_hash: String,
    /// Every path the blob appeared under across history.
    pub paths: BTreeSet<String>,
    pub project_id: String,
    /// Month tokens: "YYYY-MM" or "invalid".
    pub commit_months: BTreeSet<String>,
    /// True iff the blob occurs anywhere in the default branch's head tree.
    pub in_latest: bool,
}

#[derive(Debug, Clone)]
pub struct ScanConfig {
    /// Substring matched case-insensitively against the full file path.
    pub path_filter: String,
    /// When true (default), occurrences of a candidate blob under
    /// non-matching paths also count toward commit months.
    pub include_all_paths_for_known_blobs: bool,
    /// Use committer time instead of author time for months.
    pub use_committer_time: bool,
}

impl Default for ScanConfig {
    fn default() -> Self {
        ScanConfig {
            path_filter: "license".to_string(),
            include_all_paths_for_known_blobs: true,
            use_committer_time: false,
        }
    }
}

/// Format a commit timestamp as a UTC "YYYY-MM" token. Timestamps after
/// `scan_time` or before 1971-01 yield "invalid".
pub fn month_of(epoch_seconds: i64, scan_time: DateTime<Utc>) -> String {
    let Some(ts) = Utc.timestamp_opt(epoch_seconds, 0).single() else {
        return "invalid".to_string();
    };
    let lower = Utc.with_ymd_and_hms(1971, 1, 1, 0, 0, 0).unwrap();
    if ts > scan_time || ts < lower {
        "invalid".to_string()
    } else {
        ts.format("%Y-%m").to_string()
    }
}

fn git(repo: &Path, args: &[&str]) -> Result<Vec<u8>> {
    let output = Command::new("git")
        .arg("-C")
        .arg(repo)
        .args(args)
        .output()
        .map_err(|e| Error::Io {
            path: repo.to_path_buf(),
            source: e,
        })?;
    if !output.status.success() {
        return Err(Error::GitCommand {
            repo: repo.to_path_buf(),
            args: args.join(" "),
            stderr: String::from_utf8_lossy(&output.stderr).trim().to_string(),
        });
    }
    Ok(output.stdout)
}

/// (blob oid, path) entries of a commit's full tree, NUL-delimited so paths
/// never need unquoting.
fn ls_tree(repo: &Path, commitish: &str) -> Result<Vec<(String, String)>> {
    let out = git(repo, &["ls-tree", "-r", "-z", commitish])?;
    let text = String::from_utf8_lossy(&out);
    let mut entries = Vec::new();
    for record in text.split('\0').filter(|r| !r.is_empty()) {
        // "<mode> <type> <oid>\t<path>"
        let Some((meta, path)) = record.split_once('\t') else {
            continue;
        };
        let mut fields = meta.split_whitespace();
        let (Some(_mode), Some(kind), Some(oid)) = (fields.next(), fields.next(), fields.next())
        else {
            continue;
        };
        if kind != "blob" {
            continue;
        }
        entries.push((oid.to_string(), path.to_string()));
    }
    Ok(entries)
}

struct CommitInfo {
    hash: String,
    author_time: i64,
    committer_time: i64,
}

fn list_commits(repo: &Path) -> Result<Vec<CommitInfo>> {
    let out = git(repo, &["log", "--all", "--format=%H %at %ct"])?;
    let text = String::from_utf8_lossy(&out);
    let mut commits = Vec::new();
    for line in text.lines() {
        let mut fields = line.split_whitespace();
        let (Some(hash), Some(at), Some(ct)) = (fields.next(), fields.next(), fields.next())
        else {
            continue;
        };
        let (Ok(author_time), Ok(committer_time)) = (at.parse(), ct.parse()) else {
            continue;
        };
        commits.push(CommitInfo {
            hash: hash.to_string(),
            author_time,
            committer_time,
        });
    }
    Ok(commits)
}

/// Scan one repository: walk every commit reachable from any ref, collect
/// license-candidate blobs, their commit months, and head-tree presence.
/// Individual unreadable objects are skipped with a warning pushed to
/// `warnings`; an unreadable repository is a hard error naming it.
pub fn scan_repo(
    repo: &Path,
    project_id: &str,
    cfg: &ScanConfig,
    scan_time: DateTime<Utc>,
    warnings: &mut Vec<String>,
) -> Result<Vec<BlobRecord>> {
    assert!(!cfg.path_filter.is_empty(), "path_filter must be non-empty");
    git(repo, &["rev-parse", "--git-dir"]).map_err(|e| Error::BadRepo {
        repo: repo.to_path_buf(),
        reason: e.to_string(),
    })?;

    let commits = list_commits(repo)?;
    let filter = cfg.path_filter.to_lowercase();

    // Pass 1: full tree listing per commit; identify candidate blob ids.
    let mut trees: Vec<Vec<(String, String)>> = Vec::with_capacity(commits.len());
    let mut candidates: HashSet<String> = HashSet::new();
    for commit in &commits {
        match ls_tree(repo, &commit.hash) {
            Ok(entries) => {
                for (oid, path) in &entries {
                    if path.to_lowercase().contains(&filter) {
                        candidates.insert(oid.clone());
                    }
                }
                trees.push(entries);
            }
            Err(e) => {
                warnings.push(format!("{}: skipping commit {}: {e}", repo.display(), commit.hash));
                trees.push(Vec::new());
            }
        }
    }

    // Pass 2: attribute months and paths for every occurrence of a candidate.
    let mut records: BTreeMap<String, BlobRecord> = BTreeMap::new();
    for (commit, entries) in commits.iter().zip(&trees) {
        let seconds = if cfg.use_committer_time {
            commit.committer_time
        } else {
            commit.author_time
        };
        let month = month_of(seconds, scan_time);
        for (oid, path) in entries {
            if !candidates.contains(oid) {
                continue;
            }
            let path_matches = path.to_lowercase().contains(&filter);
            if !cfg.include_all_paths_for_known_blobs && !path_matches {
                continue;
            }
            let record = records.entry(oid.clone()).or_insert_with(|| BlobRecord {
                blob_hash: oid.clone(),
                paths: BTreeSet::new(),
                project_id: project_id.to_string(),
                commit_months: BTreeSet::new(),
                in_latest: false,
            });
            record.paths.insert(path.clone());
            record.commit_months.insert(month.clone());
        }
    }

    // Head-tree presence; a repo with no HEAD (empty or detached-to-nothing)
    // simply leaves in_latest false everywhere.
    if let Ok(head_entries) = ls_tree(repo, "HEAD") {
        let head_blobs: HashSet<&str> =
            head_entries.iter().map(|(oid, _)| oid.as_str()).collect();
        for record in records.values_mut() {
            record.in_latest = head_blobs.contains(record.blob_hash.as_str());
        }
    }

    Ok(records.into_values().collect())
}

/// Read a blob's raw contents by id.
pub fn read_blob(repo: &Path, blob_hash: &str) -> Result<Vec<u8>> {
    git(repo, &["cat-file", "blob", blob_hash])
}

/// Derive a project id from a repository path: its directory name.
pub fn project_id_for(repo: &Path) -> String {
    repo.canonicalize()
        .unwrap_or_else(|_| PathBuf::from(repo))
        .file_name()
        .map(|n| n.to_string_lossy().into_owned())
        .unwrap_or_else(|| repo.display().to_string())
}

/// Occurrence map from blob hash to the records that carry it, across many
/// scanned repositories. Used when joining external detections.
pub fn blob_index(records: &[BlobRecord]) -> HashMap<&str, Vec<&BlobRecord>> {
    let mut index: HashMap<&str, Vec<&BlobRecord>> = HashMap::new();
    for record in records {
        index.entry(record.blob_hash.as_str()).or_default().push(record);
    }
    index
}

//! Project-to-license records: building rows from scanned blobs, merging
//! external detections, and the semicolon-separated output format.
//!
//! Each row is `Project_ID;License;Commit_Time` with an optional fourth
//! method field. `Commit_Time` is a "YYYY-MM" month, "invalid" for
//! out-of-range timestamps, or "latest" when the blob is present in the
//! project's head tree. Emission sorts rows lexicographically so output
//! bytes are reproducible.

use std::collections::{BTreeSet, HashMap};
use std::io::{BufRead, Write};
use std::path::Path;

use crate::error::{Error, Result};
use crate::gitscan::BlobRecord;

/// Detection method tag carried in the merged table.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Method {
    /// This tool's winnowing pipeline.
    Woc,
    /// External Software Heritage / ScanCode detections.
    Sh,
}

impl Method {
    pub fn tag(self) -> &'static str {
        match self {
            Method::Woc => "1-WoC",
            Method::Sh => "2-SH",
        }
    }

    pub fn from_tag(tag: &str) -> Option<Method> {
        match tag {
            "1-WoC" => Some(Method::Woc),
            "2-SH" => Some(Method::Sh),
            _ => None,
        }
    }
}

/// One output row. Construction rejects embedded separators, so emitted
/// files always have a fixed field count per line.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct P2LRecord {
    project_id: String,
    license_id: String,
    commit_time: String,
    method: Method,
}

fn check_field(name: &str, value: &str) -> Result<()> {
    if value.is_empty() {
        return Err(Error::InvalidField {
            field: name.to_string(),
            reason: "empty".to_string(),
        });
    }
    if value.contains(';') || value.contains('\n') || value.contains('\r') {
        return Err(Error::InvalidField {
            field: name.to_string(),
            reason: format!("{value:?} contains a separator character"),
        });
    }
    Ok(())
}

fn valid_commit_time(token: &str) -> bool {
    if token == "invalid" || token == "latest" {
        return true;
    }
    // "YYYY-MM"
    let bytes = token.as_bytes();
    bytes.len() == 7
        && bytes[4] == b'-'
        && bytes[..4].iter().all(|b| b.is_ascii_digit())
        && bytes[5..].iter().all(|b| b.is_ascii_digit())
        && (1..=12).contains(&token[5..].parse::<u8>().unwrap_or(0))
}

impl P2LRecord {
    pub fn new(
        project_id: impl Into<String>,
        license_id: impl Into<String>,
        commit_time: impl Into<String>,
        method: Method,
    ) -> Result<P2LRecord> {
        let record = P2LRecord {
            project_id: project_id.into(),
            license_id: license_id.into(),
            commit_time: commit_time.into(),
            method,
        };
        check_field("project_id", &record.project_id)?;
        check_field("license_id", &record.license_id)?;
        if !valid_commit_time(&record.commit_time) {
            return Err(Error::InvalidField {
                field: "commit_time".to_string(),
                reason: format!(
                    "{:?} is not \"YYYY-MM\", \"invalid\" or \"latest\"",
                    record.commit_time
                ),
            });
        }
        Ok(record)
    }

    pub fn project_id(&self) -> &str {
        &self.project_id
    }

    pub fn license_id(&self) -> &str {
        &self.license_id
    }

    pub fn commit_time(&self) -> &str {
        &self.commit_time
    }

    pub fn method(&self) -> Method {
        self.method
    }
}

/// Build records for blobs that carry a Matched classification. Per
/// (project, license): one row per distinct commit month, one "latest" row
/// when any blob is in the head tree, one "invalid" row when any invalid
/// timestamp was seen. Duplicates collapse.
pub fn build_records<'a, I>(matched_blobs: I, method: Method) -> Result<Vec<P2LRecord>>
where
    I: IntoIterator<Item = (&'a BlobRecord, &'a str)>,
{
    let mut rows = BTreeSet::new();
    for (blob, license_id) in matched_blobs {
        for month in &blob.commit_months {
            rows.insert(P2LRecord::new(
                blob.project_id.clone(),
                license_id,
                month.clone(),
                method,
            )?);
        }
        if blob.in_latest {
            rows.insert(P2LRecord::new(
                blob.project_id.clone(),
                license_id,
                "latest",
                method,
            )?);
        }
    }
    Ok(rows.into_iter().collect())
}

/// One external blob-level license detection.
#[derive(Debug, Clone)]
pub struct ExternalDetection {
    pub blob_hash: String,
    pub license_id: String,
    pub confidence: f64,
}

#[derive(Debug, Default, PartialEq, Eq)]
pub struct IngestStats {
    pub admitted: usize,
    pub dropped_low_confidence: usize,
    pub dropped_unknown_blob: usize,
    pub parse_errors: usize,
}

pub const DEFAULT_MIN_CONFIDENCE: f64 = 0.95;

/// Parse an external detections file: header line with columns blob_hash,
/// license_id, confidence (any order), comma- or tab-separated, auto-detected
/// from the header.
pub fn parse_external(path: &Path, warnings: &mut Vec<String>) -> Result<(Vec<ExternalDetection>, usize)> {
    let data = std::fs::read_to_string(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    let mut lines = data.lines().enumerate();
    let Some((_, header)) = lines.next() else {
        return Ok((Vec::new(), 0));
    };
    let delimiter = if header.contains('\t') { b'\t' } else { b',' };
    let columns: Vec<&str> = header.split(delimiter as char).map(str::trim).collect();
    let col = |name: &str| columns.iter().position(|c| *c == name);
    let (Some(hash_col), Some(lic_col), Some(conf_col)) =
        (col("blob_hash"), col("license_id"), col("confidence"))
    else {
        return Err(Error::Parse {
            path: path.to_path_buf(),
            line: 1,
            reason: "header must name blob_hash, license_id and confidence".to_string(),
        });
    };
    let mut detections = Vec::new();
    let mut parse_errors = 0;
    for (i, line) in lines {
        if line.trim().is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(delimiter as char).map(str::trim).collect();
        let parsed = (|| {
            let confidence: f64 = fields.get(conf_col)?.parse().ok()?;
            if !(0.0..=1.0).contains(&confidence) {
                return None;
            }
            Some(ExternalDetection {
                blob_hash: fields.get(hash_col)?.to_string(),
                license_id: fields.get(lic_col)?.to_string(),
                confidence,
            })
        })();
        match parsed {
            Some(d) => detections.push(d),
            None => {
                warnings.push(format!("{}:{}: unparseable line, skipped", path.display(), i + 1));
                parse_errors += 1;
            }
        }
    }
    Ok((detections, parse_errors))
}

/// Join external detections against scanned blob occurrences. Detections
/// below `min_confidence` or with blob hashes absent from every scanned
/// repository are dropped and counted. Admitted detections become records
/// with method 2-SH via the same month/latest/invalid semantics.
pub fn ingest_external(
    detections: &[ExternalDetection],
    blob_index: &HashMap<&str, Vec<&BlobRecord>>,
    min_confidence: f64,
) -> Result<(Vec<P2LRecord>, IngestStats)> {
    let mut stats = IngestStats::default();
    let mut pairs: Vec<(&BlobRecord, &str)> = Vec::new();
    for detection in detections {
        if detection.confidence < min_confidence {
            stats.dropped_low_confidence += 1;
            continue;
        }
        match blob_index.get(detection.blob_hash.as_str()) {
            Some(blobs) => {
                stats.admitted += 1;
                for blob in blobs {
                    pairs.push((blob, detection.license_id.as_str()));
                }
            }
            None => stats.dropped_unknown_blob += 1,
        }
    }
    let records = build_records(pairs, Method::Sh)?;
    Ok((records, stats))
}

/// Concatenate record sets, removing exact duplicates. Method is part of
/// record identity, so rows differing only in method are both kept.
pub fn merge_records(a: Vec<P2LRecord>, b: Vec<P2LRecord>) -> Vec<P2LRecord> {
    let set: BTreeSet<P2LRecord> = a.into_iter().chain(b).collect();
    set.into_iter().collect()
}

/// Write records as semicolon-separated UTF-8 lines with LF endings, sorted
/// lexicographically by (project, license, commit time, method tag) so equal
/// record sets always produce identical bytes.
pub fn emit<W: Write>(records: &[P2LRecord], include_method: bool, out: &mut W) -> Result<()> {
    let mut sorted: Vec<&P2LRecord> = records.iter().collect();
    sorted.sort_by_key(|r| {
        (
            r.project_id.as_str(),
            r.license_id.as_str(),
            r.commit_time.as_str(),
            r.method.tag(),
        )
    });
    sorted.dedup();
    for record in sorted {
        let line = if include_method {
            format!(
                "{};{};{};{}\n",
                record.project_id,
                record.license_id,
                record.commit_time,
                record.method.tag()
            )
        } else {
            format!(
                "{};{};{}\n",
                record.project_id, record.license_id, record.commit_time
            )
        };
        out.write_all(line.as_bytes()).map_err(|e| Error::Io {
            path: "<output>".into(),
            source: e,
        })?;
    }
    Ok(())
}

/// Parse an emitted file back into records. Three-field lines get method
/// 1-WoC (the base format carries no method column).
pub fn parse<R: BufRead>(reader: R, path: &Path) -> Result<Vec<P2LRecord>> {
    let mut records = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line.map_err(|e| Error::Io {
            path: path.to_path_buf(),
            source: e,
        })?;
        if line.is_empty() {
            continue;
        }
        let fields: Vec<&str> = line.split(';').collect();
        let record = match fields.as_slice() {
            [project, license, time] => P2LRecord::new(*project, *license, *time, Method::Woc),
            [project, license, time, tag] => match Method::from_tag(tag) {
                Some(method) => P2LRecord::new(*project, *license, *time, method),
                None => Err(Error::InvalidField {
                    field: "method".to_string(),
                    reason: format!("unknown tag {tag:?}"),
                }),
            },
            _ => Err(Error::InvalidField {
                field: "line".to_string(),
                reason: "expected 3 or 4 semicolon-separated fields".to_string(),
            }),
        };
        records.push(record.map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            reason: e.to_string(),
        })?);
    }
    Ok(records)
}

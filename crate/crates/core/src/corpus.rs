//! Known-license corpus: loading from SPDX / OSI / plain-text sources,
//! merging with text-identity dedup, and a versioned cache file.

use std::collections::HashMap;
use std::fs;
use std::io::{BufReader, BufWriter};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::fingerprint::{self, FingerprintSet, TokenStream, WinnowParams};
use crate::parallel;

pub const CACHE_FORMAT_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Source {
    Spdx,
    Osi,
    Plain,
}

impl Source {
    /// Merge priority: lower wins on text-identical entries.
    fn priority(self) -> u8 {
        match self {
            Source::Spdx => 0,
            Source::Osi => 1,
            Source::Plain => 2,
        }
    }
}

/// One known license with its precomputed fingerprints.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct LicenseEntry {
    pub license_id: String,
    pub name: String,
    pub text: String,
    pub fingerprints: FingerprintSet,
    pub source: Source,
}

/// An id that was dropped during merge because its normalized text was
/// identical to the kept entry's.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Alias {
    pub alias_id: String,
    pub kept_id: String,
}

/// Immutable fingerprint-indexed license corpus. All entries share one
/// (k, w) parameter pair.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Corpus {
    params: WinnowParams,
    entries: Vec<LicenseEntry>,
    aliases: Vec<Alias>,
}

/// Result of a load: the corpus plus skip/warning diagnostics.
#[derive(Debug)]
pub struct Loaded {
    pub corpus: Corpus,
    pub warnings: Vec<String>,
}

impl Corpus {
    pub fn empty(params: WinnowParams) -> Self {
        Corpus {
            params,
            entries: Vec::new(),
            aliases: Vec::new(),
        }
    }

    pub fn params(&self) -> WinnowParams {
        self.params
    }

    pub fn entries(&self) -> &[LicenseEntry] {
        &self.entries
    }

    pub fn aliases(&self) -> &[Alias] {
        &self.aliases
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Build a corpus from (id, name, text) triples, fingerprinting in
    /// parallel. Entries with no signatures or duplicate ids are skipped
    /// with a warning.
    fn from_texts(
        records: Vec<(String, String, String)>,
        source: Source,
        params: WinnowParams,
        warnings: &mut Vec<String>,
    ) -> Corpus {
        let fingerprints: Vec<FingerprintSet> = parallel::map_slice(&records, |(_, _, text)| {
            fingerprint::fingerprint(text.as_bytes(), params)
        });
        let mut corpus = Corpus::empty(params);
        let mut seen: HashMap<String, ()> = HashMap::new();
        for ((license_id, name, text), fp) in records.into_iter().zip(fingerprints) {
            if fp.is_empty() {
                warnings.push(format!("{license_id}: no signatures, skipped"));
                continue;
            }
            if seen.contains_key(&license_id) {
                warnings.push(format!("{license_id}: duplicate id, first kept"));
                continue;
            }
            seen.insert(license_id.clone(), ());
            corpus.entries.push(LicenseEntry {
                license_id,
                name,
                text,
                fingerprints: fp,
                source,
            });
        }
        corpus.entries.sort_by(|a, b| a.license_id.cmp(&b.license_id));
        corpus
    }
}

#[derive(Deserialize)]
struct SpdxDetail {
    #[serde(rename = "licenseId")]
    license_id: String,
    name: Option<String>,
    #[serde(rename = "licenseText")]
    license_text: Option<String>,
}

/// Load a directory of SPDX license-list-data JSON detail records
/// (one `<id>.json` per license with licenseId/name/licenseText fields).
pub fn load_spdx(path: &Path, params: WinnowParams) -> Result<Loaded> {
    let mut warnings = Vec::new();
    let mut records = Vec::new();
    for entry in read_dir_sorted(path)? {
        if entry.extension().and_then(|e| e.to_str()) != Some("json") {
            continue;
        }
        let data = match fs::read(&entry) {
            Ok(d) => d,
            Err(e) => {
                warnings.push(format!("{}: unreadable: {e}", entry.display()));
                continue;
            }
        };
        let detail: SpdxDetail = match serde_json::from_slice(&data) {
            Ok(d) => d,
            Err(e) => {
                warnings.push(format!("{}: malformed record: {e}", entry.display()));
                continue;
            }
        };
        let Some(text) = detail.license_text else {
            warnings.push(format!("{}: missing licenseText, skipped", detail.license_id));
            continue;
        };
        let name = detail.name.unwrap_or_else(|| detail.license_id.clone());
        records.push((detail.license_id, name, text));
    }
    if records.is_empty() {
        warnings.push(format!("{}: no usable SPDX records", path.display()));
    }
    let corpus = Corpus::from_texts(records, Source::Spdx, params, &mut warnings);
    Ok(Loaded { corpus, warnings })
}

#[derive(Deserialize)]
struct OsiLicense {
    id: String,
    name: Option<String>,
    text: Option<String>,
}

/// Load an OSI license JSON export: an array of objects with `id`, `name`
/// and either an embedded `text` field or a companion `<id>.txt` file next
/// to the export.
pub fn load_osi(path: &Path, params: WinnowParams) -> Result<Loaded> {
    let data = fs::read(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    let licenses: Vec<serde_json::Value> =
        serde_json::from_slice(&data).map_err(|e| Error::BadCache {
            path: path.to_path_buf(),
            reason: format!("not a JSON array of licenses: {e}"),
        })?;
    let companion_dir = path.parent().unwrap_or_else(|| Path::new("."));
    let mut warnings = Vec::new();
    let mut records = Vec::new();
    for value in licenses {
        let lic: OsiLicense = match serde_json::from_value(value) {
            Ok(l) => l,
            Err(e) => {
                warnings.push(format!("{}: malformed entry: {e}", path.display()));
                continue;
            }
        };
        let text = match lic.text {
            Some(t) => t,
            None => {
                let companion = companion_dir.join(format!("{}.txt", lic.id));
                match fs::read_to_string(&companion) {
                    Ok(t) => t,
                    Err(_) => {
                        warnings.push(format!("{}: no text available, skipped", lic.id));
                        continue;
                    }
                }
            }
        };
        let name = lic.name.unwrap_or_else(|| lic.id.clone());
        records.push((lic.id, name, text));
    }
    let corpus = Corpus::from_texts(records, Source::Osi, params, &mut warnings);
    Ok(Loaded { corpus, warnings })
}

/// Load a plain directory of `*.txt` files; the basename is the license id.
pub fn load_plain(path: &Path, params: WinnowParams) -> Result<Loaded> {
    let mut warnings = Vec::new();
    let mut records = Vec::new();
    for entry in read_dir_sorted(path)? {
        if entry.extension().and_then(|e| e.to_str()) != Some("txt") {
            continue;
        }
        let Some(id) = entry.file_stem().and_then(|s| s.to_str()) else {
            continue;
        };
        let text = match fs::read_to_string(&entry) {
            Ok(t) => t,
            Err(e) => {
                warnings.push(format!("{}: unreadable: {e}", entry.display()));
                continue;
            }
        };
        if text.trim().is_empty() {
            warnings.push(format!("{id}: empty file, skipped"));
            continue;
        }
        records.push((id.to_string(), id.to_string(), text));
    }
    let corpus = Corpus::from_texts(records, Source::Plain, params, &mut warnings);
    Ok(Loaded { corpus, warnings })
}

/// Merge two corpora built with identical parameters. Entries whose
/// normalized token streams are byte-identical are collapsed, keeping the
/// highest-priority source (SPDX > OSI > plain) and recording the dropped
/// id as an alias. Id collisions with different texts keep the first entry.
pub fn merge_corpora(a: Corpus, b: Corpus, warnings: &mut Vec<String>) -> Result<Corpus> {
    if a.params != b.params {
        return Err(Error::ParamsMismatch {
            left: a.params,
            right: b.params,
        });
    }
    let params = a.params;
    let mut aliases: Vec<Alias> = a.aliases.into_iter().chain(b.aliases).collect();
    let mut by_text: HashMap<TokenStream, LicenseEntry> = HashMap::new();
    let mut ids: HashMap<String, TokenStream> = HashMap::new();
    for entry in a.entries.into_iter().chain(b.entries) {
        let stream = fingerprint::normalize(entry.text.as_bytes());
        if let Some(existing_stream) = ids.get(&entry.license_id) {
            if *existing_stream != stream {
                warnings.push(format!(
                    "{}: id collision with different text, first kept",
                    entry.license_id
                ));
            } else if let Some(kept) = by_text.get(&stream) {
                // Cross-source duplicate of an already-kept entry.
                aliases.push(Alias {
                    alias_id: entry.license_id.clone(),
                    kept_id: kept.license_id.clone(),
                });
            }
            continue;
        }
        match by_text.get_mut(&stream) {
            None => {
                ids.insert(entry.license_id.clone(), stream.clone());
                by_text.insert(stream, entry);
            }
            Some(kept) => {
                if entry.source.priority() < kept.source.priority() {
                    ids.remove(&kept.license_id);
                    ids.insert(entry.license_id.clone(), stream.clone());
                    aliases.push(Alias {
                        alias_id: kept.license_id.clone(),
                        kept_id: entry.license_id.clone(),
                    });
                    *kept = entry;
                } else {
                    aliases.push(Alias {
                        alias_id: entry.license_id,
                        kept_id: kept.license_id.clone(),
                    });
                }
            }
        }
    }
    let mut entries: Vec<LicenseEntry> = by_text.into_values().collect();
    entries.sort_by(|x, y| x.license_id.cmp(&y.license_id));
    aliases.sort_by(|x, y| (&x.alias_id, &x.kept_id).cmp(&(&y.alias_id, &y.kept_id)));
    aliases.dedup();
    Ok(Corpus {
        params,
        entries,
        aliases,
    })
}

#[derive(Serialize, Deserialize)]
struct CacheFile {
    format_version: u32,
    params: WinnowParams,
    entries: Vec<LicenseEntry>,
    aliases: Vec<Alias>,
}

/// Write the corpus to a versioned cache file (JSON with a format-version
/// header field).
pub fn save_cache(corpus: &Corpus, path: &Path) -> Result<()> {
    let file = fs::File::create(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    let cache = CacheFile {
        format_version: CACHE_FORMAT_VERSION,
        params: corpus.params,
        entries: corpus.entries.clone(),
        aliases: corpus.aliases.clone(),
    };
    serde_json::to_writer(BufWriter::new(file), &cache).map_err(|e| Error::BadCache {
        path: path.to_path_buf(),
        reason: e.to_string(),
    })
}

/// Load a corpus cache written by [`save_cache`].
pub fn load_cache(path: &Path) -> Result<Corpus> {
    let file = fs::File::open(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    let cache: CacheFile =
        serde_json::from_reader(BufReader::new(file)).map_err(|e| Error::BadCache {
            path: path.to_path_buf(),
            reason: e.to_string(),
        })?;
    if cache.format_version != CACHE_FORMAT_VERSION {
        return Err(Error::BadCache {
            path: path.to_path_buf(),
            reason: format!(
                "format version {} (expected {})",
                cache.format_version, CACHE_FORMAT_VERSION
            ),
        });
    }
    Ok(Corpus {
        params: cache.params,
        entries: cache.entries,
        aliases: cache.aliases,
    })
}

fn read_dir_sorted(path: &Path) -> Result<Vec<std::path::PathBuf>> {
    let dir = fs::read_dir(path).map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })?;
    let mut paths: Vec<_> = dir
        .filter_map(|e| e.ok())
        .map(|e| e.path())
        .filter(|p| p.is_file())
        .collect();
    paths.sort();
    Ok(paths)
}

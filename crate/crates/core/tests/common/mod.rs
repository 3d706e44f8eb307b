//! Shared test support: independent oracles for winnowing and scoring,
//! formatting perturbations, and scripted git fixture repositories.
//!
//! The oracles here deliberately avoid the library's sliding-window and
//! set-merge code paths so they stay an independent check on them.

#![allow(dead_code)]

use std::collections::HashSet;
use std::path::{Path, PathBuf};
use std::process::Command;

use rand::rngs::StdRng;
use rand::Rng;

use licmap_core::fingerprint::{hash_token, FingerprintSet, TokenStream};

/// Naive winnowing oracle: enumerate every window of `w` k-gram hashes and
/// collect each window's minimum, preferring the rightmost on ties.
pub fn naive_winnow(tokens: &TokenStream, k: usize, w: usize) -> HashSet<u64> {
    let toks = tokens.tokens();
    if toks.len() < k {
        return HashSet::new();
    }
    let hashes: Vec<u64> = toks
        .windows(k)
        .map(|gram| {
            let joined = gram
                .iter()
                .map(String::as_str)
                .collect::<Vec<_>>()
                .join(" ");
            hash_token(&joined)
        })
        .collect();
    let mut selected = HashSet::new();
    let windows: Vec<&[u64]> = if hashes.len() <= w {
        vec![&hashes[..]]
    } else {
        hashes.windows(w).collect()
    };
    for window in windows {
        let mut min_idx = 0;
        for (i, &h) in window.iter().enumerate() {
            if h <= window[min_idx] {
                min_idx = i;
            }
        }
        selected.insert(window[min_idx]);
    }
    selected
}

/// Naive set-overlap score via std HashSet operations.
pub fn naive_score(a: &[u64], b: &[u64]) -> f64 {
    let sa: HashSet<u64> = a.iter().copied().collect();
    let sb: HashSet<u64> = b.iter().copied().collect();
    let union = sa.union(&sb).count();
    if union == 0 {
        return 0.0;
    }
    sa.intersection(&sb).count() as f64 / union as f64
}

pub fn set_of(fp: &FingerprintSet) -> HashSet<u64> {
    fp.iter().collect()
}

/// Random formatting-only perturbation: flip case, insert whitespace runs,
/// and re-wrap lines. Never touches alphanumeric content or token order.
pub fn perturb_formatting(text: &str, rng: &mut StdRng) -> String {
    let mut out = String::with_capacity(text.len() * 2);
    for c in text.chars() {
        if c.is_whitespace() {
            // Replace with a random non-empty whitespace run.
            let n = rng.gen_range(1..=3);
            for _ in 0..n {
                out.push(*[' ', '\t', '\n'].get(rng.gen_range(0..3)).unwrap());
            }
        } else {
            if c.is_ascii_alphabetic() && rng.gen_bool(0.3) {
                if c.is_lowercase() {
                    out.push(c.to_ascii_uppercase());
                } else {
                    out.push(c.to_ascii_lowercase());
                }
            } else {
                out.push(c);
            }
            // Occasionally break the line mid-word boundary is not allowed;
            // insert extra whitespace only after non-alphanumeric chars.
            if !c.is_alphanumeric() && rng.gen_bool(0.1) {
                out.push('\n');
            }
        }
    }
    out
}

/// Scripted git fixture repository builder with controlled author dates.
pub struct FixtureRepo {
    pub path: PathBuf,
}

impl FixtureRepo {
    pub fn init(dir: &Path, name: &str) -> FixtureRepo {
        let path = dir.join(name);
        std::fs::create_dir_all(&path).unwrap();
        run_git(&path, &["init", "-q", "-b", "main"]);
        run_git(&path, &["config", "user.email", "test@example.invalid"]);
        run_git(&path, &["config", "user.name", "Fixture"]);
        FixtureRepo { path }
    }

    pub fn write(&self, rel: &str, contents: &str) {
        let file = self.path.join(rel);
        if let Some(parent) = file.parent() {
            std::fs::create_dir_all(parent).unwrap();
        }
        std::fs::write(file, contents).unwrap();
    }

    pub fn remove(&self, rel: &str) {
        run_git(&self.path, &["rm", "-q", rel]);
    }

    /// Commit everything with the given ISO date used for both author and
    /// committer time.
    pub fn commit(&self, message: &str, date: &str) {
        run_git(&self.path, &["add", "-A"]);
        let status = Command::new("git")
            .arg("-C")
            .arg(&self.path)
            .args(["commit", "-q", "-m", message, "--date", date])
            .env("GIT_COMMITTER_DATE", date)
            .status()
            .unwrap();
        assert!(status.success(), "git commit failed in fixture");
    }

    /// Blob id of a file at HEAD.
    pub fn blob_hash(&self, rel: &str) -> String {
        let out = Command::new("git")
            .arg("-C")
            .arg(&self.path)
            .args(["rev-parse", &format!("HEAD:{rel}")])
            .output()
            .unwrap();
        assert!(out.status.success());
        String::from_utf8(out.stdout).unwrap().trim().to_string()
    }
}

pub fn run_git(repo: &Path, args: &[&str]) {
    let status = Command::new("git")
        .arg("-C")
        .arg(repo)
        .args(args)
        .status()
        .unwrap();
    assert!(status.success(), "git {args:?} failed in {}", repo.display());
}

/// Path to the bundled plain-text license corpus.
pub fn bundled_licenses_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("testdata/licenses")
}

/// SPDX detail directory for corpus tests: `LICMAP_SPDX_DIR` when set
/// (a real license-list-data `json/details` checkout), else the bundled
/// fixture records.
pub fn spdx_dir() -> PathBuf {
    match std::env::var_os("LICMAP_SPDX_DIR") {
        Some(dir) => PathBuf::from(dir),
        None => Path::new(env!("CARGO_MANIFEST_DIR")).join("testdata/spdx"),
    }
}

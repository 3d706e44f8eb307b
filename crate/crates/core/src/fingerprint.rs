//! Text normalization and winnowing fingerprints.
//!
//! A document is normalized into a stream of lowercase alphanumeric word
//! tokens, each k-gram of tokens is hashed, and a sliding window of `w`
//! consecutive hashes keeps the minimum of each window (rightmost on ties).
//! The resulting signature set is what gets compared between documents, so
//! whitespace, line wrapping, and case differences never affect matching.

use std::collections::BTreeSet;

use serde::{Deserialize, Serialize};

/// FNV-1a 64-bit offset basis.
pub const FNV_OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
/// FNV-1a 64-bit prime.
pub const FNV_PRIME: u64 = 0x100_0000_01b3;

/// Byte placed between tokens when hashing a k-gram. Tokens are alphanumeric,
/// so a space can never occur inside one.
const KGRAM_SEPARATOR: u8 = b' ';

/// FNV-1a over a byte slice. Deterministic and platform-independent.
pub fn fnv1a64(bytes: &[u8]) -> u64 {
    let mut hash = FNV_OFFSET;
    for &b in bytes {
        hash ^= u64::from(b);
        hash = hash.wrapping_mul(FNV_PRIME);
    }
    hash
}

/// Hash one normalized token.
pub fn hash_token(token: &str) -> u64 {
    fnv1a64(token.as_bytes())
}

/// Ordered sequence of normalized word tokens.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Default)]
pub struct TokenStream {
    tokens: Vec<String>,
}

impl TokenStream {
    pub fn tokens(&self) -> &[String] {
        &self.tokens
    }

    pub fn len(&self) -> usize {
        self.tokens.len()
    }

    pub fn is_empty(&self) -> bool {
        self.tokens.is_empty()
    }
}

impl From<Vec<String>> for TokenStream {
    fn from(tokens: Vec<String>) -> Self {
        TokenStream { tokens }
    }
}

/// Decode bytes leniently (invalid sequences replaced), lowercase, and split
/// on every character that is not a letter or digit. Total function: the
/// worst case is an empty stream.
pub fn normalize(text: &[u8]) -> TokenStream {
    let decoded = String::from_utf8_lossy(text);
    let tokens = decoded
        .split(|c: char| !c.is_alphanumeric())
        .filter(|s| !s.is_empty())
        .map(|s| s.to_lowercase())
        .collect();
    TokenStream { tokens }
}

/// Winnowing parameters: k-gram size and window size.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct WinnowParams {
    pub k: usize,
    pub w: usize,
}

impl Default for WinnowParams {
    fn default() -> Self {
        WinnowParams { k: 1, w: 8 }
    }
}

impl WinnowParams {
    pub fn new(k: usize, w: usize) -> Self {
        assert!(k >= 1 && w >= 1, "k and w must be >= 1");
        WinnowParams { k, w }
    }
}

/// The set of winnowing signatures of one document. Duplicates collapsed;
/// only cardinalities matter for scoring.
#[derive(Debug, Clone, PartialEq, Eq, Default, Serialize, Deserialize)]
pub struct FingerprintSet {
    signatures: BTreeSet<u64>,
}

impl FingerprintSet {
    pub fn size(&self) -> usize {
        self.signatures.len()
    }

    pub fn is_empty(&self) -> bool {
        self.signatures.is_empty()
    }

    pub fn contains(&self, sig: u64) -> bool {
        self.signatures.contains(&sig)
    }

    pub fn iter(&self) -> impl Iterator<Item = u64> + '_ {
        self.signatures.iter().copied()
    }

    /// Count of signatures present in both sets.
    pub fn shared_count(&self, other: &FingerprintSet) -> usize {
        let (small, large) = if self.size() <= other.size() {
            (self, other)
        } else {
            (other, self)
        };
        small.iter().filter(|s| large.contains(*s)).count()
    }

    /// Count of signatures present in either set.
    pub fn union_count(&self, other: &FingerprintSet) -> usize {
        self.size() + other.size() - self.shared_count(other)
    }
}

impl FromIterator<u64> for FingerprintSet {
    fn from_iter<I: IntoIterator<Item = u64>>(iter: I) -> Self {
        FingerprintSet {
            signatures: iter.into_iter().collect(),
        }
    }
}

/// Hash every k-gram of the token stream. Each k-gram is its tokens joined
/// with a single separator byte, hashed with FNV-1a.
pub fn kgram_hashes(tokens: &TokenStream, k: usize) -> Vec<u64> {
    assert!(k >= 1, "k must be >= 1");
    let toks = tokens.tokens();
    if toks.len() < k {
        return Vec::new();
    }
    if k == 1 {
        return toks.iter().map(|t| hash_token(t)).collect();
    }
    let mut buf = Vec::new();
    toks.windows(k)
        .map(|gram| {
            buf.clear();
            for (i, t) in gram.iter().enumerate() {
                if i > 0 {
                    buf.push(KGRAM_SEPARATOR);
                }
                buf.extend_from_slice(t.as_bytes());
            }
            fnv1a64(&buf)
        })
        .collect()
}

/// Winnow a token stream: slide a window of `w` consecutive k-gram hashes
/// and keep each window's minimum, breaking ties by rightmost position.
/// A hash sequence shorter than `w` is treated as a single window. Fewer
/// than `k` tokens yields an empty set.
pub fn winnow(tokens: &TokenStream, params: WinnowParams) -> FingerprintSet {
    let hashes = kgram_hashes(tokens, params.k);
    winnow_hashes(&hashes, params.w)
}

/// Sliding-window minimum over a hash sequence using a monotonic deque.
/// Popping on `>=` keeps the rightmost occurrence of equal minima.
pub fn winnow_hashes(hashes: &[u64], w: usize) -> FingerprintSet {
    assert!(w >= 1, "w must be >= 1");
    if hashes.is_empty() {
        return FingerprintSet::default();
    }
    if hashes.len() <= w {
        let min = *hashes.iter().min().expect("non-empty");
        return std::iter::once(min).collect();
    }
    let mut selected = BTreeSet::new();
    let mut deque: std::collections::VecDeque<usize> = std::collections::VecDeque::new();
    for (i, &h) in hashes.iter().enumerate() {
        while let Some(&back) = deque.back() {
            if hashes[back] >= h {
                deque.pop_back();
            } else {
                break;
            }
        }
        deque.push_back(i);
        if i + 1 >= w {
            let window_start = i + 1 - w;
            while let Some(&front) = deque.front() {
                if front < window_start {
                    deque.pop_front();
                } else {
                    break;
                }
            }
            selected.insert(hashes[*deque.front().expect("window non-empty")]);
        }
    }
    FingerprintSet {
        signatures: selected,
    }
}

/// Convenience: normalize then winnow in one call.
pub fn fingerprint(text: &[u8], params: WinnowParams) -> FingerprintSet {
    winnow(&normalize(text), params)
}

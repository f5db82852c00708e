//! Deterministic text embedding and an exact cosine top-k role store.
//!
//! Text is embedded as a signed hashed bag of tokens: lowercase, split on
//! non-alphanumeric characters, hash each token with seeded XXH64, add ±1 to
//! bucket `h mod dim` with the sign taken from bit 8 of `h`, then
//! L2-normalize. Retrieval is an exact linear scan.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;

use parking_lot::RwLock;
use serde::{Deserialize, Serialize};
use thiserror::Error;
use xxhash_rust::xxh64::xxh64;

use crate::role_forge::{validate_role, RoleProfile, Violation};

pub const EMBEDDING_SCHEME: &str = "hashed-bow-v1";
pub const DEFAULT_DIM: usize = 256;
pub const DEFAULT_SEED: u64 = 0x5359_4e54_504f_4c4c;
pub const INDEX_FILE_EXTENSION: &str = ".roleindex.json";
const SIGN_BIT: u32 = 8;
const VECTOR_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum IndexError {
    #[error("invalid profile {id}: {}", .violations.iter().map(ToString::to_string).collect::<Vec<_>>().join(", "))]
    InvalidProfile {
        id: String,
        violations: Vec<Violation>,
    },
    #[error("store is empty")]
    EmptyStore,
    #[error("k must be at least 1")]
    InvalidK,
    #[error("embedding dimension {0} must be a power of two between 2 and 256")]
    InvalidDim(usize),
    #[error("index header mismatch: file has {found:?}, expected {expected:?}")]
    HeaderMismatch {
        found: IndexHeader,
        expected: IndexHeader,
    },
    #[error("index entry {0} does not match its text snapshot")]
    CorruptEntry(String),
    #[error("index file: {0}")]
    Io(#[from] std::io::Error),
    #[error("index file: {0}")]
    Json(#[from] serde_json::Error),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct EmbeddingVector(Vec<f64>);

impl EmbeddingVector {
    pub fn zeros(dim: usize) -> Self {
        Self(vec![0.0; dim])
    }

    /// Scales to unit L2 norm; the zero vector is left as is.
    pub fn normalized(values: Vec<f64>) -> Self {
        let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        if norm == 0.0 {
            return Self(values);
        }
        Self(values.into_iter().map(|v| v / norm).collect())
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    /// Empty text embeds to the zero vector.
    pub fn is_zero(&self) -> bool {
        self.0.iter().all(|v| *v == 0.0)
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }
}

/// Dot product; equals cosine similarity for unit vectors and 0 when
/// either side is the zero vector.
pub fn cosine(a: &EmbeddingVector, b: &EmbeddingVector) -> f64 {
    assert_eq!(
        a.dim(),
        b.dim(),
        "cosine over vectors of different dimension"
    );
    a.0.iter().zip(&b.0).map(|(x, y)| x * y).sum()
}

/// Lowercased maximal runs of alphanumeric characters.
pub fn tokenize(text: &str) -> impl Iterator<Item = String> + '_ {
    text.split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .map(str::to_lowercase)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IndexHeader {
    pub embedding: String,
    pub dim: usize,
    pub seed: u64,
}

pub trait Embedder: Send + Sync {
    /// Identifies the scheme and parameters; persisted with the store.
    fn header(&self) -> IndexHeader;

    fn embed(&self, text: &str) -> EmbeddingVector;
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct HashedBowEmbedder {
    dim: usize,
    seed: u64,
}

impl Default for HashedBowEmbedder {
    fn default() -> Self {
        Self {
            dim: DEFAULT_DIM,
            seed: DEFAULT_SEED,
        }
    }
}

impl HashedBowEmbedder {
    pub fn new(dim: usize, seed: u64) -> Result<Self, IndexError> {
        // the sign bit must lie above every bucket bit
        if !dim.is_power_of_two() || !(2..=1 << SIGN_BIT).contains(&dim) {
            return Err(IndexError::InvalidDim(dim));
        }
        Ok(Self { dim, seed })
    }
}

impl Embedder for HashedBowEmbedder {
    fn header(&self) -> IndexHeader {
        IndexHeader {
            embedding: EMBEDDING_SCHEME.into(),
            dim: self.dim,
            seed: self.seed,
        }
    }

    fn embed(&self, text: &str) -> EmbeddingVector {
        let mut acc = vec![0.0f64; self.dim];
        for token in tokenize(text) {
            let h = xxh64(token.as_bytes(), self.seed);
            let bucket = (h % self.dim as u64) as usize;
            acc[bucket] += if (h >> SIGN_BIT) & 1 == 1 { -1.0 } else { 1.0 };
        }
        EmbeddingVector::normalized(acc)
    }
}

/// Embeds with the default 256-dimension scheme.
pub fn embed_text(text: &str) -> EmbeddingVector {
    HashedBowEmbedder::default().embed(text)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct IndexedRole {
    pub role_id: String,
    pub vector: EmbeddingVector,
    pub text_snapshot: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RetrievalHit {
    pub role_id: String,
    pub score: f64,
    /// 1-based
    pub rank: usize,
}

/// Orders by score descending, then role id ascending.
pub fn hit_order(a: (&str, f64), b: (&str, f64)) -> Ordering {
    b.1.total_cmp(&a.1).then_with(|| a.0.cmp(b.0))
}

#[derive(Serialize, Deserialize)]
struct IndexFile {
    header: IndexHeader,
    entries: Vec<IndexedRole>,
}

/// In-process vector store holding one entry per role id.
#[derive(Clone)]
pub struct RoleIndex {
    embedder: Arc<dyn Embedder>,
    entries: BTreeMap<String, IndexedRole>,
}

pub type SharedRoleIndex = Arc<RwLock<RoleIndex>>;

impl std::fmt::Debug for RoleIndex {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("RoleIndex")
            .field("header", &self.header())
            .field("entries", &self.entries.len())
            .finish()
    }
}

impl Default for RoleIndex {
    fn default() -> Self {
        Self::new(Arc::new(HashedBowEmbedder::default()))
    }
}

impl RoleIndex {
    pub fn new(embedder: Arc<dyn Embedder>) -> Self {
        Self {
            embedder,
            entries: BTreeMap::new(),
        }
    }

    pub fn with_dim(dim: usize) -> Result<Self, IndexError> {
        Ok(Self::new(Arc::new(HashedBowEmbedder::new(
            dim,
            DEFAULT_SEED,
        )?)))
    }

    pub fn header(&self) -> IndexHeader {
        self.embedder.header()
    }

    pub fn embedder(&self) -> &dyn Embedder {
        self.embedder.as_ref()
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn get(&self, role_id: &str) -> Option<&IndexedRole> {
        self.entries.get(role_id)
    }

    /// Entries in ascending role id order.
    pub fn entries(&self) -> impl Iterator<Item = &IndexedRole> {
        self.entries.values()
    }

    pub fn upsert(&mut self, profile: &RoleProfile) -> Result<(), IndexError> {
        let violations = validate_role(profile);
        if !violations.is_empty() {
            return Err(IndexError::InvalidProfile {
                id: profile.id.clone(),
                violations,
            });
        }
        let entry = IndexedRole {
            role_id: profile.id.clone(),
            vector: self.embedder.embed(&profile.narrative),
            text_snapshot: profile.narrative.clone(),
        };
        self.entries.insert(entry.role_id.clone(), entry);
        Ok(())
    }

    /// Exact top-k by cosine similarity to the embedded query.
    pub fn retrieve(&self, query: &str, k: usize) -> Result<Vec<RetrievalHit>, IndexError> {
        if k == 0 {
            return Err(IndexError::InvalidK);
        }
        if self.entries.is_empty() {
            return Err(IndexError::EmptyStore);
        }
        let q = self.embedder.embed(query);
        let mut scored: Vec<(&str, f64)> = self
            .entries
            .values()
            .map(|e| (e.role_id.as_str(), cosine(&q, &e.vector)))
            .collect();
        let k = k.min(scored.len());
        if k < scored.len() {
            scored.select_nth_unstable_by(k - 1, |a, b| hit_order(*a, *b));
            scored.truncate(k);
        }
        scored.sort_by(|a, b| hit_order(*a, *b));
        Ok(scored
            .into_iter()
            .enumerate()
            .map(|(i, (id, score))| RetrievalHit {
                role_id: id.to_string(),
                score,
                rank: i + 1,
            })
            .collect())
    }

    pub fn to_json(&self) -> String {
        let file = IndexFile {
            header: self.header(),
            entries: self.entries.values().cloned().collect(),
        };
        let mut out = serde_json::to_string(&file).expect("index serializes");
        out.push('\n');
        out
    }

    pub fn save(&self, path: &Path) -> Result<(), IndexError> {
        std::fs::write(path, self.to_json())?;
        Ok(())
    }

    /// Loads a store written with the same embedding scheme and parameters.
    /// Stored vectors are checked against their text snapshots, never
    /// silently recomputed.
    pub fn from_json(text: &str, embedder: Arc<dyn Embedder>) -> Result<Self, IndexError> {
        let file: IndexFile = serde_json::from_str(text)?;
        let expected = embedder.header();
        if file.header != expected {
            return Err(IndexError::HeaderMismatch {
                found: file.header,
                expected,
            });
        }
        let mut entries = BTreeMap::new();
        for entry in file.entries {
            let fresh = embedder.embed(&entry.text_snapshot);
            let consistent = fresh.dim() == entry.vector.dim()
                && fresh
                    .values()
                    .iter()
                    .zip(entry.vector.values())
                    .all(|(a, b)| (a - b).abs() <= VECTOR_TOLERANCE);
            if !consistent {
                return Err(IndexError::CorruptEntry(entry.role_id));
            }
            entries.insert(entry.role_id.clone(), entry);
        }
        Ok(Self { embedder, entries })
    }

    pub fn load(path: &Path, embedder: Arc<dyn Embedder>) -> Result<Self, IndexError> {
        Self::from_json(&std::fs::read_to_string(path)?, embedder)
    }

    pub fn into_shared(self) -> SharedRoleIndex {
        Arc::new(RwLock::new(self))
    }
}

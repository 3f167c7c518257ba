//! Dense-vector document retrieval: a deterministic bag-of-hashed-tokens
//! embedder, an exact flat inner-product index with an on-disk cache, and
//! prompt assembly.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fs;
use std::io;
use std::path::{Path, PathBuf};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum RetrievalError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error("no .txt documents in {0}")]
    EmptyCorpus(PathBuf),
    #[error("reading {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: io::Error,
    },
    #[error("incompatible index cache version {found} (expected {expected})")]
    IncompatibleCache { found: u16, expected: u16 },
    #[error("corrupt index cache: {0}")]
    CorruptCache(String),
    #[error("dimension mismatch: index has {expected}, query has {found}")]
    Dimension { expected: usize, found: usize },
    #[error("unknown document {0:?}")]
    UnknownDocument(String),
}

impl RetrievalError {
    fn io(path: &Path, source: io::Error) -> Self {
        Self::Io {
            path: path.to_path_buf(),
            source,
        }
    }

    /// True for cache problems that should trigger a rebuild.
    pub fn is_stale_cache(&self) -> bool {
        matches!(
            self,
            Self::IncompatibleCache { .. } | Self::CorruptCache(_) | Self::Io { .. }
        )
    }
}

/// Unit-norm dense vector.
#[derive(Debug, Clone, PartialEq)]
pub struct Embedding(Vec<f64>);

impl Embedding {
    /// Normalizes `values`; `None` if the vector is empty or all zeros.
    pub fn normalized(mut values: Vec<f64>) -> Option<Self> {
        let norm = values.iter().map(|v| v * v).sum::<f64>().sqrt();
        if values.is_empty() || norm == 0.0 || !norm.is_finite() {
            return None;
        }
        values.iter_mut().for_each(|v| *v /= norm);
        Some(Self(values))
    }

    /// Wraps values that are already unit norm (e.g. read from a cache).
    pub fn from_raw(values: Vec<f64>) -> Self {
        Self(values)
    }

    pub fn basis(dim: usize, axis: usize) -> Self {
        let mut v = vec![0.0; dim];
        v[axis] = 1.0;
        Self(v)
    }

    pub fn dim(&self) -> usize {
        self.0.len()
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn norm(&self) -> f64 {
        self.0.iter().map(|v| v * v).sum::<f64>().sqrt()
    }

    pub fn dot(&self, other: &Embedding) -> f64 {
        self.0.iter().zip(&other.0).map(|(a, b)| a * b).sum()
    }
}

/// 64-bit FNV-1a.
pub fn stable_hash(bytes: &[u8]) -> u64 {
    const OFFSET: u64 = 0xcbf2_9ce4_8422_2325;
    const PRIME: u64 = 0x0000_0100_0000_01b3;
    bytes
        .iter()
        .fold(OFFSET, |h, &b| (h ^ u64::from(b)).wrapping_mul(PRIME))
}

/// Deterministic stand-in embedder: lowercased whitespace tokens hashed into
/// `dim` buckets, one count per occurrence, then L2-normalized. Text with no
/// tokens maps to the first basis vector.
pub fn embed(text: &str, dim: usize) -> Embedding {
    assert!(dim > 0, "embedding dimension must be positive");
    let mut acc = vec![0.0; dim];
    for token in text.to_lowercase().split_whitespace() {
        acc[(stable_hash(token.as_bytes()) % dim as u64) as usize] += 1.0;
    }
    Embedding::normalized(acc).unwrap_or_else(|| Embedding::basis(dim, 0))
}

/// Pluggable text embedder.
pub trait Embedder: Send + Sync {
    fn dim(&self) -> usize;
    fn embed(&self, text: &str) -> Embedding;
}

#[derive(Debug, Clone, Copy)]
pub struct HashEmbedder {
    pub dim: usize,
}

impl Embedder for HashEmbedder {
    fn dim(&self) -> usize {
        self.dim
    }

    fn embed(&self, text: &str) -> Embedding {
        embed(text, self.dim)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Document {
    pub doc_id: String,
    pub text: String,
}

/// `(doc_id, score)` search hit.
#[derive(Debug, Clone, PartialEq)]
pub struct Hit {
    pub doc_id: String,
    pub score: f64,
}

/// Exact inner-product index. Entries are kept sorted by `doc_id`.
#[derive(Debug, Clone, PartialEq)]
pub struct VectorIndex {
    dim: usize,
    entries: Vec<(String, Embedding)>,
    documents: BTreeMap<String, Document>,
}

impl VectorIndex {
    pub fn new(dim: usize) -> Self {
        Self {
            dim,
            entries: Vec::new(),
            documents: BTreeMap::new(),
        }
    }

    /// Builds an index over in-memory documents with the hash embedder.
    /// Later duplicates of a `doc_id` replace earlier ones.
    pub fn from_documents(dim: usize, docs: impl IntoIterator<Item = Document>) -> Self {
        let mut index = Self::new(dim);
        for doc in docs {
            let e = embed(&doc.text, dim);
            index.insert(doc, e);
        }
        index
    }

    /// Inserts with a caller-supplied embedding (kept sorted by id).
    pub fn insert(&mut self, doc: Document, embedding: Embedding) {
        assert_eq!(embedding.dim(), self.dim, "embedding dimension");
        let id = doc.doc_id.clone();
        match self.entries.binary_search_by(|(k, _)| k.as_str().cmp(&id)) {
            Ok(i) => self.entries[i].1 = embedding,
            Err(i) => self.entries.insert(i, (id.clone(), embedding)),
        }
        self.documents.insert(id, doc);
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn entries(&self) -> &[(String, Embedding)] {
        &self.entries
    }

    pub fn document(&self, doc_id: &str) -> Option<&Document> {
        self.documents.get(doc_id)
    }

    pub fn embedding(&self, doc_id: &str) -> Option<&Embedding> {
        self.entries
            .binary_search_by(|(k, _)| k.as_str().cmp(doc_id))
            .ok()
            .map(|i| &self.entries[i].1)
    }

    /// Top `k` entries by inner product, ties broken by `doc_id` ascending.
    pub fn search(&self, query: &Embedding, k: usize) -> Result<Vec<Hit>, RetrievalError> {
        if query.dim() != self.dim {
            return Err(RetrievalError::Dimension {
                expected: self.dim,
                found: query.dim(),
            });
        }
        let mut hits: Vec<Hit> = self
            .entries
            .iter()
            .map(|(id, e)| Hit {
                doc_id: id.clone(),
                score: e.dot(query),
            })
            .collect();
        // Entries are id-sorted, so a stable sort on score keeps id order
        // within ties.
        hits.sort_by(|a, b| b.score.partial_cmp(&a.score).unwrap_or(Ordering::Equal));
        hits.truncate(k);
        Ok(hits)
    }
}

/// One entry per `.txt` file in `docs_dir`; `doc_id` is the file stem.
pub fn build_index(docs_dir: &Path, dim: usize) -> Result<VectorIndex, RetrievalError> {
    if dim == 0 {
        return Err(RetrievalError::Config(
            "embedding dimension must be positive".into(),
        ));
    }
    if !docs_dir.is_dir() {
        return Err(RetrievalError::Config(format!(
            "document directory {} does not exist",
            docs_dir.display()
        )));
    }
    let mut docs = Vec::new();
    let listing = fs::read_dir(docs_dir).map_err(|e| RetrievalError::io(docs_dir, e))?;
    for entry in listing {
        let path = entry.map_err(|e| RetrievalError::io(docs_dir, e))?.path();
        if !path.is_file() || path.extension().and_then(|e| e.to_str()) != Some("txt") {
            continue;
        }
        let Some(stem) = path.file_stem().and_then(|s| s.to_str()) else {
            continue;
        };
        let text = fs::read_to_string(&path).map_err(|e| RetrievalError::io(&path, e))?;
        docs.push(Document {
            doc_id: stem.to_string(),
            text,
        });
    }
    if docs.is_empty() {
        return Err(RetrievalError::EmptyCorpus(docs_dir.to_path_buf()));
    }
    Ok(VectorIndex::from_documents(dim, docs))
}

pub const CACHE_MAGIC: [u8; 4] = *b"TVIX";
pub const CACHE_VERSION: u16 = 1;

/// Serializes the index into the cache layout: magic `TVIX`, version u16,
/// dim u32, count u32, then per entry id length + bytes, text length + bytes,
/// and `dim` f64 values. Little-endian, no padding.
pub fn encode_index(index: &VectorIndex) -> Vec<u8> {
    let mut out = Vec::new();
    out.extend_from_slice(&CACHE_MAGIC);
    out.extend_from_slice(&CACHE_VERSION.to_le_bytes());
    out.extend_from_slice(&(index.dim as u32).to_le_bytes());
    out.extend_from_slice(&(index.entries.len() as u32).to_le_bytes());
    for (id, emb) in &index.entries {
        let text = &index.documents[id].text;
        out.extend_from_slice(&(id.len() as u32).to_le_bytes());
        out.extend_from_slice(id.as_bytes());
        out.extend_from_slice(&(text.len() as u32).to_le_bytes());
        out.extend_from_slice(text.as_bytes());
        for v in emb.values() {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    out
}

struct Reader<'a> {
    buf: &'a [u8],
    pos: usize,
}

impl<'a> Reader<'a> {
    fn take(&mut self, n: usize, what: &str) -> Result<&'a [u8], RetrievalError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.buf.len());
        let Some(end) = end else {
            return Err(RetrievalError::CorruptCache(format!(
                "truncated while reading {what}"
            )));
        };
        let s = &self.buf[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u16(&mut self, what: &str) -> Result<u16, RetrievalError> {
        Ok(u16::from_le_bytes(self.take(2, what)?.try_into().unwrap()))
    }

    fn u32(&mut self, what: &str) -> Result<u32, RetrievalError> {
        Ok(u32::from_le_bytes(self.take(4, what)?.try_into().unwrap()))
    }

    fn string(&mut self, what: &str) -> Result<String, RetrievalError> {
        let len = self.u32(what)? as usize;
        let bytes = self.take(len, what)?;
        String::from_utf8(bytes.to_vec())
            .map_err(|_| RetrievalError::CorruptCache(format!("{what} is not UTF-8")))
    }
}

pub fn decode_index(buf: &[u8]) -> Result<VectorIndex, RetrievalError> {
    let mut r = Reader { buf, pos: 0 };
    if r.take(4, "magic")? != CACHE_MAGIC {
        return Err(RetrievalError::CorruptCache("bad magic".into()));
    }
    let version = r.u16("version")?;
    if version != CACHE_VERSION {
        return Err(RetrievalError::IncompatibleCache {
            found: version,
            expected: CACHE_VERSION,
        });
    }
    let dim = r.u32("dim")? as usize;
    let count = r.u32("entry count")? as usize;
    if dim == 0 {
        return Err(RetrievalError::CorruptCache("zero dimension".into()));
    }
    let mut index = VectorIndex::new(dim);
    for _ in 0..count {
        let doc_id = r.string("doc id")?;
        let text = r.string("document text")?;
        let raw = r.take(dim * 8, "embedding")?;
        let values = raw
            .chunks_exact(8)
            .map(|c| f64::from_le_bytes(c.try_into().unwrap()))
            .collect();
        if index.documents.contains_key(&doc_id) {
            return Err(RetrievalError::CorruptCache(format!(
                "duplicate doc id {doc_id:?}"
            )));
        }
        index.insert(Document { doc_id, text }, Embedding::from_raw(values));
    }
    if r.pos != buf.len() {
        return Err(RetrievalError::CorruptCache(format!(
            "{} trailing bytes",
            buf.len() - r.pos
        )));
    }
    Ok(index)
}

pub fn save_index(index: &VectorIndex, path: &Path) -> Result<(), RetrievalError> {
    fs::write(path, encode_index(index)).map_err(|e| RetrievalError::io(path, e))
}

pub fn load_index(path: &Path) -> Result<VectorIndex, RetrievalError> {
    let bytes = fs::read(path).map_err(|e| RetrievalError::io(path, e))?;
    decode_index(&bytes)
}

/// Builds the generation prompt:
///
/// ```text
/// Context:
/// [doc: <doc_id>]
/// <document text>
/// ...
///
/// Question: <transcript>
/// ```
///
/// Documents appear in result order; each text is followed by a newline if
/// it does not already end with one.
pub fn build_prompt(
    transcript: &str,
    results: &[Hit],
    index: &VectorIndex,
) -> Result<String, RetrievalError> {
    let mut prompt = String::from("Context:\n");
    for hit in results {
        let doc = index
            .document(&hit.doc_id)
            .ok_or_else(|| RetrievalError::UnknownDocument(hit.doc_id.clone()))?;
        prompt.push_str("[doc: ");
        prompt.push_str(&doc.doc_id);
        prompt.push_str("]\n");
        prompt.push_str(&doc.text);
        if !doc.text.ends_with('\n') {
            prompt.push('\n');
        }
    }
    prompt.push_str("\nQuestion: ");
    prompt.push_str(transcript);
    prompt.push('\n');
    Ok(prompt)
}

/// The question line of a prompt built by [`build_prompt`].
pub fn prompt_question(prompt: &str) -> Option<&str> {
    prompt
        .lines()
        .rev()
        .find_map(|l| l.strip_prefix("Question: "))
}

//! WebAssembly bindings for the browser demo.
//!
//! Each export takes plain strings and numbers and returns a JSON string, so
//! the page needs no generated type glue beyond `wasm-bindgen --target web`.

use serde::Serialize;
use voicepipe::retrieval::{embed, Document, VectorIndex};
use voicepipe::segmenter::Segmenter;
use voicepipe::wire::{encode_frame, HEADER_LEN};
use voicepipe::Sentence;
use wasm_bindgen::prelude::*;

#[derive(Debug, Serialize, PartialEq)]
pub struct Emitted {
    pub index: u32,
    pub text: String,
    /// Chunk whose arrival completed the sentence; `chunks` for the flush.
    pub chunk: usize,
}

#[derive(Debug, Serialize, PartialEq)]
pub struct Segmentation {
    pub chunks: Vec<String>,
    pub sentences: Vec<Emitted>,
}

/// Feeds `text` to the segmenter in pieces of `chunk_chars` characters.
pub fn segment_chunks(text: &str, chunk_chars: usize) -> Segmentation {
    let chars: Vec<char> = text.chars().collect();
    let chunks: Vec<String> = chars
        .chunks(chunk_chars.max(1))
        .map(|c| c.iter().collect())
        .collect();
    let mut seg = Segmenter::new(0.0);
    let mut sentences = Vec::new();
    let mut emit = |batch: Vec<Sentence>, chunk: usize| {
        sentences.extend(batch.into_iter().map(|s| Emitted {
            index: s.index,
            text: s.text,
            chunk,
        }))
    };
    for (i, c) in chunks.iter().enumerate() {
        emit(seg.feed(c, i as f64), i);
    }
    emit(
        seg.flush(chunks.len() as f64).into_iter().collect(),
        chunks.len(),
    );
    Segmentation { chunks, sentences }
}

#[derive(Debug, Serialize, PartialEq)]
pub struct Field {
    pub name: &'static str,
    pub offset: usize,
    pub hex: String,
}

#[derive(Debug, Serialize, PartialEq)]
pub struct FrameView {
    pub hex: String,
    pub len: usize,
    pub fields: Vec<Field>,
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

pub fn frame_view(index: u32, text: &str, emitted_at_s: f64) -> Result<FrameView, String> {
    let bytes =
        encode_frame(&Sentence::new(index, text, emitted_at_s)).map_err(|e| e.to_string())?;
    let layout: [(&'static str, usize); 7] = [
        ("magic", 4),
        ("version", 2),
        ("kind", 1),
        ("index", 4),
        ("emitted_at_us", 8),
        ("payload_len", 4),
        ("payload", bytes.len() - HEADER_LEN),
    ];
    let mut offset = 0;
    let fields = layout
        .iter()
        .map(|&(name, len)| {
            let f = Field {
                name,
                offset,
                hex: hex(&bytes[offset..offset + len]),
            };
            offset += len;
            f
        })
        .collect();
    Ok(FrameView {
        hex: hex(&bytes),
        len: bytes.len(),
        fields,
    })
}

#[derive(Debug, Serialize, PartialEq)]
pub struct Ranked {
    pub doc_id: String,
    pub score: f64,
}

/// Parses `id: text` lines into documents; lines without a colon are skipped.
pub fn parse_corpus(corpus: &str) -> Vec<Document> {
    corpus
        .lines()
        .filter_map(|l| l.split_once(':'))
        .map(|(id, text)| Document {
            doc_id: id.trim().to_string(),
            text: text.trim().to_string(),
        })
        .filter(|d| !d.doc_id.is_empty())
        .collect()
}

pub fn rank(corpus: &str, query: &str, k: usize, dim: usize) -> Result<Vec<Ranked>, String> {
    let docs = parse_corpus(corpus);
    if docs.is_empty() {
        return Err("corpus is empty; enter one `id: text` per line".into());
    }
    let index = VectorIndex::from_documents(dim.max(1), docs);
    let hits = index
        .search(&embed(query, index.dim()), k)
        .map_err(|e| e.to_string())?;
    Ok(hits
        .into_iter()
        .map(|h| Ranked {
            doc_id: h.doc_id,
            score: h.score,
        })
        .collect())
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string(value).expect("plain data serializes")
}

#[wasm_bindgen]
pub fn segment(text: &str, chunk_chars: usize) -> String {
    to_json(&segment_chunks(text, chunk_chars))
}

#[wasm_bindgen]
pub fn encode_sentence(index: u32, text: &str, emitted_at_s: f64) -> Result<String, JsError> {
    frame_view(index, text, emitted_at_s)
        .map(|v| to_json(&v))
        .map_err(|e| JsError::new(&e))
}

#[wasm_bindgen]
pub fn search(corpus: &str, query: &str, k: usize, dim: usize) -> Result<String, JsError> {
    rank(corpus, query, k, dim)
        .map(|r| to_json(&r))
        .map_err(|e| JsError::new(&e))
}

//! Derived metrics and Mean/Min/Max aggregation of per-utterance timings.

use crate::domain::StageTimings;
use crate::retrieval::Embedding;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum MetricsError {
    #[error("domain error: {0}")]
    Domain(String),
    #[error("dimension mismatch: {0} vs {1}")]
    Dimension(usize, usize),
}

pub fn words_per_sec(word_count: usize, asr_s: f64) -> Result<f64, MetricsError> {
    if asr_s.is_nan() || asr_s <= 0.0 {
        return Err(MetricsError::Domain(format!(
            "asr_s must be positive, got {asr_s}"
        )));
    }
    Ok(word_count as f64 / asr_s)
}

/// Real-time factor: processing time over audio duration.
pub fn rtf(elapsed_s: f64, audio_duration_s: f64) -> Result<f64, MetricsError> {
    if audio_duration_s.is_nan() || audio_duration_s <= 0.0 {
        return Err(MetricsError::Domain(format!(
            "audio duration must be positive, got {audio_duration_s}"
        )));
    }
    Ok(elapsed_s / audio_duration_s)
}

/// Cosine similarity clamped to [-1, 1].
pub fn cosine(a: &Embedding, b: &Embedding) -> Result<f64, MetricsError> {
    cosine_slices(a.values(), b.values())
}

pub fn cosine_slices(a: &[f64], b: &[f64]) -> Result<f64, MetricsError> {
    if a.len() != b.len() {
        return Err(MetricsError::Dimension(a.len(), b.len()));
    }
    let (mut dot, mut na, mut nb) = (0.0, 0.0, 0.0);
    for (x, y) in a.iter().zip(b) {
        dot += x * y;
        na += x * x;
        nb += y * y;
    }
    if na == 0.0 || nb == 0.0 {
        return Err(MetricsError::Domain("zero-norm vector".into()));
    }
    Ok((dot / (na.sqrt() * nb.sqrt())).clamp(-1.0, 1.0))
}

/// Summary columns, in report order.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Column {
    Asr,
    Rag,
    Llm,
    Tts,
    Total,
    AsrSpeed,
    LlmSpeed,
    Cosine,
    Ttft,
    Ttfa,
}

impl Column {
    pub const ALL: [Column; 10] = [
        Column::Asr,
        Column::Rag,
        Column::Llm,
        Column::Tts,
        Column::Total,
        Column::AsrSpeed,
        Column::LlmSpeed,
        Column::Cosine,
        Column::Ttft,
        Column::Ttfa,
    ];

    pub fn key(self) -> &'static str {
        match self {
            Column::Asr => "asr_s",
            Column::Rag => "rag_s",
            Column::Llm => "llm_s",
            Column::Tts => "tts_s",
            Column::Total => "total_s",
            Column::AsrSpeed => "asr_words_per_sec",
            Column::LlmSpeed => "llm_tokens_per_sec_obs",
            Column::Cosine => "cosine_similarity",
            Column::Ttft => "ttft_s",
            Column::Ttfa => "ttfa_s",
        }
    }

    fn heading(self) -> (&'static str, &'static str) {
        match self {
            Column::Asr => ("ASR", "Processing"),
            Column::Rag => ("RAG", "Retrieval"),
            Column::Llm => ("LLM", "Generation"),
            Column::Tts => ("TTS", "Synthesis"),
            Column::Total => ("Total", "Time"),
            Column::AsrSpeed => ("ASR Speed", "(words/sec)"),
            Column::LlmSpeed => ("LLM Speed", "(tokens/sec)"),
            Column::Cosine => ("Cosine", "Similarity"),
            Column::Ttft => ("TTFT", ""),
            Column::Ttfa => ("TTFA", ""),
        }
    }

    fn decimals(self) -> usize {
        match self {
            Column::AsrSpeed | Column::LlmSpeed => 2,
            _ => 3,
        }
    }

    pub fn value(self, t: &StageTimings) -> f64 {
        match self {
            Column::Asr => t.asr_s,
            Column::Rag => t.rag_s,
            Column::Llm => t.llm_s,
            Column::Tts => t.tts_s,
            Column::Total => t.total_s,
            Column::AsrSpeed => t.asr_words_per_sec,
            Column::LlmSpeed => t.llm_tokens_per_sec_obs,
            Column::Cosine => t.cosine_similarity,
            Column::Ttft => t.ttft_s,
            Column::Ttfa => t.ttfa_s,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ColumnStats {
    pub mean: f64,
    pub min: f64,
    pub max: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub count: usize,
    pub asr_s: ColumnStats,
    pub rag_s: ColumnStats,
    pub llm_s: ColumnStats,
    pub tts_s: ColumnStats,
    pub total_s: ColumnStats,
    pub asr_words_per_sec: ColumnStats,
    pub llm_tokens_per_sec_obs: ColumnStats,
    pub cosine_similarity: ColumnStats,
    pub ttft_s: ColumnStats,
    pub ttfa_s: ColumnStats,
}

impl RunSummary {
    pub fn column(&self, c: Column) -> ColumnStats {
        match c {
            Column::Asr => self.asr_s,
            Column::Rag => self.rag_s,
            Column::Llm => self.llm_s,
            Column::Tts => self.tts_s,
            Column::Total => self.total_s,
            Column::AsrSpeed => self.asr_words_per_sec,
            Column::LlmSpeed => self.llm_tokens_per_sec_obs,
            Column::Cosine => self.cosine_similarity,
            Column::Ttft => self.ttft_s,
            Column::Ttfa => self.ttfa_s,
        }
    }
}

fn stats(values: impl Iterator<Item = f64>) -> ColumnStats {
    let (mut sum, mut min, mut max, mut n) = (0.0, f64::INFINITY, f64::NEG_INFINITY, 0usize);
    for v in values {
        sum += v;
        min = min.min(v);
        max = max.max(v);
        n += 1;
    }
    // Rounding can push a mean of equal values a hair outside [min, max].
    let mean = (sum / n as f64).clamp(min, max);
    ColumnStats { mean, min, max }
}

pub fn summarize(records: &[StageTimings]) -> Result<RunSummary, MetricsError> {
    if records.is_empty() {
        return Err(MetricsError::Domain("cannot summarize zero records".into()));
    }
    let col = |c: Column| stats(records.iter().map(|r| c.value(r)));
    Ok(RunSummary {
        count: records.len(),
        asr_s: col(Column::Asr),
        rag_s: col(Column::Rag),
        llm_s: col(Column::Llm),
        tts_s: col(Column::Tts),
        total_s: col(Column::Total),
        asr_words_per_sec: col(Column::AsrSpeed),
        llm_tokens_per_sec_obs: col(Column::LlmSpeed),
        cosine_similarity: col(Column::Cosine),
        ttft_s: col(Column::Ttft),
        ttfa_s: col(Column::Ttfa),
    })
}

const STAT_WIDTH: usize = 6;
const COL_WIDTH: usize = 13;

/// Fixed-width Mean/Min/Max table. Times in seconds with 3 decimals, rates
/// with 2.
pub fn render_table(summary: &RunSummary) -> String {
    let mut out = String::new();
    for line in 0..2 {
        let label = if line == 0 { "Stat" } else { "" };
        let _ = write!(out, "{label:<STAT_WIDTH$}");
        for c in Column::ALL {
            let (top, bottom) = c.heading();
            let h = if line == 0 { top } else { bottom };
            let _ = write!(out, " {h:>COL_WIDTH$}");
        }
        trim_end_in_place(&mut out);
        out.push('\n');
    }
    out.push_str(&"-".repeat(STAT_WIDTH + Column::ALL.len() * (COL_WIDTH + 1)));
    out.push('\n');
    for (label, pick) in [
        ("Mean", (|s: ColumnStats| s.mean) as fn(ColumnStats) -> f64),
        ("Min", |s| s.min),
        ("Max", |s| s.max),
    ] {
        let _ = write!(out, "{label:<STAT_WIDTH$}");
        for c in Column::ALL {
            let v = pick(summary.column(c));
            let _ = write!(out, " {:>COL_WIDTH$.*}", c.decimals(), v);
        }
        out.push('\n');
    }
    let _ = writeln!(out, "n = {}; all times in seconds", summary.count);
    out
}

fn trim_end_in_place(s: &mut String) {
    let len = s.trim_end_matches(' ').len();
    s.truncate(len);
}

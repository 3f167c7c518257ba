//! Shared data model: utterances, transcripts, sentences, audio descriptors,
//! pipeline configuration and per-utterance timing records.
//!
//! Every type here is plain data. Invariants are checked through
//! [`Validate::violations`], which lists every broken invariant instead of
//! stopping at the first one.

use serde::{Deserialize, Serialize};
use std::collections::HashSet;
use thiserror::Error;

/// Count of whitespace-delimited tokens.
pub fn word_count(text: &str) -> usize {
    text.split_whitespace().count()
}

/// Values that can report which of their invariants are violated.
pub trait Validate {
    fn violations(&self) -> Vec<String>;

    fn is_valid(&self) -> bool {
        self.violations().is_empty()
    }
}

#[derive(Debug, Error, Clone, PartialEq)]
#[error("invalid {what}: {}", violations.join("; "))]
pub struct ValidationError {
    pub what: &'static str,
    pub violations: Vec<String>,
}

fn check<T: Validate>(what: &'static str, value: &T) -> Result<(), ValidationError> {
    let violations = value.violations();
    if violations.is_empty() {
        Ok(())
    } else {
        Err(ValidationError { what, violations })
    }
}

/// One benchmark input row.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UtteranceRecord {
    pub id: String,
    pub audio_duration_s: f64,
    pub reference_transcript: String,
    pub speaker_tag: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub expected_doc_id: Option<String>,
}

impl Validate for UtteranceRecord {
    fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.id.is_empty() {
            out.push("id is empty".to_string());
        }
        if !(self.audio_duration_s > 0.0 && self.audio_duration_s.is_finite()) {
            out.push(format!(
                "audio_duration_s must be positive, got {}",
                self.audio_duration_s
            ));
        }
        if self.reference_transcript.trim().is_empty() {
            out.push("reference_transcript is empty".to_string());
        }
        out
    }
}

impl UtteranceRecord {
    pub fn validate(&self) -> Result<(), ValidationError> {
        check("utterance", self)
    }
}

/// Violations across a whole manifest, including id uniqueness.
pub fn manifest_violations(rows: &[UtteranceRecord]) -> Vec<String> {
    let mut seen = HashSet::new();
    let mut out = Vec::new();
    for row in rows {
        for v in row.violations() {
            out.push(format!("{}: {v}", row.id));
        }
        if !seen.insert(row.id.as_str()) {
            out.push(format!("duplicate id {:?}", row.id));
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Transcript {
    pub text: String,
    pub word_count: usize,
    pub asr_elapsed_s: f64,
}

impl Transcript {
    pub fn new(text: impl Into<String>, asr_elapsed_s: f64) -> Self {
        let text = text.into();
        Self {
            word_count: word_count(&text),
            text,
            asr_elapsed_s,
        }
    }
}

impl Validate for Transcript {
    fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let actual = word_count(&self.text);
        if self.word_count != actual {
            out.push(format!(
                "word_count {} does not match text ({actual})",
                self.word_count
            ));
        }
        if self.asr_elapsed_s.is_nan() || self.asr_elapsed_s < 0.0 {
            out.push(format!("asr_elapsed_s negative: {}", self.asr_elapsed_s));
        }
        out
    }
}

/// A segmented unit of generated text. `emitted_at_s` is measured from the
/// start of generation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Sentence {
    pub index: u32,
    pub text: String,
    pub emitted_at_s: f64,
}

impl Sentence {
    pub fn new(index: u32, text: impl Into<String>, emitted_at_s: f64) -> Self {
        Self {
            index,
            text: text.into(),
            emitted_at_s,
        }
    }
}

impl Validate for Sentence {
    fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.text.is_empty() {
            out.push("text is empty".to_string());
        }
        if self.text.trim() != self.text {
            out.push("text has surrounding whitespace".to_string());
        }
        if self.emitted_at_s.is_nan() || self.emitted_at_s < 0.0 {
            out.push(format!("emitted_at_s negative: {}", self.emitted_at_s));
        }
        out
    }
}

/// Indices of a generation run must be 0, 1, 2, ...
pub fn indices_consecutive(sentences: &[Sentence]) -> bool {
    sentences
        .iter()
        .enumerate()
        .all(|(i, s)| s.index as usize == i)
}

/// Duration descriptor standing in for a synthesized waveform chunk.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AudioSegment {
    pub sentence_index: u32,
    pub synthesized_duration_s: f64,
    pub synth_elapsed_s: f64,
    pub completed_at_s: f64,
}

impl Validate for AudioSegment {
    fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.synthesized_duration_s.is_nan() || self.synthesized_duration_s <= 0.0 {
            out.push(format!(
                "synthesized_duration_s must be positive, got {}",
                self.synthesized_duration_s
            ));
        }
        if self.synth_elapsed_s.is_nan() || self.synth_elapsed_s < 0.0 {
            out.push(format!(
                "synth_elapsed_s negative: {}",
                self.synth_elapsed_s
            ));
        }
        out
    }
}

impl AudioSegment {
    /// The segment may not complete before its sentence was emitted.
    pub fn follows(&self, sentence: &Sentence) -> bool {
        self.sentence_index == sentence.index && self.completed_at_s >= sentence.emitted_at_s
    }
}

/// Stage rates and runtime knobs.
///
/// The defaults reproduce the mean per-component latencies of the reference
/// deployment:
///
/// | field                | default | source                                        |
/// |----------------------|---------|-----------------------------------------------|
/// | `asr_rtf`            | 0.0077  | 0.049 s ASR mean over 6.36 s mean utterance   |
/// | `rag_latency_s`      | 0.008   | retrieval mean                                |
/// | `llm_ttft_s`         | 0.106   | time-to-first-token mean                      |
/// | `llm_tokens_per_sec` | 80      | generation speed mean (80.06 tok/s)           |
/// | `tts_rtf`            | 0.0159  | 0.286 s synthesis for a ~45 word answer at 2.5 words/s |
/// | `response_sentences` | 2       | ~33 word opening sentence + one 12 word sentence |
///
/// `tts_rtf` and `response_sentences` are derived for consistency: the
/// reference numbers give a per-utterance synthesis total but not the
/// sentence count of an answer.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PipelineConfig {
    pub asr_rtf: f64,
    pub rag_latency_s: f64,
    pub llm_ttft_s: f64,
    pub llm_tokens_per_sec: f64,
    pub tts_rtf: f64,
    pub speaking_rate_wps: f64,
    pub queue_poll_timeout_s: f64,
    pub queue_capacity: usize,
    pub retrieval_k: usize,
    pub embed_dim: usize,
    pub rng_seed: u64,
    /// Multiplier applied to every simulated delay; 1.0 is real time.
    pub time_scale: f64,
    pub jitter_frac: f64,
    /// Sentences in each simulated answer.
    pub response_sentences: usize,
}

pub const DEFAULT_POLL_TIMEOUT_S: f64 = 0.05;

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            asr_rtf: 0.0077,
            rag_latency_s: 0.008,
            llm_ttft_s: 0.106,
            llm_tokens_per_sec: 80.0,
            tts_rtf: 0.0159,
            speaking_rate_wps: 2.5,
            queue_poll_timeout_s: DEFAULT_POLL_TIMEOUT_S,
            queue_capacity: 64,
            retrieval_k: 3,
            embed_dim: 256,
            rng_seed: 42,
            time_scale: 1.0,
            jitter_frac: 0.0,
            response_sentences: 2,
        }
    }
}

impl Validate for PipelineConfig {
    fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        let positive = [
            ("asr_rtf", self.asr_rtf),
            ("rag_latency_s", self.rag_latency_s),
            ("llm_ttft_s", self.llm_ttft_s),
            ("llm_tokens_per_sec", self.llm_tokens_per_sec),
            ("tts_rtf", self.tts_rtf),
            ("speaking_rate_wps", self.speaking_rate_wps),
            ("queue_poll_timeout_s", self.queue_poll_timeout_s),
            ("time_scale", self.time_scale),
        ];
        for (name, value) in positive {
            if !(value > 0.0 && value.is_finite()) {
                out.push(format!("{name} must be positive, got {value}"));
            }
        }
        let counts = [
            ("queue_capacity", self.queue_capacity),
            ("retrieval_k", self.retrieval_k),
            ("embed_dim", self.embed_dim),
            ("response_sentences", self.response_sentences),
        ];
        for (name, value) in counts {
            if value == 0 {
                out.push(format!("{name} must be positive"));
            }
        }
        if !(0.0..1.0).contains(&self.jitter_frac) {
            out.push(format!(
                "jitter_frac must be in [0, 1), got {}",
                self.jitter_frac
            ));
        }
        out
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<(), ValidationError> {
        check("pipeline config", self)
    }
}

/// Per-utterance latency record; one row of the benchmark CSV.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StageTimings {
    pub utterance_id: String,
    pub asr_s: f64,
    pub rag_s: f64,
    pub llm_s: f64,
    /// Sum of per-sentence synthesis time.
    pub tts_s: f64,
    /// Wall time from ASR start to completion of the last audio segment.
    pub total_s: f64,
    pub asr_words_per_sec: f64,
    pub llm_tokens_per_sec_obs: f64,
    pub asr_rtf_obs: f64,
    pub ttft_s: f64,
    pub ttfa_s: f64,
    pub cosine_similarity: f64,
    pub sentence_count: usize,
}

impl StageTimings {
    /// `asr_s + rag_s + llm_s + tts_s`: the latency a fully serial pipeline
    /// would have had.
    pub fn component_sum(&self) -> f64 {
        self.asr_s + self.rag_s + self.llm_s + self.tts_s
    }
}

impl Validate for StageTimings {
    fn violations(&self) -> Vec<String> {
        let mut out = Vec::new();
        if self.ttfa_s < self.ttft_s {
            out.push(format!(
                "ttfa_s {} precedes ttft_s {}",
                self.ttfa_s, self.ttft_s
            ));
        }
        let floor = self.asr_s.max(self.rag_s).max(self.llm_s);
        if self.total_s < floor {
            out.push(format!(
                "total_s {} below largest component {floor}",
                self.total_s
            ));
        }
        if !(-1.0..=1.0).contains(&self.cosine_similarity) {
            out.push(format!(
                "cosine_similarity out of range: {}",
                self.cosine_similarity
            ));
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn utterance(id: &str) -> UtteranceRecord {
        UtteranceRecord {
            id: id.to_string(),
            audio_duration_s: 6.36,
            reference_transcript: "what is tcp".to_string(),
            speaker_tag: "spk0".to_string(),
            expected_doc_id: None,
        }
    }

    #[test]
    fn utterance_violations_are_listed() {
        let mut u = utterance("a");
        assert!(u.is_valid());
        u.audio_duration_s = 0.0;
        u.reference_transcript = "  ".to_string();
        assert_eq!(u.violations().len(), 2);
        assert!(u.validate().is_err());
    }

    #[test]
    fn manifest_rejects_duplicate_ids() {
        let rows = vec![utterance("a"), utterance("b"), utterance("a")];
        let v = manifest_violations(&rows);
        assert_eq!(v, vec!["duplicate id \"a\"".to_string()]);
    }

    #[test]
    fn transcript_word_count() {
        let t = Transcript::new("  hello   big\tworld ", 0.01);
        assert_eq!(t.word_count, 3);
        assert!(t.is_valid());
        let bad = Transcript { word_count: 2, ..t };
        assert!(!bad.is_valid());
    }

    #[test]
    fn sentence_must_be_trimmed() {
        assert!(Sentence::new(0, "Hi.", 0.0).is_valid());
        assert!(!Sentence::new(0, " Hi.", 0.0).is_valid());
        assert!(!Sentence::new(0, "", 0.0).is_valid());
        let run = [Sentence::new(0, "a.", 0.0), Sentence::new(1, "b.", 0.1)];
        assert!(indices_consecutive(&run));
        assert!(!indices_consecutive(&run[1..]));
    }

    #[test]
    fn config_defaults_are_valid() {
        let c = PipelineConfig::default();
        assert!(c.is_valid(), "{:?}", c.violations());
        assert_eq!(c.queue_poll_timeout_s, 0.05);
    }

    #[test]
    fn config_rejects_zero_rates_and_bad_jitter() {
        let c = PipelineConfig {
            asr_rtf: 0.0,
            jitter_frac: 1.0,
            retrieval_k: 0,
            ..PipelineConfig::default()
        };
        let v = c.violations();
        assert_eq!(v.len(), 3, "{v:?}");
        assert!(v[0].starts_with("asr_rtf"));
    }

    #[test]
    fn timings_ordering_invariants() {
        let t = StageTimings {
            utterance_id: "u".into(),
            asr_s: 0.05,
            rag_s: 0.008,
            llm_s: 0.67,
            tts_s: 0.28,
            total_s: 0.9,
            asr_words_per_sec: 380.0,
            llm_tokens_per_sec_obs: 80.0,
            asr_rtf_obs: 0.0077,
            ttft_s: 0.106,
            ttfa_s: 0.68,
            cosine_similarity: 0.5,
            sentence_count: 2,
        };
        assert!(t.is_valid());
        assert!((t.component_sum() - 1.008).abs() < 1e-12);
        let early = StageTimings {
            ttfa_s: 0.1,
            ..t.clone()
        };
        assert!(!early.is_valid());
        let short = StageTimings { total_s: 0.5, ..t };
        assert!(!short.is_valid());
    }
}

//! Synthetic benchmark manifests.
//!
//! Durations are log-normal with the requested mean, clamped to
//! [`MIN_DURATION_S`, `MAX_DURATION_S`]. Each transcript is a question about
//! a contiguous run of words from one corpus document, sized to a speaking
//! rate of [`WORDS_PER_AUDIO_SECOND`] so longer utterances carry more words.

use crate::domain::UtteranceRecord;
use crate::retrieval::VectorIndex;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, LogNormal};
use thiserror::Error;

pub const MIN_DURATION_S: f64 = 2.0;
pub const MAX_DURATION_S: f64 = 20.0;
/// Shape of the duration distribution (sigma of the underlying normal).
pub const DURATION_SIGMA: f64 = 0.35;
pub const WORDS_PER_AUDIO_SECOND: f64 = 3.0;
pub const QUESTION_PREFIX: &str = "What does the reference material say about";

#[derive(Debug, Error, Clone, PartialEq)]
pub enum DatasetError {
    #[error("utterance count must be positive")]
    EmptyRequest,
    #[error("mean duration must lie in ({MIN_DURATION_S}, {MAX_DURATION_S}), got {0}")]
    BadMean(f64),
    #[error("corpus has no usable words")]
    EmptyCorpus,
}

/// Lowercase tokens made only of ASCII letters and digits, so they embed to
/// the same buckets as the document's own tokens.
fn plain_tokens(text: &str) -> Vec<String> {
    text.split_whitespace()
        .filter(|t| t.chars().all(|c| c.is_ascii_alphanumeric()))
        .map(str::to_lowercase)
        .collect()
}

pub fn synthesize(
    n: usize,
    mean_duration_s: f64,
    corpus: &VectorIndex,
    seed: u64,
) -> Result<Vec<UtteranceRecord>, DatasetError> {
    if n == 0 {
        return Err(DatasetError::EmptyRequest);
    }
    if !(mean_duration_s > MIN_DURATION_S && mean_duration_s < MAX_DURATION_S) {
        return Err(DatasetError::BadMean(mean_duration_s));
    }
    let docs: Vec<(&str, Vec<String>)> = corpus
        .entries()
        .iter()
        .map(|(id, _)| {
            let text = &corpus.document(id).expect("entry has document").text;
            (id.as_str(), plain_tokens(text))
        })
        .filter(|(_, words)| !words.is_empty())
        .collect();
    if docs.is_empty() {
        return Err(DatasetError::EmptyCorpus);
    }

    let mu = mean_duration_s.ln() - DURATION_SIGMA * DURATION_SIGMA / 2.0;
    let durations = LogNormal::new(mu, DURATION_SIGMA).expect("valid log-normal");
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let prefix_words = QUESTION_PREFIX.split_whitespace().count();

    let rows = (0..n)
        .map(|i| {
            let duration = durations
                .sample(&mut rng)
                .clamp(MIN_DURATION_S, MAX_DURATION_S);
            let (doc_id, words) = &docs[rng.random_range(0..docs.len())];
            let total = (duration * WORDS_PER_AUDIO_SECOND).round() as usize;
            let topic_len = total.saturating_sub(prefix_words).max(1);
            let start = rng.random_range(0..words.len());
            let topic: Vec<&str> = (0..topic_len)
                .map(|j| words[(start + j) % words.len()].as_str())
                .collect();
            UtteranceRecord {
                id: format!("utt{i:04}"),
                // Millisecond resolution keeps manifests readable.
                audio_duration_s: (duration * 1000.0).round() / 1000.0,
                reference_transcript: format!("{QUESTION_PREFIX} {}?", topic.join(" ")),
                speaker_tag: format!("spk{}", i % 2),
                expected_doc_id: Some(doc_id.to_string()),
            }
        })
        .collect();
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::manifest_violations;
    use crate::retrieval::Document;

    fn corpus() -> VectorIndex {
        VectorIndex::from_documents(
            64,
            [
                Document {
                    doc_id: "a".into(),
                    text: "alpha bravo charlie delta echo foxtrot golf".into(),
                },
                Document {
                    doc_id: "b".into(),
                    text: "hotel india juliet kilo lima mike".into(),
                },
            ],
        )
    }

    #[test]
    fn mean_duration_is_close_for_500() {
        let rows = synthesize(500, 6.36, &corpus(), 1).unwrap();
        let mean = rows.iter().map(|r| r.audio_duration_s).sum::<f64>() / 500.0;
        assert!((mean - 6.36).abs() < 0.3, "{mean}");
        assert!(rows
            .iter()
            .all(|r| (MIN_DURATION_S..=MAX_DURATION_S).contains(&r.audio_duration_s)));
        assert!(manifest_violations(&rows).is_empty());
    }

    #[test]
    fn same_seed_same_rows() {
        let a = synthesize(20, 6.36, &corpus(), 9).unwrap();
        assert_eq!(a, synthesize(20, 6.36, &corpus(), 9).unwrap());
        assert_ne!(a, synthesize(20, 6.36, &corpus(), 10).unwrap());
    }

    #[test]
    fn transcript_words_track_duration() {
        for r in synthesize(50, 6.36, &corpus(), 3).unwrap() {
            let words = r.reference_transcript.split_whitespace().count();
            let target = (r.audio_duration_s * WORDS_PER_AUDIO_SECOND).round() as usize;
            assert!(
                words.abs_diff(target) <= 1 || words == 8,
                "{words} vs {target}"
            );
            assert!(r.reference_transcript.ends_with('?'));
        }
    }

    #[test]
    fn bad_requests() {
        assert_eq!(
            synthesize(0, 6.36, &corpus(), 1),
            Err(DatasetError::EmptyRequest)
        );
        assert_eq!(
            synthesize(1, 30.0, &corpus(), 1),
            Err(DatasetError::BadMean(30.0))
        );
        let empty = VectorIndex::from_documents(
            8,
            [Document {
                doc_id: "x".into(),
                text: "!!! ...".into(),
            }],
        );
        assert_eq!(
            synthesize(1, 6.36, &empty, 1),
            Err(DatasetError::EmptyCorpus)
        );
    }
}

//! ASR, LLM and TTS stage contracts plus deterministic simulators.
//!
//! Simulators block on the real clock, scaled by `time_scale`, so the
//! orchestrator's threads, channel and timeouts behave as they would with
//! real models. Every elapsed time they report is divided by `time_scale`
//! again, so metrics read in real-time seconds at any scale.

use crate::domain::{
    word_count, AudioSegment, PipelineConfig, Sentence, Transcript, UtteranceRecord,
};
use crate::retrieval::{prompt_question, Hit, VectorIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use std::time::{Duration, Instant};
use thiserror::Error;

#[derive(Debug, Error, Clone, PartialEq)]
pub enum StageError {
    #[error("transcription failed: {0}")]
    Transcription(String),
    #[error("generation aborted: {0}")]
    GenerationAborted(String),
    #[error("synthesis failed: {0}")]
    Synthesis(String),
    #[error("{0} is not available in this build")]
    Unavailable(String),
}

/// Monotonic clock origin shared read-only by all contexts of a run.
#[derive(Debug, Clone, Copy)]
pub struct Timebase {
    pub epoch: Instant,
    pub time_scale: f64,
}

impl Timebase {
    pub fn new(epoch: Instant, time_scale: f64) -> Self {
        Self { epoch, time_scale }
    }

    pub fn start_now(time_scale: f64) -> Self {
        Self::new(Instant::now(), time_scale)
    }

    /// Unscaled seconds since the epoch; negative for instants before it.
    pub fn at(&self, instant: Instant) -> f64 {
        let secs = if instant >= self.epoch {
            (instant - self.epoch).as_secs_f64()
        } else {
            -(self.epoch - instant).as_secs_f64()
        };
        secs / self.time_scale
    }

    pub fn now_s(&self) -> f64 {
        self.at(Instant::now())
    }
}

/// Unscaled seconds between two instants under `time_scale`.
pub fn unscaled_between(from: Instant, to: Instant, time_scale: f64) -> f64 {
    to.saturating_duration_since(from).as_secs_f64() / time_scale
}

/// Below this remaining time, [`sleep_until`] yields instead of sleeping.
const SPIN_MARGIN: Duration = Duration::from_micros(300);

/// Blocks until `deadline`. Coarse sleep, then a yield loop for the last few
/// hundred microseconds so overshoot stays in the microsecond range.
pub fn sleep_until(deadline: Instant) {
    loop {
        let now = Instant::now();
        if now >= deadline {
            return;
        }
        let remaining = deadline - now;
        if remaining > SPIN_MARGIN {
            std::thread::sleep(remaining - SPIN_MARGIN);
        } else {
            std::thread::yield_now();
        }
    }
}

/// Time scaling plus seeded multiplicative jitter for simulated delays.
#[derive(Debug, Clone)]
pub struct StageClock {
    time_scale: f64,
    jitter_frac: f64,
    rng: ChaCha8Rng,
}

impl StageClock {
    pub fn new(time_scale: f64, jitter_frac: f64, seed: u64) -> Self {
        Self {
            time_scale,
            jitter_frac,
            rng: ChaCha8Rng::seed_from_u64(seed),
        }
    }

    pub fn from_config(config: &PipelineConfig, stream: u64) -> Self {
        Self::new(
            config.time_scale,
            config.jitter_frac,
            config.rng_seed ^ stream.wrapping_mul(0x9e37_79b9_7f4a_7c15),
        )
    }

    pub fn time_scale(&self) -> f64 {
        self.time_scale
    }

    /// Factor drawn uniformly from `[1 - jitter, 1 + jitter]`; exactly 1
    /// without jitter.
    pub fn jitter(&mut self) -> f64 {
        if self.jitter_frac == 0.0 {
            1.0
        } else {
            self.rng
                .random_range(1.0 - self.jitter_frac..=1.0 + self.jitter_frac)
        }
    }

    /// `seconds` of simulated time, jittered, as a real-clock duration.
    pub fn delay(&mut self, seconds: f64) -> Duration {
        let s = (seconds * self.jitter() * self.time_scale).max(0.0);
        Duration::from_secs_f64(s)
    }

    /// Blocks for `seconds` of simulated time and returns the measured,
    /// unscaled elapsed time.
    pub fn block(&mut self, seconds: f64) -> f64 {
        let start = Instant::now();
        sleep_until(start + self.delay(seconds));
        unscaled_between(start, Instant::now(), self.time_scale)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct TokenEvent {
    pub text: String,
    /// Seconds since the generation epoch.
    pub at_s: f64,
}

/// Returned by a token sink to stop generation.
#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("token sink closed: {0}")]
pub struct SinkClosed(pub String);

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GenerationSummary {
    pub token_count: usize,
    pub llm_elapsed_s: f64,
}

pub trait AsrStage: Send {
    fn transcribe(&mut self, utterance: &UtteranceRecord) -> Result<Transcript, StageError>;
}

/// Streaming text generation. `response` is the precomputed answer a
/// simulator replays; a model-backed implementation generates from `prompt`.
pub trait LlmStage: Send {
    fn generate(
        &mut self,
        prompt: &str,
        response: &str,
        timebase: &Timebase,
        sink: &mut dyn FnMut(TokenEvent) -> Result<(), SinkClosed>,
    ) -> Result<GenerationSummary, StageError>;
}

pub trait TtsStage: Send {
    /// Synthesizes a throwaway sentence so later calls skip cold start.
    /// Returns elapsed (unscaled) seconds.
    fn warmup(&mut self, timebase: &Timebase) -> Result<f64, StageError>;

    fn synthesize(
        &mut self,
        sentence: &Sentence,
        timebase: &Timebase,
    ) -> Result<AudioSegment, StageError>;
}

#[derive(Debug, Clone)]
pub struct SimAsr {
    rtf: f64,
    clock: StageClock,
}

impl SimAsr {
    pub fn new(config: &PipelineConfig, clock: StageClock) -> Self {
        Self {
            rtf: config.asr_rtf,
            clock,
        }
    }
}

impl AsrStage for SimAsr {
    fn transcribe(&mut self, utterance: &UtteranceRecord) -> Result<Transcript, StageError> {
        let elapsed = self.clock.block(utterance.audio_duration_s * self.rtf);
        Ok(Transcript::new(
            utterance.reference_transcript.clone(),
            elapsed,
        ))
    }
}

/// Splits text into whitespace-delimited tokens, each keeping the whitespace
/// that follows it. Concatenating the tokens gives back `text`.
pub fn tokenize(text: &str) -> Vec<&str> {
    let mut out = Vec::new();
    let mut start = 0;
    let mut seen_word = false;
    let mut prev_ws = false;
    for (i, c) in text.char_indices() {
        let ws = c.is_whitespace();
        if !ws && prev_ws && seen_word {
            out.push(&text[start..i]);
            start = i;
        }
        if !ws {
            seen_word = true;
        }
        prev_ws = ws;
    }
    if start < text.len() {
        out.push(&text[start..]);
    }
    out
}

#[derive(Debug, Clone)]
pub struct SimLlm {
    ttft_s: f64,
    interval_s: f64,
    clock: StageClock,
}

impl SimLlm {
    pub fn new(config: &PipelineConfig, clock: StageClock) -> Self {
        Self {
            ttft_s: config.llm_ttft_s,
            interval_s: 1.0 / config.llm_tokens_per_sec,
            clock,
        }
    }
}

impl LlmStage for SimLlm {
    fn generate(
        &mut self,
        _prompt: &str,
        response: &str,
        timebase: &Timebase,
        sink: &mut dyn FnMut(TokenEvent) -> Result<(), SinkClosed>,
    ) -> Result<GenerationSummary, StageError> {
        let start = Instant::now();
        // Absolute deadlines keep sleep overshoot from accumulating.
        let mut deadline = start + self.clock.delay(self.ttft_s);
        let tokens = tokenize(response);
        for token in &tokens {
            sleep_until(deadline);
            sink(TokenEvent {
                text: token.to_string(),
                at_s: timebase.now_s(),
            })
            .map_err(|e| StageError::GenerationAborted(e.0))?;
            deadline += self.clock.delay(self.interval_s);
        }
        sleep_until(deadline);
        Ok(GenerationSummary {
            token_count: tokens.len(),
            llm_elapsed_s: unscaled_between(start, Instant::now(), self.clock.time_scale()),
        })
    }
}

/// Extra synthesis cost of the first call when no warmup ran.
pub const COLD_START_FACTOR: f64 = 3.0;
pub const WARMUP_TEXT: &str = "Warmup.";

#[derive(Debug, Clone)]
pub struct SimTts {
    rtf: f64,
    speaking_rate_wps: f64,
    warmed: bool,
    clock: StageClock,
}

impl SimTts {
    pub fn new(config: &PipelineConfig, clock: StageClock) -> Self {
        Self {
            rtf: config.tts_rtf,
            speaking_rate_wps: config.speaking_rate_wps,
            warmed: false,
            clock,
        }
    }

    pub fn is_warm(&self) -> bool {
        self.warmed
    }

    /// Seconds of speech for `text`.
    pub fn audio_duration(&self, text: &str) -> f64 {
        word_count(text) as f64 / self.speaking_rate_wps
    }
}

impl TtsStage for SimTts {
    fn warmup(&mut self, timebase: &Timebase) -> Result<f64, StageError> {
        let seg = self.synthesize(&Sentence::new(0, WARMUP_TEXT, 0.0), timebase)?;
        Ok(seg.synth_elapsed_s)
    }

    fn synthesize(
        &mut self,
        sentence: &Sentence,
        timebase: &Timebase,
    ) -> Result<AudioSegment, StageError> {
        let duration = self.audio_duration(&sentence.text);
        if duration <= 0.0 {
            return Err(StageError::Synthesis(format!(
                "sentence {} has no words",
                sentence.index
            )));
        }
        let cold = if self.warmed { 1.0 } else { COLD_START_FACTOR };
        self.warmed = true;
        let elapsed = self.clock.block(duration * self.rtf * cold);
        Ok(AudioSegment {
            sentence_index: sentence.index,
            synthesized_duration_s: duration,
            synth_elapsed_s: elapsed,
            completed_at_s: timebase.now_s(),
        })
    }
}

/// One instance of each stage, owned by a single run.
pub struct StageSet {
    pub asr: Box<dyn AsrStage>,
    pub llm: Box<dyn LlmStage>,
    pub tts: Box<dyn TtsStage>,
}

impl StageSet {
    /// Simulated stages with independent jitter streams derived from
    /// `config.rng_seed` and `run`.
    pub fn simulated(config: &PipelineConfig, run: u64) -> Self {
        let base = run.wrapping_mul(3);
        Self {
            asr: Box::new(SimAsr::new(
                config,
                StageClock::from_config(config, base + 1),
            )),
            llm: Box::new(SimLlm::new(
                config,
                StageClock::from_config(config, base + 2),
            )),
            tts: Box::new(SimTts::new(
                config,
                StageClock::from_config(config, base + 3),
            )),
        }
    }
}

/// Placeholders for model-backed stages reached over the network. They
/// carry an endpoint and fail every call; a real client implements the same
/// trait.
#[derive(Debug, Clone)]
pub struct RemoteAsr {
    pub endpoint: String,
}

#[derive(Debug, Clone)]
pub struct RemoteLlm {
    pub endpoint: String,
}

#[derive(Debug, Clone)]
pub struct RemoteTts {
    pub endpoint: String,
}

impl AsrStage for RemoteAsr {
    fn transcribe(&mut self, _utterance: &UtteranceRecord) -> Result<Transcript, StageError> {
        Err(StageError::Unavailable(format!(
            "remote ASR at {}",
            self.endpoint
        )))
    }
}

impl LlmStage for RemoteLlm {
    fn generate(
        &mut self,
        _prompt: &str,
        _response: &str,
        _timebase: &Timebase,
        _sink: &mut dyn FnMut(TokenEvent) -> Result<(), SinkClosed>,
    ) -> Result<GenerationSummary, StageError> {
        Err(StageError::Unavailable(format!(
            "remote LLM at {}",
            self.endpoint
        )))
    }
}

impl TtsStage for RemoteTts {
    fn warmup(&mut self, _timebase: &Timebase) -> Result<f64, StageError> {
        Err(StageError::Unavailable(format!(
            "remote TTS at {}",
            self.endpoint
        )))
    }

    fn synthesize(
        &mut self,
        _sentence: &Sentence,
        _timebase: &Timebase,
    ) -> Result<AudioSegment, StageError> {
        Err(StageError::Unavailable(format!(
            "remote TTS at {}",
            self.endpoint
        )))
    }
}

/// Words per follow-up sentence in a simulated answer.
pub const WINDOW_WORDS: usize = 12;

fn plain_words(text: &str) -> Vec<String> {
    text.split_whitespace()
        .map(|w| {
            w.chars()
                .filter(|c| !matches!(c, '.' | '!' | '?'))
                .collect::<String>()
        })
        .filter(|w| !w.is_empty())
        .collect()
}

/// Deterministic stand-in for model output.
///
/// The first sentence restates the question and names the top document;
/// each following sentence is the next 12-word window of that document's
/// text (wrapping around). Sentence-ending marks are stripped from the
/// borrowed words so every sentence ends with exactly one `.`.
pub fn make_response(
    prompt: &str,
    results: &[Hit],
    index: &VectorIndex,
    target_sentences: usize,
) -> String {
    let target = target_sentences.max(1);
    let top = results.first().and_then(|h| index.document(&h.doc_id));
    let Some(doc) = top else {
        return vec!["No indexed document matched the question."; target].join(" ");
    };
    let question = plain_words(prompt_question(prompt).unwrap_or_default()).join(" ");
    let mut sentences = Vec::with_capacity(target);
    sentences.push(format!(
        "You asked {question}, and the most relevant answer can be found in indexed document {}.",
        plain_words(&doc.doc_id).join("_")
    ));
    let words = plain_words(&doc.text);
    for k in 0..target - 1 {
        if words.is_empty() {
            sentences.push("The document is empty.".to_string());
            continue;
        }
        let window: Vec<&str> = (0..WINDOW_WORDS)
            .map(|j| words[(k * WINDOW_WORDS + j) % words.len()].as_str())
            .collect();
        sentences.push(format!("{}.", window.join(" ")));
    }
    sentences.join(" ")
}

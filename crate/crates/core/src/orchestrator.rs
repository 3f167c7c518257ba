//! End-to-end execution of one utterance and of a whole manifest.
//!
//! Schedule per utterance:
//!
//! 1. ASR runs upfront on the coordinating thread.
//! 2. The transcript is embedded, searched and turned into a prompt.
//! 3. The TTS consumer thread starts first, warms up, then signals ready.
//! 4. The generation epoch is marked and the LLM producer streams tokens
//!    through the segmenter; each sentence is framed and sent over a bounded
//!    channel, followed by one end-of-stream frame.
//! 5. The consumer polls the channel with `queue_poll_timeout_s`, decodes,
//!    synthesizes in FIFO order and stops at end-of-stream.

use crate::domain::{
    indices_consecutive, AudioSegment, PipelineConfig, Sentence, StageTimings, UtteranceRecord,
    ValidationError,
};
use crate::metrics::{cosine, rtf, summarize, words_per_sec, RunSummary};
use crate::retrieval::{build_prompt, embed, Hit, RetrievalError, VectorIndex};
use crate::segmenter::Segmenter;
use crate::stages::{
    make_response, sleep_until, unscaled_between, LlmStage, SinkClosed, StageClock, StageError,
    StageSet, Timebase, TtsStage,
};
use crate::wire::{decode_frame, encode_end, encode_frame};
use std::sync::atomic::{AtomicBool, Ordering};
use std::sync::mpsc::{self, Receiver, RecvTimeoutError, SyncSender};
use std::time::{Duration, Instant};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StageName {
    Asr,
    Rag,
    Llm,
    Tts,
}

impl std::fmt::Display for StageName {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            StageName::Asr => "asr",
            StageName::Rag => "rag",
            StageName::Llm => "llm",
            StageName::Tts => "tts",
        })
    }
}

#[derive(Debug, Error)]
pub enum PipelineError {
    #[error("configuration error: {0}")]
    Config(String),
    #[error(transparent)]
    Invalid(#[from] ValidationError),
    #[error("{stage} stage failed: {source}")]
    Stage {
        stage: StageName,
        #[source]
        source: StageError,
    },
    #[error("retrieval failed: {0}")]
    Retrieval(#[from] RetrievalError),
    #[error("sentence stream broken: {0}")]
    Stream(String),
    #[error("metrics: {0}")]
    Metrics(#[from] crate::metrics::MetricsError),
}

impl PipelineError {
    fn stage(stage: StageName, source: StageError) -> Self {
        Self::Stage { stage, source }
    }

    /// Stage the failure is attributed to, if any.
    pub fn stage_name(&self) -> Option<StageName> {
        match self {
            Self::Stage { stage, .. } => Some(*stage),
            Self::Retrieval(_) => Some(StageName::Rag),
            Self::Stream(_) => Some(StageName::Tts),
            _ => None,
        }
    }
}

/// Observations beyond [`StageTimings`] used to check the schedule.
#[derive(Debug, Clone, PartialEq)]
pub struct RunTrace {
    /// Consumer warmup completion, seconds relative to the LLM epoch
    /// (negative means before it).
    pub warmup_done_s: f64,
    pub warmup_elapsed_s: f64,
    /// Last audio completion relative to the LLM epoch.
    pub last_audio_s: f64,
    /// End-of-stream frames seen by the consumer.
    pub end_frames: usize,
    /// Frames (of any kind) the consumer received after end-of-stream.
    pub frames_after_end: usize,
    /// Receive attempts that timed out and were retried.
    pub poll_timeouts: usize,
    pub token_count: usize,
    /// ASR + retrieval, measured before the epoch.
    pub prefix_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UtteranceResult {
    pub timings: StageTimings,
    pub sentences: Vec<Sentence>,
    pub segments: Vec<AudioSegment>,
    pub prompt: String,
    pub response: String,
    pub retrieved: Vec<Hit>,
    pub trace: RunTrace,
}

struct ProducerOutput {
    sentences: Vec<Sentence>,
    token_count: usize,
    llm_elapsed_s: f64,
    ttft_s: Option<f64>,
}

struct ConsumerOutput {
    segments: Vec<AudioSegment>,
    last_audio: Option<Instant>,
    end_frames: usize,
    frames_after_end: usize,
    poll_timeouts: usize,
}

/// Runs one utterance through the full schedule.
pub fn run_utterance(
    utterance: &UtteranceRecord,
    config: &PipelineConfig,
    index: &VectorIndex,
    stages: &mut StageSet,
) -> Result<UtteranceResult, PipelineError> {
    config.validate()?;
    utterance.validate()?;
    if index.dim() != config.embed_dim {
        return Err(PipelineError::Config(format!(
            "index dimension {} differs from embed_dim {}",
            index.dim(),
            config.embed_dim
        )));
    }
    let scale = config.time_scale;
    let mut rag_clock = StageClock::from_config(config, u64::MAX);

    // 1. ASR upfront.
    let run_start = Instant::now();
    let transcript = stages
        .asr
        .transcribe(utterance)
        .map_err(|e| PipelineError::stage(StageName::Asr, e))?;

    // 2. Retrieval: embed, search, prompt, padded to the configured floor.
    let rag_start = Instant::now();
    let query = embed(&transcript.text, config.embed_dim);
    let retrieved = index.search(&query, config.retrieval_k)?;
    let prompt = build_prompt(&transcript.text, &retrieved, index)?;
    sleep_until(rag_start + rag_clock.delay(config.rag_latency_s));
    let rag_s = unscaled_between(rag_start, Instant::now(), scale);
    let prefix_end = Instant::now();

    // 3 + 4. Consumer first, then producer.
    let (tx, rx) = mpsc::sync_channel::<Vec<u8>>(config.queue_capacity);
    let (ready_tx, ready_rx) = mpsc::channel::<Result<(Instant, f64), StageError>>();
    let (epoch_tx, epoch_rx) = mpsc::channel::<Timebase>();
    let cancel = AtomicBool::new(false);
    let poll = Duration::from_secs_f64(config.queue_poll_timeout_s * scale);
    let response = make_response(&prompt, &retrieved, index, config.response_sentences);

    let StageSet { llm, tts, .. } = stages;
    let (producer, consumer, warmup, timebase) = std::thread::scope(|s| {
        let cancel = &cancel;
        let consumer =
            s.spawn(move || consume(tts.as_mut(), rx, poll, scale, ready_tx, epoch_rx, cancel));

        let warmup = match ready_rx.recv() {
            Ok(Ok(w)) => Ok(w),
            Ok(Err(e)) => Err(PipelineError::stage(StageName::Tts, e)),
            Err(_) => Err(PipelineError::Stream(
                "consumer exited before warmup".into(),
            )),
        };
        if warmup.is_err() {
            drop(epoch_tx);
            drop(tx);
            return (None, consumer.join(), warmup, None);
        }

        let prompt = prompt.as_str();
        let response = response.as_str();
        let producer = s.spawn(move || {
            let timebase = Timebase::start_now(scale);
            let _ = epoch_tx.send(timebase);
            let out = produce(llm.as_mut(), prompt, response, &timebase, tx, cancel);
            (out, timebase)
        });
        let (out, timebase) = producer.join().expect("producer thread panicked");
        (Some(out), consumer.join(), warmup, Some(timebase))
    });

    let consumer = consumer.expect("consumer thread panicked");
    let (warmup_done, warmup_elapsed_s) = warmup?;
    let timebase = timebase.expect("epoch set after warmup");
    // Whichever side failed first owns the error: the consumer only raises
    // the cancel flag for its own failures.
    let (consumer, producer) = match (consumer, producer.expect("producer ran")) {
        (Ok(c), Ok(p)) => (c, p),
        (Err(e), _) if cancel.load(Ordering::Acquire) => return Err(e),
        (_, Err(e)) | (Err(e), Ok(_)) => return Err(e),
    };

    // 5. Assemble.
    let sentences = producer.sentences;
    let segments = consumer.segments;
    if segments.len() != sentences.len()
        || !segments
            .iter()
            .zip(&sentences)
            .all(|(seg, s)| seg.sentence_index == s.index)
    {
        return Err(PipelineError::Stream(format!(
            "{} sentences produced but {} segments synthesized",
            sentences.len(),
            segments.len()
        )));
    }
    debug_assert!(indices_consecutive(&sentences));

    let last_audio = consumer.last_audio.unwrap_or(timebase.epoch);
    let total_s = unscaled_between(run_start, last_audio, scale);
    let ttft_s = producer.ttft_s.unwrap_or(producer.llm_elapsed_s);
    let ttfa_s = segments
        .first()
        .map(|s| s.completed_at_s)
        .unwrap_or(producer.llm_elapsed_s);
    let tts_s = segments.iter().map(|s| s.synth_elapsed_s).sum();
    let gen_time = producer.llm_elapsed_s - ttft_s;
    let llm_tps = if gen_time > 0.0 {
        producer.token_count as f64 / gen_time
    } else {
        0.0
    };
    let asr_s = transcript.asr_elapsed_s;
    let asr_words_per_sec = if asr_s > 0.0 {
        words_per_sec(transcript.word_count, asr_s)?
    } else {
        0.0
    };
    let cosine_similarity = cosine(
        &embed(&transcript.text, config.embed_dim),
        &embed(&response, config.embed_dim),
    )?;

    let timings = StageTimings {
        utterance_id: utterance.id.clone(),
        asr_s,
        rag_s,
        llm_s: producer.llm_elapsed_s,
        tts_s,
        total_s,
        asr_words_per_sec,
        llm_tokens_per_sec_obs: llm_tps,
        asr_rtf_obs: rtf(asr_s, utterance.audio_duration_s)?,
        ttft_s,
        ttfa_s,
        cosine_similarity,
        sentence_count: sentences.len(),
    };
    let trace = RunTrace {
        warmup_done_s: timebase.at(warmup_done),
        warmup_elapsed_s,
        last_audio_s: timebase.at(last_audio),
        end_frames: consumer.end_frames,
        frames_after_end: consumer.frames_after_end,
        poll_timeouts: consumer.poll_timeouts,
        token_count: producer.token_count,
        prefix_s: unscaled_between(run_start, prefix_end, scale),
    };
    Ok(UtteranceResult {
        timings,
        sentences,
        segments,
        prompt,
        response,
        retrieved,
        trace,
    })
}

fn send_frame(
    tx: &SyncSender<Vec<u8>>,
    frame: Vec<u8>,
    cancel: &AtomicBool,
) -> Result<(), SinkClosed> {
    if cancel.load(Ordering::Acquire) {
        return Err(SinkClosed("consumer cancelled".into()));
    }
    // Blocks while the channel is full; fails only if the consumer is gone.
    tx.send(frame)
        .map_err(|_| SinkClosed("consumer disconnected".into()))
}

fn produce(
    llm: &mut dyn LlmStage,
    prompt: &str,
    response: &str,
    timebase: &Timebase,
    tx: SyncSender<Vec<u8>>,
    cancel: &AtomicBool,
) -> Result<ProducerOutput, PipelineError> {
    let mut segmenter = Segmenter::new(0.0);
    let mut sentences = Vec::new();
    let forward = |batch: Vec<Sentence>, sentences: &mut Vec<Sentence>| -> Result<(), SinkClosed> {
        for s in batch {
            let frame = encode_frame(&s).map_err(|e| SinkClosed(e.to_string()))?;
            send_frame(&tx, frame, cancel)?;
            sentences.push(s);
        }
        Ok(())
    };

    let summary = llm
        .generate(prompt, response, timebase, &mut |event| {
            if cancel.load(Ordering::Acquire) {
                return Err(SinkClosed("consumer cancelled".into()));
            }
            let batch = segmenter.feed(&event.text, event.at_s);
            forward(batch, &mut sentences)
        })
        .map_err(|e| PipelineError::stage(StageName::Llm, e))?;

    let tail = segmenter.flush(timebase.now_s());
    forward(tail.into_iter().collect(), &mut sentences)
        .map_err(|e| PipelineError::stage(StageName::Llm, StageError::GenerationAborted(e.0)))?;
    send_frame(
        &tx,
        encode_end(segmenter.next_index(), timebase.now_s()),
        cancel,
    )
    .map_err(|e| PipelineError::stage(StageName::Llm, StageError::GenerationAborted(e.0)))?;

    Ok(ProducerOutput {
        sentences,
        token_count: summary.token_count,
        llm_elapsed_s: summary.llm_elapsed_s,
        ttft_s: segmenter.ttft(),
    })
}

fn consume(
    tts: &mut dyn TtsStage,
    rx: Receiver<Vec<u8>>,
    poll: Duration,
    scale: f64,
    ready: mpsc::Sender<Result<(Instant, f64), StageError>>,
    epoch: Receiver<Timebase>,
    cancel: &AtomicBool,
) -> Result<ConsumerOutput, PipelineError> {
    let fail = |e: PipelineError| {
        cancel.store(true, Ordering::Release);
        e
    };
    // The warmup runs before any epoch exists; measure it on its own base.
    let warm_base = Timebase::start_now(scale);
    match tts.warmup(&warm_base) {
        Ok(elapsed) => {
            let _ = ready.send(Ok((Instant::now(), elapsed)));
        }
        Err(e) => {
            let _ = ready.send(Err(e.clone()));
            return Err(fail(PipelineError::stage(StageName::Tts, e)));
        }
    }
    let Ok(timebase) = epoch.recv() else {
        // Coordinator gave up before starting generation.
        return Ok(ConsumerOutput {
            segments: Vec::new(),
            last_audio: None,
            end_frames: 0,
            frames_after_end: 0,
            poll_timeouts: 0,
        });
    };

    let mut out = ConsumerOutput {
        segments: Vec::new(),
        last_audio: None,
        end_frames: 0,
        frames_after_end: 0,
        poll_timeouts: 0,
    };
    let mut expected_index = 0u32;
    loop {
        let bytes = match rx.recv_timeout(poll) {
            Ok(b) => b,
            Err(RecvTimeoutError::Timeout) => {
                out.poll_timeouts += 1;
                continue;
            }
            Err(RecvTimeoutError::Disconnected) => {
                if out.end_frames == 0 {
                    // The producer already stopped; its error is the cause.
                    return Err(PipelineError::Stream(
                        "producer closed the channel without end-of-stream".into(),
                    ));
                }
                break;
            }
        };
        if out.end_frames > 0 {
            out.frames_after_end += 1;
            continue;
        }
        let frame = match decode_frame(&bytes) {
            Ok((frame, used)) if used == bytes.len() => frame,
            Ok(_) => {
                return Err(fail(PipelineError::Stream(
                    "trailing bytes after frame".into(),
                )))
            }
            Err(e) => return Err(fail(PipelineError::Stream(e.to_string()))),
        };
        if frame.is_end() {
            out.end_frames += 1;
            continue;
        }
        let sentence = frame.into_sentence().expect("sentence frame");
        if sentence.index != expected_index {
            return Err(fail(PipelineError::Stream(format!(
                "expected sentence {expected_index}, got {}",
                sentence.index
            ))));
        }
        expected_index += 1;
        let segment = tts
            .synthesize(&sentence, &timebase)
            .map_err(|e| fail(PipelineError::stage(StageName::Tts, e)))?;
        out.last_audio = Some(Instant::now());
        out.segments.push(segment);
    }
    Ok(out)
}

/// A manifest row that did not complete.
#[derive(Debug)]
pub struct FailedUtterance {
    pub utterance_id: String,
    pub stage: Option<StageName>,
    pub error: PipelineError,
}

#[derive(Debug)]
pub struct DatasetRun {
    pub results: Vec<UtteranceResult>,
    pub failed: Vec<FailedUtterance>,
    /// `None` when every utterance failed.
    pub summary: Option<RunSummary>,
}

/// Runs a manifest sequentially with fresh simulated stages per utterance.
pub fn run_dataset(
    manifest: &[UtteranceRecord],
    config: &PipelineConfig,
    index: &VectorIndex,
) -> Result<DatasetRun, PipelineError> {
    run_dataset_with(manifest, config, index, |i| {
        StageSet::simulated(config, i as u64)
    })
}

/// Like [`run_dataset`] with caller-built stages; `make_stages` receives the
/// row index.
pub fn run_dataset_with(
    manifest: &[UtteranceRecord],
    config: &PipelineConfig,
    index: &VectorIndex,
    mut make_stages: impl FnMut(usize) -> StageSet,
) -> Result<DatasetRun, PipelineError> {
    if manifest.is_empty() {
        return Err(PipelineError::Config("manifest is empty".into()));
    }
    config.validate()?;
    let mut results = Vec::new();
    let mut failed = Vec::new();
    for (i, utterance) in manifest.iter().enumerate() {
        let mut stages = make_stages(i);
        match run_utterance(utterance, config, index, &mut stages) {
            Ok(r) => results.push(r),
            Err(error) => failed.push(FailedUtterance {
                utterance_id: utterance.id.clone(),
                stage: error.stage_name(),
                error,
            }),
        }
    }
    let timings: Vec<StageTimings> = results.iter().map(|r| r.timings.clone()).collect();
    let summary = if timings.is_empty() {
        None
    } else {
        Some(summarize(&timings)?)
    };
    Ok(DatasetRun {
        results,
        failed,
        summary,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::domain::Validate;
    use crate::retrieval::Document;
    use crate::stages::{SimAsr, SimLlm, SimTts};

    fn index() -> VectorIndex {
        VectorIndex::from_documents(
            64,
            [
                Document {
                    doc_id: "rfc793".into(),
                    text: "transmission control protocol provides reliable ordered delivery \
                           of a stream of octets between hosts"
                        .into(),
                },
                Document {
                    doc_id: "rfc768".into(),
                    text: "user datagram protocol provides a minimal message oriented transport"
                        .into(),
                },
            ],
        )
    }

    fn config() -> PipelineConfig {
        PipelineConfig {
            embed_dim: 64,
            time_scale: 0.05,
            ..PipelineConfig::default()
        }
    }

    fn utterance(id: &str) -> UtteranceRecord {
        UtteranceRecord {
            id: id.into(),
            audio_duration_s: 6.36,
            reference_transcript: "what does the reference say about reliable ordered delivery"
                .into(),
            speaker_tag: "spk0".into(),
            expected_doc_id: Some("rfc793".into()),
        }
    }

    #[test]
    fn single_utterance_schedule() {
        let config = config();
        let mut stages = StageSet::simulated(&config, 0);
        let r = run_utterance(&utterance("u0"), &config, &index(), &mut stages).unwrap();
        assert_eq!(r.retrieved[0].doc_id, "rfc793");
        assert_eq!(r.sentences.len(), 2);
        assert_eq!(r.segments.len(), 2);
        assert!(r.timings.is_valid(), "{:?}", r.timings.violations());
        assert!(r.trace.warmup_done_s < 0.0);
        assert_eq!(r.trace.end_frames, 1);
        assert_eq!(r.trace.frames_after_end, 0);
        assert!(r.timings.ttfa_s >= r.timings.ttft_s);
        assert!(r
            .segments
            .iter()
            .zip(&r.sentences)
            .all(|(a, s)| a.follows(s)));
        assert!(r.timings.total_s < r.timings.component_sum());
    }

    struct FailingTts;

    impl TtsStage for FailingTts {
        fn warmup(&mut self, _: &Timebase) -> Result<f64, StageError> {
            Ok(0.0)
        }

        fn synthesize(&mut self, _: &Sentence, _: &Timebase) -> Result<AudioSegment, StageError> {
            Err(StageError::Synthesis("boom".into()))
        }
    }

    #[test]
    fn failing_tts_marks_failure_and_dataset_continues() {
        let config = config();
        let manifest = [utterance("bad"), utterance("good")];
        let run = run_dataset_with(&manifest, &config, &index(), |i| {
            let mut set = StageSet::simulated(&config, i as u64);
            if i == 0 {
                set.tts = Box::new(FailingTts);
            }
            set
        })
        .unwrap();
        assert_eq!(run.failed.len(), 1);
        assert_eq!(run.failed[0].utterance_id, "bad");
        assert_eq!(run.failed[0].stage, Some(StageName::Tts));
        assert_eq!(run.results.len(), 1);
        assert_eq!(run.summary.unwrap().count, 1);
    }

    struct FailingWarmup;

    impl TtsStage for FailingWarmup {
        fn warmup(&mut self, _: &Timebase) -> Result<f64, StageError> {
            Err(StageError::Synthesis("no voice".into()))
        }

        fn synthesize(&mut self, _: &Sentence, _: &Timebase) -> Result<AudioSegment, StageError> {
            unreachable!()
        }
    }

    #[test]
    fn warmup_failure_never_starts_generation() {
        let config = config();
        let mut stages = StageSet {
            asr: Box::new(SimAsr::new(&config, StageClock::from_config(&config, 1))),
            llm: Box::new(SimLlm::new(&config, StageClock::from_config(&config, 2))),
            tts: Box::new(FailingWarmup),
        };
        let err = run_utterance(&utterance("u"), &config, &index(), &mut stages).unwrap_err();
        assert_eq!(err.stage_name(), Some(StageName::Tts));
    }

    #[test]
    fn consumer_failure_cancels_producer() {
        let config = PipelineConfig {
            response_sentences: 10,
            ..config()
        };
        let mut stages = StageSet {
            asr: Box::new(SimAsr::new(&config, StageClock::from_config(&config, 1))),
            llm: Box::new(SimLlm::new(&config, StageClock::from_config(&config, 2))),
            tts: Box::new(FailingTts),
        };
        let start = Instant::now();
        let err = run_utterance(&utterance("u"), &config, &index(), &mut stages).unwrap_err();
        assert_eq!(err.stage_name(), Some(StageName::Tts));
        // Full generation of ~140 tokens would take ~1.9 s unscaled.
        let unscaled = start.elapsed().as_secs_f64() / config.time_scale;
        assert!(unscaled < 1.0, "{unscaled}");
    }

    #[test]
    fn remote_stubs_report_their_stage() {
        use crate::stages::{RemoteAsr, RemoteLlm};
        let mut stages = StageSet::simulated(&config(), 0);
        stages.asr = Box::new(RemoteAsr {
            endpoint: "http://localhost:9000".into(),
        });
        let err = run_utterance(&utterance("u"), &config(), &index(), &mut stages).unwrap_err();
        assert_eq!(err.stage_name(), Some(StageName::Asr));

        let mut stages = StageSet::simulated(&config(), 0);
        stages.llm = Box::new(RemoteLlm {
            endpoint: "http://localhost:9001".into(),
        });
        let err = run_utterance(&utterance("u"), &config(), &index(), &mut stages).unwrap_err();
        assert_eq!(err.stage_name(), Some(StageName::Llm));
    }

    #[test]
    fn empty_manifest_is_config_error() {
        assert!(matches!(
            run_dataset(&[], &config(), &index()),
            Err(PipelineError::Config(_))
        ));
    }

    #[test]
    fn dimension_mismatch_is_config_error() {
        let config = PipelineConfig {
            embed_dim: 32,
            ..config()
        };
        let mut stages = StageSet::simulated(&config, 0);
        assert!(matches!(
            run_utterance(&utterance("u"), &config, &index(), &mut stages),
            Err(PipelineError::Config(_))
        ));
    }

    #[test]
    fn tiny_channel_still_drains() {
        let config = PipelineConfig {
            queue_capacity: 1,
            response_sentences: 8,
            ..config()
        };
        let mut stages = StageSet::simulated(&config, 0);
        let r = run_utterance(&utterance("u"), &config, &index(), &mut stages).unwrap();
        assert_eq!(r.segments.len(), 8);
        let idx: Vec<u32> = r.segments.iter().map(|s| s.sentence_index).collect();
        assert_eq!(idx, (0..8).collect::<Vec<_>>());
    }

    #[test]
    fn sim_tts_is_warm_after_run() {
        let config = config();
        let mut tts = SimTts::new(&config, StageClock::from_config(&config, 3));
        tts.warmup(&Timebase::start_now(config.time_scale)).unwrap();
        assert!(tts.is_warm());
    }
}

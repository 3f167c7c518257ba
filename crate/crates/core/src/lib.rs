//! Streaming voice-to-voice pipeline orchestration.
//!
//! ASR runs upfront, retrieval grounds the prompt, and generation streams
//! sentence by sentence into a concurrently running synthesis stage. Stages
//! are pluggable traits; the bundled simulators reproduce measured stage
//! rates so the orchestration and its latency metrics can be exercised
//! without models.

pub mod dataset;
pub mod domain;
pub mod metrics;
pub mod orchestrator;
pub mod retrieval;
pub mod segmenter;
pub mod stages;
pub mod wire;

pub use domain::{
    AudioSegment, PipelineConfig, Sentence, StageTimings, Transcript, UtteranceRecord, Validate,
};
pub use metrics::{render_table, summarize, RunSummary};
pub use orchestrator::{run_dataset, run_dataset_with, run_utterance, DatasetRun, UtteranceResult};
pub use retrieval::{build_index, embed, load_index, save_index, Embedding, Hit, VectorIndex};
pub use segmenter::Segmenter;
pub use stages::StageSet;

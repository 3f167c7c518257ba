//! Benchmark outputs: per-utterance CSV, JSON summary and text table.

use serde::ser::{SerializeMap, Serializer};
use serde::Serialize;
use std::io::{self, Write};
use voicepipe::metrics::{Column, ColumnStats};
use voicepipe::orchestrator::DatasetRun;
use voicepipe::{PipelineConfig, StageTimings};

/// Frozen CSV column order. Changing it is a format break.
pub const CSV_HEADER: [&str; 13] = [
    "utterance_id",
    "asr_s",
    "rag_s",
    "llm_s",
    "tts_s",
    "total_s",
    "asr_words_per_sec",
    "llm_tokens_per_sec_obs",
    "asr_rtf_obs",
    "ttft_s",
    "ttfa_s",
    "cosine_similarity",
    "sentence_count",
];

pub const SUMMARY_FORMAT: &str = "voicepipe-summary";
pub const SUMMARY_VERSION: u32 = 1;

pub const CSV_FILE: &str = "timings.csv";
pub const SUMMARY_FILE: &str = "summary.json";
pub const TABLE_FILE: &str = "table.txt";

fn csv_row(t: &StageTimings) -> [String; 13] {
    let f = |v: f64| format!("{v:.6}");
    [
        t.utterance_id.clone(),
        f(t.asr_s),
        f(t.rag_s),
        f(t.llm_s),
        f(t.tts_s),
        f(t.total_s),
        f(t.asr_words_per_sec),
        f(t.llm_tokens_per_sec_obs),
        f(t.asr_rtf_obs),
        f(t.ttft_s),
        f(t.ttfa_s),
        f(t.cosine_similarity),
        t.sentence_count.to_string(),
    ]
}

pub fn write_csv<'a>(
    rows: impl IntoIterator<Item = &'a StageTimings>,
    out: impl Write,
) -> Result<(), csv::Error> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(CSV_HEADER)?;
    for t in rows {
        w.write_record(csv_row(t))?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Serialize)]
struct Stats {
    mean: f64,
    min: f64,
    max: f64,
}

impl From<ColumnStats> for Stats {
    fn from(s: ColumnStats) -> Self {
        Self {
            mean: s.mean,
            min: s.min,
            max: s.max,
        }
    }
}

/// Column statistics keyed by CSV column name, in table order.
#[derive(Debug)]
struct Columns(Vec<(&'static str, Stats)>);

impl Serialize for Columns {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        let mut map = serializer.serialize_map(Some(self.0.len()))?;
        for (key, stats) in &self.0 {
            map.serialize_entry(key, stats)?;
        }
        map.end()
    }
}

#[derive(Debug, Serialize)]
struct Failure {
    utterance_id: String,
    stage: Option<String>,
    error: String,
}

#[derive(Debug, Serialize)]
struct Summary<'a> {
    format: &'static str,
    version: u32,
    count: usize,
    failed_count: usize,
    failed: Vec<Failure>,
    /// Null when every utterance failed.
    columns: Option<Columns>,
    config: &'a PipelineConfig,
}

pub fn write_summary(run: &DatasetRun, config: &PipelineConfig, out: impl Write) -> io::Result<()> {
    let summary = Summary {
        format: SUMMARY_FORMAT,
        version: SUMMARY_VERSION,
        count: run.results.len(),
        failed_count: run.failed.len(),
        failed: run
            .failed
            .iter()
            .map(|f| Failure {
                utterance_id: f.utterance_id.clone(),
                stage: f.stage.map(|s| s.to_string()),
                error: f.error.to_string(),
            })
            .collect(),
        columns: run.summary.as_ref().map(|s| {
            Columns(
                Column::ALL
                    .iter()
                    .map(|&c| (c.key(), Stats::from(s.column(c))))
                    .collect(),
            )
        }),
        config,
    };
    let mut out = out;
    serde_json::to_writer_pretty(&mut out, &summary)?;
    out.write_all(b"\n")
}

use crate::config::{parse_config, RunConfig};
use crate::manifest::{load_manifest, write_manifest, ManifestError};
use crate::report::{write_csv, write_summary, CSV_FILE, SUMMARY_FILE, TABLE_FILE};
use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::time::Instant;
use thiserror::Error;
use voicepipe::dataset::synthesize;
use voicepipe::orchestrator::{run_dataset, PipelineError};
use voicepipe::retrieval::{build_index, embed, load_index, save_index, RetrievalError};
use voicepipe::{render_table, VectorIndex};

#[derive(Debug, Error)]
pub enum CliError {
    /// Bad flags, inputs or configuration; exit status 1.
    #[error("{0}")]
    Usage(String),
    /// The command was well-formed but could not complete; exit status 2.
    #[error("{0}")]
    Runtime(String),
}

impl CliError {
    pub fn exit_code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 1,
            CliError::Runtime(_) => 2,
        }
    }
}

fn usage(e: impl ToString) -> CliError {
    CliError::Usage(e.to_string())
}

fn runtime(e: impl ToString) -> CliError {
    CliError::Runtime(e.to_string())
}

fn from_retrieval(e: RetrievalError) -> CliError {
    match e {
        RetrievalError::Config(_) | RetrievalError::EmptyCorpus(_) => usage(e),
        other => runtime(other),
    }
}

fn create(path: &Path) -> Result<BufWriter<File>, CliError> {
    if let Some(parent) = path.parent().filter(|p| !p.as_os_str().is_empty()) {
        fs::create_dir_all(parent)
            .map_err(|e| runtime(format!("creating {}: {e}", parent.display())))?;
    }
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| runtime(format!("creating {}: {e}", path.display())))
}

pub fn dataset_synth(
    n: usize,
    mean_duration_s: f64,
    docs_dir: &Path,
    seed: u64,
    out: &Path,
) -> Result<String, CliError> {
    // Only the document text is used; the embedding size is irrelevant.
    let corpus = build_index(docs_dir, 8).map_err(from_retrieval)?;
    let rows = synthesize(n, mean_duration_s, &corpus, seed).map_err(usage)?;
    let mut file = create(out)?;
    write_manifest(&rows, &mut file).map_err(|e| runtime(format!("{}: {e}", out.display())))?;
    let mean = rows.iter().map(|r| r.audio_duration_s).sum::<f64>() / rows.len() as f64;
    Ok(format!(
        "wrote {} utterances to {} (mean duration {mean:.3} s)",
        rows.len(),
        out.display()
    ))
}

pub fn index_build(docs_dir: &Path, cache: &Path, dim: usize) -> Result<String, CliError> {
    let start = Instant::now();
    let index = build_index(docs_dir, dim).map_err(from_retrieval)?;
    save_index(&index, cache).map_err(runtime)?;
    Ok(format!(
        "{} documents indexed in {:.3} s",
        index.len(),
        start.elapsed().as_secs_f64()
    ))
}

fn open_cache(cache: &Path) -> Result<VectorIndex, CliError> {
    if !cache.exists() {
        return Err(usage(format!("index cache {} not found", cache.display())));
    }
    load_index(cache).map_err(runtime)
}

pub fn index_query(cache: &Path, query: &str, k: usize) -> Result<String, CliError> {
    let index = open_cache(cache)?;
    let hits = index
        .search(&embed(query, index.dim()), k)
        .map_err(runtime)?;
    Ok(hits
        .iter()
        .map(|h| format!("{}\t{:.6}\n", h.doc_id, h.score))
        .collect())
}

pub fn load_run_config(path: Option<&Path>) -> Result<RunConfig, CliError> {
    let Some(path) = path else {
        return Ok(RunConfig::default());
    };
    let text = fs::read_to_string(path)
        .map_err(|e| usage(format!("reading config {}: {e}", path.display())))?;
    let base = path.parent().unwrap_or(Path::new("."));
    parse_config(&text, base).map_err(|e| usage(format!("{}: {e}", path.display())))
}

/// Loads the cache, rebuilding it from `docs_dir` when it is missing,
/// unreadable, from another version or built for a different dimension.
fn resolve_index(
    cache: &Path,
    docs_dir: Option<&Path>,
    dim: usize,
    log: &mut dyn Write,
) -> Result<VectorIndex, CliError> {
    let reason = match load_index(cache) {
        Ok(index) if index.dim() == dim => return Ok(index),
        Ok(index) => format!("built for dimension {}, config wants {dim}", index.dim()),
        Err(e) if e.is_stale_cache() => e.to_string(),
        Err(e) => return Err(runtime(e)),
    };
    let Some(docs_dir) = docs_dir else {
        return Err(usage(format!(
            "index cache {} unusable ({reason}) and no docs_dir configured",
            cache.display()
        )));
    };
    let index = build_index(docs_dir, dim).map_err(from_retrieval)?;
    save_index(&index, cache).map_err(runtime)?;
    let _ = writeln!(
        log,
        "rebuilt index cache {} from {} ({reason})",
        cache.display(),
        docs_dir.display()
    );
    Ok(index)
}

#[derive(Debug)]
pub struct BenchOutcome {
    pub table: String,
    pub completed: usize,
    pub failed: usize,
    pub out_dir: PathBuf,
}

pub fn bench_run(
    manifest: &Path,
    config: Option<&Path>,
    cache: &Path,
    out_dir: &Path,
    log: &mut dyn Write,
) -> Result<BenchOutcome, CliError> {
    let run_config = load_run_config(config)?;
    let rows = load_manifest(manifest).map_err(|e| match e {
        ManifestError::Io(io) => usage(format!("reading manifest {}: {io}", manifest.display())),
        other => usage(format!("{}: {other}", manifest.display())),
    })?;
    if rows.is_empty() {
        return Err(usage(format!(
            "manifest {} has no utterances",
            manifest.display()
        )));
    }
    let config = &run_config.pipeline;
    let index = resolve_index(cache, run_config.docs_dir.as_deref(), config.embed_dim, log)?;

    let run = run_dataset(&rows, config, &index).map_err(|e| match e {
        PipelineError::Config(_) | PipelineError::Invalid(_) => usage(e),
        other => runtime(other),
    })?;

    fs::create_dir_all(out_dir)
        .map_err(|e| runtime(format!("creating {}: {e}", out_dir.display())))?;
    let csv_path = out_dir.join(CSV_FILE);
    write_csv(run.results.iter().map(|r| &r.timings), create(&csv_path)?)
        .map_err(|e| runtime(format!("{}: {e}", csv_path.display())))?;
    let summary_path = out_dir.join(SUMMARY_FILE);
    write_summary(&run, config, create(&summary_path)?)
        .map_err(|e| runtime(format!("{}: {e}", summary_path.display())))?;
    let table = match &run.summary {
        Some(s) => render_table(s),
        None => "no utterance completed\n".to_string(),
    };
    let table_path = out_dir.join(TABLE_FILE);
    fs::write(&table_path, &table)
        .map_err(|e| runtime(format!("{}: {e}", table_path.display())))?;

    for f in &run.failed {
        let _ = writeln!(log, "failed {}: {}", f.utterance_id, f.error);
    }
    Ok(BenchOutcome {
        table,
        completed: run.results.len(),
        failed: run.failed.len(),
        out_dir: out_dir.to_path_buf(),
    })
}

impl From<io::Error> for CliError {
    fn from(e: io::Error) -> Self {
        runtime(e)
    }
}

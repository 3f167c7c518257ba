//! Acceptance suite. Runs every criterion sequentially (several are
//! timing-sensitive) and prints one PASS/FAIL line per criterion.
//!
//! Run alone with `cargo test -p voicepipe --test acceptance`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use regex::Regex;
use std::path::PathBuf;
use std::time::{Duration, Instant};
use voicepipe::dataset::synthesize;
use voicepipe::metrics::{cosine, cosine_slices, render_table, summarize, Column};
use voicepipe::orchestrator::{run_dataset, run_utterance, UtteranceResult};
use voicepipe::retrieval::{build_index, Document, Embedding, VectorIndex};
use voicepipe::segmenter::Segmenter;
use voicepipe::stages::StageSet;
use voicepipe::wire::{decode_frame, encode_end, encode_frame, FrameDecoder, FrameKind};
use voicepipe::{PipelineConfig, Sentence, StageTimings, UtteranceRecord};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome);

fn ensure(cond: bool, msg: impl FnOnce() -> String) -> Result<(), String> {
    if cond {
        Ok(())
    } else {
        Err(msg())
    }
}

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/fixtures")
        .join(name)
}

fn corpus_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../../data/docs")
}

fn within(actual: f64, target: f64, frac: f64) -> bool {
    (actual - target).abs() <= frac * target
}

fn reference_config() -> PipelineConfig {
    PipelineConfig::default()
}

fn corpus(config: &PipelineConfig) -> VectorIndex {
    build_index(&corpus_dir(), config.embed_dim).expect("sample corpus")
}

// ---------------------------------------------------------------------------
// 1. Aggregation oracle

fn parse_rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .filter(|l| !l.starts_with('#') && !l.trim().is_empty())
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn ac1_aggregation_oracle() -> Outcome {
    let records: Vec<StageTimings> =
        parse_rows(&std::fs::read_to_string(fixture("latency_fixture.csv")).unwrap())
            .into_iter()
            .map(|r| {
                let f = |i: usize| r[i].parse::<f64>().unwrap();
                StageTimings {
                    utterance_id: r[0].clone(),
                    asr_s: f(1),
                    rag_s: f(2),
                    llm_s: f(3),
                    tts_s: f(4),
                    total_s: f(5),
                    asr_words_per_sec: f(6),
                    llm_tokens_per_sec_obs: f(7),
                    asr_rtf_obs: 0.0,
                    cosine_similarity: f(8),
                    ttft_s: f(9),
                    ttfa_s: f(10),
                    sentence_count: 1,
                }
            })
            .collect();
    ensure(records.len() == 5, || {
        format!("fixture has {} rows", records.len())
    })?;
    let summary = summarize(&records).map_err(|e| e.to_string())?;
    let expected =
        parse_rows(&std::fs::read_to_string(fixture("latency_fixture_expected.csv")).unwrap());
    let mut worst = 0.0f64;
    for (row, col) in expected.iter().zip(Column::ALL) {
        ensure(row[0] == col.key(), || {
            format!("column order {} vs {}", row[0], col.key())
        })?;
        let got = summary.column(col);
        for (name, want, have) in [
            ("mean", &row[1], got.mean),
            ("min", &row[2], got.min),
            ("max", &row[3], got.max),
        ] {
            let want: f64 = want.parse().unwrap();
            let err = (want - have).abs();
            worst = worst.max(err);
            ensure(err <= 1e-9, || {
                format!("{} {name}: {have} vs oracle {want}", col.key())
            })?;
        }
    }
    ensure(
        summary.total_s.min == 0.417 && summary.total_s.max == 3.154,
        || {
            format!(
                "total min/max {} {}",
                summary.total_s.min, summary.total_s.max
            )
        },
    )?;
    let golden = std::fs::read_to_string(fixture("latency_fixture_table.txt")).unwrap();
    ensure(render_table(&summary) == golden, || {
        format!(
            "rendered table differs from golden:\n{}",
            render_table(&summary)
        )
    })?;
    Ok(format!(
        "max |error| {worst:.1e}; total min 0.417 max 3.154; golden table matches"
    ))
}

// ---------------------------------------------------------------------------
// 2. Reference latency means in simulation

fn ac2_reference_means() -> Outcome {
    let config = PipelineConfig {
        jitter_frac: 0.1,
        time_scale: 0.05,
        ..reference_config()
    };
    let index = corpus(&config);
    let manifest = synthesize(50, 6.36, &index, 2024).map_err(|e| e.to_string())?;
    let run = run_dataset(&manifest, &config, &index).map_err(|e| e.to_string())?;
    ensure(run.failed.is_empty(), || {
        format!("{} utterances failed", run.failed.len())
    })?;
    let s = run.summary.unwrap();
    println!("{}", render_table(&s));
    let checks = [
        ("ASR", s.asr_s.mean, 0.049, 0.15),
        ("RAG", s.rag_s.mean, 0.008, 0.15),
        ("LLM", s.llm_s.mean, 0.670, 0.15),
        ("TTS", s.tts_s.mean, 0.286, 0.15),
        ("Total", s.total_s.mean, 0.934, 0.15),
        ("TTFA", s.ttfa_s.mean, 0.678, 0.20),
        ("TTFT", s.ttft_s.mean, 0.106, 0.10),
    ];
    let mut report = Vec::new();
    let mut bad = Vec::new();
    for (name, got, want, tol) in checks {
        let dev = (got - want) / want * 100.0;
        report.push(format!("{name} {got:.3} ({dev:+.1}%)"));
        if !within(got, want, tol) {
            bad.push(format!(
                "{name} mean {got:.4} outside ±{:.0}% of {want}",
                tol * 100.0
            ));
        }
    }
    ensure(bad.is_empty(), || bad.join("; "))?;
    Ok(report.join(", "))
}

// ---------------------------------------------------------------------------
// 3. Overlap

fn random_run(
    rng: &mut ChaCha8Rng,
    base: &PipelineConfig,
    index: &VectorIndex,
    manifest: &[UtteranceRecord],
    run: u64,
) -> (PipelineConfig, Result<UtteranceResult, String>) {
    let config = PipelineConfig {
        response_sentences: rng.random_range(1..=10),
        rng_seed: rng.random(),
        ..base.clone()
    };
    let utterance = &manifest[rng.random_range(0..manifest.len())];
    let mut stages = StageSet::simulated(&config, run);
    let result = run_utterance(utterance, &config, index, &mut stages).map_err(|e| e.to_string());
    (config, result)
}

fn ac3_overlap() -> Outcome {
    let base = PipelineConfig {
        time_scale: 0.02,
        jitter_frac: 0.1,
        ..reference_config()
    };
    let index = corpus(&base);
    let manifest = synthesize(100, 6.36, &index, 3).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut multi, mut single, mut min_saving) = (0, 0, f64::INFINITY);
    for run in 0..100 {
        let (config, r) = random_run(&mut rng, &base, &index, &manifest, run);
        let r = r?;
        let t = &r.timings;
        let sum = t.component_sum();
        if t.sentence_count > 1 {
            multi += 1;
            min_saving = min_saving.min(sum - t.total_s);
            ensure(t.total_s < sum, || {
                format!(
                    "run {run}: {} sentences, total {:.4} >= sum {sum:.4}",
                    t.sentence_count, t.total_s
                )
            })?;
        } else {
            single += 1;
            let bound = sum + 2.0 * config.queue_poll_timeout_s;
            ensure(t.total_s <= bound, || {
                format!(
                    "run {run}: single sentence total {:.4} > {bound:.4}",
                    t.total_s
                )
            })?;
        }
    }
    Ok(format!(
        "{multi} multi-sentence runs (min saving {min_saving:.3} s), {single} single-sentence runs"
    ))
}

// ---------------------------------------------------------------------------
// 4. ASR real-time factor

fn ac4_asr_rtf() -> Outcome {
    let config = PipelineConfig {
        time_scale: 0.02,
        ..reference_config()
    };
    let index = corpus(&config);
    let manifest = synthesize(100, 6.36, &index, 4).unwrap();
    let run = run_dataset(&manifest, &config, &index).map_err(|e| e.to_string())?;
    ensure(run.failed.is_empty(), || {
        format!("{} failures", run.failed.len())
    })?;
    let worst = run
        .results
        .iter()
        .map(|r| r.timings.asr_rtf_obs)
        .fold(0.0, f64::max);
    let n = run.results.len();
    ensure(
        run.results.iter().all(|r| r.timings.asr_rtf_obs < 0.2),
        || format!("max observed RTF {worst}"),
    )?;
    Ok(format!(
        "{n}/{n} utterances below 0.2; max observed RTF {worst:.4}"
    ))
}

// ---------------------------------------------------------------------------
// 5. FIFO, termination, consumer-first startup

fn ac5_fifo_termination() -> Outcome {
    let base = PipelineConfig {
        time_scale: 0.02,
        ..reference_config()
    };
    let index = corpus(&base);
    let manifest = synthesize(50, 6.36, &index, 5).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for run in 0..200 {
        let base = PipelineConfig {
            queue_capacity: rng.random_range(1..=64),
            jitter_frac: rng.random_range(0.0..0.5),
            ..base.clone()
        };
        let (_, r) = random_run(&mut rng, &base, &index, &manifest, run);
        let r = r?;
        let n = r.sentences.len() as u32;
        let order: Vec<u32> = r.segments.iter().map(|s| s.sentence_index).collect();
        ensure(order == (0..n).collect::<Vec<_>>(), || {
            format!("run {run}: order {order:?}")
        })?;
        ensure(
            r.trace.end_frames == 1 && r.trace.frames_after_end == 0,
            || {
                format!(
                    "run {run}: {} end frames, {} after end",
                    r.trace.end_frames, r.trace.frames_after_end
                )
            },
        )?;
        ensure(r.trace.warmup_done_s < 0.0, || {
            format!(
                "run {run}: warmup finished {} s after the epoch",
                r.trace.warmup_done_s
            )
        })?;
    }
    Ok("200/200 runs: FIFO order, one end-of-stream, warmup before epoch".into())
}

// ---------------------------------------------------------------------------
// 6. Wire golden vectors

fn unhex(s: &str) -> Vec<u8> {
    (0..s.len())
        .step_by(2)
        .map(|i| u8::from_str_radix(&s[i..i + 2], 16).unwrap())
        .collect()
}

fn random_text(rng: &mut ChaCha8Rng, max_len: usize) -> String {
    let len = rng.random_range(1..=max_len);
    (0..len)
        .map(|_| match rng.random_range(0..4) {
            0 => rng.random_range(b' '..=b'~') as char,
            1 => char::from_u32(rng.random_range(0x80..0x800)).unwrap(),
            2 => char::from_u32(rng.random_range(0x4e00..0x9fff)).unwrap(),
            _ => char::from_u32(rng.random_range(0x1f300..0x1f64f)).unwrap(),
        })
        .collect()
}

fn ac6_wire() -> Outcome {
    let text = std::fs::read_to_string(fixture("frames.hex")).unwrap();
    let mut golden = 0;
    for line in text.lines().filter(|l| !l.starts_with('#')) {
        let f: Vec<&str> = line.split_whitespace().collect();
        let bytes = unhex(f[4]);
        let (frame, used) = decode_frame(&bytes).map_err(|e| e.to_string())?;
        let payload = if f[3] == "-" {
            String::new()
        } else {
            String::from_utf8(unhex(f[3])).unwrap()
        };
        let kind = if f[0] == "end" {
            FrameKind::EndOfStream
        } else {
            FrameKind::Sentence
        };
        ensure(
            used == bytes.len()
                && frame.kind == kind
                && frame.index.to_string() == f[1]
                && frame.emitted_at_us.to_string() == f[2]
                && frame.payload == payload,
            || format!("golden frame decoded wrong: {frame:?}"),
        )?;
        let again = match frame.kind {
            FrameKind::EndOfStream => encode_end(frame.index, frame.emitted_at_s()),
            FrameKind::Sentence => encode_frame(&frame.clone().into_sentence().unwrap()).unwrap(),
        };
        ensure(again == bytes, || format!("re-encode differs for {line}"))?;
        if kind == FrameKind::Sentence {
            golden += 1;
        }
    }
    ensure(golden == 3, || format!("{golden} sentence vectors"))?;

    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let mut stream = Vec::new();
    let mut sent = Vec::new();
    for i in 0..10_000u32 {
        let s = Sentence::new(
            i,
            random_text(&mut rng, 40),
            rng.random_range(0.0..10_000.0),
        );
        let bytes = encode_frame(&s).map_err(|e| e.to_string())?;
        let (frame, used) = decode_frame(&bytes).map_err(|e| e.to_string())?;
        let back = frame.into_sentence().unwrap();
        ensure(
            used == bytes.len()
                && back.index == s.index
                && back.text == s.text
                && (back.emitted_at_s - s.emitted_at_s).abs() <= 1e-6,
            || format!("round trip failed for {s:?}"),
        )?;
        if i < 500 {
            stream.extend(bytes);
            sent.push(s);
        }
    }
    // Split-stream decoding matches whole-buffer decoding.
    let mut dec = FrameDecoder::new();
    let mut got = Vec::new();
    let mut pos = 0;
    while pos < stream.len() {
        let step = rng.random_range(1..=64).min(stream.len() - pos);
        dec.push(&stream[pos..pos + step]);
        pos += step;
        while let Some(f) = dec.next_frame().map_err(|e| e.to_string())? {
            got.push(f.into_sentence().unwrap());
        }
    }
    ensure(
        got.len() == sent.len() && got.iter().zip(&sent).all(|(a, b)| a.text == b.text),
        || "split-stream decoding diverged".into(),
    )?;
    Ok(
        "3 golden frames + end frame byte-identical; 10000 random round trips; split stream ok"
            .into(),
    )
}

// ---------------------------------------------------------------------------
// 7. Search exactness

fn random_unit(rng: &mut ChaCha8Rng, dim: usize) -> Embedding {
    loop {
        let v: Vec<f64> = (0..dim).map(|_| rng.sample(StandardNormal)).collect();
        if let Some(e) = Embedding::normalized(v) {
            return e;
        }
    }
}

fn brute_force(entries: &[(String, Vec<f64>)], q: &[f64], k: usize) -> Vec<(String, f64)> {
    let mut all: Vec<(String, f64)> = entries
        .iter()
        .map(|(id, v)| {
            let mut dot = 0.0;
            for i in 0..v.len() {
                dot += v[i] * q[i];
            }
            (id.clone(), dot)
        })
        .collect();
    all.sort_by(|a, b| b.1.total_cmp(&a.1).then_with(|| a.0.cmp(&b.0)));
    all.truncate(k);
    all
}

fn ac7_search_exactness() -> Outcome {
    let dim = 32;
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut index = VectorIndex::new(dim);
    let mut raw: Vec<(String, Vec<f64>)> = Vec::new();
    for i in 0..1000 {
        // Every tenth vector duplicates an earlier one under a new id.
        let e = if i % 10 == 9 {
            Embedding::from_raw(raw[rng.random_range(0..raw.len())].1.clone())
        } else {
            random_unit(&mut rng, dim)
        };
        let id = format!("doc{:04}", rng.random_range(0..100_000));
        if raw.iter().any(|(r, _)| *r == id) {
            continue;
        }
        raw.push((id.clone(), e.values().to_vec()));
        index.insert(
            Document {
                doc_id: id,
                text: "x".into(),
            },
            e,
        );
    }
    let mut queries: Vec<Embedding> = (0..100).map(|_| random_unit(&mut rng, dim)).collect();
    // Queries equal to duplicated vectors force exact ties at the top.
    queries.extend(
        raw.iter()
            .step_by(10)
            .take(50)
            .map(|(_, v)| Embedding::from_raw(v.clone())),
    );
    let mut ties = 0;
    for q in &queries {
        for k in [1, 5, 10] {
            let got = index.search(q, k).map_err(|e| e.to_string())?;
            let want = brute_force(&raw, q.values(), k);
            ensure(got.len() == want.len(), || "length mismatch".into())?;
            for (g, w) in got.iter().zip(&want) {
                ensure(g.doc_id == w.0 && g.score == w.1, || {
                    format!("k={k}: got {} {} want {} {}", g.doc_id, g.score, w.0, w.1)
                })?;
            }
            ties += got.windows(2).filter(|p| p[0].score == p[1].score).count();
        }
    }
    ensure(ties > 0, || "no tie cases exercised".into())?;
    Ok(format!(
        "{} vectors, {} queries x k in {{1,5,10}} equal brute force; {ties} tied neighbours",
        raw.len(),
        queries.len()
    ))
}

// ---------------------------------------------------------------------------
// 8. Segmenter chunking independence

const WORDS: &[&str] = &[
    "the",
    "pipeline",
    "3.14",
    "e.g.",
    "Hello",
    "TCP",
    "(see",
    "this)",
    "\"quoted\"",
    "Grüße",
    "日本",
    "v1.2",
    "ok",
    "wait",
];
const ENDS: &[&str] = &[".", "!", "?", "?!", "...", ".\"", "!)", ".')", ""];
const GAPS: &[&str] = &[" ", "  ", "\n", "\t ", " \n\n "];

fn random_passage(rng: &mut ChaCha8Rng) -> String {
    let mut s = String::new();
    if rng.random_bool(0.2) {
        s.push_str(GAPS[rng.random_range(0..GAPS.len())]);
    }
    for _ in 0..rng.random_range(1..30) {
        s.push_str(WORDS[rng.random_range(0..WORDS.len())]);
        if rng.random_bool(0.3) {
            s.push_str(ENDS[rng.random_range(0..ENDS.len())]);
        }
        s.push_str(GAPS[rng.random_range(0..GAPS.len())]);
    }
    if rng.random_bool(0.5) {
        s.truncate(s.trim_end().len());
    }
    s
}

fn regex_oracle(re: &Regex, text: &str) -> Vec<String> {
    let mut out = Vec::new();
    let mut start = 0;
    for m in re.find_iter(text) {
        // The match ends with the whitespace that confirms the boundary.
        let ws_len = m.as_str().chars().last().unwrap().len_utf8();
        let end = m.end() - ws_len;
        let piece = text[start..end].trim();
        if !piece.is_empty() {
            out.push(piece.to_string());
        }
        start = end;
    }
    let tail = text[start..].trim();
    if !tail.is_empty() {
        out.push(tail.to_string());
    }
    out
}

fn random_chunks(rng: &mut ChaCha8Rng, text: &str) -> Vec<String> {
    let chars: Vec<char> = text.chars().collect();
    let mut out = Vec::new();
    let mut i = 0;
    while i < chars.len() {
        let n = rng.random_range(0..=8).min(chars.len() - i);
        out.push(chars[i..i + n].iter().collect());
        i += n;
    }
    out
}

fn ac8_segmenter() -> Outcome {
    let re = Regex::new(r#"[.!?]["')\]]*\s"#).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let mut sentences = 0;
    for t in 0..500 {
        let text = random_passage(&mut rng);
        let oracle = regex_oracle(&re, &text);
        for c in 0..20 {
            let mut seg = Segmenter::new(0.0);
            let mut got = Vec::new();
            for (i, chunk) in random_chunks(&mut rng, &text).iter().enumerate() {
                got.extend(seg.feed(chunk, i as f64));
            }
            got.extend(seg.flush(1e9));
            let texts: Vec<&str> = got.iter().map(|s| s.text.as_str()).collect();
            ensure(texts == oracle, || {
                format!("text {t} chunking {c}: {texts:?} vs {oracle:?} for {text:?}")
            })?;
            ensure(
                got.iter().enumerate().all(|(i, s)| s.index as usize == i),
                || "indices".into(),
            )?;
            let squash = |s: &str| s.chars().filter(|c| !c.is_whitespace()).collect::<String>();
            ensure(squash(&texts.join(" ")) == squash(&text), || {
                format!("lossy on {text:?}")
            })?;
        }
        sentences += oracle.len();
    }
    Ok(format!(
        "500 texts x 20 chunkings match the regex oracle ({sentences} sentences)"
    ))
}

// ---------------------------------------------------------------------------
// 9. Cosine properties

fn ac9_cosine() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(9);
    let mut worst_oracle = 0.0f64;
    for i in 0..10_000 {
        let dim = rng.random_range(1..=64);
        let a: Vec<f64> = (0..dim).map(|_| rng.random_range(-3.0..3.0)).collect();
        let b: Vec<f64> = (0..dim).map(|_| rng.random_range(-3.0..3.0)).collect();
        let ab = cosine_slices(&a, &b).map_err(|e| e.to_string())?;
        let ba = cosine_slices(&b, &a).map_err(|e| e.to_string())?;
        ensure(ab.to_bits() == ba.to_bits(), || {
            format!("pair {i}: asymmetric {ab} {ba}")
        })?;
        ensure((-1.0..=1.0).contains(&ab), || {
            format!("pair {i}: {ab} out of range")
        })?;
        let ea = Embedding::normalized(a.clone()).unwrap();
        let aa = cosine(&ea, &ea).unwrap();
        ensure((aa - 1.0).abs() <= 1e-9, || format!("self similarity {aa}"))?;
        let (mut dot, mut na, mut nb) = (0.0, 0.0, 0.0);
        for j in 0..dim {
            dot += a[j] * b[j];
            na += a[j] * a[j];
            nb += b[j] * b[j];
        }
        let oracle = dot / (na * nb).sqrt();
        worst_oracle = worst_oracle.max((oracle - ab).abs());
    }
    ensure(worst_oracle <= 1e-12, || {
        format!("oracle deviation {worst_oracle}")
    })?;
    Ok(format!(
        "10000 pairs: symmetric, in [-1,1], self 1±1e-9, oracle deviation {worst_oracle:.1e} \
         (reference 0.87 mean not reproducible with the hash embedder)"
    ))
}

// ---------------------------------------------------------------------------
// 10. TTFT / TTFA

fn scheduler_quantum() -> f64 {
    let request = Duration::from_micros(100);
    (0..200)
        .map(|_| {
            let t = Instant::now();
            std::thread::sleep(request);
            (t.elapsed() - request).as_secs_f64()
        })
        .fold(0.0, f64::max)
}

fn ac10_ttft_ttfa() -> Outcome {
    let quantum = scheduler_quantum();
    let exact = reference_config();
    let index = corpus(&exact);
    let manifest = synthesize(5, 6.36, &index, 10).unwrap();
    let mut worst = 0.0f64;
    let mut ordered = 0;
    for (i, u) in manifest.iter().enumerate() {
        let mut stages = StageSet::simulated(&exact, i as u64);
        let r = run_utterance(u, &exact, &index, &mut stages).map_err(|e| e.to_string())?;
        let dev = (r.timings.ttft_s - exact.llm_ttft_s).abs();
        worst = worst.max(dev);
        ensure(dev <= 2.0 * quantum, || {
            format!(
                "ttft {} vs {} exceeds 2 quanta ({quantum:.6} s)",
                r.timings.ttft_s, exact.llm_ttft_s
            )
        })?;
        ensure(r.timings.ttfa_s >= r.timings.ttft_s, || {
            "ttfa < ttft".into()
        })?;
        ordered += 1;
    }
    let jittered = PipelineConfig {
        time_scale: 0.02,
        jitter_frac: 0.3,
        ..reference_config()
    };
    let manifest = synthesize(100, 6.36, &index, 11).unwrap();
    let run = run_dataset(&manifest, &jittered, &index).map_err(|e| e.to_string())?;
    for r in &run.results {
        ensure(r.timings.ttfa_s >= r.timings.ttft_s, || {
            format!("{}: ttfa < ttft", r.timings.utterance_id)
        })?;
        ordered += 1;
    }
    Ok(format!(
        "ttfa >= ttft in {ordered}/{ordered} runs; jitter-free ttft deviation {:.1} us, quantum {:.1} us",
        worst * 1e6,
        quantum * 1e6
    ))
}

fn main() {
    let criteria: [Criterion; 10] = [
        ("AC1 aggregation oracle", ac1_aggregation_oracle),
        ("AC2 reference latency means", ac2_reference_means),
        ("AC3 overlap property", ac3_overlap),
        ("AC4 ASR RTF below 0.2", ac4_asr_rtf),
        ("AC5 FIFO and termination", ac5_fifo_termination),
        ("AC6 wire golden vectors", ac6_wire),
        ("AC7 search exactness", ac7_search_exactness),
        ("AC8 segmenter chunking independence", ac8_segmenter),
        ("AC9 cosine properties", ac9_cosine),
        ("AC10 TTFA/TTFT ordering", ac10_ttft_ttfa),
    ];
    let filter: Vec<String> = std::env::args()
        .skip(1)
        .filter(|a| !a.starts_with('-'))
        .collect();
    let mut failed = 0;
    for (name, run) in criteria {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        let start = Instant::now();
        let outcome = std::panic::catch_unwind(run).unwrap_or_else(|_| Err("panicked".into()));
        let secs = start.elapsed().as_secs_f64();
        match outcome {
            Ok(detail) => println!("PASS {name} ({secs:.1}s): {detail}"),
            Err(why) => {
                failed += 1;
                println!("FAIL {name} ({secs:.1}s): {why}");
            }
        }
    }
    if failed > 0 {
        eprintln!("{failed} acceptance criteria failed");
        std::process::exit(1);
    }
}

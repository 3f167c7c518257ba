//! Flat `key = value` run configuration.
//!
//! One assignment per line; `#` starts a comment; blank lines are ignored.
//! Keys are the [`PipelineConfig`] field names plus `docs_dir` (fallback
//! corpus for rebuilding a missing or stale index cache) and `version`,
//! which must be 1 when present. Unset keys keep their defaults.

use std::path::{Path, PathBuf};
use thiserror::Error;
use voicepipe::PipelineConfig;

/// Environment variable that supplies the config path when `--config` is
/// not given.
pub const CONFIG_ENV: &str = "VOICEPIPE_CONFIG";
pub const CONFIG_VERSION: u32 = 1;

#[derive(Debug, Error, PartialEq)]
pub enum ConfigError {
    #[error("line {line}: expected `key = value`, got {text:?}")]
    Syntax { line: usize, text: String },
    #[error("line {line}: unknown key `{key}`")]
    UnknownKey { line: usize, key: String },
    #[error("line {line}: key `{key}` is set twice (first on line {first})")]
    Duplicate {
        line: usize,
        key: String,
        first: usize,
    },
    #[error("line {line}: key `{key}`: {message}")]
    Value {
        line: usize,
        key: String,
        message: String,
    },
    #[error("invalid configuration: {}", .0.join("; "))]
    Invalid(Vec<String>),
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct RunConfig {
    pub pipeline: PipelineConfig,
    pub docs_dir: Option<PathBuf>,
}

fn parse_num<T: std::str::FromStr>(line: usize, key: &str, value: &str) -> Result<T, ConfigError>
where
    T::Err: std::fmt::Display,
{
    value.parse().map_err(|e: T::Err| ConfigError::Value {
        line,
        key: key.to_string(),
        message: format!("{value:?} is not valid: {e}"),
    })
}

/// Parses config text; `base` resolves a relative `docs_dir`.
pub fn parse_config(text: &str, base: &Path) -> Result<RunConfig, ConfigError> {
    let mut cfg = RunConfig::default();
    let mut seen: Vec<(String, usize)> = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let content = raw.split('#').next().unwrap_or("").trim();
        if content.is_empty() {
            continue;
        }
        let Some((key, value)) = content.split_once('=') else {
            return Err(ConfigError::Syntax {
                line,
                text: raw.trim().to_string(),
            });
        };
        let (key, value) = (key.trim(), value.trim());
        if key.is_empty() || value.is_empty() {
            return Err(ConfigError::Syntax {
                line,
                text: raw.trim().to_string(),
            });
        }
        if let Some((_, first)) = seen.iter().find(|(k, _)| k == key) {
            return Err(ConfigError::Duplicate {
                line,
                key: key.to_string(),
                first: *first,
            });
        }
        seen.push((key.to_string(), line));

        let p = &mut cfg.pipeline;
        match key {
            "version" => {
                let v: u32 = parse_num(line, key, value)?;
                if v != CONFIG_VERSION {
                    return Err(ConfigError::Value {
                        line,
                        key: key.to_string(),
                        message: format!("unsupported version {v} (expected {CONFIG_VERSION})"),
                    });
                }
            }
            "asr_rtf" => p.asr_rtf = parse_num(line, key, value)?,
            "rag_latency_s" => p.rag_latency_s = parse_num(line, key, value)?,
            "llm_ttft_s" => p.llm_ttft_s = parse_num(line, key, value)?,
            "llm_tokens_per_sec" => p.llm_tokens_per_sec = parse_num(line, key, value)?,
            "tts_rtf" => p.tts_rtf = parse_num(line, key, value)?,
            "speaking_rate_wps" => p.speaking_rate_wps = parse_num(line, key, value)?,
            "queue_poll_timeout_s" => p.queue_poll_timeout_s = parse_num(line, key, value)?,
            "queue_capacity" => p.queue_capacity = parse_num(line, key, value)?,
            "retrieval_k" => p.retrieval_k = parse_num(line, key, value)?,
            "embed_dim" => p.embed_dim = parse_num(line, key, value)?,
            "rng_seed" => p.rng_seed = parse_num(line, key, value)?,
            "time_scale" => p.time_scale = parse_num(line, key, value)?,
            "jitter_frac" => p.jitter_frac = parse_num(line, key, value)?,
            "response_sentences" => p.response_sentences = parse_num(line, key, value)?,
            "docs_dir" => cfg.docs_dir = Some(base.join(value)),
            _ => {
                return Err(ConfigError::UnknownKey {
                    line,
                    key: key.to_string(),
                })
            }
        }
    }
    cfg.pipeline
        .validate()
        .map_err(|e| ConfigError::Invalid(e.violations))?;
    Ok(cfg)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(text: &str) -> Result<RunConfig, ConfigError> {
        parse_config(text, Path::new("/cfg"))
    }

    #[test]
    fn empty_is_default() {
        assert_eq!(parse("# nothing\n\n").unwrap(), RunConfig::default());
    }

    #[test]
    fn reads_values_and_comments() {
        let cfg = parse(
            "version = 1\n\
             time_scale = 0.05   # fast\n\
             queue_capacity=8\n\
             docs_dir = docs\n",
        )
        .unwrap();
        assert_eq!(cfg.pipeline.time_scale, 0.05);
        assert_eq!(cfg.pipeline.queue_capacity, 8);
        assert_eq!(cfg.docs_dir, Some(PathBuf::from("/cfg/docs")));
        assert_eq!(
            cfg.pipeline.llm_ttft_s,
            PipelineConfig::default().llm_ttft_s
        );
    }

    #[test]
    fn errors_name_key_and_line() {
        let err = parse("time_scale = 1\nllm_ttft_s = fast\n").unwrap_err();
        assert!(matches!(&err, ConfigError::Value { line: 2, key, .. } if key == "llm_ttft_s"));
        assert!(err.to_string().contains("line 2"));

        assert_eq!(
            parse("\n\nspeed = 3\n").unwrap_err(),
            ConfigError::UnknownKey {
                line: 3,
                key: "speed".into()
            }
        );
        assert!(matches!(
            parse("just words\n").unwrap_err(),
            ConfigError::Syntax { line: 1, .. }
        ));
        assert!(matches!(
            parse("retrieval_k = 2\nretrieval_k = 3\n").unwrap_err(),
            ConfigError::Duplicate {
                line: 2,
                first: 1,
                ..
            }
        ));
        assert!(matches!(
            parse("version = 2\n").unwrap_err(),
            ConfigError::Value { line: 1, .. }
        ));
    }

    #[test]
    fn semantic_violations_are_reported() {
        let err = parse("time_scale = 0\njitter_frac = 1.5\n").unwrap_err();
        let ConfigError::Invalid(v) = err else {
            panic!("expected invalid");
        };
        assert_eq!(v.len(), 2);
    }
}

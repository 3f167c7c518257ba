//! Incremental sentence segmentation of a streamed text feed.
//!
//! A sentence ends at `.`, `!` or `?`, optionally followed by closing quotes
//! or brackets, when the next character is whitespace. Terminal punctuation
//! at the end of the buffer stays pending until that whitespace arrives (or
//! [`Segmenter::flush`] is called), so the emitted sentences do not depend on
//! how the text was split into chunks. A decimal such as `3.14` never
//! splits. Abbreviations such as `e.g. foo` do.

use crate::domain::Sentence;

fn is_terminal(c: char) -> bool {
    matches!(c, '.' | '!' | '?')
}

fn is_closer(c: char) -> bool {
    matches!(c, '"' | '\'' | ')' | ']')
}

/// Outcome of scanning from a terminal mark.
enum Boundary {
    /// The sentence ends at this byte offset (exclusive).
    At(usize),
    Pending,
    None,
}

/// Sentence segmenter fed one chunk at a time by a single producer.
#[derive(Debug, Clone)]
pub struct Segmenter {
    buffer: String,
    /// Byte offset in `buffer` below which no boundary can start.
    scanned: usize,
    next_index: u32,
    first_token_at_s: Option<f64>,
    epoch_s: f64,
}

impl Default for Segmenter {
    fn default() -> Self {
        Self::new(0.0)
    }
}

impl Segmenter {
    /// `epoch_s` is the clock origin; timestamps passed to [`feed`] and
    /// [`flush`] use the same clock.
    ///
    /// [`feed`]: Segmenter::feed
    /// [`flush`]: Segmenter::flush
    pub fn new(epoch_s: f64) -> Self {
        Self {
            buffer: String::new(),
            scanned: 0,
            next_index: 0,
            first_token_at_s: None,
            epoch_s,
        }
    }

    /// Appends `chunk` and returns every sentence whose boundary is now
    /// confirmed.
    pub fn feed(&mut self, chunk: &str, now_s: f64) -> Vec<Sentence> {
        if chunk.is_empty() {
            return Vec::new();
        }
        if self.first_token_at_s.is_none() {
            self.first_token_at_s = Some(now_s);
        }
        self.buffer.push_str(chunk);

        let mut out = Vec::new();
        let mut start = 0;
        let mut pos = self.scanned;
        let mut resume = None;
        let bytes_len = self.buffer.len();
        while pos < bytes_len {
            let c = self.buffer[pos..].chars().next().unwrap();
            if is_terminal(c) {
                match self.boundary_after(pos + c.len_utf8()) {
                    Boundary::At(end) => {
                        let text = self.buffer[start..end].trim();
                        if !text.is_empty() {
                            out.push(self.make_sentence(text.to_string(), now_s));
                        }
                        start = end;
                        pos = end;
                        continue;
                    }
                    Boundary::Pending => {
                        resume = Some(pos);
                        break;
                    }
                    Boundary::None => {}
                }
            }
            pos += c.len_utf8();
        }

        self.buffer.drain(..start);
        self.scanned = resume.unwrap_or(bytes_len) - start;
        out
    }

    fn boundary_after(&self, mut pos: usize) -> Boundary {
        for c in self.buffer[pos..].chars() {
            if is_closer(c) {
                pos += c.len_utf8();
            } else if c.is_whitespace() {
                return Boundary::At(pos);
            } else {
                return Boundary::None;
            }
        }
        Boundary::Pending
    }

    fn make_sentence(&mut self, text: String, now_s: f64) -> Sentence {
        let s = Sentence::new(self.next_index, text, now_s - self.epoch_s);
        self.next_index += 1;
        s
    }

    /// Emits whatever remains in the buffer as a final sentence.
    pub fn flush(&mut self, now_s: f64) -> Option<Sentence> {
        let text = self.buffer.trim().to_string();
        self.buffer.clear();
        self.scanned = 0;
        if text.is_empty() {
            None
        } else {
            Some(self.make_sentence(text, now_s))
        }
    }

    /// Time from the epoch to the first non-empty chunk.
    pub fn ttft(&self) -> Option<f64> {
        self.first_token_at_s.map(|t| t - self.epoch_s)
    }

    /// Count of sentences emitted so far.
    pub fn next_index(&self) -> u32 {
        self.next_index
    }

    pub fn pending(&self) -> &str {
        &self.buffer
    }
}

/// Segments a complete text in one pass.
pub fn segment_all(text: &str) -> Vec<String> {
    let mut seg = Segmenter::new(0.0);
    let mut out: Vec<String> = seg.feed(text, 0.0).into_iter().map(|s| s.text).collect();
    out.extend(seg.flush(0.0).map(|s| s.text));
    out
}

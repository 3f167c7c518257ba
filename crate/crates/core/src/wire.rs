//! Binary framing of sentences passed from the generation producer to the
//! synthesis consumer.
//!
//! Layout, little-endian, no padding:
//!
//! ```text
//! offset size field
//!      0    4 magic "SVF1"
//!      4    2 version (1)
//!      6    1 kind (0 = sentence, 1 = end-of-stream)
//!      7    4 index
//!     11    8 emitted_at_us (microseconds since generation start)
//!     19    4 payload_len
//!     23    n payload (UTF-8)
//! ```
//!
//! An end-of-stream frame carries the next unused index and an empty payload,
//! so it is exactly [`HEADER_LEN`] bytes.

use crate::domain::Sentence;
use thiserror::Error;

pub const MAGIC: [u8; 4] = *b"SVF1";
pub const VERSION: u16 = 1;
pub const HEADER_LEN: usize = 23;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[repr(u8)]
pub enum FrameKind {
    Sentence = 0,
    EndOfStream = 1,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SentenceFrame {
    pub kind: FrameKind,
    pub index: u32,
    pub emitted_at_us: u64,
    pub payload: String,
}

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum FrameError {
    #[error("payload of {0} bytes does not fit a frame")]
    TooLarge(usize),
    #[error("corrupt frame: {0}")]
    Corrupt(String),
    #[error("unsupported frame version {0}")]
    Version(u16),
    /// Not an error in a stream: wait for `needed` total bytes.
    #[error("incomplete frame: need {needed} bytes, have {available}")]
    Incomplete { needed: usize, available: usize },
    #[error("frame payload is not valid UTF-8")]
    Encoding,
}

impl SentenceFrame {
    pub fn is_end(&self) -> bool {
        self.kind == FrameKind::EndOfStream
    }

    pub fn emitted_at_s(&self) -> f64 {
        self.emitted_at_us as f64 / 1e6
    }

    /// The carried sentence; `None` for an end-of-stream frame.
    pub fn into_sentence(self) -> Option<Sentence> {
        match self.kind {
            FrameKind::Sentence => Some(Sentence {
                index: self.index,
                emitted_at_s: self.emitted_at_s(),
                text: self.payload,
            }),
            FrameKind::EndOfStream => None,
        }
    }

    pub fn encoded_len(&self) -> usize {
        HEADER_LEN + self.payload.len()
    }

    pub fn encode(&self) -> Result<Vec<u8>, FrameError> {
        let payload_len = checked_payload_len(self.payload.len())?;
        let mut out = Vec::with_capacity(self.encoded_len());
        out.extend_from_slice(&MAGIC);
        out.extend_from_slice(&VERSION.to_le_bytes());
        out.push(self.kind as u8);
        out.extend_from_slice(&self.index.to_le_bytes());
        out.extend_from_slice(&self.emitted_at_us.to_le_bytes());
        out.extend_from_slice(&payload_len.to_le_bytes());
        out.extend_from_slice(self.payload.as_bytes());
        Ok(out)
    }
}

fn checked_payload_len(len: usize) -> Result<u32, FrameError> {
    u32::try_from(len).map_err(|_| FrameError::TooLarge(len))
}

fn seconds_to_us(s: f64) -> u64 {
    // Saturating cast: negative and NaN map to 0.
    (s * 1e6).round() as u64
}

pub fn encode_frame(sentence: &Sentence) -> Result<Vec<u8>, FrameError> {
    SentenceFrame {
        kind: FrameKind::Sentence,
        index: sentence.index,
        emitted_at_us: seconds_to_us(sentence.emitted_at_s),
        payload: sentence.text.clone(),
    }
    .encode()
}

pub fn encode_end(next_index: u32, now_s: f64) -> Vec<u8> {
    SentenceFrame {
        kind: FrameKind::EndOfStream,
        index: next_index,
        emitted_at_us: seconds_to_us(now_s),
        payload: String::new(),
    }
    .encode()
    .expect("empty payload always fits")
}

/// Parses one frame from the front of `buf`, returning it and the number of
/// bytes consumed. Bytes after the frame are left alone.
pub fn decode_frame(buf: &[u8]) -> Result<(SentenceFrame, usize), FrameError> {
    let available = buf.len();
    if available >= MAGIC.len() && buf[..4] != MAGIC {
        return Err(FrameError::Corrupt(format!("bad magic {:02x?}", &buf[..4])));
    }
    if available < HEADER_LEN {
        // A short prefix that already disagrees with the magic is corrupt, not
        // incomplete.
        let n = available.min(4);
        if buf[..n] != MAGIC[..n] {
            return Err(FrameError::Corrupt(format!("bad magic {:02x?}", &buf[..n])));
        }
        return Err(FrameError::Incomplete {
            needed: HEADER_LEN,
            available,
        });
    }
    let version = u16::from_le_bytes([buf[4], buf[5]]);
    if version != VERSION {
        return Err(FrameError::Version(version));
    }
    let kind = match buf[6] {
        0 => FrameKind::Sentence,
        1 => FrameKind::EndOfStream,
        k => return Err(FrameError::Corrupt(format!("unknown frame kind {k}"))),
    };
    let index = u32::from_le_bytes(buf[7..11].try_into().unwrap());
    let emitted_at_us = u64::from_le_bytes(buf[11..19].try_into().unwrap());
    let payload_len = u32::from_le_bytes(buf[19..23].try_into().unwrap()) as usize;
    if kind == FrameKind::EndOfStream && payload_len != 0 {
        return Err(FrameError::Corrupt(
            "end-of-stream frame with a payload".to_string(),
        ));
    }
    let needed = HEADER_LEN + payload_len;
    if available < needed {
        return Err(FrameError::Incomplete { needed, available });
    }
    let payload = std::str::from_utf8(&buf[HEADER_LEN..needed])
        .map_err(|_| FrameError::Encoding)?
        .to_string();
    Ok((
        SentenceFrame {
            kind,
            index,
            emitted_at_us,
            payload,
        },
        needed,
    ))
}

/// Reassembles frames from a byte stream delivered in arbitrary pieces.
#[derive(Debug, Default)]
pub struct FrameDecoder {
    buf: Vec<u8>,
}

impl FrameDecoder {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, bytes: &[u8]) {
        self.buf.extend_from_slice(bytes);
    }

    /// Next complete frame, `Ok(None)` if more bytes are needed.
    pub fn next_frame(&mut self) -> Result<Option<SentenceFrame>, FrameError> {
        match decode_frame(&self.buf) {
            Ok((frame, used)) => {
                self.buf.drain(..used);
                Ok(Some(frame))
            }
            Err(FrameError::Incomplete { .. }) => Ok(None),
            Err(e) => Err(e),
        }
    }

    pub fn buffered(&self) -> usize {
        self.buf.len()
    }
}
